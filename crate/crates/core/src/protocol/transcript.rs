//! Line-oriented debug record of one data-system execution.
//!
//! Each line is `round=<r> role=<data|test|-> event=<name>` followed by
//! event-specific `key=value` fields, separated by single spaces. Events:
//!
//! | event     | fields                                             |
//! |-----------|----------------------------------------------------|
//! | prepare   | `y` (bits), `u` (0/1), `m`, `gates` (`;`-joined)   |
//! | bob       | `strategy`, `read` (`q:b` pairs, `,`-joined or `-`) |
//! | uncompute | `gates`                                            |
//! | data      | `outcome` (bits), `status` (`ok` / `mismatch`)     |
//! | ancilla   | `read` (copied-qubit readout, as for `bob`)        |
//! | result    | `basis` (`+` / `-`), `bit`                         |
//! | verdict   | `detected` (`none`/`data-mismatch`/`test-mismatch`), `answer` (0/1/`-`) |
//!
//! The verdict line uses `round=- role=-`.

use std::fmt;

use crate::bits::BitString;
use crate::qstate::{Gate, PmOutcome};

use super::DetectionSite;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundRole {
    Data,
    Test,
}

impl fmt::Display for RoundRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoundRole::Data => "data",
            RoundRole::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Prepare { y: BitString, u: bool, m: usize, gates: Vec<Gate> },
    Bob { strategy: &'static str, read: Vec<(usize, bool)> },
    Uncompute { gates: Vec<Gate> },
    Data { outcome: BitString, ok: bool },
    Ancilla { read: Vec<(usize, bool)> },
    Result { outcome: PmOutcome },
    Verdict { site: DetectionSite, answer: Option<bool> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub round: Option<usize>,
    pub role: Option<RoundRole>,
    pub event: Event,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    pub entries: Vec<Entry>,
}

impl Transcript {
    pub fn push(&mut self, round: usize, role: RoundRole, event: Event) {
        self.entries.push(Entry { round: Some(round), role: Some(role), event });
    }

    pub fn push_verdict(&mut self, site: DetectionSite, answer: Option<bool>) {
        self.entries.push(Entry { round: None, role: None, event: Event::Verdict { site, answer } });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn gates(g: &[Gate]) -> String {
    if g.is_empty() {
        return "-".into();
    }
    g.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(";")
}

fn reads(r: &[(usize, bool)]) -> String {
    if r.is_empty() {
        return "-".into();
    }
    r.iter().map(|(q, b)| format!("{q}:{}", *b as u8)).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.round, self.role) {
            (Some(r), Some(role)) => write!(f, "round={r} role={role} ")?,
            _ => f.write_str("round=- role=- ")?,
        }
        match &self.event {
            Event::Prepare { y, u, m, gates: g } => {
                write!(f, "event=prepare y={y} u={} m={m} gates={}", *u as u8, gates(g))
            }
            Event::Bob { strategy, read } => write!(f, "event=bob strategy={strategy} read={}", reads(read)),
            Event::Uncompute { gates: g } => write!(f, "event=uncompute gates={}", gates(g)),
            Event::Data { outcome, ok } => {
                write!(f, "event=data outcome={outcome} status={}", if *ok { "ok" } else { "mismatch" })
            }
            Event::Ancilla { read } => write!(f, "event=ancilla read={}", reads(read)),
            Event::Result { outcome } => {
                let sym = if outcome.bit() { "-" } else { "+" };
                write!(f, "event=result basis={sym} bit={}", outcome.bit() as u8)
            }
            Event::Verdict { site, answer } => {
                let a = answer.map_or("-".to_string(), |b| (b as u8).to_string());
                write!(f, "event=verdict detected={site} answer={a}")
            }
        }
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

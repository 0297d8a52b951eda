use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::baselines::BaselineKind;
use crate::data::SetKind;
use crate::error::{Error, Result};
use crate::noise::{parse_real, GeneratorKind};
use crate::perceptron::DEFAULT_MAX_ROUNDS;
use crate::privacy::Scope;
use crate::protocol::{BobStrategy, RoundSet};
use crate::qstate::RegisterLayout;

/// Default output directory when no `out_dir` is given.
pub const OUT_DIR_ENV: &str = "QPP_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    ProtocolDetection,
    Fig3Rounds,
    Fig4Compare,
    Thm2Sweep,
    LeakExpectation,
    ReconCompare,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::ProtocolDetection,
        ExperimentKind::Fig3Rounds,
        ExperimentKind::Fig4Compare,
        ExperimentKind::Thm2Sweep,
        ExperimentKind::LeakExpectation,
        ExperimentKind::ReconCompare,
    ];
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::ProtocolDetection => "protocol-detection",
            ExperimentKind::Fig3Rounds => "fig3-rounds",
            ExperimentKind::Fig4Compare => "fig4-compare",
            ExperimentKind::Thm2Sweep => "thm2-sweep",
            ExperimentKind::LeakExpectation => "leak-expectation",
            ExperimentKind::ReconCompare => "recon-compare",
        })
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.to_string() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown experiment {s:?}")))
    }
}

/// Attack named independently of the register size.
///
/// Syntax: `honest`, `measure-all`, `entangle-all`, `attribute:n2=<v>`,
/// `example:n2=<v>`, `measure:<q>,<q>,...`, `entangle:<q>,...`, `guess-mu`,
/// `measure-resend`. Qubit lists may end with `@<rounds>` (e.g. `@1,3`)
/// to restrict the attacked rounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttackSpec {
    Honest,
    MeasureAll,
    EntangleAll,
    Scoped { scope: Scope, n2: usize },
    Measure { qubits: Vec<usize>, rounds: Vec<usize> },
    Entangle { qubits: Vec<usize>, rounds: Vec<usize> },
    GuessMu,
    MeasureResend,
}

impl AttackSpec {
    pub fn strategy(&self, layout: RegisterLayout) -> Result<BobStrategy> {
        let rounds = |r: &[usize]| if r.is_empty() { Ok(RoundSet::ALL) } else { RoundSet::new(r) };
        let s = match self {
            AttackSpec::Honest => BobStrategy::Honest,
            AttackSpec::MeasureAll => BobStrategy::measure_all(layout),
            AttackSpec::EntangleAll => BobStrategy::entangle_all(layout),
            AttackSpec::Scoped { scope, n2 } => {
                let qubits = match scope {
                    Scope::Attribute => BobStrategy::attribute_scope_qubits(layout, *n2)?,
                    Scope::Example => BobStrategy::example_scope_qubits(layout, *n2)?,
                };
                BobStrategy::MeasureSubset { qubits, rounds: RoundSet::ALL }
            }
            AttackSpec::Measure { qubits, rounds: r } => {
                BobStrategy::MeasureSubset { qubits: qubits.clone(), rounds: rounds(r)? }
            }
            AttackSpec::Entangle { qubits, rounds: r } => {
                BobStrategy::EntangleCopy { qubits: qubits.clone(), rounds: rounds(r)? }
            }
            AttackSpec::GuessMu => BobStrategy::GuessMu,
            AttackSpec::MeasureResend => BobStrategy::MeasureAndResend,
        };
        s.validate(layout)?;
        Ok(s)
    }
}

fn usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad integer {t:?}"))))
        .collect()
}

fn join(v: &[usize]) -> String {
    v.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for AttackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let with_rounds = |f: &mut fmt::Formatter<'_>, name: &str, q: &[usize], r: &[usize]| {
            write!(f, "{name}:{}", join(q))?;
            if !r.is_empty() {
                write!(f, "@{}", join(r))?;
            }
            Ok(())
        };
        match self {
            AttackSpec::Honest => f.write_str("honest"),
            AttackSpec::MeasureAll => f.write_str("measure-all"),
            AttackSpec::EntangleAll => f.write_str("entangle-all"),
            AttackSpec::Scoped { scope, n2 } => write!(f, "{scope}:n2={n2}"),
            AttackSpec::Measure { qubits, rounds } => with_rounds(f, "measure", qubits, rounds),
            AttackSpec::Entangle { qubits, rounds } => with_rounds(f, "entangle", qubits, rounds),
            AttackSpec::GuessMu => f.write_str("guess-mu"),
            AttackSpec::MeasureResend => f.write_str("measure-resend"),
        }
    }
}

impl FromStr for AttackSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let qubits_rounds = |rest: &str| -> Result<(Vec<usize>, Vec<usize>)> {
            let (q, r) = rest.split_once('@').unwrap_or((rest, ""));
            let qubits = usize_list(q)?;
            if qubits.is_empty() {
                return Err(Error::Parse(format!("{head} needs at least one qubit, got {s:?}")));
            }
            Ok((qubits, usize_list(r)?))
        };
        Ok(match head {
            "honest" => AttackSpec::Honest,
            "measure-all" => AttackSpec::MeasureAll,
            "entangle-all" => AttackSpec::EntangleAll,
            "guess-mu" => AttackSpec::GuessMu,
            "measure-resend" => AttackSpec::MeasureResend,
            "attribute" | "example" => {
                let n2 = rest
                    .strip_prefix("n2=")
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("expected {head}:n2=<int>, got {s:?}")))?;
                AttackSpec::Scoped { scope: head.parse()?, n2 }
            }
            "measure" => {
                let (qubits, rounds) = qubits_rounds(rest)?;
                AttackSpec::Measure { qubits, rounds }
            }
            "entangle" => {
                let (qubits, rounds) = qubits_rounds(rest)?;
                AttackSpec::Entangle { qubits, rounds }
            }
            _ => return Err(Error::Parse(format!("unknown attack {s:?}"))),
        })
    }
}

/// 2^-10 .. 2^7.
pub fn full_delta_grid() -> Vec<f64> {
    (-10..=7).map(|e| 2f64.powi(e)).collect()
}

/// Twelve points: 2^-10, 2^-7, 2^-4, 2^-2, then 2^0 .. 2^7.
pub fn desk_delta_grid() -> Vec<f64> {
    [-10, -7, -4, -2, 0, 1, 2, 3, 4, 5, 6, 7].into_iter().map(|e| 2f64.powi(e)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub deltas: Vec<f64>,
    pub generators: Vec<GeneratorKind>,
    pub datasets: Vec<SetKind>,
    pub methods: Vec<BaselineKind>,
    pub attacks: Vec<AttackSpec>,
    pub n: usize,
    pub k: usize,
    pub n2: Vec<usize>,
    pub reps: usize,
    pub trials: usize,
    pub seed: u64,
    pub set_size: usize,
    pub max_rounds: usize,
    pub grid: usize,
    pub out_dir: PathBuf,
}

pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("results"))
}

impl ExperimentSpec {
    /// Desk-scale defaults for `kind`; `full` switches to the full delta grid
    /// and 100 repetitions.
    pub fn preset(kind: ExperimentKind, full: bool) -> Self {
        let mut s = Self {
            kind,
            deltas: if full { full_delta_grid() } else { desk_delta_grid() },
            generators: GeneratorKind::ALL.to_vec(),
            datasets: SetKind::ALL.to_vec(),
            methods: BaselineKind::ALL.to_vec(),
            attacks: vec![AttackSpec::Honest],
            n: 8,
            k: 2,
            n2: vec![2, 4, 8],
            reps: if full { 100 } else { 20 },
            trials: 100_000,
            seed: 20_140_101,
            set_size: 64,
            max_rounds: DEFAULT_MAX_ROUNDS,
            grid: 20,
            out_dir: default_out_dir(),
        };
        match kind {
            ExperimentKind::ProtocolDetection => {
                s.n = 4;
                s.k = 1;
                s.n2 = vec![2, 4];
                s.attacks = vec![
                    AttackSpec::Honest,
                    AttackSpec::MeasureAll,
                    AttackSpec::EntangleAll,
                    AttackSpec::GuessMu,
                    AttackSpec::MeasureResend,
                ];
            }
            ExperimentKind::LeakExpectation => {
                s.n2 = vec![4];
                s.trials = 10_000;
            }
            ExperimentKind::ReconCompare => {
                s.deltas = vec![1.0];
                s.datasets = vec![SetKind::Set3];
                s.set_size = 1024;
            }
            _ => {}
        }
        s
    }

    /// Sets one field from its textual form. Keys match the config file.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let int = |v: &str| v.parse::<usize>().map_err(|_| Error::Parse(format!("{key}: bad integer {v:?}")));
        fn list<T: FromStr<Err = Error>>(v: &str) -> Result<Vec<T>> {
            v.split(',').map(|t| t.trim().parse()).collect()
        }
        match key.trim() {
            "kind" => self.kind = value.parse()?,
            "deltas" => self.deltas = value.split(',').map(parse_real).collect::<Result<_>>()?,
            "generators" => self.generators = list(value)?,
            "datasets" => self.datasets = list(value)?,
            "methods" => self.methods = list(value)?,
            "attacks" => self.attacks = value.split(';').map(|a| a.parse()).collect::<Result<_>>()?,
            "n" => self.n = int(value)?,
            "k" => self.k = int(value)?,
            "n2" => self.n2 = usize_list(value)?,
            "reps" => self.reps = int(value)?,
            "trials" => self.trials = int(value)?,
            "seed" => self.seed = value.parse().map_err(|_| Error::Parse(format!("seed: bad integer {value:?}")))?,
            "set_size" => self.set_size = int(value)?,
            "max_rounds" => self.max_rounds = int(value)?,
            "grid" => self.grid = int(value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return Err(Error::Parse(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Reads `key = value` lines (`#` starts a comment). `kind` must come
    /// first or be implied by `base`.
    pub fn from_config_str(text: &str, base: Option<ExperimentKind>) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", i + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let kind = match pairs.iter().find(|(k, _)| k == "kind") {
            Some((_, v)) => v.parse()?,
            None => base.ok_or_else(|| Error::Parse("config lacks a kind".into()))?,
        };
        let mut spec = Self::preset(kind, false);
        for (k, v) in &pairs {
            spec.apply(k, v)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_config_file(path: &Path, base: Option<ExperimentKind>) -> Result<Self> {
        Self::from_config_str(&std::fs::read_to_string(path)?, base)
    }

    pub fn layout(&self) -> Result<RegisterLayout> {
        RegisterLayout::new(self.n, self.k)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Param(m));
        if self.reps == 0 || self.trials == 0 {
            return bad("reps and trials must be positive".into());
        }
        if self.deltas.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return bad("every delta must be positive and finite".into());
        }
        let layout = self.layout()?;
        for &n2 in &self.n2 {
            if n2 < 1 || n2 > self.n {
                return bad(format!("n2={n2} outside 1..={}", self.n));
            }
        }
        match self.kind {
            ExperimentKind::ProtocolDetection => {
                for a in &self.attacks {
                    a.strategy(layout)?;
                }
            }
            ExperimentKind::LeakExpectation => {
                if self.n2.iter().any(|&n2| n2 * self.k < 2) {
                    return bad("leak expectation needs n2*k >= 2 (otherwise nothing is ever detected)".into());
                }
            }
            ExperimentKind::Fig3Rounds | ExperimentKind::Fig4Compare => {
                if !self.set_size.is_power_of_two() || self.set_size < 2 {
                    return bad(format!("set_size {} must be a power of two >= 2", self.set_size));
                }
            }
            ExperimentKind::ReconCompare => {
                if self.grid < 2 {
                    return bad("grid must be >= 2".into());
                }
            }
            ExperimentKind::Thm2Sweep => {}
        }
        if matches!(self.kind, ExperimentKind::Fig3Rounds | ExperimentKind::Fig4Compare) && self.datasets.is_empty() {
            return bad("at least one dataset required".into());
        }
        Ok(())
    }
}

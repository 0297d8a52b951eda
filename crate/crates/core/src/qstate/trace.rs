//! Gate/measurement traces replayable on both simulators.
//!
//! A trace starts from `|+>|input>|0...0>` and applies its ops in order. The
//! same trace run on the branch simulator and the dense oracle must produce
//! the same joint distribution over measurement records.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::{BranchState, DenseState, Gate, Measurement, PmOutcome, RegisterLayout};
use crate::bits::BitString;
use crate::error::Result;

pub type SharedOracle = Arc<dyn Fn(&BitString) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum TraceOp {
    Gate(Gate),
    Oracle(SharedOracle),
    Measure(Vec<usize>),
    MeasurePm,
}

impl fmt::Debug for TraceOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceOp::Gate(g) => write!(f, "{g}"),
            TraceOp::Oracle(_) => f.write_str("U_f"),
            TraceOp::Measure(q) => write!(f, "M{q:?}"),
            TraceOp::MeasurePm => f.write_str("M±"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub layout: RegisterLayout,
    pub input: BitString,
    pub ops: Vec<TraceOp>,
}

/// One entry per measurement op; `±` outcomes are one bit (`-` = 1).
pub type Record = Vec<BitString>;

trait Simulator: Clone {
    fn apply_gate(&mut self, g: Gate) -> Result<()>;
    fn apply_oracle(&mut self, f: &SharedOracle);
    fn distribution(&self, qubits: &[usize]) -> Result<Vec<(BitString, f64)>>;
    fn project(&mut self, qubits: &[usize], o: &BitString) -> Result<f64>;
    fn measure<R: Rng + ?Sized>(&mut self, qubits: &[usize], rng: &mut R) -> Result<Measurement>;
    fn pm(&self) -> (f64, f64);
    fn project_pm(&mut self, o: PmOutcome) -> Result<f64>;
    fn measure_pm<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(PmOutcome, f64)>;
}

macro_rules! impl_simulator {
    ($t:ty) => {
        impl Simulator for $t {
            fn apply_gate(&mut self, g: Gate) -> Result<()> {
                <$t>::apply_gate(self, g)
            }
            fn apply_oracle(&mut self, f: &SharedOracle) {
                self.apply_uf(|d| f(d))
            }
            fn distribution(&self, qubits: &[usize]) -> Result<Vec<(BitString, f64)>> {
                self.outcome_distribution(qubits)
            }
            fn project(&mut self, qubits: &[usize], o: &BitString) -> Result<f64> {
                <$t>::project(self, qubits, o)
            }
            fn measure<R: Rng + ?Sized>(&mut self, qubits: &[usize], rng: &mut R) -> Result<Measurement> {
                <$t>::measure(self, qubits, rng)
            }
            fn pm(&self) -> (f64, f64) {
                self.pm_probabilities()
            }
            fn project_pm(&mut self, o: PmOutcome) -> Result<f64> {
                <$t>::project_pm(self, o)
            }
            fn measure_pm<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(PmOutcome, f64)> {
                self.measure_result_pm(rng)
            }
        }
    };
}

impl_simulator!(BranchState);
impl_simulator!(DenseState);

fn pm_bit(o: PmOutcome) -> BitString {
    BitString::from_bools(&[o.bit()])
}

fn run<S: Simulator, R: Rng + ?Sized>(mut state: S, ops: &[TraceOp], rng: &mut R) -> Result<(S, Record)> {
    let mut record = Vec::new();
    for op in ops {
        match op {
            TraceOp::Gate(g) => state.apply_gate(*g)?,
            TraceOp::Oracle(f) => state.apply_oracle(f),
            TraceOp::Measure(q) => record.push(state.measure(q, rng)?.outcome),
            TraceOp::MeasurePm => record.push(pm_bit(state.measure_pm(rng)?.0)),
        }
    }
    Ok((state, record))
}

fn enumerate<S: Simulator>(
    state: S,
    ops: &[TraceOp],
    weight: f64,
    prefix: &mut Record,
    out: &mut BTreeMap<Record, f64>,
) -> Result<()> {
    let Some((op, rest)) = ops.split_first() else {
        *out.entry(prefix.clone()).or_default() += weight;
        return Ok(());
    };
    match op {
        TraceOp::Gate(g) => {
            let mut s = state;
            s.apply_gate(*g)?;
            enumerate(s, rest, weight, prefix, out)
        }
        TraceOp::Oracle(f) => {
            let mut s = state;
            s.apply_oracle(f);
            enumerate(s, rest, weight, prefix, out)
        }
        TraceOp::Measure(q) => {
            for (o, p) in state.distribution(q)? {
                let mut s = state.clone();
                s.project(q, &o)?;
                prefix.push(o);
                enumerate(s, rest, weight * p, prefix, out)?;
                prefix.pop();
            }
            Ok(())
        }
        TraceOp::MeasurePm => {
            let (plus, minus) = state.pm();
            for (o, p) in [(PmOutcome::Plus, plus), (PmOutcome::Minus, minus)] {
                if p <= 1e-14 {
                    continue;
                }
                let mut s = state.clone();
                s.project_pm(o)?;
                prefix.push(pm_bit(o));
                enumerate(s, rest, weight * p, prefix, out)?;
                prefix.pop();
            }
            Ok(())
        }
    }
}

impl Trace {
    pub fn branch_initial(&self) -> Result<BranchState> {
        BranchState::plus(self.layout, &self.input)
    }

    pub fn dense_initial(&self) -> Result<DenseState> {
        DenseState::plus(self.layout, &self.input)
    }
}

pub fn run_trace_branch<R: Rng + ?Sized>(trace: &Trace, rng: &mut R) -> Result<(BranchState, Record)> {
    run(trace.branch_initial()?, &trace.ops, rng)
}

pub fn run_trace_dense<R: Rng + ?Sized>(trace: &Trace, rng: &mut R) -> Result<(DenseState, Record)> {
    run(trace.dense_initial()?, &trace.ops, rng)
}

/// Exact joint distribution of measurement records on the branch simulator.
pub fn exact_distribution_branch(trace: &Trace) -> Result<BTreeMap<Record, f64>> {
    let mut out = BTreeMap::new();
    enumerate(trace.branch_initial()?, &trace.ops, 1.0, &mut Vec::new(), &mut out)?;
    Ok(out)
}

/// Exact joint distribution of measurement records on the dense oracle.
pub fn exact_distribution_dense(trace: &Trace) -> Result<BTreeMap<Record, f64>> {
    let mut out = BTreeMap::new();
    enumerate(trace.dense_initial()?, &trace.ops, 1.0, &mut Vec::new(), &mut out)?;
    Ok(out)
}

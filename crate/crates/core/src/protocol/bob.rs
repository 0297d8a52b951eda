//! Bob's side of a round, for every strategy in the catalog.

use rand::Rng;

use super::strategy::BobStrategy;
use crate::bits::BitString;
use crate::error::Result;
use crate::qstate::{prepare_test_state, BranchState, Gate, RegisterLayout, RESULT_QUBIT};

/// Bob's memory across the three rounds of one execution.
#[derive(Debug, Clone)]
pub struct Bob<'s> {
    strategy: &'s BobStrategy,
    guess: Option<(usize, bool)>,
    observed: [Option<BitString>; 3],
    reads: [Vec<(usize, bool)>; 3],
    copies: [Vec<(usize, usize)>; 3],
}

impl<'s> Bob<'s> {
    pub fn new(strategy: &'s BobStrategy) -> Self {
        Self {
            strategy,
            guess: None,
            observed: Default::default(),
            reads: Default::default(),
            copies: Default::default(),
        }
    }

    pub fn strategy(&self) -> &BobStrategy {
        self.strategy
    }

    /// `(data qubit, bit)` pairs Bob recorded during `round`, including any
    /// ancilla readout.
    pub fn reads(&self, round: usize) -> &[(usize, bool)] {
        &self.reads[round - 1]
    }

    /// Bob's processing of the state Alice sent in `round` (1-based).
    pub fn act<F, R>(&mut self, round: usize, mut state: BranchState, oracle: &F, rng: &mut R) -> Result<BranchState>
    where
        F: Fn(&BitString) -> bool + ?Sized,
        R: Rng + ?Sized,
    {
        let layout = state.layout();
        match self.strategy {
            BobStrategy::Honest => {}
            BobStrategy::MeasureSubset { qubits, rounds } => {
                if rounds.contains(round) {
                    let m = state.measure(qubits, rng)?;
                    self.reads[round - 1] = qubits.iter().enumerate().map(|(i, &q)| (q, m.outcome.get(i))).collect();
                }
            }
            BobStrategy::EntangleCopy { qubits, rounds } => {
                if rounds.contains(round) {
                    let first = layout.ancillas();
                    state = state.with_ancillas(qubits.len())?;
                    let grown = state.layout();
                    let mut pairs = Vec::with_capacity(qubits.len());
                    for (j, &q) in qubits.iter().enumerate() {
                        let anc = grown.ancilla(first + j);
                        state.apply_gate(Gate::Cnot { control: q, target: anc })?;
                        pairs.push((q, anc));
                    }
                    self.copies[round - 1] = pairs;
                }
            }
            BobStrategy::GuessMu => {
                let nk = layout.data_qubits();
                let (m, u) = *self.guess.get_or_insert_with(|| (rng.random_range(1..=nk), rng.random()));
                let (r, z) = self.read_everything(round, &mut state, rng)?;
                state = fabricate(layout, r, z, m, u)?;
            }
            BobStrategy::MeasureAndResend => {
                let nk = layout.data_qubits();
                let (r, z) = self.read_everything(round, &mut state, rng)?;
                let hinted = self.observed[..round - 1]
                    .iter()
                    .flatten()
                    .find_map(|prev| single_difference(prev, &z));
                let m = match hinted {
                    Some(pos) => pos + 1,
                    None => rng.random_range(1..=nk),
                };
                state = fabricate(layout, r, z, m, rng.random())?;
            }
        }
        state.apply_uf(oracle);
        Ok(state)
    }

    /// Reads out the ancillas Bob entangled in `round`. Runs after Alice's
    /// data measurement; measurements on disjoint qubits commute, so the
    /// order relative to her `±` measurement does not matter.
    pub fn read_copies<R: Rng + ?Sized>(&mut self, round: usize, state: &mut BranchState, rng: &mut R) -> Result<Vec<(usize, bool)>> {
        let pairs = std::mem::take(&mut self.copies[round - 1]);
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let ancillas: Vec<usize> = pairs.iter().map(|&(_, a)| a).collect();
        let m = state.measure(&ancillas, rng)?;
        let read: Vec<(usize, bool)> = pairs.iter().enumerate().map(|(i, &(q, _))| (q, m.outcome.get(i))).collect();
        self.reads[round - 1] = read.clone();
        Ok(read)
    }

    fn read_everything<R: Rng + ?Sized>(&mut self, round: usize, state: &mut BranchState, rng: &mut R) -> Result<(bool, BitString)> {
        let nk = state.layout().data_qubits();
        let qubits: Vec<usize> = (RESULT_QUBIT..=nk).collect();
        let m = state.measure(&qubits, rng)?;
        let r = m.outcome.get(0);
        let z = BitString::from_word(nk, m.outcome.word() >> 1);
        self.reads[round - 1] = (1..=nk).map(|q| (q, z.get(q - 1))).collect();
        self.observed[round - 1] = Some(z);
        Ok((r, z))
    }
}

/// Position of the only differing bit, if exactly one differs.
fn single_difference(a: &BitString, b: &BitString) -> Option<usize> {
    let diff = a.word() ^ b.word();
    (diff.count_ones() == 1).then(|| diff.trailing_zeros() as usize)
}

/// Rebuilds `psi(y', u', m')` from a full readout `(r, z)` under the
/// hypothesis that the state was a test state with parameters `(m', u')`.
fn fabricate(layout: RegisterLayout, r: bool, z: BitString, m: usize, u: bool) -> Result<BranchState> {
    let a = if r { z.flipped(m - 1) } else { z };
    let y = a.swapped(0, m - 1);
    prepare_test_state(layout, &y, u, m)
}

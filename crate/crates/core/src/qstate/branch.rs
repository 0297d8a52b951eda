//! Exact branch-list representation of protocol states.
//!
//! Every gate used by the protocol maps computational basis states to basis
//! states up to a sign, and the only source of superposition is the initial
//! `|+>` on the result qubit. A state is therefore a short list of
//! `(amplitude, basis word)` pairs, which keeps systems with well over a
//! hundred qubits exactly simulable.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use smallvec::SmallVec;

use super::dense::DenseState;
use super::layout::RegisterLayout;
use super::{Gate, PmOutcome};
use crate::bits::{low_mask, BitString};
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-9;
const ZERO_AMP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub amplitude: Complex64,
    /// Bit `q` holds the value of qubit `q`.
    pub bits: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchState {
    layout: RegisterLayout,
    branches: SmallVec<[Branch; 4]>,
}

/// Outcome of a computational-basis measurement on a qubit subset. Position
/// `i` of `outcome` is the value read on the `i`-th requested qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub outcome: BitString,
    pub probability: f64,
}

fn mask_of(qubits: &[usize]) -> u128 {
    qubits.iter().fold(0u128, |m, &q| m | (1u128 << q))
}

fn gather(bits: u128, qubits: &[usize]) -> BitString {
    let mut out = BitString::zeros(qubits.len());
    for (i, &q) in qubits.iter().enumerate() {
        out.set(i, (bits >> q) & 1 == 1);
    }
    out
}

impl BranchState {
    /// A single computational basis state.
    pub fn basis(layout: RegisterLayout, bits: u128) -> Self {
        let bits = bits & low_mask(layout.total_qubits());
        let mut branches = SmallVec::new();
        branches.push(Branch { amplitude: Complex64::new(1.0, 0.0), bits });
        Self { layout, branches }
    }

    /// `|+>|data>|0...0>`.
    pub fn plus(layout: RegisterLayout, data: &BitString) -> Result<Self> {
        if data.len() != layout.data_qubits() {
            return Err(Error::BitLength { expected: layout.data_qubits(), got: data.len() });
        }
        let base = data.word() << 1;
        let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let mut branches = SmallVec::new();
        branches.push(Branch { amplitude: a, bits: base });
        branches.push(Branch { amplitude: a, bits: base | 1 });
        Ok(Self { layout, branches })
    }

    /// Builds a state from explicit branches, checking distinctness and norm.
    pub fn from_branches(layout: RegisterLayout, branches: Vec<Branch>) -> Result<Self> {
        let mask = low_mask(layout.total_qubits());
        let mut seen = std::collections::HashSet::new();
        for b in &branches {
            if b.bits & !mask != 0 {
                return Err(Error::Layout("branch word has bits beyond the layout".into()));
            }
            if !seen.insert(b.bits) {
                return Err(Error::Layout("duplicate basis word in branch list".into()));
            }
        }
        let state = Self { layout, branches: branches.into_iter().collect() };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Layout(format!("branch norm {norm} is not 1")));
        }
        Ok(state)
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.branches.iter().map(|b| b.amplitude.norm_sqr()).sum()
    }

    /// Data register of a basis word.
    pub fn data_of(&self, bits: u128) -> BitString {
        BitString::from_word(self.layout.data_qubits(), bits >> 1)
    }

    pub fn ancillas_of(&self, bits: u128) -> BitString {
        BitString::from_word(self.layout.ancillas(), bits >> (1 + self.layout.data_qubits()))
    }

    /// Distinct data-register patterns across branches.
    pub fn data_patterns(&self) -> Vec<BitString> {
        let mut v: Vec<_> = self.branches.iter().map(|b| self.data_of(b.bits)).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Appends `extra` ancilla qubits in `|0>`.
    pub fn with_ancillas(mut self, extra: usize) -> Result<Self> {
        self.layout = self.layout.extended(extra)?;
        Ok(self)
    }

    /// Multiplies every result-bit-1 branch by `(-1)^{f(data)}`.
    pub fn apply_uf<F>(&mut self, f: F)
    where
        F: Fn(&BitString) -> bool,
    {
        let nk = self.layout.data_qubits();
        for b in self.branches.iter_mut() {
            if b.bits & 1 == 1 && f(&BitString::from_word(nk, b.bits >> 1)) {
                b.amplitude = -b.amplitude;
            }
        }
    }

    pub fn apply_gate(&mut self, gate: Gate) -> Result<()> {
        match gate {
            Gate::Cnot { control, target } => {
                self.layout.check_qubit(control)?;
                self.layout.check_qubit(target)?;
                if control == target {
                    return Err(Error::QubitIndex { index: target, total: self.layout.total_qubits() });
                }
                for b in self.branches.iter_mut() {
                    if (b.bits >> control) & 1 == 1 {
                        b.bits ^= 1 << target;
                    }
                }
            }
            Gate::Z { qubit } => {
                self.layout.check_qubit(qubit)?;
                for b in self.branches.iter_mut() {
                    if (b.bits >> qubit) & 1 == 1 {
                        b.amplitude = -b.amplitude;
                    }
                }
            }
            Gate::Swap { a, b: c } => {
                self.layout.check_qubit(a)?;
                self.layout.check_qubit(c)?;
                for br in self.branches.iter_mut() {
                    let (x, y) = ((br.bits >> a) & 1, (br.bits >> c) & 1);
                    if x != y {
                        br.bits ^= (1 << a) | (1 << c);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn apply_gates(&mut self, gates: &[Gate]) -> Result<()> {
        gates.iter().try_for_each(|&g| self.apply_gate(g))
    }

    /// Born probabilities of every outcome pattern on `qubits`, sorted by outcome.
    pub fn outcome_distribution(&self, qubits: &[usize]) -> Result<Vec<(BitString, f64)>> {
        for &q in qubits {
            self.layout.check_qubit(q)?;
        }
        let mut acc: BTreeMap<BitString, f64> = BTreeMap::new();
        for b in &self.branches {
            *acc.entry(gather(b.bits, qubits)).or_default() += b.amplitude.norm_sqr();
        }
        Ok(acc.into_iter().filter(|&(_, p)| p > ZERO_AMP).collect())
    }

    /// Projects onto `outcome` on `qubits` and renormalizes. Returns the
    /// outcome's probability.
    pub fn project(&mut self, qubits: &[usize], outcome: &BitString) -> Result<f64> {
        let mask = mask_of(qubits);
        let mut want = 0u128;
        for (i, &q) in qubits.iter().enumerate() {
            self.layout.check_qubit(q)?;
            if outcome.get(i) {
                want |= 1 << q;
            }
        }
        self.branches.retain(|b| b.bits & mask == want);
        let p = self.norm_sqr();
        if p <= ZERO_AMP {
            return Err(Error::Param("projection onto a zero-probability outcome".into()));
        }
        let scale = 1.0 / p.sqrt();
        for b in self.branches.iter_mut() {
            b.amplitude *= scale;
        }
        Ok(p)
    }

    /// Computational-basis measurement of `qubits`; collapses in place.
    pub fn measure<R: Rng + ?Sized>(&mut self, qubits: &[usize], rng: &mut R) -> Result<Measurement> {
        if qubits.is_empty() {
            return Err(Error::Empty("measured qubit set"));
        }
        let dist = self.outcome_distribution(qubits)?;
        let outcome = sample(&dist, rng);
        let probability = self.project(qubits, &outcome)?;
        Ok(Measurement { outcome, probability })
    }

    /// `(p(+), p(-))` for the result qubit; all other qubits are traced out.
    pub fn pm_probabilities(&self) -> (f64, f64) {
        let (mut plus, mut minus) = (0.0, 0.0);
        for (a0, a1) in self.result_pairs().values() {
            plus += (a0 + a1).norm_sqr() / 2.0;
            minus += (a0 - a1).norm_sqr() / 2.0;
        }
        (plus, minus)
    }

    /// Amplitudes `(a(0,s), a(1,s))` keyed by the non-result pattern `s`.
    fn result_pairs(&self) -> BTreeMap<u128, (Complex64, Complex64)> {
        let mut pairs: BTreeMap<u128, (Complex64, Complex64)> = BTreeMap::new();
        for b in &self.branches {
            let e = pairs.entry(b.bits >> 1).or_default();
            if b.bits & 1 == 0 {
                e.0 = b.amplitude;
            } else {
                e.1 = b.amplitude;
            }
        }
        pairs
    }

    /// Projects the result qubit onto `|+>` or `|->`.
    pub fn project_pm(&mut self, outcome: PmOutcome) -> Result<f64> {
        let sign = match outcome {
            PmOutcome::Plus => 1.0,
            PmOutcome::Minus => -1.0,
        };
        let mut next: SmallVec<[Branch; 4]> = SmallVec::new();
        let mut p = 0.0;
        for (rest, (a0, a1)) in self.result_pairs() {
            // <±|_result applied to a0|0> + a1|1>, then re-embedded as |±>.
            let c = (a0 + a1 * sign) * FRAC_1_SQRT_2;
            if c.norm_sqr() <= ZERO_AMP {
                continue;
            }
            p += c.norm_sqr();
            next.push(Branch { amplitude: c * FRAC_1_SQRT_2, bits: rest << 1 });
            next.push(Branch { amplitude: c * FRAC_1_SQRT_2 * sign, bits: (rest << 1) | 1 });
        }
        if p <= ZERO_AMP {
            return Err(Error::Param("projection onto a zero-probability outcome".into()));
        }
        let scale = 1.0 / p.sqrt();
        for b in next.iter_mut() {
            b.amplitude *= scale;
        }
        self.branches = next;
        Ok(p)
    }

    /// Measures the result qubit in the `{|+>, |->}` basis; collapses in place.
    pub fn measure_result_pm<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(PmOutcome, f64)> {
        let (plus, _) = self.pm_probabilities();
        let outcome = if rng.random::<f64>() < plus { PmOutcome::Plus } else { PmOutcome::Minus };
        let p = self.project_pm(outcome)?;
        Ok((outcome, p))
    }

    pub fn to_dense(&self) -> Result<DenseState> {
        DenseState::from_branches(self.layout, &self.branches)
    }

    /// Equality of branch sets within `tol` per amplitude.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.layout != other.layout {
            return false;
        }
        let index = |s: &Self| -> BTreeMap<u128, Complex64> {
            s.branches
                .iter()
                .filter(|b| b.amplitude.norm() > tol)
                .map(|b| (b.bits, b.amplitude))
                .collect()
        };
        let (a, b) = (index(self), index(other));
        a.len() == b.len()
            && a.iter().all(|(k, va)| b.get(k).is_some_and(|vb| (va - vb).norm() <= tol))
    }
}

/// Draws an outcome from a discrete distribution. Falls back to the last
/// entry when rounding leaves a sliver of mass uncovered.
pub(crate) fn sample<T: Clone, R: Rng + ?Sized>(dist: &[(T, f64)], rng: &mut R) -> T {
    let total: f64 = dist.iter().map(|(_, p)| p).sum();
    let mut r = rng.random::<f64>() * total;
    for (o, p) in dist {
        if r < *p {
            return o.clone();
        }
        r -= p;
    }
    dist.last().expect("non-empty distribution").0.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::prepare_test_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn z_twice_is_identity() {
        let l = RegisterLayout::new(2, 1).unwrap();
        let s0 = prepare_test_state(l, &bits("01"), true, 2).unwrap();
        let mut s = s0.clone();
        s.apply_gate(Gate::Z { qubit: 0 }).unwrap();
        assert!(!s.approx_eq(&s0, 1e-12));
        s.apply_gate(Gate::Z { qubit: 0 }).unwrap();
        assert!(s.approx_eq(&s0, 1e-12));
    }

    #[test]
    fn cnot_truth_table() {
        let l = RegisterLayout::new(2, 1).unwrap();
        let mut s = BranchState::plus(l, &bits("00")).unwrap();
        s.apply_gate(Gate::Cnot { control: 0, target: 1 }).unwrap();
        let words: Vec<_> = s.branches().iter().map(|b| b.bits).collect();
        // r=0 d=00 and r=1 d=10
        assert_eq!(words, vec![0b000, 0b011]);
    }

    #[test]
    fn invalid_qubit_rejected() {
        let l = RegisterLayout::new(2, 1).unwrap();
        let mut s = BranchState::plus(l, &bits("00")).unwrap();
        assert!(matches!(
            s.apply_gate(Gate::Swap { a: 1, b: 3 }),
            Err(Error::QubitIndex { index: 3, .. })
        ));
        assert!(s.measure(&[], &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn measuring_plus_data_is_deterministic() {
        let l = RegisterLayout::new(3, 1).unwrap();
        let x = bits("101");
        let mut s = BranchState::plus(l, &x).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = s.measure(&[1, 2, 3], &mut rng).unwrap();
        assert_eq!(m.outcome, x);
        assert!((m.probability - 1.0).abs() < 1e-12);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn pm_on_plus_and_minus() {
        let l = RegisterLayout::new(2, 1).unwrap();
        let mut s = BranchState::plus(l, &bits("10")).unwrap();
        let (p, m) = s.pm_probabilities();
        assert!((p - 1.0).abs() < 1e-12 && m.abs() < 1e-12);
        s.apply_uf(|_| true);
        let (p, m) = s.pm_probabilities();
        assert!(p.abs() < 1e-12 && (m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pm_ancilla_mismatch_is_unbiased() {
        // (|0>|y>|y> + |1>|y>|y'>)/sqrt2: result decoheres.
        let l = RegisterLayout::with_ancillas(1, 1, 1).unwrap();
        let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let s = BranchState::from_branches(
            l,
            vec![Branch { amplitude: a, bits: 0b000 }, Branch { amplitude: a, bits: 0b101 }],
        )
        .unwrap();
        let (p, m) = s.pm_probabilities();
        assert!((p - 0.5).abs() < 1e-12 && (m - 0.5).abs() < 1e-12);
    }

    #[test]
    fn from_branches_rejects_bad_input() {
        let l = RegisterLayout::new(1, 1).unwrap();
        let one = Complex64::new(1.0, 0.0);
        assert!(BranchState::from_branches(l, vec![Branch { amplitude: one * 0.5, bits: 0 }]).is_err());
        let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
        assert!(BranchState::from_branches(
            l,
            vec![Branch { amplitude: a, bits: 1 }, Branch { amplitude: a, bits: 1 }]
        )
        .is_err());
    }
}

use std::fmt;

use crate::error::{Error, Result};
use crate::qstate::RegisterLayout;

/// Which of the three rounds Bob attacks (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RoundSet([bool; 3]);

impl RoundSet {
    pub const ALL: RoundSet = RoundSet([true; 3]);

    pub fn new(rounds: &[usize]) -> Result<Self> {
        let mut set = [false; 3];
        for &r in rounds {
            if !(1..=3).contains(&r) {
                return Err(Error::Strategy(format!("round {r} not in 1..=3")));
            }
            set[r - 1] = true;
        }
        if !set.iter().any(|&b| b) {
            return Err(Error::Strategy("empty round set".into()));
        }
        Ok(Self(set))
    }

    pub fn contains(&self, round: usize) -> bool {
        (1..=3).contains(&round) && self.0[round - 1]
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

impl Default for RoundSet {
    fn default() -> Self {
        Self::ALL
    }
}

/// Bob's behaviour inside his procedure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BobStrategy {
    /// Applies `U_f` and returns the state.
    Honest,
    /// Measures the listed data qubits in the computational basis, records the
    /// bits, then applies `U_f`.
    MeasureSubset { qubits: Vec<usize>, rounds: RoundSet },
    /// CNOT-copies the listed data qubits into fresh ancillas he keeps, then
    /// applies `U_f`; the ancillas are read out after Alice's measurements.
    EntangleCopy { qubits: Vec<usize>, rounds: RoundSet },
    /// Draws one guess `(m', u')` per execution, measures every qubit, and
    /// rebuilds the test state his guess implies before applying `U_f`.
    GuessMu,
    /// Measures every qubit and resends a fabricated test state whose `m'` is
    /// inferred from single-bit differences with earlier rounds when possible.
    MeasureAndResend,
}

impl BobStrategy {
    pub fn measure_all(layout: RegisterLayout) -> Self {
        Self::MeasureSubset { qubits: (1..=layout.data_qubits()).collect(), rounds: RoundSet::ALL }
    }

    pub fn entangle_all(layout: RegisterLayout) -> Self {
        Self::EntangleCopy { qubits: (1..=layout.data_qubits()).collect(), rounds: RoundSet::ALL }
    }

    /// Qubits read to shrink one attribute's privacy interval to
    /// `2^(n1-n2)`: the `n2 - 1` bits of attribute 1 below its MSB (the answer
    /// of `f` is taken to supply the remaining bit).
    pub fn attribute_scope_qubits(layout: RegisterLayout, n2: usize) -> Result<Vec<usize>> {
        check_n2(layout, n2)?;
        Ok((2..=n2).collect())
    }

    /// Qubits read to shrink every attribute of an example to `2^(n1-n2)`:
    /// the top `n2` bits of each attribute, minus attribute 1's MSB.
    pub fn example_scope_qubits(layout: RegisterLayout, n2: usize) -> Result<Vec<usize>> {
        check_n2(layout, n2)?;
        let n = layout.n();
        Ok((0..layout.k())
            .flat_map(|j| (1..=n2).map(move |t| j * n + t))
            .filter(|&q| q != 1)
            .collect())
    }

    pub fn name(&self) -> &'static str {
        match self {
            BobStrategy::Honest => "honest",
            BobStrategy::MeasureSubset { .. } => "measure-subset",
            BobStrategy::EntangleCopy { .. } => "entangle-copy",
            BobStrategy::GuessMu => "guess-mu",
            BobStrategy::MeasureAndResend => "measure-resend",
        }
    }

    pub fn is_honest(&self) -> bool {
        matches!(self, BobStrategy::Honest)
    }

    pub fn validate(&self, layout: RegisterLayout) -> Result<()> {
        match self {
            BobStrategy::MeasureSubset { qubits, .. } | BobStrategy::EntangleCopy { qubits, .. } => {
                if qubits.is_empty() {
                    return Err(Error::Strategy(format!("{} needs a non-empty qubit set", self.name())));
                }
                if let Some(q) = qubits.iter().find(|&&q| !layout.is_data_qubit(q)) {
                    return Err(Error::Strategy(format!(
                        "qubit {q} is not a data qubit (1..={})",
                        layout.data_qubits()
                    )));
                }
                let mut sorted = qubits.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != qubits.len() {
                    return Err(Error::Strategy("repeated qubit in strategy".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn check_n2(layout: RegisterLayout, n2: usize) -> Result<()> {
    if n2 < 1 || n2 > layout.n() {
        return Err(Error::Strategy(format!("n2={n2} outside 1..={}", layout.n())));
    }
    Ok(())
}

impl fmt::Display for BobStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BobStrategy::MeasureSubset { qubits, .. } | BobStrategy::EntangleCopy { qubits, .. } => {
                let list: Vec<String> = qubits.iter().map(|q| q.to_string()).collect();
                write!(f, "{}[{}]", self.name(), list.join(" "))
            }
            _ => f.write_str(self.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scope_sets_have_expected_sizes() {
        let l = RegisterLayout::new(8, 2).unwrap();
        assert_eq!(BobStrategy::attribute_scope_qubits(l, 4).unwrap(), vec![2, 3, 4]);
        let ex = BobStrategy::example_scope_qubits(l, 4).unwrap();
        assert_eq!(ex, vec![2, 3, 4, 9, 10, 11, 12]);
        assert_eq!(BobStrategy::example_scope_qubits(l, 8).unwrap().len(), 15);
        assert!(BobStrategy::attribute_scope_qubits(l, 1).unwrap().is_empty());
        assert!(BobStrategy::attribute_scope_qubits(l, 9).is_err());
    }

    #[test]
    fn validation() {
        let l = RegisterLayout::new(2, 1).unwrap();
        let bad = BobStrategy::MeasureSubset { qubits: vec![0], rounds: RoundSet::ALL };
        assert!(bad.validate(l).is_err());
        let empty = BobStrategy::EntangleCopy { qubits: vec![], rounds: RoundSet::ALL };
        assert!(empty.validate(l).is_err());
        assert!(BobStrategy::measure_all(l).validate(l).is_ok());
        assert!(RoundSet::new(&[0]).is_err());
        assert!(RoundSet::new(&[]).is_err());
        assert_eq!(RoundSet::new(&[1, 3]).unwrap().count(), 2);
    }
}

use crate::bits::MAX_BITS;
use crate::error::{Error, Result};

/// Qubit 0 is the result qubit, qubits `1..=n*k` hold the data (attribute `j`
/// occupies `(j-1)n+1 ..= jn`, most significant bit first), and any Bob-added
/// ancillas follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegisterLayout {
    n: usize,
    k: usize,
    ancillas: usize,
}

pub const RESULT_QUBIT: usize = 0;

impl RegisterLayout {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        Self::with_ancillas(n, k, 0)
    }

    pub fn with_ancillas(n: usize, k: usize, ancillas: usize) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::Layout(format!("n={n}, k={k}: both must be at least 1")));
        }
        let total = 1 + n * k + ancillas;
        if total > MAX_BITS {
            return Err(Error::Layout(format!(
                "{total} qubits exceeds the {MAX_BITS}-qubit branch word"
            )));
        }
        Ok(Self { n, k, ancillas })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ancillas(&self) -> usize {
        self.ancillas
    }

    pub fn data_qubits(&self) -> usize {
        self.n * self.k
    }

    pub fn total_qubits(&self) -> usize {
        1 + self.data_qubits() + self.ancillas
    }

    /// Index of the `j`-th ancilla (0-based).
    pub fn ancilla(&self, j: usize) -> usize {
        1 + self.data_qubits() + j
    }

    pub fn is_data_qubit(&self, q: usize) -> bool {
        (1..=self.data_qubits()).contains(&q)
    }

    /// Data qubits belonging to attribute `j` (1-based).
    pub fn attribute_qubits(&self, j: usize) -> std::ops::RangeInclusive<usize> {
        (j - 1) * self.n + 1..=j * self.n
    }

    pub(crate) fn check_qubit(&self, q: usize) -> Result<()> {
        if q < self.total_qubits() {
            Ok(())
        } else {
            Err(Error::QubitIndex { index: q, total: self.total_qubits() })
        }
    }

    pub(crate) fn extended(&self, extra: usize) -> Result<Self> {
        Self::with_ancillas(self.n, self.k, self.ancillas + extra)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let l = RegisterLayout::with_ancillas(4, 3, 2).unwrap();
        assert_eq!(l.data_qubits(), 12);
        assert_eq!(l.total_qubits(), 15);
        assert_eq!(l.ancilla(0), 13);
        assert_eq!(l.attribute_qubits(2), 5..=8);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(RegisterLayout::new(0, 1).is_err());
        assert!(RegisterLayout::new(1, 0).is_err());
        assert!(RegisterLayout::new(64, 2).is_err());
    }
}

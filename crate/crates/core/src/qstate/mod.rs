//! Quantum states of the data system: exact branch lists plus a dense oracle.

mod branch;
mod dense;
mod layout;
pub mod trace;

pub use branch::{Branch, BranchState, Measurement};
pub use dense::{DenseState, MAX_DENSE_QUBITS};
pub use layout::{RegisterLayout, RESULT_QUBIT};

use std::fmt;

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Signed basis permutations used by the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    Cnot { control: usize, target: usize },
    Z { qubit: usize },
    Swap { a: usize, b: usize },
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Cnot { control, target } => write!(f, "CNOT({control},{target})"),
            Gate::Z { qubit } => write!(f, "Z({qubit})"),
            Gate::Swap { a, b } => write!(f, "SWAP({a},{b})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PmOutcome {
    Plus,
    Minus,
}

impl PmOutcome {
    /// `+` reads as 0, `-` as 1.
    pub fn bit(self) -> bool {
        self == PmOutcome::Minus
    }
}

/// Gates that turn `|+>|y>` into the test state for `(u, m)`, in application
/// order: CNOT(result -> data 1), then `Z^u` on the result, then SWAP(1, m).
pub fn preparation_gates(u: bool, m: usize) -> Vec<Gate> {
    if m == 0 {
        return Vec::new();
    }
    let mut gates = vec![Gate::Cnot { control: RESULT_QUBIT, target: 1 }];
    if u {
        gates.push(Gate::Z { qubit: RESULT_QUBIT });
    }
    if m != 1 {
        gates.push(Gate::Swap { a: 1, b: m });
    }
    gates
}

/// Inverse of [`preparation_gates`]: SWAP(1, m), then `Z^u`, then CNOT.
/// Empty for the computational state (`m = 0`).
pub fn uncompute_gates(u: bool, m: usize) -> Vec<Gate> {
    let mut gates = preparation_gates(u, m);
    gates.reverse();
    gates
}

/// Prepares `psi(y, u, m)`. `m = 0` gives the computational state `|+>|y>`.
pub fn prepare_test_state(layout: RegisterLayout, y: &BitString, u: bool, m: usize) -> Result<BranchState> {
    let nk = layout.data_qubits();
    if y.len() != nk {
        return Err(Error::BitLength { expected: nk, got: y.len() });
    }
    if m > nk {
        return Err(Error::TestPosition { m, max: nk });
    }
    if m == 0 && u {
        return Err(Error::PhaseOnComputationalState);
    }
    let mut state = BranchState::plus(layout, y)?;
    state.apply_gates(&preparation_gates(u, m))?;
    Ok(state)
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid register layout: {0}")]
    Layout(String),

    #[error("qubit index {index} out of range for {total} qubits")]
    QubitIndex { index: usize, total: usize },

    #[error("bit-string length {got} does not match expected {expected}")]
    BitLength { expected: usize, got: usize },

    #[error("test position m={m} out of range 0..={max}")]
    TestPosition { m: usize, max: usize },

    #[error("computational state requires u=0 when m=0")]
    PhaseOnComputationalState,

    #[error("dense representation limited to {max} qubits, state has {got}")]
    TooLargeForDense { max: usize, got: usize },

    #[error("invalid strategy: {0}")]
    Strategy(String),

    #[error("value {value} outside encodable range [{lo}, {hi})")]
    Range { value: f64, lo: f64, hi: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

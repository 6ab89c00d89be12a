use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RevivalError {
    #[error("invalid Dicke basis: N = {0} (need N >= 1)")]
    InvalidBasis(i64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("state is not normalized: |psi|^2 = {norm_sq}")]
    NotNormalized { norm_sq: f64 },

    #[error("Fock cutoff {cutoff} too small for |zeta|^2 = {mean}: truncated probability {leakage:e}")]
    TruncationLeakage { cutoff: usize, mean: f64, leakage: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("Hamiltonian breaks excitation-block structure at ({row}, {col}): |H| = {magnitude:e}")]
    StructureViolation { row: usize, col: usize, magnitude: f64 },

    #[error("cat-state normalization is near-singular: M = {normalization:e}")]
    DegenerateNormalization { normalization: f64 },

    #[error("invalid angular momentum arguments: {0}")]
    InvalidAngularMomentum(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("numerical invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, RevivalError>;

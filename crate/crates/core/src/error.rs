//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong in the workbench.
///
/// The variants map onto the process exit codes used by the CLI:
/// validation problems (bad inputs, inconsistent configurations,
/// non-Hermitian matrices) exit with 1, numerical non-convergence with 2,
/// and I/O failures with 3.
#[derive(Debug, Error)]
pub enum Error {
    /// A value is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An input failed structural validation.
    #[error("validation error: {0}")]
    Validation(String),

    /// A matrix handed to the eigensolver is not Hermitian.
    #[error("non-Hermitian input: defect {defect:.3e} exceeds bound {bound:.3e}")]
    NonHermitian { defect: f64, bound: f64 },

    /// An iterative method did not converge.
    #[error("no convergence in {context} after {iterations} iterations")]
    NonConvergence { context: String, iterations: usize },

    /// The Fock-cutoff doubling schedule hit its hard cap.
    #[error("cutoff convergence failed: cap {cap} reached, last change {last_change:.3e} > tol {tol:.3e}")]
    CutoffCap { cap: usize, last_change: f64, tol: f64 },

    /// A position grid does not cover the support of the requested states.
    #[error("grid too small: requires half-extent {required_m:.6e} m around the center, got {available_m:.6e} m")]
    Coverage { required_m: f64, available_m: f64 },

    /// The branch potential has no interior minimum (site merged with its neighbor).
    #[error("effective-parameter extraction failed: no interior potential minimum")]
    NoInteriorMinimum,

    /// A target value cannot be reached within the physical search range.
    #[error("target {target:.6e} unreachable; maximum attainable is {max_attainable:.6e}")]
    TargetUnreachable { target: f64, max_attainable: f64 },

    /// Two data sets that must share a structure (grid, size) do not.
    #[error("mismatch: {0}")]
    Mismatch(String),

    /// Unknown key in a scenario file.
    #[error("unknown key `{0}`")]
    UnknownKey(String),

    /// Missing required key in a scenario file.
    #[error("missing required key `{0}`")]
    MissingKey(String),

    /// Filesystem failure.
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence { .. } | Error::CutoffCap { .. } => 2,
            Error::Io(_) => 3,
            _ => 1,
        }
    }
}

use thiserror::Error;

/// Errors reported by the library.
///
/// [`Error::is_input_error`] separates malformed input from numerical
/// failures; the CLI maps them to exit codes 1 and 2.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("degenerate parameter family: {0}")]
    DegenerateFamily(String),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepFailure { t: f64, h: f64 },
    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),
    #[error("denominator vanishes at s = {s}")]
    VanishingDenominator { s: f64 },
    #[error("projection singular (Df P = 0) at (s, c) = ({s}, {c})")]
    SingularProjection { s: f64, c: f64 },
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("fold in the continued curve near s = {s}")]
    Fold { s: f64 },
    #[error("equilibrium classification mismatch: {0}")]
    ClassificationMismatch(String),
    #[error("closed-form and finite-difference Jacobians disagree at {point}: {detail}")]
    JacobianMismatch { point: String, detail: String },
    #[error("empty overlap window")]
    EmptyOverlap,
}

impl Error {
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::InvalidInput(_) | Error::Parse(_) | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

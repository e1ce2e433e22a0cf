use thiserror::Error;

/// Errors raised across the crate.
///
/// [`Error::exit_code`] maps each variant to the process exit code used by the
/// command-line front end.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("truncation contexts differ")]
    ContextMismatch,

    #[error("momentum is disabled in this context")]
    MomentumDisabled,

    #[error("term {0} does not preserve momentum")]
    MomentumViolation(String),

    #[error("mode {0} lies outside the truncation window")]
    ModeOutOfRange(String),

    #[error("multi-index needs degree at least {need}, got {got}")]
    DegreeTooSmall { need: u32, got: u32 },

    #[error("frequency for mode {0} is zero")]
    ZeroFrequency(String),

    #[error("frequency missing for mode {0}")]
    MissingFrequency(String),

    #[error("{0} factors in more than one way over the generators")]
    UniqueFactorizationViolation(String),

    #[error("generator {0} touches the degree cutoff; raise the cutoff")]
    CutoffTooSmall(String),

    #[error("divisor of {0} vanishes numerically but not symbolically")]
    NumericCoincidence(String),

    #[error("term {0} is resonant and cannot be divided out")]
    ResonantTermInRange(String),

    #[error("hypothesis violated by term {term}: {reason}")]
    HypothesisViolation { term: String, reason: String },

    #[error("generator of order zero gives a non-terminating Lie series")]
    NonterminatingSeries,

    #[error("field is already normal")]
    AlreadyNormal,

    #[error("trajectory left the admissible ball at t = {0}")]
    Divergence(f64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ZeroFrequency(_)
            | Error::MissingFrequency(_)
            | Error::UniqueFactorizationViolation(_)
            | Error::CutoffTooSmall(_)
            | Error::NumericCoincidence(_) => 2,
            Error::HypothesisViolation { .. } | Error::ResonantTermInRange(_) => 3,
            _ => 1,
        }
    }

    pub(crate) fn hypothesis(term: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::HypothesisViolation { term: term.into(), reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced anywhere in the spectral pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("weight r violates the sign pattern at x = {x} (r = {value})")]
    SignPatternViolation { x: f64, value: f64 },

    #[error("p is not positive at x = {x} (p = {value})")]
    NonpositiveP { x: f64, value: f64 },

    #[error("symmetry declared but violated: {0}")]
    SymmetryDeclaredButViolated(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("step size underflow at x = {x}")]
    StepUnderflow { x: f64 },

    #[error("non-finite state at x = {x}")]
    NonfiniteState { x: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("spectral parameter {lambda} lies within {margin} of the essential spectrum")]
    EssentialSpectrumProximity { lambda: f64, margin: f64 },

    #[error("bisection stalled on [{lo}, {hi}]")]
    BisectionStall { lo: f64, hi: f64 },

    #[error("zeros and poles fail to alternate on ({lo}, {hi}): {detail}")]
    AlternationViolation { lo: f64, hi: f64, detail: String },

    #[error("band edges out of order: {0}")]
    InterleavingViolation(String),

    #[error("stiffness matrix is not positive definite (pivot {index} = {pivot})")]
    NonPositiveDefiniteT { index: usize, pivot: f64 },

    #[error("factorization failure: {0}")]
    FactorizationFailure(String),

    #[error("operation not applicable: {0}")]
    NotApplicable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable tag, used for structured CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "ParseError",
            Error::SignPatternViolation { .. } => "SignPatternViolation",
            Error::NonpositiveP { .. } => "NonpositiveP",
            Error::SymmetryDeclaredButViolated(_) => "SymmetryDeclaredButViolated",
            Error::InvalidProblem(_) => "InvalidProblem",
            Error::StepUnderflow { .. } => "StepUnderflow",
            Error::NonfiniteState { .. } => "NonfiniteState",
            Error::NoConvergence(_) => "NoConvergence",
            Error::EssentialSpectrumProximity { .. } => "EssentialSpectrumProximity",
            Error::BisectionStall { .. } => "BisectionStall",
            Error::AlternationViolation { .. } => "AlternationViolation",
            Error::InterleavingViolation(_) => "InterleavingViolation",
            Error::NonPositiveDefiniteT { .. } => "NonPositiveDefiniteT",
            Error::FactorizationFailure(_) => "FactorizationFailure",
            Error::NotApplicable(_) => "NotApplicable",
        }
    }
}

use thiserror::Error;

/// Failure kinds shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("solve error: {0}")]
    Solve(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("singular expansion: {0}")]
    SingularExpansion(String),
    #[error("degenerate case: {0}")]
    DegenerateCase(String),
    #[error("constraint error: {0}")]
    Constraint(String),
    #[error("blowup at step {step} (t = {time}): {message}")]
    Blowup { step: usize, time: f64, message: String },
    #[error("fit error: {0}")]
    Fit(String),
    #[error("tracking ambiguity: {0}")]
    TrackingAmbiguity(String),
}

pub type Result<T> = std::result::Result<T, Error>;

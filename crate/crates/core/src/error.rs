use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("derivative nesting depth exceeded")]
    DepthExceeded,
    #[error("non-real spectrum: eigenvalue with imaginary part {0:e}")]
    NonRealSpectrum(f64),
    #[error("singular point: {0}")]
    SingularPoint(String),
    #[error("coordinate {0} is not ignorable (max |dH/dq| = {1:e})")]
    NotIgnorable(usize, f64),
    #[error("singular Stäckel data: {0}")]
    SingularStackel(String),
    #[error("operator is not projectable: {0}")]
    NotProjectable(String),
    #[error("Stäckel functions are not of classical form: {0}")]
    NotClassicalForm(String),
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("periodicity violated: {0}")]
    PeriodicityViolation(String),
    #[error("point outside the classically allowed region: {0}")]
    ForbiddenRegion(String),
    #[error("Newton iteration diverged at step {step}: {message}")]
    NewtonDivergence { step: usize, message: String },
    #[error("trajectory left the chart domain at step {0}")]
    DomainExit(usize),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

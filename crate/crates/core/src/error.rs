use thiserror::Error;

/// Errors produced by model construction, condition checks, solvers and estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("range exceeded: {0}")]
    RangeExceeded(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("divergent moment: {0}")]
    Divergent(String),

    #[error("state space too large: {0}")]
    TooLarge(String),

    #[error("infeasible estimate: {0}")]
    Infeasible(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::InvalidDistribution(_)
            | Error::InvalidModel(_)
            | Error::EmptyInput(_)
            | Error::Json(_) => 2,
            Error::Infeasible(_) => 4,
            Error::Io(_) | Error::Csv(_) => 1,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

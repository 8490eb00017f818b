use richcore::Error as CoreError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Precondition(_) => EXIT_PRECONDITION,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::ZeroMatrix
            | CoreError::NonFinite
            | CoreError::EmptyMatrix { .. }
            | CoreError::DimensionMismatch(_)
            | CoreError::NotOrthonormal { .. } => CliError::Usage(msg),
            CoreError::RankDeficient { .. }
            | CoreError::CoresetTooSmall { .. }
            | CoreError::CoresetTooLarge { .. }
            | CoreError::LiftedTooLarge { .. }
            | CoreError::SampledRankLost { .. }
            | CoreError::EnumerationTooLarge(_)
            | CoreError::InvalidArgument(_) => CliError::Precondition(msg),
            CoreError::NumericalFault { .. }
            | CoreError::NoConvergence { .. }
            | CoreError::Domain(_) => CliError::Solver(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

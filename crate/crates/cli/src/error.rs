use thiserror::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_NOT_CONVERGED: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Solver(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub fn io<E>(context: impl Into<String>, source: E) -> Self
    where
        E: std::error::Error + Send + Sync + 'static,
    {
        CliError::Io {
            context: context.into(),
            source: Box::new(source),
        }
    }
}

impl From<afbf::Error> for CliError {
    fn from(e: afbf::Error) -> Self {
        use afbf::Error as E;
        match e {
            E::Io(_) | E::Json(_) | E::Csv(_) => CliError::io("input/output", e),
            E::InvalidParameter(_)
            | E::Dataset(_)
            | E::DegenerateKernel(_)
            | E::DimensionMismatch { .. }
            | E::OutsideDomain(_) => CliError::Usage(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

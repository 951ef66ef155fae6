use std::fmt;

/// Failure of one subcommand, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    Engine(dcidc::Error),
    /// Bad flags or inputs the engine never saw.
    Invalid(String),
    /// A check ran and did not pass.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use dcidc::Error as E;
        match self {
            CliError::Failed(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Engine(e) => match e {
                E::Io { .. }
                | E::ParseLine { .. }
                | E::ParseBinary { .. }
                | E::Truncated { .. }
                | E::InvalidConfig(_)
                | E::InvalidDims { .. }
                | E::LengthMismatch { .. }
                | E::LabelOutOfRange { .. }
                | E::EmptyDataset
                | E::InfeasiblePlacement { .. } => 2,
                E::Divergence { .. } => 3,
                E::Shape { .. } | E::NotSquare { .. } | E::Singular { .. } | E::CollapsedCenters { .. } => 4,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Engine(e) => write!(f, "{e}"),
            CliError::Invalid(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<dcidc::Error> for CliError {
    fn from(e: dcidc::Error) -> Self {
        CliError::Engine(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

use std::path::PathBuf;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad value in a config file or on the command line.
    #[error("{source_name}:{line}: {message}")]
    Config {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Usage(String),

    /// Malformed CSV input.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Core(#[from] incentive_bandit::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        use incentive_bandit::Error as E;
        match self {
            CliError::Config { .. } | CliError::Usage(_) | CliError::Parse { .. } => EXIT_CONFIG,
            CliError::Core(e) => match e {
                E::InvalidParameter(_) | E::BudgetExceeded { .. } | E::DiagnosticUndefined(_) => {
                    EXIT_CONFIG
                }
                E::InvariantViolation(_) | E::InvalidState(_) => EXIT_INVARIANT,
                E::Io { .. } => EXIT_IO,
            },
        }
    }
}

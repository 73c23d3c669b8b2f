use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const DATA: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: lopcoint::Error,
    },

    #[error("{path}: {source}", path = path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use lopcoint::Error as E;
        match self {
            CliError::Config(_) => exit::DATA,
            CliError::Stage { source, .. } if source.is_data_error() => exit::DATA,
            CliError::Stage { source, .. } => match source {
                E::Singular(_)
                | E::Degenerate(_)
                | E::NoConvergence(_)
                | E::InsufficientData { .. }
                | E::RankSelection(_)
                | E::Restriction(_) => exit::NUMERICAL,
                _ => exit::OTHER,
            },
            CliError::Io { .. } | CliError::Usage(_) => exit::OTHER,
        }
    }
}

/// Attaches a stage name to library errors.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> StageExt<T> for lopcoint::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Stage { stage, source })
    }
}

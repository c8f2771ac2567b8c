use std::path::{Path, PathBuf};

/// Failures of a run, each with its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum ArenaError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("backend: {0}")]
    Backend(String),
    #[error("simulation: {0}")]
    Sim(String),
    #[error("io error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("trajectory: {0}")]
    Trajectory(String),
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;
pub const EXIT_SIM: i32 = 4;
pub const EXIT_IO: i32 = 5;
/// Malformed trajectory or a replay that diverged.
pub const EXIT_REPLAY: i32 = 6;

impl ArenaError {
    pub fn io(path: &Path, source: std::io::Error) -> ArenaError {
        ArenaError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            ArenaError::Config(_) => EXIT_CONFIG,
            ArenaError::Backend(_) => EXIT_BACKEND,
            ArenaError::Sim(_) => EXIT_SIM,
            ArenaError::Io { .. } => EXIT_IO,
            ArenaError::Trajectory(_) => EXIT_REPLAY,
        }
    }
}

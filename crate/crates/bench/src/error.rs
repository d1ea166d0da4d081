use std::path::PathBuf;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] sbgp::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("failed to load {} image(s): {}", .0.len(), .0.iter().map(|(p, e)| format!("{p}: {e}")).collect::<Vec<_>>().join("; "))]
    ImageLoad(Vec<(String, String)>),
    #[error("{0}")]
    Input(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for input errors, 2 for internal invariant violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Invariant(_) => 2,
            _ => 1,
        }
    }
}

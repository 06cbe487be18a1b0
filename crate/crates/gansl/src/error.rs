use std::path::PathBuf;

/// Crate-wide error type. Variants map onto the CLI exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("shape error: {0}")]
    Shape(String),

    /// Training abort on the first non-finite loss component.
    #[error("numerical abort at step {step}: component `{component}` is not finite")]
    Numerical { step: u64, component: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("backend error: {0}")]
    Backend(#[from] tch::TchError),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// CLI exit code: 2 configuration, 3 data/shape, 4 numerical, 5 i/o.
    /// Backend faults have no assigned code and report as generic failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Shape(_) => 3,
            Error::Numerical { .. } => 4,
            Error::Io { .. } => 5,
            Error::Backend(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("selection failed: {0}")]
    Selection(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("corrupt data: {0}")]
    Corruption(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error: 1 for validation and configuration
    /// problems, 2 for I/O failures and unreadable or corrupt files.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_)
            | Error::Input(_)
            | Error::Validation(_)
            | Error::Config(_)
            | Error::Selection(_) => 1,
            Error::Format(_) | Error::Corruption(_) | Error::Io { .. } => 2,
        }
    }

    /// Prefix the message with a file path, keeping the error kind.
    pub(crate) fn in_file(self, path: &std::path::Path) -> Self {
        let p = path.display();
        match self {
            Error::Parameter(m) => Error::Parameter(format!("{p}: {m}")),
            Error::Input(m) => Error::Input(format!("{p}: {m}")),
            Error::Validation(m) => Error::Validation(format!("{p}: {m}")),
            Error::Config(m) => Error::Config(format!("{p}: {m}")),
            Error::Selection(m) => Error::Selection(format!("{p}: {m}")),
            Error::Format(m) => Error::Format(format!("{p}: {m}")),
            Error::Corruption(m) => Error::Corruption(format!("{p}: {m}")),
            e @ Error::Io { .. } => e,
        }
    }
}

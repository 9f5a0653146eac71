use std::path::PathBuf;

use cheaptalk_core::gateway::GatewayError;

use crate::store::LoadError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad flags, config or pairing; nothing was run.
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("{0}")]
    Runtime(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io { path: path.into(), source }
    }

    /// 1 for usage errors, 2 for everything that failed while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("indeterminate equilibrium: {stable} stable roots for {predetermined} predetermined variables")]
    Indeterminate { stable: usize, predetermined: usize },

    #[error("no stable solution: {stable} stable roots for {predetermined} predetermined variables")]
    NoStableSolution { stable: usize, predetermined: usize },

    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("failed to converge: {0}")]
    NoConvergence(String),

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("duplicate date {0}")]
    DuplicateDate(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed answer log: {0}")]
    MalformedLog(String),

    #[error("invalid ranking: {0}")]
    InvalidRanking(String),

    #[error("rankings are not comparable: {0}")]
    Incomparable(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported process: {0}")]
    Unsupported(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("empty history: {0}")]
    EmptyHistory(String),

    #[error("repetition {rep} failed: {source}")]
    Repetition {
        rep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

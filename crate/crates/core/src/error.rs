use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("invalid label `{0}`")]
    InvalidLabel(String),

    #[error("`{0}` is reserved and cannot be used as an action")]
    ReservedName(String),

    #[error("ill-formed term: {0}")]
    IllFormed(String),

    #[error("term is not regular (recursion under a static operator): {0}")]
    NotRegular(String),

    #[error("transition system is incomplete (state budget {0} exhausted)")]
    Incomplete(usize),

    #[error("observer error: {0}")]
    Observer(String),

    #[error("predicate error: {0}")]
    Predicate(String),

    #[error("supervisor error: {0}")]
    Supervisor(String),

    #[error("line {line}: {msg}")]
    Model { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors raised by net construction, the decision procedures and the text formats.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("invalid effect {0}: effects must be -1, 0 or 1")]
    InvalidEffect(i64),
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("duplicate action `{0}`")]
    DuplicateAction(String),
    #[error("duplicate transition {0}")]
    DuplicateTransition(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("rule not applicable: {0}")]
    Logic(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("magnitude cap exceeded: {0}")]
    Overflow(String),
    #[error("cannot decode witness: {0}")]
    Decode(String),
    #[error("conflicting construction rules: {0}")]
    Construction(String),
}

pub type Result<T> = std::result::Result<T, Error>;

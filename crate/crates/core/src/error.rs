use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid diagram: {0}")]
    InvalidDiagram(String),
    #[error("matrix is not primitive: {0}")]
    NotPrimitive(String),
    #[error("word {0} is not linked")]
    UnlinkedWord(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("map is not admissible: {0}")]
    NotAdmissible(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

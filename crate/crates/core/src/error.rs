use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemaError {
    #[error("unknown intent `{0}`")]
    UnknownIntent(String),
    #[error("malformed value for {intent}.{field}: {detail}")]
    MalformedValue {
        intent: String,
        field: String,
        detail: String,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("malformed quantity `{0}`")]
pub struct MalformedQuantity(pub String);

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("no balanced JSON object in model response")]
    NoObject,
    #[error("invalid JSON in model response: {0}")]
    Syntax(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("unparseable model response: {0}")]
    Unparseable(#[from] DecodeError),
    #[error("no scripted fixture for hint `{0}`")]
    NoFixture(String),
}

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("base weight undefined for zero intents")]
    ZeroIntents,
}

#[derive(Debug, Error)]
pub enum ExtenderError {
    #[error("malformed request: {0}")]
    MalformedRequest(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset not found: {0}")]
    FileNotFound(String),
    #[error("dataset record {index}: {detail}")]
    SchemaViolation { index: usize, detail: String },
    #[error("dataset is not a JSON array: {0}")]
    NotAnArray(String),
    #[error("empty input")]
    EmptyInput,
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain configuration: {0}")]
    DomainConfig(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("resolution: {0}")]
    Resolution(String),
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("config field `{field}`: {msg}")]
    Config { field: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

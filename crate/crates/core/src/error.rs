use thiserror::Error;

/// Errors raised by the library. The CLI maps each variant family to a
/// distinct exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown node id `{0}`")]
    UnknownNode(String),
    #[error("unknown link {0}-{1}")]
    UnknownLink(String, String),
    #[error("duplicate link {0}-{1}")]
    DuplicateLink(String, String),
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("insufficient resources: {0}")]
    InsufficientResources(String),
    #[error("release underflow (double release?): {0}")]
    ReleaseUnderflow(String),
    #[error("illegal lifecycle transition: {state:?} on {event:?}")]
    IllegalTransition { state: String, event: String },
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("topology invariant violated: {0}")]
    Topology(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("validation failed: {0} violation(s)")]
    Validation(usize),
    #[error("scenario hash mismatch: expected {expected}, got {actual}")]
    HashMismatch { expected: String, actual: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

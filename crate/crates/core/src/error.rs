use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("provenance violation: passage `{0}` is not stored")]
    ProvenanceViolation(String),

    #[error("duplicate passage: {0}")]
    DuplicatePassage(String),

    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("extraction failed: {0}")]
    Extraction(String),

    #[error("same-event judge failed: {0}")]
    Judge(String),

    #[error("frame fusion failed: {0}")]
    Fusion(String),

    #[error("answer generation failed: {0}")]
    Generation(String),

    #[error("gateway transport error: {0}")]
    Transport(String),

    #[error("graph is empty")]
    EmptyGraph,

    #[error("invalid seed distribution: {0}")]
    Seed(String),

    #[error("memory is empty")]
    EmptyMemory,

    #[error("load error: {0}")]
    Load(String),

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error("build aborted after {processed} passages: {quarantined} quarantined exceeds tolerance of {allowed}")]
    BuildAborted {
        processed: usize,
        quarantined: usize,
        allowed: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

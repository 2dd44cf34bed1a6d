//! Dataset loading and memory construction.

mod build;
mod loaders;

pub use build::{build, segment_bounds, BuildMode, BuildOptions, Builder, DEFAULT_QUARANTINE_TOLERANCE, DEFAULT_SEGMENTS};
pub use loaders::{
    load_str, load_transcript, Conversation, Format, LoadedDataset, Malformed, Session, TranscriptDocument, Turn,
};

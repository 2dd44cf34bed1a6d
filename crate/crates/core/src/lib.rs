//! Hierarchical long-term conversational memory: an episodic layer of
//! event frames over raw passages, a quadruple fact graph with
//! personalized PageRank, and provenance-preserving retrieval.

pub mod embedding;
pub mod episodic;
pub mod error;
pub mod eval;
pub mod gateway;
pub mod graph;
pub mod ingest;
pub mod memory;
pub mod model;
pub mod passages;
pub mod retrieval;
pub mod snapshot;

pub use embedding::Embedding;
pub use error::{Error, Result};
pub use gateway::{HttpGateway, LlmGateway, MockGateway};
pub use memory::Memory;
pub use model::{Passage, PassageId, RetrievalConfig};
pub use retrieval::{retrieve, SynthesizedContext, Toggles};
pub use snapshot::Snapshot;

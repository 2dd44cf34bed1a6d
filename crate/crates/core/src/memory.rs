//! The combined memory: passage store plus episodic and graph layers.

use serde::{Deserialize, Serialize};

use crate::episodic::{EpisodicStore, FusionSettings, IngestOutcome};
use crate::error::{Error, Result};
use crate::gateway::LlmGateway;
use crate::graph::GraphStore;
use crate::model::{Passage, PassageId, RetrievalConfig};
use crate::passages::PassageStore;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassageReport {
    pub passage_id: PassageId,
    pub frame: IngestOutcome,
    pub facts: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Memory {
    pub config: RetrievalConfig,
    pub gateway_fingerprint: String,
    pub passages: PassageStore,
    pub episodic: EpisodicStore,
    pub graph: GraphStore,
}

impl Memory {
    pub fn new(config: RetrievalConfig, gateway: &dyn LlmGateway) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            passages: PassageStore::new(gateway.embedding_dim()),
            episodic: EpisodicStore::new(FusionSettings {
                candidates: 1,
                threshold: config.fusion_candidate_threshold,
            }),
            graph: GraphStore::new(config.merge_threshold),
            gateway_fingerprint: gateway.fingerprint(),
            config,
        })
    }

    /// Fails when `gateway` differs from the one that built this memory.
    pub fn check_gateway(&self, gateway: &dyn LlmGateway) -> Result<()> {
        if gateway.fingerprint() != self.gateway_fingerprint {
            return Err(Error::Config(format!(
                "memory was built with gateway `{}`, got `{}`",
                self.gateway_fingerprint,
                gateway.fingerprint()
            )));
        }
        Ok(())
    }

    /// Stores a passage and feeds it to both layers, in arrival order.
    pub fn add_passage(&mut self, gateway: &dyn LlmGateway, passage: Passage) -> Result<PassageReport> {
        let id = passage.passage_id.clone();
        if self.passages.contains(&id) {
            return Err(Error::DuplicatePassage(id.to_string()));
        }
        let embedding = gateway.embed(&passage.text)?;
        self.passages.insert(passage, embedding)?;
        let frame = self.episodic.ingest_passage(gateway, &self.passages, &id)?;
        let facts = self.graph.ingest_passage(gateway, &self.passages, &id)?;
        Ok(PassageReport {
            passage_id: id,
            frame,
            facts,
        })
    }

    pub fn audit(&self) -> Result<()> {
        self.episodic.audit(&self.passages)?;
        self.graph.audit(&self.passages)?;
        for p in self.passages.iter() {
            if !self.episodic.is_ingested(&p.passage_id) {
                return Err(Error::Input(format!("passage {} missing from episodic memory", p.passage_id)));
            }
        }
        Ok(())
    }
}

//! Batch and segmented memory construction.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::LlmGateway;
use crate::memory::Memory;
use crate::model::{Passage, RetrievalConfig};
use crate::snapshot::{BuildProgress, Snapshot};

pub const DEFAULT_SEGMENTS: usize = 4;
pub const DEFAULT_QUARANTINE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuildMode {
    Batch,
    Incremental { segments: usize },
}

impl BuildMode {
    pub fn incremental() -> Self {
        BuildMode::Incremental {
            segments: DEFAULT_SEGMENTS,
        }
    }

    fn segments(self) -> usize {
        match self {
            BuildMode::Batch => 1,
            BuildMode::Incremental { segments } => segments,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub mode: BuildMode,
    /// Fraction of passages allowed to end up quarantined.
    pub quarantine_tolerance: f64,
    /// Snapshot written after every segment, and on abort.
    pub checkpoint: Option<PathBuf>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            mode: BuildMode::Batch,
            quarantine_tolerance: DEFAULT_QUARANTINE_TOLERANCE,
            checkpoint: None,
        }
    }
}

/// Half-open passage ranges of equal count, in order.
pub fn segment_bounds(total: usize, segments: usize) -> Vec<(usize, usize)> {
    (0..segments)
        .map(|i| (i * total / segments, (i + 1) * total / segments))
        .collect()
}

pub struct Builder<'g> {
    gateway: &'g dyn LlmGateway,
    memory: Memory,
    passages: Vec<Passage>,
    options: BuildOptions,
    ingested: usize,
}

impl<'g> Builder<'g> {
    pub fn new(
        gateway: &'g dyn LlmGateway,
        config: RetrievalConfig,
        passages: Vec<Passage>,
        options: BuildOptions,
    ) -> Result<Self> {
        Self::check_options(&options)?;
        Ok(Self {
            memory: Memory::new(config, gateway)?,
            gateway,
            passages,
            options,
            ingested: 0,
        })
    }

    /// Continues from a checkpoint written by an earlier run over the same
    /// passages.
    pub fn resume(
        gateway: &'g dyn LlmGateway,
        snapshot: Snapshot,
        passages: Vec<Passage>,
        options: BuildOptions,
    ) -> Result<Self> {
        Self::check_options(&options)?;
        snapshot.memory.check_gateway(gateway)?;
        let ingested = snapshot.memory.passages.len();
        if ingested > passages.len() {
            return Err(Error::Snapshot(format!(
                "checkpoint holds {ingested} passages but the input has {}",
                passages.len()
            )));
        }
        for (stored, p) in snapshot.memory.passages.iter().zip(&passages) {
            if stored != p {
                return Err(Error::Snapshot(format!(
                    "checkpoint passage {} does not match input passage {}",
                    stored.passage_id, p.passage_id
                )));
            }
        }
        if let Some(progress) = &snapshot.progress {
            if progress.total_passages != passages.len() || progress.segments != options.mode.segments() {
                return Err(Error::Snapshot("checkpoint was written for a different build".into()));
            }
        }
        Ok(Self {
            gateway,
            memory: snapshot.memory,
            passages,
            options,
            ingested,
        })
    }

    fn check_options(options: &BuildOptions) -> Result<()> {
        if options.mode.segments() == 0 {
            return Err(Error::Config("segments must be positive".into()));
        }
        if !(0.0..=1.0).contains(&options.quarantine_tolerance) {
            return Err(Error::Config("quarantine tolerance must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn memory(&self) -> &Memory {
        &self.memory
    }

    pub fn ingested(&self) -> usize {
        self.ingested
    }

    pub fn allowed_quarantine(&self) -> usize {
        (self.options.quarantine_tolerance * self.passages.len() as f64).floor() as usize
    }

    pub fn snapshot(&self) -> Snapshot {
        let mut s = Snapshot::new(self.memory.clone());
        if self.ingested < self.passages.len() {
            let bounds = segment_bounds(self.passages.len(), self.options.mode.segments());
            s.progress = Some(BuildProgress {
                total_passages: self.passages.len(),
                ingested: self.ingested,
                segments: bounds.len(),
                segments_done: bounds.iter().filter(|(_, end)| *end <= self.ingested).count(),
            });
        }
        s
    }

    fn checkpoint(&self) -> Result<()> {
        if let Some(path) = &self.options.checkpoint {
            self.snapshot().save(path)?;
        }
        Ok(())
    }

    /// Runs the remaining segments. Stops after `max_segments` when given,
    /// leaving a resumable checkpoint.
    pub fn run_segments(&mut self, max_segments: Option<usize>) -> Result<()> {
        let bounds = segment_bounds(self.passages.len(), self.options.mode.segments());
        let allowed = self.allowed_quarantine();
        let mut ran = 0;
        for (start, end) in bounds {
            if end <= self.ingested {
                continue;
            }
            if max_segments.is_some_and(|m| ran >= m) {
                break;
            }
            for i in self.ingested.max(start)..end {
                let p = self.passages[i].clone();
                if let Err(e) = self.memory.add_passage(self.gateway, p) {
                    self.checkpoint()?;
                    return Err(e);
                }
                self.ingested = i + 1;
                let quarantined = self.memory.episodic.unframed().len();
                if quarantined > allowed {
                    self.checkpoint()?;
                    return Err(Error::BuildAborted {
                        processed: self.ingested,
                        quarantined,
                        allowed,
                    });
                }
            }
            ran += 1;
            tracing::info!(ingested = self.ingested, total = self.passages.len(), "segment done");
            self.checkpoint()?;
        }
        Ok(())
    }

    pub fn run(mut self) -> Result<Snapshot> {
        self.run_segments(None)?;
        Ok(self.snapshot())
    }
}

pub fn build(
    gateway: &dyn LlmGateway,
    config: RetrievalConfig,
    passages: Vec<Passage>,
    options: BuildOptions,
) -> Result<Snapshot> {
    Builder::new(gateway, config, passages, options)?.run()
}

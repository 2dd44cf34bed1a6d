//! Self-describing JSON snapshot of a whole memory.
//!
//! Serialization is canonical: struct fields in declaration order, maps as
//! `BTreeMap`, two-space pretty printing and a trailing newline. Saving a
//! loaded snapshot reproduces the original bytes.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::memory::Memory;
use crate::model::PassageId;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuarantineLists {
    /// Passages without an episodic frame.
    pub unframed: BTreeSet<PassageId>,
    /// Passages whose fact extraction failed.
    pub fact_empty: BTreeSet<PassageId>,
}

impl QuarantineLists {
    pub fn of(memory: &Memory) -> Self {
        Self {
            unframed: memory.episodic.unframed().clone(),
            fact_empty: memory.graph.fact_empty().clone(),
        }
    }
}

/// Where an interrupted incremental build stopped. Absent once complete.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildProgress {
    pub total_passages: usize,
    pub ingested: usize,
    pub segments: usize,
    pub segments_done: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    pub format_version: u32,
    pub memory: Memory,
    pub quarantine: QuarantineLists,
    pub progress: Option<BuildProgress>,
}

impl Snapshot {
    pub fn new(memory: Memory) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            quarantine: QuarantineLists::of(&memory),
            memory,
            progress: None,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.progress.is_none()
    }

    pub fn to_canonical_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(raw)
            .map_err(|e| Error::Snapshot(format!("invalid JSON at line {}: {e}", e.line())))?;
        let version = value
            .get("format_version")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Snapshot("missing format_version".into()))?;
        if version != u64::from(FORMAT_VERSION) {
            return Err(Error::Snapshot(format!(
                "format_version {version} is not supported (expected {FORMAT_VERSION})"
            )));
        }
        // Parse from text rather than the Value so floats keep their exact bits.
        let snap: Snapshot =
            serde_json::from_str(raw).map_err(|e| Error::Snapshot(format!("line {}: {e}", e.line())))?;
        if snap.quarantine != QuarantineLists::of(&snap.memory) {
            return Err(Error::Snapshot("quarantine lists disagree with the stores".into()));
        }
        snap.memory.audit().map_err(|e| Error::Snapshot(format!("store audit failed: {e}")))?;
        Ok(snap)
    }

    /// Writes atomically via a sibling temp file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = self.to_canonical_json()?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, json)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Error::Snapshot(format!("{}: {e}", path.display())))?;
        Self::from_json(&raw)
    }
}

//! Chronological passage store. Every provenance pointer in the system must
//! resolve here.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Deserializer, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::model::{Passage, PassageId, ProvenanceSet};

#[derive(Debug, Clone, Serialize)]
pub struct StoredPassage {
    pub passage: Passage,
    pub embedding: Embedding,
}

/// Passages in insertion order, which is the chronological order used for
/// every tie-break in the engine.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PassageStore {
    dim: usize,
    entries: Vec<StoredPassage>,
    #[serde(skip)]
    by_id: HashMap<PassageId, usize>,
    #[serde(skip)]
    session_turns: HashSet<(String, u32)>,
}

impl PassageStore {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn insert(&mut self, passage: Passage, embedding: Embedding) -> Result<()> {
        embedding.ensure_dim(self.dim)?;
        if self.by_id.contains_key(&passage.passage_id) {
            return Err(Error::DuplicatePassage(passage.passage_id.to_string()));
        }
        let key = (passage.session_id.clone(), passage.turn_index);
        if self.session_turns.contains(&key) {
            return Err(Error::DuplicatePassage(format!(
                "session {} turn {}",
                key.0, key.1
            )));
        }
        self.by_id.insert(passage.passage_id.clone(), self.entries.len());
        self.session_turns.insert(key);
        self.entries.push(StoredPassage { passage, embedding });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: &PassageId) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn get(&self, id: &PassageId) -> Option<&Passage> {
        self.by_id.get(id).map(|&i| &self.entries[i].passage)
    }

    pub fn embedding(&self, id: &PassageId) -> Option<&Embedding> {
        self.by_id.get(id).map(|&i| &self.entries[i].embedding)
    }

    /// Chronological position of a passage.
    pub fn position(&self, id: &PassageId) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Passage> {
        self.entries.iter().map(|e| &e.passage)
    }

    pub fn entries(&self) -> &[StoredPassage] {
        &self.entries
    }

    /// Fails with `ProvenanceViolation` on the first dangling id.
    pub fn check_closure(&self, set: &ProvenanceSet) -> Result<()> {
        match set.iter().find(|id| !self.contains(id)) {
            Some(id) => Err(Error::ProvenanceViolation(id.to_string())),
            None => Ok(()),
        }
    }

    /// Checked union: both operands must resolve to stored passages.
    pub fn union_provenance(&self, a: &ProvenanceSet, b: &ProvenanceSet) -> Result<ProvenanceSet> {
        self.check_closure(a)?;
        self.check_closure(b)?;
        Ok(a.union(b))
    }

    /// Sorts ids chronologically; unknown ids sort last.
    pub fn sort_chronological(&self, ids: &mut [PassageId]) {
        ids.sort_by_key(|id| self.position(id).unwrap_or(usize::MAX));
    }
}

#[derive(Deserialize)]
struct PassageStoreRepr {
    dim: usize,
    entries: Vec<StoredPassageRepr>,
}

#[derive(Deserialize)]
struct StoredPassageRepr {
    passage: Passage,
    embedding: Embedding,
}

impl<'de> Deserialize<'de> for PassageStore {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PassageStoreRepr::deserialize(d)?;
        let mut store = PassageStore::new(repr.dim);
        for e in repr.entries {
            store
                .insert(e.passage, e.embedding)
                .map_err(serde::de::Error::custom)?;
        }
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb() -> Embedding {
        Embedding::normalized(vec![1.0, 0.0]).unwrap()
    }

    fn store_with(ids: &[u32]) -> PassageStore {
        let mut s = PassageStore::new(2);
        for &i in ids {
            s.insert(Passage::new("s", i, "A", None, "x").unwrap(), emb())
                .unwrap();
        }
        s
    }

    fn set(ids: &[u32]) -> ProvenanceSet {
        ProvenanceSet::from_ids(ids.iter().map(|i| PassageId::new("s", *i))).unwrap()
    }

    #[test]
    fn union_is_idempotent_and_absorbs_subsets() {
        let s = store_with(&[1, 2, 3]);
        assert_eq!(s.union_provenance(&set(&[1]), &set(&[1])).unwrap(), set(&[1]));
        assert_eq!(s.union_provenance(&set(&[2, 3]), &set(&[2])).unwrap(), set(&[2, 3]));
    }

    #[test]
    fn union_across_eight_passages() {
        let s = store_with(&[0, 1, 2, 3, 4, 5, 6, 7]);
        let mut acc = set(&[0]);
        for i in 1..8 {
            acc = s.union_provenance(&acc, &set(&[i])).unwrap();
        }
        assert_eq!(acc.len(), 8);
    }

    #[test]
    fn dangling_id_is_a_violation() {
        let s = store_with(&[1]);
        let err = s.union_provenance(&set(&[1]), &set(&[9])).unwrap_err();
        assert!(matches!(err, Error::ProvenanceViolation(id) if id == "s:9"));
    }

    #[test]
    fn duplicate_session_turn_rejected() {
        let mut s = store_with(&[1]);
        let err = s
            .insert(Passage::new("s", 1, "B", None, "y").unwrap(), emb())
            .unwrap_err();
        assert!(matches!(err, Error::DuplicatePassage(_)));
    }

    #[test]
    fn wrong_dimension_rejected() {
        let mut s = PassageStore::new(3);
        let err = s
            .insert(Passage::new("s", 1, "B", None, "y").unwrap(), emb())
            .unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }

    #[test]
    fn serde_rebuilds_indices() {
        let s = store_with(&[1, 2]);
        let json = serde_json::to_string(&s).unwrap();
        let back: PassageStore = serde_json::from_str(&json).unwrap();
        assert_eq!(back.position(&PassageId::new("s", 2)), Some(1));
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}

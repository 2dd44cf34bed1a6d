//! Episodic memory layer: one frame per passage, fused into an existing
//! frame when the judge says both describe the same event.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::gateway::LlmGateway;
use crate::model::{EpisodicEventFrame, FrameId, Passage, PassageId, ProvenanceSet};
use crate::passages::PassageStore;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionSettings {
    /// How many nearest frames are offered to the judge, best first.
    pub candidates: usize,
    /// Candidates below this cosine are not judged.
    pub threshold: f64,
}

impl Default for FusionSettings {
    fn default() -> Self {
        Self {
            candidates: 1,
            threshold: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IngestOutcome {
    Created(FrameId),
    /// The passage's frame was fused into `into`; `tombstoned` is the id the
    /// candidate frame had been given.
    Fused { into: FrameId, tombstoned: FrameId },
    Quarantined(String),
}

impl IngestOutcome {
    pub fn frame_id(&self) -> Option<FrameId> {
        match self {
            IngestOutcome::Created(f) | IngestOutcome::Fused { into: f, .. } => Some(*f),
            IngestOutcome::Quarantined(_) => None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct EpisodicStore {
    settings: FusionSettings,
    next_frame_id: u64,
    frames: BTreeMap<FrameId, EpisodicEventFrame>,
    tombstones: BTreeSet<FrameId>,
    unframed: BTreeSet<PassageId>,
    #[serde(skip)]
    phi: BTreeMap<PassageId, BTreeSet<FrameId>>,
}

impl EpisodicStore {
    pub fn new(settings: FusionSettings) -> Self {
        Self {
            settings,
            ..Self::default()
        }
    }

    pub fn settings(&self) -> FusionSettings {
        self.settings
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> impl Iterator<Item = &EpisodicEventFrame> {
        self.frames.values()
    }

    pub fn frame(&self, id: FrameId) -> Option<&EpisodicEventFrame> {
        self.frames.get(&id)
    }

    pub fn tombstones(&self) -> &BTreeSet<FrameId> {
        &self.tombstones
    }

    pub fn unframed(&self) -> &BTreeSet<PassageId> {
        &self.unframed
    }

    pub fn is_quarantined(&self, id: &PassageId) -> bool {
        self.unframed.contains(id)
    }

    pub fn is_ingested(&self, id: &PassageId) -> bool {
        self.phi.contains_key(id) || self.unframed.contains(id)
    }

    fn allocate_id(&mut self) -> FrameId {
        let id = FrameId(self.next_frame_id);
        self.next_frame_id += 1;
        id
    }

    fn index(&mut self, frame: &EpisodicEventFrame) {
        for p in frame.provenance.iter() {
            self.phi.entry(p.clone()).or_default().insert(frame.frame_id);
        }
    }

    /// Inserts a fully formed frame, e.g. when restoring state.
    pub fn insert_frame(&mut self, frame: EpisodicEventFrame) -> Result<()> {
        if self.frames.contains_key(&frame.frame_id) || self.tombstones.contains(&frame.frame_id) {
            return Err(Error::Input(format!("frame id {} already used", frame.frame_id)));
        }
        self.next_frame_id = self.next_frame_id.max(frame.frame_id.0 + 1);
        self.index(&frame);
        self.frames.insert(frame.frame_id, frame);
        Ok(())
    }

    /// Best-scoring frames by summary cosine; ties go to the lower
    /// `created_seq`.
    pub fn nearest_frames(&self, v: &Embedding, k: usize) -> Result<Vec<(FrameId, f64)>> {
        let mut scored = Vec::with_capacity(self.frames.len());
        for f in self.frames.values() {
            scored.push((f.created_seq, f.frame_id, v.cosine(&f.summary_embedding)?));
        }
        scored.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
        Ok(scored.into_iter().take(k).map(|(_, id, s)| (id, s)).collect())
    }

    pub fn nearest_frame(&self, v: &Embedding) -> Result<Option<(FrameId, f64)>> {
        Ok(self.nearest_frames(v, 1)?.into_iter().next())
    }

    /// Extracts a frame for a stored passage and either inserts it or fuses
    /// it into the nearest frame the judge accepts.
    pub fn ingest_passage(
        &mut self,
        gateway: &dyn LlmGateway,
        passages: &PassageStore,
        id: &PassageId,
    ) -> Result<IngestOutcome> {
        let passage = passages
            .get(id)
            .ok_or_else(|| Error::ProvenanceViolation(id.to_string()))?;
        if self.is_ingested(id) {
            return Err(Error::DuplicatePassage(format!("{id} already ingested into episodic memory")));
        }

        let extracted = gateway
            .extract_frame(passage)
            .and_then(|r| gateway.embed(&r.summary).map(|e| (r, e)));
        let (result, embedding) = match extracted {
            Ok(v) => v,
            Err(e) => {
                tracing::warn!(passage = %id, error = %e, "frame extraction failed; passage quarantined");
                self.unframed.insert(id.clone());
                return Ok(IngestOutcome::Quarantined(e.to_string()));
            }
        };

        let candidates = self.nearest_frames(&embedding, self.settings.candidates)?;
        let frame_id = self.allocate_id();
        let candidate = EpisodicEventFrame {
            frame_id,
            summary: result.summary,
            events: result.events,
            provenance: ProvenanceSet::single(id.clone()),
            summary_embedding: embedding,
            created_seq: frame_id.0,
        };

        for (prev_id, score) in candidates {
            if score < self.settings.threshold {
                continue;
            }
            let previous = &self.frames[&prev_id];
            match gateway.judge_same_event(&candidate, previous) {
                Ok(true) => {}
                Ok(false) => continue,
                Err(e) => {
                    tracing::warn!(frame = %prev_id, error = %e, "judge failed; treated as different events");
                    continue;
                }
            }
            match self.fuse(gateway, passages, &candidate, prev_id) {
                Ok(fused) => {
                    self.tombstones.insert(frame_id);
                    self.index(&fused);
                    self.frames.insert(prev_id, fused);
                    return Ok(IngestOutcome::Fused {
                        into: prev_id,
                        tombstoned: frame_id,
                    });
                }
                Err(e @ Error::ProvenanceViolation(_)) => return Err(e),
                Err(e) => {
                    tracing::warn!(frame = %prev_id, error = %e, "fusion failed; frames kept apart");
                    break;
                }
            }
        }

        self.index(&candidate);
        self.frames.insert(frame_id, candidate);
        Ok(IngestOutcome::Created(frame_id))
    }

    fn fuse(
        &self,
        gateway: &dyn LlmGateway,
        passages: &PassageStore,
        candidate: &EpisodicEventFrame,
        prev_id: FrameId,
    ) -> Result<EpisodicEventFrame> {
        let previous = &self.frames[&prev_id];
        let provenance = passages.union_provenance(&previous.provenance, &candidate.provenance)?;
        let mut ids: Vec<PassageId> = provenance.iter().cloned().collect();
        passages.sort_chronological(&mut ids);
        let sources: Vec<Passage> = ids.iter().filter_map(|p| passages.get(p).cloned()).collect();
        let fused = gateway.fuse_frames(candidate, previous, &sources)?;
        let summary_embedding = gateway.embed(&fused.summary)?;
        Ok(EpisodicEventFrame {
            frame_id: prev_id,
            summary: fused.summary,
            events: fused.events,
            provenance,
            summary_embedding,
            created_seq: previous.created_seq,
        })
    }

    /// Φ(p). Quarantined passages map to no frames.
    pub fn frames_for_passage(&self, id: &PassageId) -> Result<Vec<&EpisodicEventFrame>> {
        if self.unframed.contains(id) {
            return Ok(Vec::new());
        }
        let ids = self
            .phi
            .get(id)
            .ok_or_else(|| Error::NotFound(format!("passage {id} not ingested into episodic memory")))?;
        Ok(ids.iter().filter_map(|f| self.frames.get(f)).collect())
    }

    pub fn frame_ids_for_passage(&self, id: &PassageId) -> Option<&BTreeSet<FrameId>> {
        self.phi.get(id)
    }

    /// Full consistency check: provenance resolves, Φ is the exact inverse
    /// of frame provenance, and no passage is both framed and quarantined.
    pub fn audit(&self, passages: &PassageStore) -> Result<()> {
        let mut expected: BTreeMap<PassageId, BTreeSet<FrameId>> = BTreeMap::new();
        for (id, f) in &self.frames {
            if *id != f.frame_id {
                return Err(Error::Input(format!("frame keyed {id} carries id {}", f.frame_id)));
            }
            if self.tombstones.contains(id) {
                return Err(Error::Input(format!("tombstoned frame {id} is live")));
            }
            passages.check_closure(&f.provenance)?;
            for p in f.provenance.iter() {
                expected.entry(p.clone()).or_default().insert(*id);
            }
        }
        if expected != self.phi {
            return Err(Error::Input("passage index is not the inverse of frame provenance".into()));
        }
        if let Some(p) = self.unframed.iter().find(|p| self.phi.contains_key(*p)) {
            return Err(Error::Input(format!("passage {p} is both framed and quarantined")));
        }
        for p in &self.unframed {
            if !passages.contains(p) {
                return Err(Error::ProvenanceViolation(p.to_string()));
            }
        }
        Ok(())
    }

    pub fn consolidation_stats(&self) -> ConsolidationStats {
        let mut histogram = BTreeMap::new();
        let mut passages = 0;
        for f in self.frames.values() {
            *histogram.entry(f.provenance.len()).or_insert(0) += 1;
            passages += f.provenance.len();
        }
        let frames = self.frames.len();
        ConsolidationStats {
            histogram,
            frames,
            passages,
            quarantined: self.unframed.len(),
            ratio: (frames > 0).then(|| passages as f64 / frames as f64),
        }
    }
}

#[derive(Deserialize)]
struct EpisodicRepr {
    settings: FusionSettings,
    next_frame_id: u64,
    frames: BTreeMap<FrameId, EpisodicEventFrame>,
    tombstones: BTreeSet<FrameId>,
    unframed: BTreeSet<PassageId>,
}

impl<'de> Deserialize<'de> for EpisodicStore {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = EpisodicRepr::deserialize(d)?;
        let mut store = EpisodicStore {
            settings: r.settings,
            next_frame_id: r.next_frame_id,
            frames: BTreeMap::new(),
            tombstones: r.tombstones,
            unframed: r.unframed,
            phi: BTreeMap::new(),
        };
        for f in r.frames.into_values() {
            store.index(&f);
            store.frames.insert(f.frame_id, f);
        }
        Ok(store)
    }
}

/// Distribution of passages per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsolidationStats {
    pub histogram: BTreeMap<usize, usize>,
    pub frames: usize,
    pub passages: usize,
    pub quarantined: usize,
    /// passages / frames; `None` for an empty store.
    pub ratio: Option<f64>,
}

impl ConsolidationStats {
    pub fn from_histogram(histogram: BTreeMap<usize, usize>) -> Self {
        let frames = histogram.values().sum();
        let passages = histogram.iter().map(|(b, c)| b * c).sum();
        Self {
            histogram,
            frames,
            passages,
            quarantined: 0,
            ratio: (frames > 0).then(|| passages as f64 / frames as f64),
        }
    }

    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<23} {:>8}", "Passages per Memory", "Number of Memory Frames");
        for (bucket, count) in &self.histogram {
            let _ = writeln!(s, "{bucket:<20} {count:>8}");
        }
        let _ = writeln!(s, "{:<23} {:>8}", "Total Memory Frames", self.frames);
        let _ = writeln!(s, "{:<23} {:>8}", "Total Passages", self.passages);
        let _ = writeln!(s, "{:<23} {:>8}", "Quarantined", self.quarantined);
        let ratio = match self.ratio {
            Some(r) => format!("{r:.2}:1"),
            None => "n/a".to_string(),
        };
        let _ = writeln!(s, "{:<23} {:>8}", "Consolidation Ratio", ratio);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::MockGateway;
    use crate::model::SemanticRoleEvent;

    fn store_passages(mock: &MockGateway, rows: &[(&str, &str, &str)]) -> PassageStore {
        let mut s = PassageStore::new(mock.embedding_dim());
        for (i, (speaker, ts, text)) in rows.iter().enumerate() {
            let p = Passage::new("s", i as u32, *speaker, Some(ts), *text).unwrap();
            let e = mock.embed(text).unwrap();
            s.insert(p, e).unwrap();
        }
        s
    }

    fn ingest_all(mock: &MockGateway, ps: &PassageStore) -> (EpisodicStore, Vec<IngestOutcome>) {
        let mut eml = EpisodicStore::default();
        let ids: Vec<PassageId> = ps.iter().map(|p| p.passage_id.clone()).collect();
        let outcomes = ids
            .iter()
            .map(|id| eml.ingest_passage(mock, ps, id).unwrap())
            .collect();
        eml.audit(ps).unwrap();
        (eml, outcomes)
    }

    #[test]
    fn first_passage_creates_frame() {
        let mock = MockGateway::default();
        let ps = store_passages(&mock, &[("A", "2022-01-01", "I went out.")]);
        let (eml, out) = ingest_all(&mock, &ps);
        assert_eq!(out, vec![IngestOutcome::Created(FrameId(0))]);
        assert_eq!(eml.len(), 1);
    }

    #[test]
    fn inquiry_and_response_fuse() {
        let mock = MockGateway::default();
        let ts = "2:01 pm on 23 January, 2022";
        let ps = store_passages(
            &mock,
            &[
                ("Joanna", ts, "Nate, how long have you had them?"),
                ("Nate", ts, "I have had them for three years."),
            ],
        );
        let (eml, out) = ingest_all(&mock, &ps);
        assert_eq!(
            out[1],
            IngestOutcome::Fused {
                into: FrameId(0),
                tombstoned: FrameId(1)
            }
        );
        let f = eml.frame(FrameId(0)).unwrap();
        assert_eq!(f.provenance.len(), 2);
        assert_eq!(f.events.len(), 2);
        assert!(f.events[0].actions[0].starts_with("Nate, how long"));
        assert!(f.summary.contains("Joanna asked") && f.summary.contains("Nate responded"));
        assert_eq!(f.events[0].time.as_deref(), Some(ts));
        assert_eq!(f.events[0].manner.as_deref(), Some("Through verbal inquiry"));
        assert!(eml.tombstones().contains(&FrameId(1)));
    }

    #[test]
    fn three_passage_chain_and_phi() {
        let mock = MockGateway::default();
        let ts = "10:00 am on 2 March, 2023";
        let ps = store_passages(
            &mock,
            &[
                ("Ada", ts, "I bought a kayak."),
                ("Ben", ts, "Ada, where did you buy it?"),
                ("Ada", ts, "I bought it at Harbor Sports."),
            ],
        );
        let (eml, _) = ingest_all(&mock, &ps);
        assert_eq!(eml.len(), 1);
        for p in ps.iter() {
            let fs = eml.frames_for_passage(&p.passage_id).unwrap();
            assert_eq!(fs.len(), 1);
            assert_eq!(fs[0].frame_id, FrameId(0));
            assert_eq!(fs[0].provenance.len(), 3);
        }
        let stats = eml.consolidation_stats();
        assert_eq!(stats.histogram, BTreeMap::from([(3, 1)]));
    }

    #[test]
    fn three_passages_one_fusion_stats() {
        let mock = MockGateway::default();
        let ps = store_passages(
            &mock,
            &[
                ("Ada", "2023-03-02", "I bought a kayak."),
                ("Ben", "2023-03-02", "Ada, is it red?"),
                ("Cy", "2023-07-09", "I painted a fence."),
            ],
        );
        let (eml, _) = ingest_all(&mock, &ps);
        let s = eml.consolidation_stats();
        assert_eq!(s.histogram, BTreeMap::from([(1, 1), (2, 1)]));
        assert_eq!(s.ratio, Some(1.5));
        assert!(s.render_table().contains("1.50:1"));
    }

    #[test]
    fn empty_stats() {
        let s = EpisodicStore::default().consolidation_stats();
        assert_eq!((s.frames, s.passages, s.ratio), (0, 0, None));
    }

    #[test]
    fn quarantine_keeps_invariants() {
        let mock = MockGateway::default().with_failure_marker("@@");
        let ps = store_passages(&mock, &[("A", "2022-01-01", "fine."), ("B", "2022-01-01", "broken @@")]);
        let (eml, out) = ingest_all(&mock, &ps);
        assert!(matches!(out[1], IngestOutcome::Quarantined(_)));
        let q = PassageId::new("s", 1);
        assert!(eml.frames_for_passage(&q).unwrap().is_empty());
        assert!(eml.is_quarantined(&q));
        assert!(matches!(
            eml.frames_for_passage(&PassageId::new("s", 9)),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn double_ingest_rejected() {
        let mock = MockGateway::default();
        let ps = store_passages(&mock, &[("A", "2022-01-01", "hi there.")]);
        let (mut eml, _) = ingest_all(&mock, &ps);
        assert!(eml.ingest_passage(&mock, &ps, &PassageId::new("s", 0)).is_err());
    }

    fn bare_frame(id: u64, e: Embedding) -> EpisodicEventFrame {
        EpisodicEventFrame {
            frame_id: FrameId(id),
            summary: format!("f{id}"),
            events: vec![SemanticRoleEvent {
                participants: vec!["A".into()],
                actions: vec!["A did".into()],
                time: None,
                location: None,
                causality: None,
                manner: None,
            }],
            provenance: ProvenanceSet::single(PassageId::new("s", id as u32)),
            summary_embedding: e,
            created_seq: id,
        }
    }

    #[test]
    fn nearest_frame_ties_prefer_older() {
        let mut eml = EpisodicStore::default();
        assert_eq!(eml.nearest_frame(&Embedding::normalized(vec![1.0, 0.0]).unwrap()).unwrap(), None);
        let e = Embedding::normalized(vec![1.0, 1.0]).unwrap();
        eml.insert_frame(bare_frame(7, e.clone())).unwrap();
        eml.insert_frame(bare_frame(3, e.clone())).unwrap();
        let (id, score) = eml.nearest_frame(&e).unwrap().unwrap();
        assert_eq!(id, FrameId(3));
        assert!((score - 1.0).abs() < 1e-6);
        let wrong = Embedding::normalized(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(eml.nearest_frame(&wrong), Err(Error::Dimension { .. })));
    }

    #[test]
    fn serde_roundtrip_rebuilds_phi() {
        let mock = MockGateway::default();
        let ps = store_passages(&mock, &[("A", "2022-01-01", "I ran."), ("B", "2022-05-01", "I swam.")]);
        let (eml, _) = ingest_all(&mock, &ps);
        let json = serde_json::to_string(&eml).unwrap();
        let back: EpisodicStore = serde_json::from_str(&json).unwrap();
        back.audit(&ps).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}

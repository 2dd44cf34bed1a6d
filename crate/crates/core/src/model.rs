//! Shared domain types and identity rules.

use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::embedding::Embedding;
use crate::error::{Error, Result};

/// Passage identity, rendered as `"{session_id}:{turn_index}"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PassageId(String);

impl PassageId {
    pub fn new(session_id: &str, turn_index: u32) -> Self {
        Self(format!("{session_id}:{turn_index}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PassageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PassageId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

macro_rules! numeric_id {
    ($name:ident) => {
        /// Store-assigned monotone id, rendered as a decimal string.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.serialize_str(&self.0.to_string())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse::<u64>().map($name).map_err(serde::de::Error::custom)
            }
        }
    };
}

numeric_id!(FrameId);
numeric_id!(EntityId);

/// A point in time as written in the source, plus its UTC instant when the
/// text is parseable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timestamp {
    pub raw: String,
    pub instant: Option<DateTime<Utc>>,
}

impl Timestamp {
    pub fn parse(raw: &str) -> Self {
        let raw = raw.trim().to_string();
        let instant = parse_instant(&raw);
        Self { raw, instant }
    }

    pub fn date(&self) -> Option<NaiveDate> {
        self.instant.map(|i| i.date_naive())
    }
}

/// ISO-8601 / RFC 3339 first, then a few conversational layouts such as
/// `1:56 pm on 8 May, 2023` and `2023/05/20 (Sat) 02:21`.
fn parse_instant(raw: &str) -> Option<DateTime<Utc>> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.with_timezone(&Utc));
    }
    const DATETIME_FORMATS: &[&str] = &[
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
        "%I:%M %p on %d %B, %Y",
        "%I:%M %P on %d %B, %Y",
        "%Y/%m/%d %H:%M",
    ];
    for fmt in DATETIME_FORMATS {
        if let Ok(ndt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(ndt.and_utc());
        }
    }
    // LongMemEval style: "2023/05/20 (Sat) 02:21"
    if let Some((date, rest)) = raw.split_once(" (") {
        if let Some((_, time)) = rest.split_once(") ") {
            let joined = format!("{date} {time}");
            if let Ok(ndt) = NaiveDateTime::parse_from_str(&joined, "%Y/%m/%d %H:%M") {
                return Some(ndt.and_utc());
            }
        }
    }
    for fmt in ["%Y-%m-%d", "%d %B, %Y", "%B %d, %Y"] {
        if let Ok(d) = NaiveDate::parse_from_str(raw, fmt) {
            return d.and_hms_opt(0, 0, 0).map(|ndt| ndt.and_utc());
        }
    }
    None
}

/// An atomic transcript unit (one speaker turn).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub passage_id: PassageId,
    pub session_id: String,
    pub turn_index: u32,
    pub speaker: String,
    pub timestamp: Option<Timestamp>,
    pub text: String,
}

impl Passage {
    pub fn new(
        session_id: impl Into<String>,
        turn_index: u32,
        speaker: impl Into<String>,
        timestamp: Option<&str>,
        text: impl Into<String>,
    ) -> Result<Self> {
        let session_id = session_id.into();
        let text = text.into();
        if session_id.trim().is_empty() {
            return Err(Error::Input("passage session_id is empty".into()));
        }
        if text.trim().is_empty() {
            return Err(Error::Input(format!(
                "passage {session_id}:{turn_index} has empty text"
            )));
        }
        Ok(Self {
            passage_id: PassageId::new(&session_id, turn_index),
            session_id,
            turn_index,
            speaker: speaker.into(),
            timestamp: timestamp.filter(|t| !t.trim().is_empty()).map(Timestamp::parse),
            text,
        })
    }

    /// `"[{timestamp}] {speaker}: "`, the prefix used in grounded-evidence
    /// rendering.
    pub fn rendered(&self) -> String {
        let ts = self
            .timestamp
            .as_ref()
            .map(|t| t.raw.as_str())
            .unwrap_or("unknown time");
        format!("[{ts}] {}: {}", self.speaker, self.text)
    }
}

/// Non-empty set of source passage ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeSet<PassageId>", into = "BTreeSet<PassageId>")]
pub struct ProvenanceSet(BTreeSet<PassageId>);

impl ProvenanceSet {
    pub fn single(id: PassageId) -> Self {
        Self(BTreeSet::from([id]))
    }

    pub fn from_ids(ids: impl IntoIterator<Item = PassageId>) -> Result<Self> {
        let set: BTreeSet<_> = ids.into_iter().collect();
        Self::try_from(set).map_err(Error::Input)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, id: &PassageId) -> bool {
        self.0.contains(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PassageId> {
        self.0.iter()
    }

    /// Set union without referential checks. See
    /// [`crate::passages::PassageStore::union_provenance`] for the checked form.
    pub fn union(&self, other: &ProvenanceSet) -> ProvenanceSet {
        ProvenanceSet(self.0.union(&other.0).cloned().collect())
    }
}

impl TryFrom<BTreeSet<PassageId>> for ProvenanceSet {
    type Error = String;

    fn try_from(set: BTreeSet<PassageId>) -> std::result::Result<Self, String> {
        if set.is_empty() {
            return Err("provenance set must be non-empty".into());
        }
        Ok(Self(set))
    }
}

impl From<ProvenanceSet> for BTreeSet<PassageId> {
    fn from(p: ProvenanceSet) -> Self {
        p.0
    }
}

/// One structured event inside a frame. Absent roles are `None`, never "".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticRoleEvent {
    pub participants: Vec<String>,
    pub actions: Vec<String>,
    pub time: Option<String>,
    pub location: Option<String>,
    pub causality: Option<String>,
    pub manner: Option<String>,
}

impl SemanticRoleEvent {
    /// Drops blank list entries, turns blank role slots into `None`, and
    /// rejects events with neither participants nor actions.
    pub fn normalized(mut self) -> Result<Self> {
        fn clean_list(v: Vec<String>) -> Vec<String> {
            v.into_iter()
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        }
        fn clean_slot(v: Option<String>) -> Option<String> {
            v.map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty() && !s.eq_ignore_ascii_case("null"))
        }
        self.participants = clean_list(self.participants);
        self.actions = clean_list(self.actions);
        self.time = clean_slot(self.time);
        self.location = clean_slot(self.location);
        self.causality = clean_slot(self.causality);
        self.manner = clean_slot(self.manner);
        if self.participants.is_empty() && self.actions.is_empty() {
            return Err(Error::Extraction(
                "event has neither participants nor actions".into(),
            ));
        }
        Ok(self)
    }
}

/// The episodic memory unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodicEventFrame {
    pub frame_id: FrameId,
    pub summary: String,
    pub events: Vec<SemanticRoleEvent>,
    pub provenance: ProvenanceSet,
    pub summary_embedding: Embedding,
    pub created_seq: u64,
}

impl EpisodicEventFrame {
    pub fn participants(&self) -> BTreeSet<&str> {
        self.events
            .iter()
            .flat_map(|e| e.participants.iter().map(String::as_str))
            .collect()
    }
}

/// Normalized temporal validity of a fact. `start`/`end` hold ISO-style
/// prefixes (`2019`, `2019-01`, `2019-01-05`); `raw` keeps the source phrase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalSpan {
    pub start: Option<String>,
    pub end: Option<String>,
    pub raw: String,
}

impl TemporalSpan {
    pub fn point(value: impl Into<String>, raw: impl Into<String>) -> Self {
        let v = value.into();
        Self {
            start: Some(v.clone()),
            end: Some(v),
            raw: raw.into(),
        }
    }

    pub fn from(start: impl Into<String>, raw: impl Into<String>) -> Self {
        Self {
            start: Some(start.into()),
            end: None,
            raw: raw.into(),
        }
    }

    pub fn raw_only(raw: impl Into<String>) -> Self {
        Self {
            start: None,
            end: None,
            raw: raw.into(),
        }
    }
}

impl fmt::Display for TemporalSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.start, &self.end) {
            (Some(s), Some(e)) if s == e => f.write_str(s),
            (Some(s), Some(e)) => write!(f, "{s} to {e}"),
            (Some(s), None) => write!(f, "from {s}"),
            (None, Some(e)) => write!(f, "until {e}"),
            (None, None) => f.write_str(&self.raw),
        }
    }
}

/// A quadruple as produced by the extractor, before entity resolution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadrupleDraft {
    pub subject: String,
    pub relation: String,
    pub object: Option<String>,
    pub temporal: Option<TemporalSpan>,
}

impl QuadrupleDraft {
    pub fn validate(&self) -> Result<()> {
        if self.subject.trim().is_empty() || self.relation.trim().is_empty() {
            return Err(Error::Extraction(
                "quadruple needs a non-empty subject and relation".into(),
            ));
        }
        Ok(())
    }

    /// Embedding text: `"subject | relation | object | time"`.
    pub fn serialized(&self) -> String {
        serialize_quad(
            &self.subject,
            &self.relation,
            self.object.as_deref(),
            self.temporal.as_ref(),
        )
    }
}

pub(crate) fn serialize_quad(
    subject: &str,
    relation: &str,
    object: Option<&str>,
    temporal: Option<&TemporalSpan>,
) -> String {
    let tau = temporal.map(|t| t.to_string()).unwrap_or_default();
    format!("{subject} | {relation} | {} | {tau}", object.unwrap_or(""))
}

/// Object slot of a stored fact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FactObject {
    Entity { id: EntityId, text: String },
    Literal { text: String },
}

impl FactObject {
    pub fn text(&self) -> &str {
        match self {
            FactObject::Entity { text, .. } | FactObject::Literal { text } => text,
        }
    }

    pub fn entity(&self) -> Option<EntityId> {
        match self {
            FactObject::Entity { id, .. } => Some(*id),
            FactObject::Literal { .. } => None,
        }
    }
}

/// A stored fact edge of the graph layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadruple {
    pub ordinal: usize,
    pub subject: EntityId,
    pub subject_text: String,
    pub relation: String,
    pub object: Option<FactObject>,
    pub temporal: Option<TemporalSpan>,
    pub provenance: ProvenanceSet,
    pub embedding: Embedding,
}

impl Quadruple {
    pub fn serialized(&self) -> String {
        serialize_quad(
            &self.subject_text,
            &self.relation,
            self.object.as_ref().map(FactObject::text),
            self.temporal.as_ref(),
        )
    }

    /// `"(s, r, o, τ)"` with `?` for absent slots.
    pub fn display_tuple(&self) -> String {
        format!(
            "({}, {}, {}, {})",
            self.subject_text,
            self.relation,
            self.object.as_ref().map(FactObject::text).unwrap_or("?"),
            self.temporal
                .as_ref()
                .map(|t| t.to_string())
                .unwrap_or_else(|| "?".into())
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityNode {
    pub entity_id: EntityId,
    pub canonical_name: String,
    pub aliases: BTreeSet<String>,
    pub embedding: Embedding,
    pub linked_passages: ProvenanceSet,
}

/// Retrieval and construction knobs. Construct through [`RetrievalConfig::new`]
/// or `Default` and call [`RetrievalConfig::validate`] after mutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub initial_retrieval_size: usize,
    pub expansion_cap_multiplier: usize,
    pub fact_seed_k: usize,
    pub damping: f64,
    pub ppr_tolerance: f64,
    pub ppr_max_iters: usize,
    pub merge_threshold: f64,
    pub fusion_candidate_threshold: f64,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            initial_retrieval_size: 5,
            expansion_cap_multiplier: 2,
            fact_seed_k: 5,
            damping: 0.85,
            ppr_tolerance: 1e-8,
            ppr_max_iters: 200,
            merge_threshold: 0.90,
            fusion_candidate_threshold: 0.0,
        }
    }
}

impl RetrievalConfig {
    pub fn new(initial_retrieval_size: usize) -> Result<Self> {
        let cfg = Self {
            initial_retrieval_size,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.initial_retrieval_size == 0 {
            return bad("initial_retrieval_size must be positive");
        }
        if self.expansion_cap_multiplier == 0 {
            return bad("expansion_cap_multiplier must be positive");
        }
        if self.fact_seed_k == 0 {
            return bad("fact_seed_k must be positive");
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return bad("damping must lie in (0, 1)");
        }
        if !(self.ppr_tolerance > 0.0 && self.ppr_tolerance.is_finite()) {
            return bad("ppr_tolerance must be positive");
        }
        if self.ppr_max_iters == 0 {
            return bad("ppr_max_iters must be positive");
        }
        if !(self.merge_threshold > 0.0 && self.merge_threshold <= 1.0) {
            return bad("merge_threshold must lie in (0, 1]");
        }
        if !(self.fusion_candidate_threshold >= 0.0 && self.fusion_candidate_threshold < 1.0) {
            return bad("fusion_candidate_threshold must lie in [0, 1)");
        }
        Ok(())
    }

    /// Upper bound on `|P_final|`.
    pub fn expansion_cap(&self) -> usize {
        self.expansion_cap_multiplier * self.initial_retrieval_size
    }
}

//! The single boundary for every model-backed capability.
//!
//! [`LlmGateway`] covers frame extraction, quadruple extraction, same-event
//! judging, frame fusion, answer generation and embedding. [`MockGateway`]
//! is a pure rule-based implementation for offline runs and tests;
//! [`HttpGateway`] talks to chat-completion-compatible endpoints.

mod http;
mod limiter;
mod mock;
pub mod prompts;
pub(crate) mod text;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use http::{EmbeddingEndpoint, GatewayConfig, HttpGateway};
pub use limiter::Limiter;
pub use mock::MockGateway;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::model::{EpisodicEventFrame, Passage, QuadrupleDraft, SemanticRoleEvent, TemporalSpan};
use crate::retrieval::SynthesizedContext;

/// Validated output of frame extraction or fusion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub summary: String,
    pub events: Vec<SemanticRoleEvent>,
}

impl ExtractionResult {
    /// Normalizes role slots and enforces a non-empty summary and at least
    /// one valid event.
    pub fn validated(self) -> Result<Self> {
        let summary = self.summary.trim().to_string();
        if summary.is_empty() {
            return Err(Error::Extraction("empty summary".into()));
        }
        let events = self
            .events
            .into_iter()
            .map(SemanticRoleEvent::normalized)
            .collect::<Result<Vec<_>>>()?;
        if events.is_empty() {
            return Err(Error::Extraction("no events".into()));
        }
        Ok(Self { summary, events })
    }
}

/// Generator output. `answer` is the text after the `Answer:` marker, or
/// the whole completion when the marker is missing (`parsed == false`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedAnswer {
    pub answer: String,
    pub raw: String,
    pub parsed: bool,
}

impl GeneratedAnswer {
    pub fn from_completion(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        match raw.rfind("Answer:") {
            Some(idx) => Self {
                answer: raw[idx + "Answer:".len()..].trim().to_string(),
                raw,
                parsed: true,
            },
            None => Self {
                answer: raw.trim().to_string(),
                raw,
                parsed: false,
            },
        }
    }
}

pub trait LlmGateway: Send + Sync {
    fn extract_frame(&self, passage: &Passage) -> Result<ExtractionResult>;

    fn extract_quadruples(
        &self,
        text: &str,
        reference_time: Option<DateTime<Utc>>,
    ) -> Result<Vec<QuadrupleDraft>>;

    fn judge_same_event(
        &self,
        candidate: &EpisodicEventFrame,
        previous: &EpisodicEventFrame,
    ) -> Result<bool>;

    /// Merges two frames. Provenance is the caller's job.
    fn fuse_frames(
        &self,
        candidate: &EpisodicEventFrame,
        previous: &EpisodicEventFrame,
        sources: &[Passage],
    ) -> Result<ExtractionResult>;

    fn generate_answer(&self, query: &str, context: &SynthesizedContext) -> Result<GeneratedAnswer>;

    fn embed(&self, text: &str) -> Result<Embedding>;

    fn embedding_dim(&self) -> usize;

    /// Stable description recorded in snapshots, e.g. `mock:seed=7:dim=256`.
    fn fingerprint(&self) -> String;
}

/// Extracts the outermost JSON object from a completion, tolerating code
/// fences and surrounding prose.
pub(crate) fn json_object(raw: &str) -> Result<&str> {
    let start = raw.find('{');
    let end = raw.rfind('}');
    match (start, end) {
        (Some(s), Some(e)) if s < e => Ok(&raw[s..=e]),
        _ => Err(Error::Extraction("completion contains no JSON object".into())),
    }
}

#[derive(Debug, Deserialize)]
struct WireFrame {
    summary: String,
    events: Vec<WireEvent>,
}

#[derive(Debug, Deserialize)]
struct WireEvent {
    #[serde(default)]
    participants: StringOrList,
    #[serde(default, alias = "actions")]
    action: StringOrList,
    #[serde(default)]
    time: Option<String>,
    #[serde(default)]
    location: Option<String>,
    #[serde(default, alias = "causality")]
    reason: Option<String>,
    #[serde(default, alias = "manner")]
    method: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(untagged)]
enum StringOrList {
    #[default]
    None,
    One(String),
    Many(Vec<String>),
}

impl StringOrList {
    fn into_vec(self) -> Vec<String> {
        match self {
            StringOrList::None => Vec::new(),
            StringOrList::One(s) => vec![s],
            StringOrList::Many(v) => v,
        }
    }
}

/// Parses the extraction/fusion JSON contract (`summary` + `events` with
/// participants/action/time/location/reason/method).
pub fn parse_frame_json(raw: &str) -> Result<ExtractionResult> {
    let obj = json_object(raw)?;
    let wire: WireFrame =
        serde_json::from_str(obj).map_err(|e| Error::Extraction(format!("schema: {e}")))?;
    ExtractionResult {
        summary: wire.summary,
        events: wire
            .events
            .into_iter()
            .map(|e| SemanticRoleEvent {
                participants: e.participants.into_vec(),
                actions: e.action.into_vec(),
                time: e.time,
                location: e.location,
                causality: e.reason,
                manner: e.method,
            })
            .collect(),
    }
    .validated()
}

#[derive(Debug, Deserialize)]
struct WireQuads {
    quadruples: Vec<WireQuad>,
}

#[derive(Debug, Deserialize)]
struct WireQuad {
    subject: String,
    relation: String,
    #[serde(default)]
    object: Option<String>,
    #[serde(default)]
    time: Option<String>,
}

pub fn parse_quads_json(raw: &str) -> Result<Vec<QuadrupleDraft>> {
    let obj = json_object(raw)?;
    let wire: WireQuads =
        serde_json::from_str(obj).map_err(|e| Error::Extraction(format!("schema: {e}")))?;
    wire.quadruples
        .into_iter()
        .map(|q| {
            let temporal = q
                .time
                .map(|t| t.trim().to_string())
                .filter(|t| !t.is_empty() && !t.eq_ignore_ascii_case("null"))
                .map(|t| normalize_time_text(&t));
            let d = QuadrupleDraft {
                subject: q.subject.trim().to_string(),
                relation: q.relation.trim().to_string(),
                object: q
                    .object
                    .map(|o| o.trim().to_string())
                    .filter(|o| !o.is_empty() && !o.eq_ignore_ascii_case("null")),
                temporal,
            };
            d.validate()?;
            Ok(d)
        })
        .collect()
}

/// Best-effort normalization of a free-text time slot into a span.
pub(crate) fn normalize_time_text(t: &str) -> TemporalSpan {
    match text::temporal_phrase(t) {
        Some(p) => TemporalSpan {
            raw: t.to_string(),
            ..p.span()
        },
        None => TemporalSpan::raw_only(t),
    }
}

#[derive(Debug, Deserialize)]
struct WireJudge {
    same_event: bool,
}

pub fn parse_judge_json(raw: &str) -> Result<bool> {
    let obj = json_object(raw).map_err(|e| Error::Judge(e.to_string()))?;
    let wire: WireJudge =
        serde_json::from_str(obj).map_err(|e| Error::Judge(format!("schema: {e}")))?;
    Ok(wire.same_event)
}

//! Prompt resources and the user messages sent alongside them.

use chrono::{DateTime, Utc};
use serde_json::json;

use crate::model::{EpisodicEventFrame, Passage};

pub const PROMPT_VERSION: &str = "v1";

pub const EXTRACTION: &str = include_str!("../../resources/prompts/extraction.v1.txt");
pub const FUSION: &str = include_str!("../../resources/prompts/fusion.v1.txt");
pub const ANSWER: &str = include_str!("../../resources/prompts/answer.v1.txt");
pub const QUADRUPLES: &str = include_str!("../../resources/prompts/quadruples.v1.txt");
pub const JUDGE: &str = include_str!("../../resources/prompts/judge.v1.txt");
pub const ANSWER_JUDGE: &str = include_str!("../../resources/prompts/answer_judge.v1.txt");

pub fn extraction_input(p: &Passage) -> String {
    let time = p
        .timestamp
        .as_ref()
        .map(|t| t.raw.as_str())
        .unwrap_or("unknown");
    format!("Time: {time}\nSpeaker: {}\nText: {}", p.speaker, p.text)
}

pub fn quadruple_input(text: &str, reference_time: Option<DateTime<Utc>>) -> String {
    match reference_time {
        Some(t) => format!("Reference time: {}\nText: {text}", t.to_rfc3339()),
        None => format!("Text: {text}"),
    }
}

/// Frame in the same JSON shape the extraction prompt asks for.
pub fn frame_json(f: &EpisodicEventFrame) -> serde_json::Value {
    json!({
        "summary": f.summary,
        "events": f.events.iter().map(|e| json!({
            "participants": e.participants,
            "action": e.actions,
            "time": e.time,
            "location": e.location,
            "reason": e.causality,
            "method": e.manner,
        })).collect::<Vec<_>>(),
    })
}

pub fn judge_input(candidate: &EpisodicEventFrame, previous: &EpisodicEventFrame) -> String {
    format!(
        "Memory A:\n{}\n\nMemory B:\n{}",
        frame_json(previous),
        frame_json(candidate)
    )
}

pub fn fusion_input(
    candidate: &EpisodicEventFrame,
    previous: &EpisodicEventFrame,
    sources: &[Passage],
) -> String {
    let passages: Vec<String> = sources.iter().map(Passage::rendered).collect();
    format!(
        "Memory 1:\n{}\n\nMemory 2:\n{}\n\nOriginal Passages:\n{}",
        frame_json(previous),
        frame_json(candidate),
        passages.join("\n")
    )
}

pub fn answer_input(query: &str, serialized_context: &str) -> String {
    format!("{serialized_context}\n\nQuestion: {query}")
}

pub fn answer_judge_input(question: &str, gold: &str, prediction: &str) -> String {
    ANSWER_JUDGE
        .replace("{question}", question)
        .replace("{gold}", gold)
        .replace("{prediction}", prediction)
}

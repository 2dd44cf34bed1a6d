//! Transcript loaders for LoCoMo, LongMemEval and a generic JSONL layout.
//!
//! Tested schema revisions: LoCoMo `locomo10.json` (array of samples with a
//! `conversation` object holding `session_N` / `session_N_date_time` keys and
//! a `qa` list) and LongMemEval `longmemeval_s` / `_m` / `_oracle` (array of
//! questions each carrying its own `haystack_sessions`).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::eval::{Category, QaItem};
use crate::model::{Passage, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Locomo,
    Longmemeval,
    Jsonl,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "locomo" => Ok(Format::Locomo),
            "longmemeval" => Ok(Format::Longmemeval),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Locomo => "locomo",
            Format::Longmemeval => "longmemeval",
            Format::Jsonl => "jsonl",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub turn_index: u32,
    pub speaker: String,
    /// Text with any image caption already folded in.
    pub text: String,
    pub image_caption: Option<String>,
    /// Per-turn time, when the source has one.
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub session_timestamp: Option<String>,
    pub turns: Vec<Turn>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptDocument {
    pub conversation_id: String,
    pub sessions: Vec<Session>,
}

impl TranscriptDocument {
    pub fn turn_count(&self) -> usize {
        self.sessions.iter().map(|s| s.turns.len()).sum()
    }

    /// Passages in document order.
    pub fn passages(&self) -> Result<Vec<Passage>> {
        let mut out = Vec::with_capacity(self.turn_count());
        for s in &self.sessions {
            for t in &s.turns {
                let ts = t.timestamp.as_deref().or(s.session_timestamp.as_deref());
                out.push(Passage::new(&s.session_id, t.turn_index, &t.speaker, ts, &t.text)?);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conversation {
    pub document: TranscriptDocument,
    pub questions: Vec<QaItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Malformed {
    pub location: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadedDataset {
    pub format: Format,
    pub conversations: Vec<Conversation>,
    /// Turn records that could not become passages.
    pub malformed: Vec<Malformed>,
    pub warnings: Vec<String>,
    /// Turn records seen in the file, well-formed or not.
    pub records_seen: usize,
}

impl LoadedDataset {
    pub fn passage_count(&self) -> usize {
        self.conversations.iter().map(|c| c.document.turn_count()).sum()
    }

    pub fn conversation(&self, id: &str) -> Option<&Conversation> {
        self.conversations.iter().find(|c| c.document.conversation_id == id)
    }
}

pub fn load_transcript(path: &Path, format: Format) -> Result<LoadedDataset> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| Error::Load(format!("{}: {e}", path.display())))?;
    load_str(&raw, format)
}

pub fn load_str(raw: &str, format: Format) -> Result<LoadedDataset> {
    let mut ds = LoadedDataset {
        format,
        conversations: Vec::new(),
        malformed: Vec::new(),
        warnings: Vec::new(),
        records_seen: 0,
    };
    match format {
        Format::Jsonl => load_jsonl(raw, &mut ds)?,
        Format::Locomo => load_locomo(&parse_json(raw)?, &mut ds)?,
        Format::Longmemeval => load_longmemeval(&parse_json(raw)?, &mut ds)?,
    }
    for w in &ds.warnings {
        tracing::warn!("{w}");
    }
    if !ds.malformed.is_empty() {
        tracing::warn!(count = ds.malformed.len(), "malformed records reported");
    }
    Ok(ds)
}

fn parse_json(raw: &str) -> Result<Value> {
    serde_json::from_str(raw).map_err(|e| Error::Load(format!("invalid JSON at line {}, column {}: {e}", e.line(), e.column())))
}

fn fold_caption(text: &str, caption: Option<&str>) -> String {
    match caption.map(str::trim).filter(|c| !c.is_empty()) {
        Some(c) if text.trim().is_empty() => format!("[Image: {c}]"),
        Some(c) => format!("{} [Image: {c}]", text.trim_end()),
        None => text.to_string(),
    }
}

/// Warns when `next` parses to an earlier instant than `prev`.
fn check_order(prev: &mut Option<Timestamp>, next: Option<&str>, place: &str, warnings: &mut Vec<String>) {
    let Some(raw) = next else { return };
    let ts = Timestamp::parse(raw);
    if let (Some(p), Some(n)) = (prev.as_ref().and_then(|p| p.instant), ts.instant) {
        if n < p {
            warnings.push(format!("{place}: timestamp {raw} is earlier than the previous one; file order kept"));
        }
    }
    if ts.instant.is_some() {
        *prev = Some(ts);
    }
}

#[derive(Deserialize)]
struct JsonlRecord {
    session_id: String,
    turn_index: u32,
    speaker: String,
    timestamp: Option<String>,
    text: String,
}

fn load_jsonl(raw: &str, ds: &mut LoadedDataset) -> Result<()> {
    let mut sessions: Vec<Session> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut last_ts: Option<Timestamp> = None;
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        ds.records_seen += 1;
        let location = format!("line {}", i + 1);
        let rec: JsonlRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                ds.malformed.push(Malformed { location, reason: e.to_string() });
                continue;
            }
        };
        if rec.text.trim().is_empty() || rec.session_id.trim().is_empty() {
            ds.malformed.push(Malformed { location, reason: "empty text or session_id".into() });
            continue;
        }
        if !seen.insert((rec.session_id.clone(), rec.turn_index)) {
            ds.malformed.push(Malformed {
                location,
                reason: format!("duplicate turn {} in session {}", rec.turn_index, rec.session_id),
            });
            continue;
        }
        check_order(&mut last_ts, rec.timestamp.as_deref(), &location, &mut ds.warnings);
        let turn = Turn {
            turn_index: rec.turn_index,
            speaker: rec.speaker,
            text: rec.text,
            image_caption: None,
            timestamp: rec.timestamp.clone(),
        };
        match sessions.last_mut() {
            Some(s) if s.session_id == rec.session_id => s.turns.push(turn),
            _ => sessions.push(Session {
                session_id: rec.session_id,
                session_timestamp: rec.timestamp,
                turns: vec![turn],
            }),
        }
    }
    if !sessions.is_empty() {
        ds.conversations.push(Conversation {
            document: TranscriptDocument {
                conversation_id: "jsonl".into(),
                sessions,
            },
            questions: Vec::new(),
        });
    }
    Ok(())
}

fn str_field<'a>(v: &'a Value, key: &str) -> Option<&'a str> {
    v.get(key).and_then(Value::as_str)
}

/// Answers may be strings or numbers (LoCoMo has integer years).
fn answer_field(v: &Value, key: &str) -> Option<String> {
    match v.get(key)? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn load_locomo(root: &Value, ds: &mut LoadedDataset) -> Result<()> {
    let samples: Vec<&Value> = match root {
        Value::Array(a) => a.iter().collect(),
        Value::Object(_) => vec![root],
        _ => return Err(Error::Load("expected a LoCoMo sample or array of samples".into())),
    };
    for (si, sample) in samples.into_iter().enumerate() {
        let conv_id = str_field(sample, "sample_id")
            .map(str::to_string)
            .unwrap_or_else(|| format!("sample-{si}"));
        let conv = sample
            .get("conversation")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Load(format!("sample {conv_id}: missing `conversation` object")))?;

        let mut numbers: Vec<u32> = conv
            .keys()
            .filter_map(|k| k.strip_prefix("session_"))
            .filter_map(|k| k.parse().ok())
            .collect();
        numbers.sort_unstable();
        numbers.dedup();

        let mut sessions = Vec::new();
        let mut last_ts: Option<Timestamp> = None;
        for n in numbers {
            let key = format!("session_{n}");
            let ts = conv.get(&format!("{key}_date_time")).and_then(Value::as_str).map(str::to_string);
            check_order(&mut last_ts, ts.as_deref(), &format!("{conv_id}/{key}"), &mut ds.warnings);
            let Some(turns) = conv.get(&key).and_then(Value::as_array) else {
                continue;
            };
            let mut out = Vec::new();
            for (ti, t) in turns.iter().enumerate() {
                ds.records_seen += 1;
                let location = format!("{conv_id}/{key}[{ti}]");
                let speaker = str_field(t, "speaker");
                let text = str_field(t, "text").unwrap_or("");
                let caption = str_field(t, "blip_caption");
                let folded = fold_caption(text, caption);
                match speaker {
                    Some(sp) if !folded.trim().is_empty() => out.push(Turn {
                        turn_index: ti as u32,
                        speaker: sp.to_string(),
                        text: folded,
                        image_caption: caption.map(str::to_string),
                        timestamp: None,
                    }),
                    _ => ds.malformed.push(Malformed {
                        location,
                        reason: "turn needs a speaker and text or image caption".into(),
                    }),
                }
            }
            if !out.is_empty() {
                sessions.push(Session {
                    session_id: key,
                    session_timestamp: ts,
                    turns: out,
                });
            }
        }

        let mut questions = Vec::new();
        if let Some(qa) = sample.get("qa").and_then(Value::as_array) {
            for (qi, q) in qa.iter().enumerate() {
                let Some(query) = str_field(q, "question") else {
                    ds.warnings.push(format!("{conv_id}/qa[{qi}]: no question text"));
                    continue;
                };
                let category = Category::from_locomo(q.get("category").and_then(Value::as_i64).unwrap_or(0));
                questions.push(QaItem {
                    question_id: format!("{conv_id}/q{qi}"),
                    category,
                    subcategory: None,
                    query: query.to_string(),
                    gold: answer_field(q, "answer").or_else(|| answer_field(q, "adversarial_answer")),
                });
            }
        }
        ds.conversations.push(Conversation {
            document: TranscriptDocument {
                conversation_id: conv_id,
                sessions,
            },
            questions,
        });
    }
    Ok(())
}

fn load_longmemeval(root: &Value, ds: &mut LoadedDataset) -> Result<()> {
    let items: Vec<&Value> = match root {
        Value::Array(a) => a.iter().collect(),
        Value::Object(_) => vec![root],
        _ => return Err(Error::Load("expected a LongMemEval item or array of items".into())),
    };
    for (ii, item) in items.into_iter().enumerate() {
        let qid = str_field(item, "question_id")
            .map(str::to_string)
            .unwrap_or_else(|| format!("item-{ii}"));
        let sessions_v = item
            .get("haystack_sessions")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Load(format!("item {qid}: missing `haystack_sessions`")))?;
        let ids = item.get("haystack_session_ids").and_then(Value::as_array);
        let dates = item.get("haystack_dates").and_then(Value::as_array);

        let mut sessions = Vec::new();
        let mut last_ts: Option<Timestamp> = None;
        for (si, turns) in sessions_v.iter().enumerate() {
            let sid = ids
                .and_then(|a| a.get(si))
                .and_then(Value::as_str)
                .map(str::to_string)
                .unwrap_or_else(|| format!("session_{si}"));
            let ts = dates.and_then(|a| a.get(si)).and_then(Value::as_str).map(str::to_string);
            check_order(&mut last_ts, ts.as_deref(), &format!("{qid}/{sid}"), &mut ds.warnings);
            let Some(turns) = turns.as_array() else {
                ds.malformed.push(Malformed {
                    location: format!("{qid}/{sid}"),
                    reason: "session is not a list of turns".into(),
                });
                continue;
            };
            let mut out = Vec::new();
            for (ti, t) in turns.iter().enumerate() {
                ds.records_seen += 1;
                match (str_field(t, "role"), str_field(t, "content")) {
                    (Some(role), Some(content)) if !content.trim().is_empty() => out.push(Turn {
                        turn_index: ti as u32,
                        speaker: role.to_string(),
                        text: content.to_string(),
                        image_caption: None,
                        timestamp: None,
                    }),
                    _ => ds.malformed.push(Malformed {
                        location: format!("{qid}/{sid}[{ti}]"),
                        reason: "turn needs role and non-empty content".into(),
                    }),
                }
            }
            if !out.is_empty() {
                sessions.push(Session {
                    session_id: sid,
                    session_timestamp: ts,
                    turns: out,
                });
            }
        }

        let question_type = str_field(item, "question_type").unwrap_or("unknown");
        let questions = match str_field(item, "question") {
            Some(q) => vec![QaItem {
                question_id: qid.clone(),
                category: Category::from_longmemeval(question_type, &qid),
                subcategory: Some(question_type.to_string()),
                query: q.to_string(),
                gold: answer_field(item, "answer"),
            }],
            None => {
                ds.warnings.push(format!("{qid}: no question text"));
                Vec::new()
            }
        };
        ds.conversations.push(Conversation {
            document: TranscriptDocument {
                conversation_id: qid,
                sessions,
            },
            questions,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_minimal() {
        let raw = r#"{"session_id": "s1", "turn_index": 0, "speaker": "A", "timestamp": "2023-01-01T10:00:00Z", "text": "hi"}
{"session_id": "s1", "turn_index": 1, "speaker": "B", "timestamp": "2023-01-01T10:01:00Z", "text": "hello"}"#;
        let ds = load_str(raw, Format::Jsonl).unwrap();
        let ps = ds.conversations[0].document.passages().unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!((ps[0].turn_index, ps[1].turn_index), (0, 1));
        assert!(ds.warnings.is_empty());
    }

    #[test]
    fn jsonl_out_of_order_and_malformed() {
        let raw = r#"{"session_id": "s1", "turn_index": 0, "speaker": "A", "timestamp": "2023-01-03", "text": "one"}
{"session_id": "s1", "turn_index": 1, "speaker": "B", "timestamp": "2023-01-01", "text": "two"}
not json
{"session_id": "s1", "turn_index": 2, "speaker": "A", "timestamp": "2023-01-04", "text": "three"}
{"session_id": "s1", "turn_index": 2, "speaker": "A", "timestamp": "2023-01-05", "text": "dup"}"#;
        let ds = load_str(raw, Format::Jsonl).unwrap();
        let ps = ds.conversations[0].document.passages().unwrap();
        assert_eq!(ps.iter().map(|p| p.text.as_str()).collect::<Vec<_>>(), vec!["one", "two", "three"]);
        assert_eq!(ds.warnings.len(), 1);
        assert_eq!(ds.malformed.len(), 2);
        assert_eq!(ds.records_seen, ps.len() + ds.malformed.len());
    }

    #[test]
    fn locomo_caption_and_qa() {
        let raw = r#"[{"sample_id": "conv-1", "conversation": {
            "speaker_a": "Tim", "speaker_b": "John",
            "session_1_date_time": "1:56 pm on 8 May, 2023",
            "session_1": [
                {"speaker": "Tim", "dia_id": "D1:1", "text": "Look at this!", "blip_caption": "a photo of a dog"},
                {"speaker": "John", "dia_id": "D1:2", "text": "Cute."},
                {"dia_id": "D1:3", "text": "no speaker"}
            ]},
            "qa": [
                {"question": "When?", "answer": 2022, "category": 2},
                {"question": "Trick?", "adversarial_answer": "nope", "category": 5},
                {"question": "Gold-less?", "category": 4}
            ]}]"#;
        let ds = load_str(raw, Format::Locomo).unwrap();
        let c = &ds.conversations[0];
        let ps = c.document.passages().unwrap();
        assert_eq!(ps[0].text, "Look at this! [Image: a photo of a dog]");
        assert_eq!(ps[0].timestamp.as_ref().unwrap().raw, "1:56 pm on 8 May, 2023");
        assert_eq!(ds.malformed.len(), 1);
        assert_eq!(ds.records_seen, 3);
        assert_eq!(c.questions[0].gold.as_deref(), Some("2022"));
        assert_eq!(c.questions[0].category, Category::Temporal);
        assert_eq!(c.questions[1].category, Category::Adversarial);
        assert_eq!(c.questions[1].gold.as_deref(), Some("nope"));
        assert_eq!(c.questions[2].gold, None);
    }

    #[test]
    fn longmemeval_item() {
        let raw = r#"[{"question_id": "q1", "question_type": "temporal-reasoning", "question": "When did I move?",
            "answer": "May", "question_date": "2023/06/01 (Thu) 10:00",
            "haystack_session_ids": ["a", "b"],
            "haystack_dates": ["2023/05/20 (Sat) 02:21", "2023/05/21 (Sun) 09:00"],
            "haystack_sessions": [[{"role": "user", "content": "I moved."}, {"role": "assistant", "content": "Nice."}],
                                  [{"role": "user", "content": ""}]]}]"#;
        let ds = load_str(raw, Format::Longmemeval).unwrap();
        let c = &ds.conversations[0];
        assert_eq!(c.document.passages().unwrap().len(), 2);
        assert_eq!(ds.malformed.len(), 1);
        assert_eq!(c.questions[0].category, Category::Temporal);
        assert_eq!(c.questions[0].subcategory.as_deref(), Some("temporal-reasoning"));
    }

    #[test]
    fn invalid_json_reports_position() {
        let err = load_str("[{", Format::Locomo).unwrap_err();
        assert!(matches!(err, Error::Load(m) if m.contains("line 1")));
    }
}

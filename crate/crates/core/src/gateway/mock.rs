//! Deterministic rule-based gateway.
//!
//! Every capability is a pure function of its inputs (plus the embedding
//! seed), so whole pipelines replay byte-identically:
//!
//! * **extraction**: one event per sentence. Participants are the speaker
//!   (when the sentence is a question or uses a first-person pronoun)
//!   followed by capitalized names; the action is the clause with
//!   first-person pronouns replaced by the speaker; time/location come from
//!   `on|since|in <date>` and `at|in <Place>` patterns, falling back to the
//!   passage timestamp for time.
//! * **quadruples**: subject (name, or a pronoun resolved to the speaker or
//!   vocative addressee), canonicalized verb (+particle), object phrase up
//!   to the first temporal/locative phrase, and the first date phrase as
//!   temporal validity.
//! * **judge**: same event iff the frames share a participant and a
//!   calendar day mentioned in their event times (or are identical).
//! * **fusion**: events concatenated, deduplicated by exact action list,
//!   stably sorted by the earliest date in their time slot.
//! * **generation**: answers only from grounded passages that share a
//!   content keyword with the query; otherwise `not mentioned`.
//! * **embedding**: signed feature hashing (FNV-1a, seeded) of word and
//!   character-trigram features, L2-normalized.

use std::collections::{BTreeSet, HashMap};
use std::sync::OnceLock;

use chrono::{DateTime, NaiveDate, Utc};
use regex::Regex;

use super::text::{self, DateValue};
use super::{ExtractionResult, GeneratedAnswer, LlmGateway};
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::model::{EpisodicEventFrame, Passage, QuadrupleDraft, SemanticRoleEvent};
use crate::retrieval::SynthesizedContext;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub const DEFAULT_MOCK_DIM: usize = 256;

#[derive(Debug, Clone)]
pub struct MockGateway {
    seed: u64,
    dim: usize,
    overrides: HashMap<String, Embedding>,
    failure_marker: Option<String>,
}

impl Default for MockGateway {
    fn default() -> Self {
        Self::new(0, DEFAULT_MOCK_DIM)
    }
}

impl MockGateway {
    pub fn new(seed: u64, dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self {
            seed,
            dim,
            overrides: HashMap::new(),
            failure_marker: None,
        }
    }

    /// Pins the embedding of an exact input string.
    pub fn with_embedding(mut self, text: &str, values: Vec<f32>) -> Result<Self> {
        let e = Embedding::normalized(values)?;
        e.ensure_dim(self.dim)?;
        self.overrides.insert(text.to_string(), e);
        Ok(self)
    }

    /// Extraction of any text containing `marker` fails, which exercises
    /// the quarantine paths.
    pub fn with_failure_marker(mut self, marker: impl Into<String>) -> Self {
        self.failure_marker = Some(marker.into());
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn check_failure(&self, text: &str) -> Result<()> {
        if text.trim().is_empty() {
            return Err(Error::Extraction("empty text".into()));
        }
        if let Some(m) = &self.failure_marker {
            if text.contains(m.as_str()) {
                return Err(Error::Extraction(format!("mock failure marker `{m}` present")));
            }
        }
        Ok(())
    }

    /// Feature strings hashed by the embedder: `w:<token>` for every
    /// lowercased alphanumeric token and `c:<trigram>` for each character
    /// trigram of `#token#`.
    pub fn features(text: &str) -> Vec<String> {
        let lower = text.to_lowercase();
        let mut out = Vec::new();
        for tok in lower.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
            out.push(format!("w:{tok}"));
            let padded: Vec<char> = format!("#{tok}#").chars().collect();
            for win in padded.windows(3) {
                out.push(format!("c:{}", win.iter().collect::<String>()));
            }
        }
        out
    }

    fn hash(&self, feature: &str) -> u64 {
        let mut h = FNV_OFFSET ^ self.seed;
        for b in feature.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
        h
    }

    fn hashed_vector(&self, text: &str) -> Vec<f32> {
        let mut v = vec![0f32; self.dim];
        let mut feats = Self::features(text);
        if feats.is_empty() {
            feats.push(format!("r:{text}"));
        }
        for f in &feats {
            let h = self.hash(f);
            let idx = (h % self.dim as u64) as usize;
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            v[idx] += sign;
        }
        if v.iter().all(|x| *x == 0.0) {
            // every feature cancelled out; fall back to a one-hot
            let idx = (self.hash(&format!("r:{text}")) % self.dim as u64) as usize;
            v[idx] = 1.0;
        }
        v
    }
}

fn speaker_prefix(text: &str) -> (Option<String>, &str) {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"^\s*([A-Z][\w'.\- ]{0,40}?):\s+").unwrap());
    match re.captures(text) {
        Some(c) => (
            Some(c[1].trim().to_string()),
            &text[c.get(0).unwrap().end()..],
        ),
        None => (None, text),
    }
}

fn strip_terminal(s: &str) -> &str {
    s.trim().trim_end_matches(['.', '!', '?']).trim_end()
}

fn event_for_sentence(sentence: &str, speaker: &str, timestamp: Option<&str>) -> SemanticRoleEvent {
    let question = sentence.trim_end().ends_with('?');
    let phrase = text::temporal_phrase(sentence);
    let place = text::location(sentence).map(|(_, p)| p);

    let time = match &phrase {
        Some(p) if p.preposition.as_deref() == Some("since") => Some(match timestamp {
            Some(ts) => format!("from {} to {ts}", p.date.text),
            None => format!("since {}", p.date.text),
        }),
        Some(p) => Some(match &p.until {
            Some(u) => format!("{} to {}", p.date.text, u.text),
            None => p.date.text.clone(),
        }),
        None => timestamp.map(str::to_string),
    };

    let mut participants: Vec<String> = Vec::new();
    if !speaker.is_empty() && (question || text::has_first_person(sentence)) {
        participants.push(speaker.to_string());
    }
    let dates = text::find_dates(sentence);
    for (offset, name) in text::names(sentence) {
        let in_date = dates.iter().any(|d| offset >= d.start && offset < d.end);
        let in_place = place.as_deref().is_some_and(|p| p.contains(name.as_str()));
        if in_date || in_place || participants.contains(&name) {
            continue;
        }
        participants.push(name);
    }

    let clause = strip_terminal(sentence);
    let action = text::resolve_first_person(clause, speaker);
    let lower = clause.to_lowercase();
    let causality = lower.find("because ").map(|i| clause[i + "because ".len()..].trim().to_string());

    SemanticRoleEvent {
        participants,
        actions: vec![action],
        time,
        location: place,
        causality,
        manner: question.then(|| "Through verbal inquiry".to_string()),
    }
}

/// Earliest date mentioned in an event's time slot.
fn event_date(e: &SemanticRoleEvent) -> Option<NaiveDate> {
    e.time
        .as_deref()
        .and_then(|t| text::find_dates(t).first().map(|m| m.value.sort_key()))
}

fn frame_days(f: &EpisodicEventFrame) -> BTreeSet<NaiveDate> {
    f.events
        .iter()
        .filter_map(|e| e.time.as_deref())
        .flat_map(text::days_in)
        .collect()
}

fn lower_participants(f: &EpisodicEventFrame) -> BTreeSet<String> {
    f.participants().into_iter().map(str::to_lowercase).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AnswerKind {
    Date,
    Place,
    Person,
    Other,
}

fn answer_kind(query: &str) -> AnswerKind {
    let q = query.to_lowercase();
    const DATE_CUES: &[&str] = &[
        "what day", "what date", "which day", "what year", "which year", "what month",
        "which month", "what time",
    ];
    if q.split(|c: char| !c.is_alphanumeric()).any(|w| w == "when")
        || DATE_CUES.iter().any(|c| q.contains(c))
    {
        AnswerKind::Date
    } else if q.split(|c: char| !c.is_alphanumeric()).any(|w| w == "where") {
        AnswerKind::Place
    } else if q.trim_start().starts_with("who") {
        AnswerKind::Person
    } else {
        AnswerKind::Other
    }
}

fn extract_answer(kind: AnswerKind, text_body: &str, query: &str, keywords: &BTreeSet<String>) -> Option<String> {
    match kind {
        AnswerKind::Date => text::find_dates(text_body).into_iter().next().map(|m| m.text),
        AnswerKind::Place => text::location(text_body).map(|(_, p)| p),
        AnswerKind::Person => {
            let q = query.to_lowercase();
            text::names(text_body)
                .into_iter()
                .map(|(_, n)| n)
                .find(|n| !q.contains(&n.to_lowercase()))
        }
        AnswerKind::Other => text::sentences(text_body)
            .into_iter()
            .find(|s| text::content_tokens(s).iter().any(|t| keywords.contains(t)))
            .map(|s| strip_terminal(&s).to_string()),
    }
}

impl LlmGateway for MockGateway {
    fn extract_frame(&self, passage: &Passage) -> Result<ExtractionResult> {
        self.check_failure(&passage.text)?;
        let ts = passage.timestamp.as_ref().map(|t| t.raw.as_str());
        let events: Vec<SemanticRoleEvent> = text::sentences(&passage.text)
            .iter()
            .map(|s| event_for_sentence(s, &passage.speaker, ts))
            .collect();
        let asked = text::sentences(&passage.text).iter().any(|s| s.ends_with('?'));
        let speaker = if passage.speaker.is_empty() {
            "Someone"
        } else {
            passage.speaker.as_str()
        };
        let verb = if asked { "asked" } else { "said" };
        let summary = match ts {
            Some(ts) => format!("({ts}) {speaker} {verb}: {}", passage.text.trim()),
            None => format!("{speaker} {verb}: {}", passage.text.trim()),
        };
        ExtractionResult { summary, events }.validated()
    }

    fn extract_quadruples(
        &self,
        input: &str,
        reference_time: Option<DateTime<Utc>>,
    ) -> Result<Vec<QuadrupleDraft>> {
        self.check_failure(input)?;
        let (speaker, body) = speaker_prefix(input);
        let reference = reference_time.map(|t| t.date_naive());
        let mut out = Vec::new();
        for sentence in text::sentences(body) {
            if let Some(q) = quad_for_sentence(&sentence, speaker.as_deref(), reference) {
                if !out.contains(&q) {
                    out.push(q);
                }
            }
        }
        Ok(out)
    }

    fn judge_same_event(
        &self,
        candidate: &EpisodicEventFrame,
        previous: &EpisodicEventFrame,
    ) -> Result<bool> {
        if candidate.summary == previous.summary && candidate.events == previous.events {
            return Ok(true);
        }
        let shared_participant = !lower_participants(candidate)
            .is_disjoint(&lower_participants(previous));
        let shared_day = !frame_days(candidate).is_disjoint(&frame_days(previous));
        Ok(shared_participant && shared_day)
    }

    fn fuse_frames(
        &self,
        candidate: &EpisodicEventFrame,
        previous: &EpisodicEventFrame,
        _sources: &[Passage],
    ) -> Result<ExtractionResult> {
        let mut events: Vec<SemanticRoleEvent> = Vec::new();
        for e in previous.events.iter().chain(&candidate.events) {
            if !events.iter().any(|x| x.actions == e.actions) {
                events.push(e.clone());
            }
        }
        // undated events inherit the date of the event before them
        let mut carry: Option<NaiveDate> = None;
        let mut keyed: Vec<(Option<NaiveDate>, SemanticRoleEvent)> = events
            .into_iter()
            .map(|e| {
                if let Some(d) = event_date(&e) {
                    carry = Some(d);
                }
                (carry, e)
            })
            .collect();
        keyed.sort_by_key(|(k, _)| *k);
        let events = keyed.into_iter().map(|(_, e)| e).collect();

        let summary = if candidate.summary == previous.summary {
            previous.summary.clone()
        } else if previous.summary.contains(" asked: ") {
            format!(
                "{} {}",
                previous.summary,
                candidate.summary.replacen(" said: ", " responded: ", 1)
            )
        } else {
            format!("{} {}", previous.summary, candidate.summary)
        };
        ExtractionResult { summary, events }
            .validated()
            .map_err(|e| Error::Fusion(e.to_string()))
    }

    fn generate_answer(&self, query: &str, context: &SynthesizedContext) -> Result<GeneratedAnswer> {
        if query.trim().is_empty() {
            return Err(Error::Input("empty query".into()));
        }
        if context.section_a_passages.is_empty() {
            return Ok(GeneratedAnswer::from_completion(
                "Thought: no grounded evidence was provided.\nAnswer: unknown",
            ));
        }
        let kind = answer_kind(query);
        let keywords: BTreeSet<String> = text::content_tokens(query).into_iter().collect();
        let mut best: Option<(usize, String, &Passage)> = None;
        for p in &context.section_a_passages {
            let tokens: BTreeSet<String> =
                text::content_tokens(&format!("{} {}", p.speaker, p.text)).into_iter().collect();
            let hits = tokens.intersection(&keywords).count();
            if hits == 0 {
                continue;
            }
            if let Some(ans) = extract_answer(kind, &p.text, query, &keywords) {
                // ties go to the most recent passage
                if best.as_ref().is_none_or(|(h, _, _)| hits >= *h) {
                    best = Some((hits, ans, p));
                }
            }
        }
        let completion = match best {
            Some((hits, ans, p)) => format!(
                "Thought: passage {} matches {hits} query keyword(s).\nAnswer: {ans}",
                p.passage_id
            ),
            None => "Thought: no grounded passage answers the question.\nAnswer: not mentioned".to_string(),
        };
        Ok(GeneratedAnswer::from_completion(completion))
    }

    fn embed(&self, text: &str) -> Result<Embedding> {
        if text.trim().is_empty() {
            return Err(Error::Input("cannot embed empty text".into()));
        }
        if let Some(e) = self.overrides.get(text) {
            return Ok(e.clone());
        }
        Embedding::normalized(self.hashed_vector(text))
    }

    fn embedding_dim(&self) -> usize {
        self.dim
    }

    fn fingerprint(&self) -> String {
        format!("mock:seed={}:dim={}", self.seed, self.dim)
    }
}

const INTERJECTIONS: &[&str] = &[
    "oh", "wow", "hey", "yes", "no", "well", "so", "and", "but", "yeah", "okay", "ok", "hi",
    "hello", "also", "btw", "anyway", "actually", "then",
];
const OTHER_PRONOUNS: &[&str] = &[
    "he", "she", "they", "we", "it", "this", "that", "there", "these", "those", "who", "what",
    "someone", "everyone", "nobody",
];
const OBJECT_STOPS: &[&str] = &[
    "and", "but", "so", "because", "when", "while", "which", "who", "since", "until", "after",
    "before", "if", "as",
];
const MAX_OBJECT_WORDS: usize = 5;

fn quad_for_sentence(
    sentence: &str,
    speaker: Option<&str>,
    reference: Option<NaiveDate>,
) -> Option<QuadrupleDraft> {
    let ws = text::words(sentence);
    let mut i = 0;

    // vocative: "Nate, ..." names the addressee
    let mut addressee: Option<String> = None;
    if !ws.is_empty() && text::is_name_word(&ws[0]) {
        let mut j = 0;
        let mut parts = Vec::new();
        while j < ws.len() && text::is_name_word(&ws[j]) {
            parts.push(ws[j].text.clone());
            if ws[j].trailing.starts_with(',') {
                addressee = Some(parts.join(" "));
                i = j + 1;
                break;
            }
            if !ws[j].trailing.is_empty() {
                break;
            }
            j += 1;
        }
    }

    while i < ws.len() {
        let w = ws[i].lower();
        let skip = INTERJECTIONS.contains(&w.as_str())
            || (ws[i].trailing.starts_with(',') && !text::is_name_word(&ws[i]) && !text::is_wh(&w));
        if !skip {
            break;
        }
        i += 1;
    }
    if i >= ws.len() {
        return None;
    }

    // wh-questions invert subject and auxiliary: "What day did Tim get ..."
    let first = ws[i].lower();
    if text::is_wh(&first) {
        let limit = (i + 4).min(ws.len());
        let aux = (i + 1..limit).find(|&j| text::is_any_aux(&ws[j].lower()))?;
        i = aux + 1;
    } else if text::is_aux_always(&first) || text::is_have(&first) || text::is_be(&first) {
        // yes/no question: "Did Tim ..."
        if i + 1 < ws.len() && (text::is_name_word(&ws[i + 1]) || is_subject_pronoun(&ws[i + 1].lower())) {
            i += 1;
        }
    }
    while i < ws.len() && text::is_adverb(&ws[i].lower()) {
        i += 1;
    }
    if i >= ws.len() {
        return None;
    }

    // subject
    let w = ws[i].lower();
    let mut contracted_aux = false;
    let subject = if text::is_name_word(&ws[i]) {
        let mut parts = vec![text::strip_possessive(&ws[i].text).to_string()];
        let possessive = ws[i].text.ends_with("'s");
        let mut open = ws[i].trailing.is_empty() && !possessive;
        i += 1;
        while open && i < ws.len() && text::is_name_word(&ws[i]) {
            parts.push(text::strip_possessive(&ws[i].text).to_string());
            open = ws[i].trailing.is_empty() && !ws[i].text.ends_with("'s");
            i += 1;
        }
        let name = parts.join(" ");
        if possessive && i < ws.len() {
            let noun = ws[i].text.clone();
            i += 1;
            format!("{name}'s {noun}")
        } else {
            name
        }
    } else if matches!(w.as_str(), "i" | "i'm" | "i've" | "i'd" | "i'll") {
        contracted_aux = w != "i";
        i += 1;
        speaker?.to_string()
    } else if w == "you" {
        i += 1;
        addressee.clone()?
    } else {
        return None;
    };
    let _ = contracted_aux;

    // verb group
    let mut verb: Option<String> = None;
    while i < ws.len() {
        let w = ws[i].lower();
        if text::is_adverb(&w) || text::is_aux_always(&w) {
            i += 1;
            continue;
        }
        if text::is_have(&w) || text::is_be(&w) {
            let mut k = i + 1;
            while k < ws.len() && text::is_adverb(&ws[k].lower()) {
                k += 1;
            }
            let next_is_participle = ws.get(k).is_some_and(|n| {
                let l = n.lower();
                text::looks_participle(&l) && !text::is_determiner(&l)
            });
            if next_is_participle {
                i = k;
                continue;
            }
        }
        verb = Some(w);
        i += 1;
        break;
    }
    let verb = verb?;
    if !verb.chars().all(|c| c.is_alphabetic() || c == '\'') || OTHER_PRONOUNS.contains(&verb.as_str()) {
        return None;
    }
    let particle = ws
        .get(i)
        .map(|w| w.lower())
        .filter(|w| text::is_particle(w));
    if particle.is_some() {
        i += 1;
    }
    let relation = text::canonical_relation(&verb, particle.as_deref());

    // object runs up to the first temporal/locative phrase
    let phrase = text::temporal_phrase(sentence);
    let relative = reference.and_then(|r| text::relative_span(sentence, r));
    let mut cutoff = sentence.len();
    if let Some(p) = &phrase {
        cutoff = cutoff.min(p.start);
    }
    if let Some((start, _)) = &relative {
        cutoff = cutoff.min(*start);
    }
    if let Some((start, _)) = text::location(sentence) {
        cutoff = cutoff.min(start);
    }
    let mut obj_words: Vec<String> = Vec::new();
    for w in ws.iter().skip(i).take_while(|w| w.start < cutoff) {
        let l = w.lower();
        if OBJECT_STOPS.contains(&l.as_str()) {
            break;
        }
        if obj_words.is_empty() && (text::is_preposition(&l) || text::is_determiner(&l)) {
            continue;
        }
        let word = match l.as_str() {
            "me" => speaker.map(str::to_string).unwrap_or_else(|| w.text.clone()),
            "you" => addressee.clone().unwrap_or_else(|| w.text.clone()),
            _ => w.text.clone(),
        };
        obj_words.push(word);
        if !w.trailing.is_empty() || obj_words.len() >= MAX_OBJECT_WORDS {
            break;
        }
    }
    while obj_words
        .last()
        .is_some_and(|w| text::is_preposition(&w.to_lowercase()) || text::is_determiner(&w.to_lowercase()))
    {
        obj_words.pop();
    }
    let object = (!obj_words.is_empty()).then(|| obj_words.join(" "));

    let temporal = phrase.map(|p| p.span()).or(relative.map(|(_, s)| s));
    let draft = QuadrupleDraft {
        subject,
        relation,
        object,
        temporal,
    };
    draft.validate().ok().map(|_| draft)
}

fn is_subject_pronoun(w: &str) -> bool {
    matches!(w, "i" | "you")
}

/// Used by tests to inspect how a date slot resolves.
#[allow(dead_code)]
pub(crate) fn resolved_value(s: &str) -> Option<DateValue> {
    text::find_dates(s).first().map(|m| m.value)
}

//! Rule tables behind the deterministic mock gateway: sentence splitting,
//! date and place patterns, name spotting, a small verb lemmatizer.
//!
//! None of this is meant to be good NLP. It is meant to be predictable
//! enough that expected outputs can be worked out by hand.

use std::sync::OnceLock;

use chrono::{Datelike, Duration, NaiveDate};
use regex::Regex;

use crate::model::TemporalSpan;

pub(crate) const MONTHS: [&str; 12] = [
    "january", "february", "march", "april", "may", "june", "july", "august", "september",
    "october", "november", "december",
];

const WEEKDAYS: [&str; 7] = [
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
];

/// Capitalized words that are never names.
const NON_NAMES: &[&str] = &[
    "i", "i'm", "i've", "i'd", "i'll", "the", "this", "that", "these", "those", "what", "when",
    "where", "who", "whom", "whose", "why", "how", "which", "did", "do", "does", "is", "are",
    "was", "were", "have", "has", "had", "can", "could", "will", "would", "should", "my", "your",
    "our", "their", "his", "her", "its", "we", "you", "they", "he", "she", "it", "yes", "no",
    "oh", "wow", "hey", "hi", "hello", "thanks", "thank", "okay", "ok", "so", "and", "but", "or",
    "if", "then", "well", "also", "just", "that's", "it's", "let", "let's", "sure", "great",
    "nice", "cool", "on", "in", "at", "since", "from", "to", "for", "with", "by", "after",
    "before", "last", "next", "today", "yesterday", "tomorrow", "image", "an", "there", "here",
    "yeah", "sounds", "congrats", "absolutely", "definitely", "anyway", "btw", "actually",
];

const FIRST_PERSON: &[&str] = &["i", "me", "my", "mine", "i'm", "i've", "i'd", "i'll", "myself"];

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "his", "her", "my", "your", "their", "our", "its", "this", "that", "these",
    "those", "some", "any",
];

const PREPOSITIONS: &[&str] = &[
    "in", "on", "at", "to", "for", "with", "from", "of", "about", "into", "by",
];

const MODALS: &[&str] = &["will", "would", "can", "could", "should", "might", "must", "shall", "may"];
const DO_FORMS: &[&str] = &["do", "does", "did"];
const HAVE_FORMS: &[&str] = &["have", "has", "had"];
const BE_FORMS: &[&str] = &["am", "is", "are", "was", "were", "be", "been", "being"];
const ADVERBS: &[&str] = &[
    "just", "really", "finally", "also", "already", "recently", "actually", "never", "not",
    "still", "even", "officially", "totally", "always", "first",
];
const PARTICLES: &[&str] = &["into", "up", "out", "off", "back", "over", "away", "down"];
const WH_WORDS: &[&str] = &["what", "when", "where", "who", "whom", "which", "how", "why", "whose"];

/// Verbs whose canonical relation form is third-person present.
const STATIVE: &[&str] = &[
    "own", "have", "like", "love", "live", "know", "want", "need", "prefer", "hate", "enjoy",
    "believe", "work", "be",
];

/// (lemma, past) for irregular verbs; also used to map past forms back.
const IRREGULAR: &[(&str, &str)] = &[
    ("begin", "began"), ("buy", "bought"), ("come", "came"), ("do", "did"), ("drive", "drove"),
    ("eat", "ate"), ("find", "found"), ("fly", "flew"), ("get", "got"), ("give", "gave"),
    ("go", "went"), ("have", "had"), ("hear", "heard"), ("keep", "kept"), ("know", "knew"),
    ("leave", "left"), ("lose", "lost"), ("make", "made"), ("meet", "met"), ("read", "read"),
    ("run", "ran"), ("say", "said"), ("see", "saw"), ("sell", "sold"), ("send", "sent"),
    ("sing", "sang"), ("take", "took"), ("teach", "taught"), ("tell", "told"), ("think", "thought"),
    ("win", "won"), ("write", "wrote"), ("build", "built"), ("feel", "felt"), ("bring", "brought"),
    ("draw", "drew"), ("swim", "swam"), ("ride", "rode"), ("grow", "grew"), ("paint", "painted"),
    ("be", "was"), ("put", "put"), ("set", "set"), ("adopt", "adopted"),
];

/// Past participles that differ from the past form.
const PARTICIPLES: &[(&str, &str)] = &[
    ("begin", "begun"), ("do", "done"), ("drive", "driven"), ("eat", "eaten"), ("fly", "flown"),
    ("get", "gotten"), ("give", "given"), ("go", "gone"), ("know", "known"), ("see", "seen"),
    ("take", "taken"), ("write", "written"), ("swim", "swum"), ("ride", "ridden"), ("grow", "grown"),
    ("draw", "drawn"), ("sing", "sung"), ("run", "run"), ("come", "come"), ("be", "been"),
];

fn regex(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).expect("static regex"))
}

fn month_alt() -> String {
    MONTHS.join("|")
}

fn month_number(name: &str) -> Option<u32> {
    let lower = name.to_lowercase();
    MONTHS.iter().position(|m| *m == lower).map(|i| i as u32 + 1)
}

/// Precision of a recognized date expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum DateValue {
    Day(NaiveDate),
    Month(i32, u32),
    Year(i32),
}

impl DateValue {
    pub(crate) fn normalized(&self) -> String {
        match self {
            DateValue::Day(d) => d.format("%Y-%m-%d").to_string(),
            DateValue::Month(y, m) => format!("{y:04}-{m:02}"),
            DateValue::Year(y) => format!("{y:04}"),
        }
    }

    pub(crate) fn day(&self) -> Option<NaiveDate> {
        match self {
            DateValue::Day(d) => Some(*d),
            _ => None,
        }
    }

    /// Earliest day covered, for chronological sorting.
    pub(crate) fn sort_key(&self) -> NaiveDate {
        match self {
            DateValue::Day(d) => *d,
            DateValue::Month(y, m) => NaiveDate::from_ymd_opt(*y, *m, 1).unwrap_or(NaiveDate::MIN),
            DateValue::Year(y) => NaiveDate::from_ymd_opt(*y, 1, 1).unwrap_or(NaiveDate::MIN),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct DateMatch {
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub value: DateValue,
}

/// All date expressions in `s`, left to right, most specific pattern wins
/// on overlap.
pub(crate) fn find_dates(s: &str) -> Vec<DateMatch> {
    static ISO: OnceLock<Regex> = OnceLock::new();
    static DMY: OnceLock<Regex> = OnceLock::new();
    static MDY: OnceLock<Regex> = OnceLock::new();
    static MY: OnceLock<Regex> = OnceLock::new();
    static Y: OnceLock<Regex> = OnceLock::new();
    let months = month_alt();
    let iso = regex(&ISO, r"\b(\d{4})-(\d{2})-(\d{2})\b");
    let dmy = DMY.get_or_init(|| {
        Regex::new(&format!(r"(?i)\b(\d{{1,2}})(?:st|nd|rd|th)? ({months}),? (\d{{4}})\b")).unwrap()
    });
    let mdy = MDY.get_or_init(|| {
        Regex::new(&format!(r"(?i)\b({months}) (\d{{1,2}})(?:st|nd|rd|th)?,? (\d{{4}})\b")).unwrap()
    });
    let my = MY.get_or_init(|| Regex::new(&format!(r"(?i)\b({months}),? (\d{{4}})\b")).unwrap());
    let year = regex(&Y, r"\b((?:19|20)\d{2})\b");

    let mut found: Vec<DateMatch> = Vec::new();
    let overlaps = |found: &[DateMatch], a: usize, b: usize| {
        found.iter().any(|m| a < m.end && m.start < b)
    };

    for c in iso.captures_iter(s) {
        let m = c.get(0).unwrap();
        let (y, mo, d) = (c[1].parse().unwrap(), c[2].parse().unwrap(), c[3].parse().unwrap());
        if let Some(date) = NaiveDate::from_ymd_opt(y, mo, d) {
            found.push(DateMatch { start: m.start(), end: m.end(), text: m.as_str().into(), value: DateValue::Day(date) });
        }
    }
    for c in dmy.captures_iter(s) {
        let m = c.get(0).unwrap();
        if overlaps(&found, m.start(), m.end()) {
            continue;
        }
        let d: u32 = c[1].parse().unwrap();
        let mo = month_number(&c[2]).unwrap();
        let y: i32 = c[3].parse().unwrap();
        if let Some(date) = NaiveDate::from_ymd_opt(y, mo, d) {
            found.push(DateMatch { start: m.start(), end: m.end(), text: m.as_str().into(), value: DateValue::Day(date) });
        }
    }
    for c in mdy.captures_iter(s) {
        let m = c.get(0).unwrap();
        if overlaps(&found, m.start(), m.end()) {
            continue;
        }
        let mo = month_number(&c[1]).unwrap();
        let d: u32 = c[2].parse().unwrap();
        let y: i32 = c[3].parse().unwrap();
        if let Some(date) = NaiveDate::from_ymd_opt(y, mo, d) {
            found.push(DateMatch { start: m.start(), end: m.end(), text: m.as_str().into(), value: DateValue::Day(date) });
        }
    }
    for c in my.captures_iter(s) {
        let m = c.get(0).unwrap();
        if overlaps(&found, m.start(), m.end()) {
            continue;
        }
        let mo = month_number(&c[1]).unwrap();
        let y: i32 = c[2].parse().unwrap();
        found.push(DateMatch { start: m.start(), end: m.end(), text: m.as_str().into(), value: DateValue::Month(y, mo) });
    }
    for c in year.captures_iter(s) {
        let m = c.get(0).unwrap();
        if overlaps(&found, m.start(), m.end()) {
            continue;
        }
        let y: i32 = c[1].parse().unwrap();
        found.push(DateMatch { start: m.start(), end: m.end(), text: m.as_str().into(), value: DateValue::Year(y) });
    }
    found.sort_by_key(|m| m.start);
    found
}

/// Calendar days mentioned anywhere in `s`.
pub(crate) fn days_in(s: &str) -> Vec<NaiveDate> {
    find_dates(s).iter().filter_map(|m| m.value.day()).collect()
}

/// A temporal phrase anchored on a date expression, with the preposition
/// that introduced it.
#[derive(Debug, Clone)]
pub(crate) struct TemporalPhrase {
    /// Byte offset where the phrase (including its preposition) begins.
    pub start: usize,
    pub date: DateMatch,
    pub preposition: Option<String>,
    pub until: Option<DateMatch>,
}

impl TemporalPhrase {
    pub(crate) fn span(&self) -> TemporalSpan {
        let raw = match (&self.preposition, &self.until) {
            (Some(p), Some(u)) => format!("{p} {} to {}", self.date.text, u.text),
            (Some(p), None) => format!("{p} {}", self.date.text),
            (None, _) => self.date.text.clone(),
        };
        let norm = self.date.value.normalized();
        match (self.preposition.as_deref(), &self.until) {
            (_, Some(u)) => TemporalSpan {
                start: Some(norm),
                end: Some(u.value.normalized()),
                raw,
            },
            (Some("since"), None) => TemporalSpan::from(norm, raw),
            (Some("until") | Some("till"), None) => TemporalSpan {
                start: None,
                end: Some(norm),
                raw,
            },
            _ => TemporalSpan::point(norm, raw),
        }
    }
}

/// First date-anchored temporal phrase of a sentence.
pub(crate) fn temporal_phrase(sentence: &str) -> Option<TemporalPhrase> {
    let dates = find_dates(sentence);
    let first = dates.first()?.clone();
    let before = &sentence[..first.start];
    let prev_word = before.split_whitespace().last().map(|w| w.to_lowercase());
    let (preposition, start) = match prev_word.as_deref() {
        Some(p @ ("since" | "on" | "in" | "from" | "until" | "till" | "by" | "during" | "around")) => {
            let idx = before.trim_end().len() - p.len();
            (Some(p.to_string()), idx)
        }
        _ => (None, first.start),
    };
    let until = if preposition.as_deref() == Some("from") {
        dates.get(1).and_then(|second| {
            let between = sentence[first.end..second.start].trim().to_lowercase();
            (between == "to" || between == "until").then(|| second.clone())
        })
    } else {
        None
    };
    Some(TemporalPhrase {
        start,
        date: first,
        preposition,
        until,
    })
}

/// Relative expressions resolved against a reference day.
pub(crate) fn relative_span(sentence: &str, reference: NaiveDate) -> Option<(usize, TemporalSpan)> {
    let lower = sentence.to_lowercase();
    let table: [(&str, NaiveDate); 2] = [
        ("yesterday", reference - Duration::days(1)),
        ("today", reference),
    ];
    for (word, day) in table {
        if let Some(idx) = find_word(&lower, word) {
            return Some((idx, TemporalSpan::point(day.format("%Y-%m-%d").to_string(), word)));
        }
    }
    if let Some(idx) = lower.find("last year") {
        let y = reference.year() - 1;
        return Some((idx, TemporalSpan::point(format!("{y:04}"), "last year")));
    }
    None
}

fn find_word(haystack: &str, word: &str) -> Option<usize> {
    haystack.match_indices(word).map(|(i, _)| i).find(|&i| {
        let before_ok = i == 0 || !haystack.as_bytes()[i - 1].is_ascii_alphanumeric();
        let end = i + word.len();
        let after_ok = end >= haystack.len() || !haystack.as_bytes()[end].is_ascii_alphanumeric();
        before_ok && after_ok
    })
}

/// `at|in <Capitalized Words>` where the first word is not a month or
/// weekday. Returns (byte offset of the preposition, place).
pub(crate) fn location(sentence: &str) -> Option<(usize, String)> {
    static LOC: OnceLock<Regex> = OnceLock::new();
    let re = regex(
        &LOC,
        r"\b(?:at|in)\s+(?:the\s+)?((?:[A-Z][\w'&-]*)(?:\s+[A-Z][\w'&-]*)*)",
    );
    for c in re.captures_iter(sentence) {
        let place = c.get(1).unwrap().as_str();
        let first = place.split_whitespace().next().unwrap_or("").to_lowercase();
        if MONTHS.contains(&first.as_str()) || WEEKDAYS.contains(&first.as_str()) {
            continue;
        }
        if NON_NAMES.contains(&first.as_str()) {
            continue;
        }
        return Some((c.get(0).unwrap().start(), place.to_string()));
    }
    None
}

/// Splits on `.`, `!`, `?` followed by whitespace or end of text. The
/// terminator stays attached to its sentence.
pub(crate) fn sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        cur.push(c);
        if matches!(c, '.' | '!' | '?') {
            let next = chars.get(i + 1);
            if next.is_none_or(|n| n.is_whitespace()) {
                let s = cur.trim();
                if s.chars().any(|c| c.is_alphanumeric()) {
                    out.push(s.to_string());
                }
                cur.clear();
            }
        }
    }
    let s = cur.trim();
    if s.chars().any(|c| c.is_alphanumeric()) {
        out.push(s.to_string());
    }
    out
}

/// A word with its byte span, stripped of surrounding punctuation.
#[derive(Debug, Clone)]
pub(crate) struct Word {
    pub text: String,
    pub start: usize,
    /// Punctuation immediately after the word (e.g. a vocative comma).
    pub trailing: String,
}

impl Word {
    pub(crate) fn lower(&self) -> String {
        self.text.to_lowercase()
    }

    pub(crate) fn is_capitalized(&self) -> bool {
        self.text.chars().next().is_some_and(|c| c.is_uppercase())
    }
}

pub(crate) fn words(s: &str) -> Vec<Word> {
    let mut out = Vec::new();
    let mut offset = 0;
    for raw in s.split_inclusive(char::is_whitespace) {
        let trimmed = raw.trim_end();
        let lead = trimmed.len() - trimmed.trim_start_matches(|c: char| !c.is_alphanumeric()).len();
        let core = trimmed.trim_start_matches(|c: char| !c.is_alphanumeric());
        let core_trim = core.trim_end_matches(|c: char| !c.is_alphanumeric());
        if !core_trim.is_empty() {
            out.push(Word {
                text: core_trim.to_string(),
                start: offset + lead,
                trailing: core[core_trim.len()..].to_string(),
            });
        }
        offset += raw.len();
    }
    out
}

pub(crate) fn strip_possessive(w: &str) -> &str {
    w.strip_suffix("'s").or_else(|| w.strip_suffix("’s")).unwrap_or(w)
}

pub(crate) fn is_name_word(w: &Word) -> bool {
    if !w.is_capitalized() {
        return false;
    }
    let lower = strip_possessive(&w.text).to_lowercase();
    if NON_NAMES.contains(&lower.as_str()) {
        return false;
    }
    if MONTHS.contains(&lower.as_str()) || WEEKDAYS.contains(&lower.as_str()) {
        return false;
    }
    !w.text.chars().all(|c| c.is_ascii_digit())
}

/// Consecutive capitalized non-function words, grouped into names, with
/// their byte offsets. A trailing possessive ends the group.
pub(crate) fn names(sentence: &str) -> Vec<(usize, String)> {
    let ws = words(sentence);
    let mut out = Vec::new();
    let mut i = 0;
    while i < ws.len() {
        if is_name_word(&ws[i]) {
            let start = ws[i].start;
            let mut parts = vec![strip_possessive(&ws[i].text).to_string()];
            let mut j = i + 1;
            let mut open = ws[i].trailing.is_empty() && !ws[i].text.ends_with("'s");
            while open && j < ws.len() && is_name_word(&ws[j]) {
                parts.push(strip_possessive(&ws[j].text).to_string());
                open = ws[j].trailing.is_empty() && !ws[j].text.ends_with("'s");
                j += 1;
            }
            out.push((start, parts.join(" ")));
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

pub(crate) fn has_first_person(sentence: &str) -> bool {
    words(sentence)
        .iter()
        .any(|w| FIRST_PERSON.contains(&w.lower().as_str()))
}

/// Replaces first-person pronouns with the speaker's name.
pub(crate) fn resolve_first_person(sentence: &str, speaker: &str) -> String {
    if speaker.is_empty() {
        return sentence.to_string();
    }
    let mut out = String::with_capacity(sentence.len());
    let mut last = 0;
    for w in words(sentence) {
        let replacement = match w.lower().as_str() {
            "i" | "me" | "myself" => Some(speaker.to_string()),
            "my" | "mine" => Some(format!("{speaker}'s")),
            "i'm" => Some(format!("{speaker} is")),
            "i've" => Some(format!("{speaker} has")),
            "i'd" => Some(format!("{speaker} would")),
            "i'll" => Some(format!("{speaker} will")),
            _ => None,
        };
        if let Some(r) = replacement {
            out.push_str(&sentence[last..w.start]);
            out.push_str(&r);
            last = w.start + w.text.len();
        }
    }
    out.push_str(&sentence[last..]);
    out
}

pub(crate) fn is_determiner(w: &str) -> bool {
    DETERMINERS.contains(&w)
}

pub(crate) fn is_preposition(w: &str) -> bool {
    PREPOSITIONS.contains(&w)
}

pub(crate) fn is_wh(w: &str) -> bool {
    WH_WORDS.contains(&w)
}

pub(crate) fn is_particle(w: &str) -> bool {
    PARTICLES.contains(&w)
}

pub(crate) fn is_adverb(w: &str) -> bool {
    ADVERBS.contains(&w)
}

pub(crate) fn is_aux_always(w: &str) -> bool {
    MODALS.contains(&w) || DO_FORMS.contains(&w)
}

pub(crate) fn is_have(w: &str) -> bool {
    HAVE_FORMS.contains(&w)
}

pub(crate) fn is_be(w: &str) -> bool {
    BE_FORMS.contains(&w)
}

pub(crate) fn is_any_aux(w: &str) -> bool {
    is_aux_always(w) || is_have(w) || is_be(w)
}

/// Whether `w` looks like a past participle or gerund (so a preceding
/// have/be form is an auxiliary).
pub(crate) fn looks_participle(w: &str) -> bool {
    if w.ends_with("ed") || w.ends_with("ing") {
        return true;
    }
    PARTICIPLES.iter().any(|(_, p)| *p == w) || IRREGULAR.iter().any(|(_, p)| *p == w)
}

/// Best-effort lemma of an inflected verb.
pub(crate) fn lemma(w: &str) -> String {
    let w = w.to_lowercase();
    if let Some((l, _)) = IRREGULAR.iter().find(|(_, p)| *p == w) {
        return l.to_string();
    }
    if let Some((l, _)) = PARTICIPLES.iter().find(|(_, p)| *p == w) {
        return l.to_string();
    }
    if IRREGULAR.iter().any(|(l, _)| *l == w) {
        return w;
    }
    match w.as_str() {
        "has" => return "have".into(),
        "is" | "am" | "are" | "was" | "were" | "been" => return "be".into(),
        "does" => return "do".into(),
        _ => {}
    }
    if let Some(stem) = w.strip_suffix("ied") {
        return format!("{stem}y");
    }
    if let Some(stem) = w.strip_suffix("ing") {
        if stem.len() >= 3 {
            return restore_e(stem);
        }
    }
    if let Some(stem) = w.strip_suffix("ed") {
        if stem.len() >= 2 {
            return restore_e(stem);
        }
    }
    if let Some(stem) = w.strip_suffix("ies") {
        return format!("{stem}y");
    }
    if let Some(stem) = w.strip_suffix("es") {
        if stem.ends_with("sh") || stem.ends_with("ch") || stem.ends_with('x') || stem.ends_with('s') {
            return stem.to_string();
        }
    }
    if let Some(stem) = w.strip_suffix('s') {
        if !stem.ends_with('s') && stem.len() >= 2 {
            return stem.to_string();
        }
    }
    w
}

fn restore_e(stem: &str) -> String {
    // "lov" -> "love", "mov" -> "move"; doubled consonants collapse: "stopp" -> "stop"
    let b = stem.as_bytes();
    if b.len() >= 2 && b[b.len() - 1] == b[b.len() - 2] && !matches!(b[b.len() - 1], b'l' | b's' | b'e') {
        return stem[..stem.len() - 1].to_string();
    }
    if stem.ends_with('v') || stem.ends_with('z') || (stem.ends_with('c')) {
        return format!("{stem}e");
    }
    stem.to_string()
}

/// Canonical relation form: stative verbs in third-person present,
/// everything else in the past tense.
pub(crate) fn canonical_relation(verb: &str, particle: Option<&str>) -> String {
    let l = lemma(verb);
    let base = if STATIVE.contains(&l.as_str()) {
        match l.as_str() {
            "have" => "has".to_string(),
            "be" => "is".to_string(),
            _ => third_person(&l),
        }
    } else if let Some((_, past)) = IRREGULAR.iter().find(|(lem, _)| *lem == l) {
        past.to_string()
    } else if l.ends_with('e') {
        format!("{l}d")
    } else if l.ends_with('y') && !l.ends_with("ay") && !l.ends_with("ey") && !l.ends_with("oy") {
        format!("{}ied", &l[..l.len() - 1])
    } else {
        format!("{l}ed")
    };
    match particle {
        Some(p) => format!("{base}_{p}"),
        None => base,
    }
}

fn third_person(l: &str) -> String {
    if l.ends_with('s') || l.ends_with("sh") || l.ends_with("ch") || l.ends_with('x') {
        format!("{l}es")
    } else if l.ends_with('y') && !l.ends_with("ay") && !l.ends_with("ey") && !l.ends_with("oy") {
        format!("{}ies", &l[..l.len() - 1])
    } else {
        format!("{l}s")
    }
}

/// Lowercased content tokens, possessives stripped: the mock's keyword
/// notion.
pub(crate) fn content_tokens(s: &str) -> Vec<String> {
    const STOP: &[&str] = &[
        "what", "when", "where", "who", "whom", "which", "how", "why", "whose", "did", "do",
        "does", "is", "are", "was", "were", "am", "be", "been", "have", "has", "had", "the", "a",
        "an", "his", "her", "my", "your", "their", "our", "its", "he", "she", "they", "we", "you",
        "i", "it", "them", "him", "me", "us", "to", "of", "in", "on", "at", "for", "with", "from",
        "about", "into", "by", "and", "or", "but", "that", "this", "these", "those", "day",
        "date", "year", "month", "time", "will", "would", "can", "could", "should", "there",
        "any", "some", "so", "not", "get", "got",
    ];
    words(s)
        .iter()
        .map(|w| strip_possessive(&w.lower()).to_string())
        .filter(|w| !STOP.contains(&w.as_str()))
        .collect()
}

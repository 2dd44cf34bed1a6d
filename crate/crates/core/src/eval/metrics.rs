//! Lexical QA metrics over normalized tokens.

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;

/// Lowercases, deletes Unicode punctuation and splits on whitespace.
pub fn normalize_tokens(s: &str) -> Vec<String> {
    static PUNCT: OnceLock<Regex> = OnceLock::new();
    let re = PUNCT.get_or_init(|| Regex::new(r"\p{P}").unwrap());
    re.replace_all(&s.to_lowercase(), "")
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn counts(tokens: &[String]) -> HashMap<&str, usize> {
    let mut m = HashMap::new();
    for t in tokens {
        *m.entry(t.as_str()).or_insert(0) += 1;
    }
    m
}

/// Multiset-overlap F1. Both empty scores 1, one empty scores 0.
pub fn token_f1(prediction: &str, gold: &str) -> f64 {
    let p = normalize_tokens(prediction);
    let g = normalize_tokens(gold);
    match (p.is_empty(), g.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let gc = counts(&g);
    let overlap: usize = counts(&p)
        .iter()
        .map(|(t, n)| (*n).min(gc.get(t).copied().unwrap_or(0)))
        .sum();
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / p.len() as f64;
    let recall = overlap as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Sentence-level BLEU-1: clipped unigram precision times the brevity
/// penalty `exp(1 - r/c)` for candidates shorter than the reference.
pub fn bleu1(prediction: &str, gold: &str) -> f64 {
    let p = normalize_tokens(prediction);
    let g = normalize_tokens(gold);
    match (p.is_empty(), g.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let gc = counts(&g);
    let clipped: usize = counts(&p)
        .iter()
        .map(|(t, n)| (*n).min(gc.get(t).copied().unwrap_or(0)))
        .sum();
    let precision = clipped as f64 / p.len() as f64;
    let (c, r) = (p.len() as f64, g.len() as f64);
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    precision * bp
}

//! Answer generation over retrieved context and the QA evaluation harness.

mod metrics;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use metrics::{bleu1, normalize_tokens, token_f1};

use crate::error::{Error, Result};
use crate::gateway::{GeneratedAnswer, HttpGateway, LlmGateway};
use crate::memory::Memory;
use crate::model::RetrievalConfig;
use crate::retrieval::{retrieve, Retrieval, RetrievalAudit, Toggles};

/// Question categories, in the column order of the benchmark tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    MultiHop,
    Temporal,
    OpenDomain,
    SingleHop,
    Adversarial,
    Other,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::MultiHop,
        Category::Temporal,
        Category::OpenDomain,
        Category::SingleHop,
        Category::Adversarial,
        Category::Other,
    ];

    /// LoCoMo's integer codes.
    pub fn from_locomo(code: i64) -> Self {
        match code {
            1 => Category::MultiHop,
            2 => Category::Temporal,
            3 => Category::OpenDomain,
            4 => Category::SingleHop,
            5 => Category::Adversarial,
            _ => Category::Other,
        }
    }

    /// LongMemEval `question_type`; abstention ids (`*_abs`) are adversarial.
    pub fn from_longmemeval(question_type: &str, question_id: &str) -> Self {
        if question_id.ends_with("_abs") {
            return Category::Adversarial;
        }
        match question_type {
            "single-session-user" | "single-session-assistant" | "single-session-preference" => Category::SingleHop,
            "multi-session" => Category::MultiHop,
            "temporal-reasoning" => Category::Temporal,
            _ => Category::Other,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Category::MultiHop => "multi-hop",
            Category::Temporal => "temporal",
            Category::OpenDomain => "open-domain",
            Category::SingleHop => "single-hop",
            Category::Adversarial => "adversarial",
            Category::Other => "other",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One benchmark question. `gold == None` items are skipped and counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaItem {
    pub question_id: String,
    pub category: Category,
    /// Dataset-specific type label, e.g. LongMemEval's `question_type`.
    pub subcategory: Option<String>,
    pub query: String,
    pub gold: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub question_id: String,
    pub category: Category,
    pub subcategory: Option<String>,
    pub query: String,
    pub gold: String,
    pub prediction: String,
    pub f1: f64,
    pub bleu1: f64,
    pub judge_verdict: Option<bool>,
    pub audit_ref: String,
}

/// Correctness judge taking `(query, gold, prediction)`.
pub trait AnswerJudge: Send + Sync {
    fn judge(&self, query: &str, gold: &str, prediction: &str) -> Result<bool>;
}

/// Normalized exact match.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMatchJudge;

impl AnswerJudge for ExactMatchJudge {
    fn judge(&self, _query: &str, gold: &str, prediction: &str) -> Result<bool> {
        Ok(normalize_tokens(gold) == normalize_tokens(prediction))
    }
}

/// Judge backed by the answer-judge prompt on a chat endpoint.
pub struct LlmAnswerJudge<'a>(pub &'a HttpGateway);

impl AnswerJudge for LlmAnswerJudge<'_> {
    fn judge(&self, query: &str, gold: &str, prediction: &str) -> Result<bool> {
        self.0.judge_answer(query, gold, prediction)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    pub generated: GeneratedAnswer,
    pub retrieval: Retrieval,
}

/// Retrieves context for `query` and generates an answer from it.
pub fn answer(
    memory: &Memory,
    gateway: &dyn LlmGateway,
    query: &str,
    config: &RetrievalConfig,
    toggles: Toggles,
) -> Result<Answer> {
    if query.trim().is_empty() {
        return Err(Error::Input("empty query".into()));
    }
    let retrieval = retrieve(memory, gateway, query, config, toggles)?;
    let generated = gateway
        .generate_answer(query, &retrieval.context)
        .map_err(|e| match e {
            Error::Generation(_) => e,
            other => Error::Generation(other.to_string()),
        })?;
    Ok(Answer { generated, retrieval })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub f1: f64,
    pub bleu1: f64,
    /// Share of judged records the judge accepted.
    pub judge: Option<f64>,
}

impl Aggregate {
    fn of<'a>(records: impl Iterator<Item = &'a EvalRecord>) -> Self {
        let mut a = Aggregate::default();
        let (mut judged, mut accepted) = (0usize, 0usize);
        for r in records {
            a.count += 1;
            a.f1 += r.f1;
            a.bleu1 += r.bleu1;
            if let Some(v) = r.judge_verdict {
                judged += 1;
                accepted += v as usize;
            }
        }
        if a.count > 0 {
            a.f1 /= a.count as f64;
            a.bleu1 /= a.count as f64;
        }
        a.judge = (judged > 0).then(|| accepted as f64 / judged as f64);
        a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalFailure {
    pub question_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub toggles: String,
    pub records: Vec<EvalRecord>,
    pub skipped_missing_gold: usize,
    pub failures: Vec<EvalFailure>,
    pub by_category: BTreeMap<Category, Aggregate>,
    pub by_subcategory: BTreeMap<String, Aggregate>,
    pub overall: Aggregate,
    #[serde(skip)]
    pub audits: BTreeMap<String, RetrievalAudit>,
}

impl EvalReport {
    pub fn from_records(
        toggles: Toggles,
        records: Vec<EvalRecord>,
        skipped_missing_gold: usize,
        failures: Vec<EvalFailure>,
    ) -> Self {
        let mut by_category = BTreeMap::new();
        for c in Category::ALL {
            let a = Aggregate::of(records.iter().filter(|r| r.category == c));
            if a.count > 0 {
                by_category.insert(c, a);
            }
        }
        let mut subs: Vec<&String> = records.iter().filter_map(|r| r.subcategory.as_ref()).collect();
        subs.sort();
        subs.dedup();
        let by_subcategory = subs
            .into_iter()
            .map(|s| {
                (
                    s.clone(),
                    Aggregate::of(records.iter().filter(|r| r.subcategory.as_ref() == Some(s))),
                )
            })
            .collect();
        let overall = Aggregate::of(records.iter());
        Self {
            toggles: toggles.label(),
            records,
            skipped_missing_gold,
            failures,
            by_category,
            by_subcategory,
            overall,
            audits: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned table: one row per category, then overall. Scores are in %.
    pub fn render_table(&self) -> String {
        let pct = |v: f64| format!("{:.1}", v * 100.0);
        let mut rows: Vec<[String; 5]> = vec![[
            "Category".into(),
            "Count".into(),
            "F1".into(),
            "BLEU-1".into(),
            "J".into(),
        ]];
        let mut push = |name: String, a: &Aggregate| {
            rows.push([
                name,
                a.count.to_string(),
                pct(a.f1),
                pct(a.bleu1),
                a.judge.map(pct).unwrap_or_else(|| "-".into()),
            ]);
        };
        for (c, a) in &self.by_category {
            push(c.label().to_string(), a);
        }
        for (s, a) in &self.by_subcategory {
            push(format!("  {s}"), a);
        }
        push("overall".into(), &self.overall);
        let widths: Vec<usize> = (0..5).map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0)).collect();
        let mut out = format!("toggles: {}\n", self.toggles);
        for r in &rows {
            let _ = write!(out, "{:<w$}", r[0], w = widths[0]);
            for i in 1..5 {
                let _ = write!(out, "  {:>w$}", r[i], w = widths[i]);
            }
            out.push('\n');
        }
        if self.skipped_missing_gold > 0 {
            let _ = writeln!(out, "skipped (no gold answer): {}", self.skipped_missing_gold);
        }
        if !self.failures.is_empty() {
            let _ = writeln!(out, "failed: {}", self.failures.len());
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "question_id", "category", "subcategory", "query", "gold", "prediction", "f1", "bleu1",
            "judge_verdict", "audit_ref",
        ])
        .map_err(|e| Error::Input(e.to_string()))?;
        for r in &self.records {
            w.write_record([
                r.question_id.as_str(),
                r.category.label(),
                r.subcategory.as_deref().unwrap_or(""),
                &r.query,
                &r.gold,
                &r.prediction,
                &r.f1.to_string(),
                &r.bleu1.to_string(),
                &r.judge_verdict.map(|v| v.to_string()).unwrap_or_default(),
                &r.audit_ref,
            ])
            .map_err(|e| Error::Input(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Input(e.to_string()))
    }
}

/// Answers every item with a gold answer and scores it. Items run in
/// parallel; records keep the input order.
pub fn run_eval(
    memory: &Memory,
    gateway: &dyn LlmGateway,
    items: &[QaItem],
    config: &RetrievalConfig,
    toggles: Toggles,
    judge: Option<&dyn AnswerJudge>,
) -> Result<EvalReport> {
    config.validate()?;
    let skipped = items.iter().filter(|i| i.gold.is_none()).count();
    if skipped > 0 {
        tracing::warn!(skipped, "questions without a gold answer were skipped");
    }
    let label = toggles.label();
    let outcomes: Vec<std::result::Result<(EvalRecord, RetrievalAudit), EvalFailure>> = items
        .par_iter()
        .filter_map(|item| item.gold.as_ref().map(|g| (item, g)))
        .map(|(item, gold)| {
            let fail = |e: Error| EvalFailure {
                question_id: item.question_id.clone(),
                error: e.to_string(),
            };
            let a = answer(memory, gateway, &item.query, config, toggles).map_err(fail)?;
            let prediction = a.generated.answer;
            let judge_verdict = match judge {
                Some(j) => Some(j.judge(&item.query, gold, &prediction).map_err(fail)?),
                None => None,
            };
            let record = EvalRecord {
                question_id: item.question_id.clone(),
                category: item.category,
                subcategory: item.subcategory.clone(),
                query: item.query.clone(),
                gold: gold.clone(),
                f1: token_f1(&prediction, gold),
                bleu1: bleu1(&prediction, gold),
                prediction,
                judge_verdict,
                audit_ref: format!("{}#{label}", item.question_id),
            };
            Ok((record, a.retrieval.audit))
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut audits = BTreeMap::new();
    for o in outcomes {
        match o {
            Ok((r, audit)) => {
                audits.insert(r.audit_ref.clone(), audit);
                records.push(r);
            }
            Err(f) => {
                tracing::warn!(question = %f.question_id, error = %f.error, "question failed");
                failures.push(f);
            }
        }
    }
    let mut report = EvalReport::from_records(toggles, records, skipped, failures);
    report.audits = audits;
    Ok(report)
}

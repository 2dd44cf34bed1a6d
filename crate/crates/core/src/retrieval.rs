//! Query path: query quadruples, fact seeding, propagation, initial
//! passages, reverse provenance expansion and context synthesis.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::gateway::LlmGateway;
use crate::graph::GraphStore;
use crate::memory::Memory;
use crate::model::{
    EntityId, EpisodicEventFrame, FrameId, Passage, PassageId, ProvenanceSet, Quadruple, QuadrupleDraft,
    RetrievalConfig,
};

pub const HEADER_A: &str = "(A) Original Passages (Grounded Evidence)";
pub const HEADER_B: &str = "(B) Episodic Memory Summary";
pub const HEADER_C: &str = "(C) Relevant Facts";
const EMPTY_SECTION: &str = "(none)";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SynthesizedContext {
    pub section_a_passages: Vec<Passage>,
    pub section_b_frames: Vec<EpisodicEventFrame>,
    pub section_c_facts: Vec<Quadruple>,
    pub serialized: String,
}

/// Independent switches for the ablation configurations. All on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Toggles {
    pub rpe: bool,
    pub eef: bool,
    pub facts: bool,
    pub ppr: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Self {
            rpe: true,
            eef: true,
            facts: true,
            ppr: true,
        }
    }
}

impl Toggles {
    pub fn full() -> Self {
        Self::default()
    }

    /// Applies a list of `no-rpe` / `no-eef` / `no-facts` / `no-ppr` names.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut t = Self::default();
        for n in names {
            t = t.with(n.as_ref().parse()?);
        }
        Ok(t)
    }

    pub fn with(mut self, off: Ablation) -> Self {
        match off {
            Ablation::NoRpe => self.rpe = false,
            Ablation::NoEef => self.eef = false,
            Ablation::NoFacts => self.facts = false,
            Ablation::NoPpr => self.ppr = false,
        }
        self
    }

    pub fn label(&self) -> String {
        let mut off = Vec::new();
        if !self.rpe {
            off.push("no-rpe");
        }
        if !self.eef {
            off.push("no-eef");
        }
        if !self.facts {
            off.push("no-facts");
        }
        if !self.ppr {
            off.push("no-ppr");
        }
        if off.is_empty() {
            "full".into()
        } else {
            off.join("+")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    NoRpe,
    NoEef,
    NoFacts,
    NoPpr,
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no-rpe" => Ok(Self::NoRpe),
            "no-eef" => Ok(Self::NoEef),
            "no-facts" => Ok(Self::NoFacts),
            "no-ppr" => Ok(Self::NoPpr),
            other => Err(Error::Config(format!(
                "unknown toggle `{other}` (expected no-rpe, no-eef, no-facts or no-ppr)"
            ))),
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NoRpe => "no-rpe",
            Self::NoEef => "no-eef",
            Self::NoFacts => "no-facts",
            Self::NoPpr => "no-ppr",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ranking {
    Ppr,
    Dense,
    /// PPR produced no scored passage (e.g. the graph has no facts).
    DenseFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredFact {
    pub ordinal: usize,
    pub score: f64,
    pub fact: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredEntity {
    pub entity_id: EntityId,
    pub name: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPassage {
    pub passage_id: PassageId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredFrame {
    pub frame_id: FrameId,
    pub relevance: f64,
}

/// Every intermediate of one retrieval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalAudit {
    pub query: String,
    pub config: RetrievalConfig,
    pub toggles: Toggles,
    pub query_quadruples: Vec<QuadrupleDraft>,
    pub raw_query_fallback: bool,
    pub top_facts: Vec<ScoredFact>,
    pub seeds: Vec<ScoredEntity>,
    pub ranking: Ranking,
    pub ppr_iterations: Option<usize>,
    pub ppr_converged: Option<bool>,
    /// Highest-scoring entities after propagation.
    pub entity_scores: Vec<ScoredEntity>,
    pub p_ret: Vec<ScoredPassage>,
    pub e_ret: Vec<ScoredFrame>,
    pub expansion_admitted: Vec<PassageId>,
    pub expansion_dropped: Vec<PassageId>,
    pub p_final: Vec<PassageId>,
}

impl RetrievalAudit {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    pub context: SynthesizedContext,
    pub audit: RetrievalAudit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RpeResult {
    /// Chronological.
    pub passages: Vec<PassageId>,
    /// Expansion passages admitted, in admission order.
    pub admitted: Vec<PassageId>,
    /// Expansion passages cut by the cap, in priority order.
    pub dropped: Vec<PassageId>,
}

/// Reverse provenance expansion. `frames` are provenance sets in relevance
/// order; `position` gives chronological rank. Candidates outside `p_ret`
/// are admitted by frame rank then chronology until `cap` is reached.
pub fn rpe(
    p_ret: &[PassageId],
    frames: &[&ProvenanceSet],
    cap: usize,
    position: &dyn Fn(&PassageId) -> usize,
) -> Result<RpeResult> {
    if cap < p_ret.len() {
        return Err(Error::Config(format!(
            "expansion cap {cap} is smaller than the {} initial passages",
            p_ret.len()
        )));
    }
    let mut seen: HashSet<&PassageId> = p_ret.iter().collect();
    let mut candidates: Vec<PassageId> = Vec::new();
    for prov in frames {
        let mut ids: Vec<&PassageId> = prov.iter().filter(|p| !seen.contains(p)).collect();
        ids.sort_by(|a, b| position(a).cmp(&position(b)).then(a.cmp(b)));
        for id in ids {
            seen.insert(id);
            candidates.push(id.clone());
        }
    }
    let room = cap - p_ret.len();
    let dropped = if candidates.len() > room {
        candidates.split_off(room)
    } else {
        Vec::new()
    };
    let mut passages: Vec<PassageId> = p_ret.iter().chain(&candidates).cloned().collect();
    passages.sort_by(|a, b| position(a).cmp(&position(b)).then(a.cmp(b)));
    passages.dedup();
    Ok(RpeResult {
        passages,
        admitted: candidates,
        dropped,
    })
}

fn render_frame(s: &mut String, index: usize, f: &EpisodicEventFrame) {
    let _ = writeln!(s, "Memory {index}: {}", f.summary);
    for (i, e) in f.events.iter().enumerate() {
        let mut slots = Vec::new();
        if !e.participants.is_empty() {
            slots.push(format!("Participants: {}", e.participants.join(", ")));
        }
        if !e.actions.is_empty() {
            slots.push(format!("Action: {}", e.actions.join("; ")));
        }
        let optional = [
            ("Time", &e.time),
            ("Location", &e.location),
            ("Reason", &e.causality),
            ("Method", &e.manner),
        ];
        for (label, v) in optional {
            if let Some(v) = v {
                slots.push(format!("{label}: {v}"));
            }
        }
        let _ = writeln!(s, "  - Event {}: {}", i + 1, slots.join(" | "));
    }
}

/// Renders the three labelled sections of the generator context.
pub fn synthesize(passages: &[Passage], frames: &[EpisodicEventFrame], facts: &[Quadruple]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{HEADER_A}");
    if passages.is_empty() {
        let _ = writeln!(s, "{EMPTY_SECTION}");
    }
    for p in passages {
        let _ = writeln!(s, "{}", p.rendered());
    }
    let _ = writeln!(s, "\n{HEADER_B}");
    if frames.is_empty() {
        let _ = writeln!(s, "{EMPTY_SECTION}");
    }
    for (i, f) in frames.iter().enumerate() {
        render_frame(&mut s, i + 1, f);
    }
    let _ = writeln!(s, "\n{HEADER_C}");
    if facts.is_empty() {
        let _ = writeln!(s, "{EMPTY_SECTION}");
    }
    for f in facts {
        let _ = writeln!(s, "{}", f.display_tuple());
    }
    s
}

fn dense_ranking(memory: &Memory, query: &Embedding, n: usize) -> Result<Vec<(PassageId, f64)>> {
    let mut scored = Vec::with_capacity(memory.passages.len());
    for (pos, e) in memory.passages.entries().iter().enumerate() {
        scored.push((pos, e.passage.passage_id.clone(), query.cosine(&e.embedding)?));
    }
    scored.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    Ok(scored.into_iter().take(n).map(|(_, p, s)| (p, s)).collect())
}

fn entity_name(graph: &GraphStore, id: EntityId) -> String {
    graph
        .entity(id)
        .map(|e| e.canonical_name.clone())
        .unwrap_or_default()
}

const AUDIT_ENTITY_LIMIT: usize = 20;

/// Runs the full query path against `memory`.
pub fn retrieve(
    memory: &Memory,
    gateway: &dyn LlmGateway,
    query: &str,
    config: &RetrievalConfig,
    toggles: Toggles,
) -> Result<Retrieval> {
    config.validate()?;
    if query.trim().is_empty() {
        return Err(Error::Input("empty query".into()));
    }
    let graph = &memory.graph;
    if memory.passages.is_empty() || (graph.facts().is_empty() && memory.episodic.is_empty()) {
        return Err(Error::EmptyMemory);
    }
    let n = config.initial_retrieval_size;

    // query quadruples and fact seeding
    let (drafts, query_vecs) = GraphStore::query_embeddings(gateway, query)?;
    let raw_query_fallback = drafts.is_empty();
    let top = if graph.facts().is_empty() {
        Vec::new()
    } else {
        graph.topk_facts(&query_vecs, config.fact_seed_k)?
    };
    let ordinals: Vec<usize> = top.iter().map(|t| t.0).collect();
    let seeds = graph.seeds_for_facts(&ordinals);

    // initial passages
    let mut ppr_iterations = None;
    let mut ppr_converged = None;
    let mut entity_scores = Vec::new();
    let (ranking, p_ret) = if toggles.ppr && !seeds.is_empty() {
        let scores = graph.ppr(&seeds, config)?;
        ppr_iterations = Some(scores.iterations);
        ppr_converged = Some(scores.converged);
        let mut ranked: Vec<(&EntityId, &f64)> = scores.scores.iter().filter(|(_, s)| **s > 0.0).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(a.1).then(a.0.cmp(b.0)));
        entity_scores = ranked
            .into_iter()
            .take(AUDIT_ENTITY_LIMIT)
            .map(|(id, s)| ScoredEntity {
                entity_id: *id,
                name: entity_name(graph, *id),
                score: *s,
            })
            .collect();
        let p = graph.passages_from_scores(&scores.scores, n, &memory.passages);
        if p.is_empty() {
            (Ranking::DenseFallback, dense_ranking(memory, &gateway.embed(query)?, n)?)
        } else {
            (Ranking::Ppr, p)
        }
    } else if toggles.ppr {
        (Ranking::DenseFallback, dense_ranking(memory, &gateway.embed(query)?, n)?)
    } else {
        (Ranking::Dense, dense_ranking(memory, &gateway.embed(query)?, n)?)
    };

    // frames linked to the initial passages, by best passage score
    let mut relevance: BTreeMap<FrameId, f64> = BTreeMap::new();
    for (p, score) in &p_ret {
        if let Some(ids) = memory.episodic.frame_ids_for_passage(p) {
            for f in ids {
                let r = relevance.entry(*f).or_insert(f64::NEG_INFINITY);
                *r = r.max(*score);
            }
        }
    }
    let mut e_ret: Vec<(FrameId, f64)> = relevance.into_iter().collect();
    e_ret.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let frames: Vec<&EpisodicEventFrame> = e_ret
        .iter()
        .filter_map(|(id, _)| memory.episodic.frame(*id))
        .collect();

    let p_ret_ids: Vec<PassageId> = p_ret.iter().map(|(p, _)| p.clone()).collect();
    let position = |p: &PassageId| memory.passages.position(p).unwrap_or(usize::MAX);
    let expanded = if toggles.rpe {
        let provs: Vec<&ProvenanceSet> = frames.iter().map(|f| &f.provenance).collect();
        rpe(&p_ret_ids, &provs, config.expansion_cap(), &position)?
    } else {
        rpe(&p_ret_ids, &[], config.expansion_cap(), &position)?
    };

    let section_a: Vec<Passage> = expanded
        .passages
        .iter()
        .map(|p| {
            memory
                .passages
                .get(p)
                .cloned()
                .ok_or_else(|| Error::ProvenanceViolation(p.to_string()))
        })
        .collect::<Result<_>>()?;
    let section_b: Vec<EpisodicEventFrame> = if toggles.eef {
        frames.iter().map(|f| (*f).clone()).collect()
    } else {
        Vec::new()
    };
    let section_c: Vec<Quadruple> = if toggles.facts {
        ordinals.iter().filter_map(|o| graph.fact(*o).cloned()).collect()
    } else {
        Vec::new()
    };
    let serialized = synthesize(&section_a, &section_b, &section_c);

    let audit = RetrievalAudit {
        query: query.to_string(),
        config: config.clone(),
        toggles,
        query_quadruples: drafts,
        raw_query_fallback,
        top_facts: top
            .iter()
            .filter_map(|(o, s)| {
                graph.fact(*o).map(|f| ScoredFact {
                    ordinal: *o,
                    score: *s,
                    fact: f.display_tuple(),
                })
            })
            .collect(),
        seeds: seeds
            .iter()
            .map(|(id, m)| ScoredEntity {
                entity_id: *id,
                name: entity_name(graph, *id),
                score: *m,
            })
            .collect(),
        ranking,
        ppr_iterations,
        ppr_converged,
        entity_scores,
        p_ret: p_ret
            .iter()
            .map(|(p, s)| ScoredPassage {
                passage_id: p.clone(),
                score: *s,
            })
            .collect(),
        e_ret: e_ret
            .iter()
            .map(|(f, r)| ScoredFrame {
                frame_id: *f,
                relevance: *r,
            })
            .collect(),
        expansion_admitted: expanded.admitted,
        expansion_dropped: expanded.dropped,
        p_final: expanded.passages,
    };

    Ok(Retrieval {
        context: SynthesizedContext {
            section_a_passages: section_a,
            section_b_frames: section_b,
            section_c_facts: section_c,
            serialized,
        },
        audit,
    })
}

/// Passages of `frames` not already in `p_ret`, for diagnostics.
pub fn expansion_pool(p_ret: &[PassageId], frames: &[&ProvenanceSet]) -> BTreeSet<PassageId> {
    let base: BTreeSet<&PassageId> = p_ret.iter().collect();
    frames
        .iter()
        .flat_map(|f| f.iter())
        .filter(|p| !base.contains(p))
        .cloned()
        .collect()
}

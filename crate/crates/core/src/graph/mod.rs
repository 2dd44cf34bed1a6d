//! Graph memory layer: entities, timestamped fact edges and the
//! propagation machinery used to seed passage retrieval.

pub mod ppr;
mod stats;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Deserializer, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::gateway::{text, LlmGateway};
use crate::model::{
    EntityId, EntityNode, FactObject, Passage, PassageId, ProvenanceSet, Quadruple, QuadrupleDraft,
    RetrievalConfig,
};
use crate::passages::PassageStore;

pub use ppr::{personalized_pagerank, PprResult, WeightedGraph};
pub use stats::{GraphStats, StatsRow, StatsTable};

/// Two surface forms of one entity judged synonymous at merge time.
/// `a < b`, so the pair is unordered and never reflexive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynonymyEdge {
    pub entity: EntityId,
    pub a: String,
    pub b: String,
    pub similarity: f64,
}

/// Entity-level PPR output.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityScores {
    pub scores: BTreeMap<EntityId, f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct GraphStore {
    merge_threshold: f64,
    next_entity_id: u64,
    entities: BTreeMap<EntityId, EntityNode>,
    alias_embeddings: BTreeMap<String, Embedding>,
    facts: Vec<Quadruple>,
    synonymy_edges: Vec<SynonymyEdge>,
    passage_anchors: BTreeMap<PassageId, BTreeSet<EntityId>>,
    fact_empty: BTreeSet<PassageId>,
    #[serde(skip)]
    alias_index: HashMap<String, EntityId>,
}

/// Objects made only of dates and numbers stay literals instead of nodes.
pub fn is_literal(object: &str) -> bool {
    let mut rest = object.to_string();
    for m in text::find_dates(object).iter().rev() {
        rest.replace_range(m.start..m.end, " ");
    }
    rest.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .all(|t| {
            let lower = t.to_lowercase();
            t.chars().all(|c| c.is_ascii_digit())
                || text::is_preposition(&lower)
                || ["since", "until", "before", "after", "during", "around"].contains(&lower.as_str())
        })
}

impl GraphStore {
    pub fn new(merge_threshold: f64) -> Self {
        Self {
            merge_threshold,
            ..Self::default()
        }
    }

    pub fn merge_threshold(&self) -> f64 {
        self.merge_threshold
    }

    pub fn entities(&self) -> impl Iterator<Item = &EntityNode> {
        self.entities.values()
    }

    pub fn entity(&self, id: EntityId) -> Option<&EntityNode> {
        self.entities.get(&id)
    }

    pub fn entity_by_alias(&self, alias: &str) -> Option<&EntityNode> {
        self.alias_index.get(alias).and_then(|id| self.entities.get(id))
    }

    pub fn facts(&self) -> &[Quadruple] {
        &self.facts
    }

    pub fn fact(&self, ordinal: usize) -> Option<&Quadruple> {
        self.facts.get(ordinal)
    }

    pub fn synonymy_edges(&self) -> &[SynonymyEdge] {
        &self.synonymy_edges
    }

    pub fn anchors(&self, id: &PassageId) -> Option<&BTreeSet<EntityId>> {
        self.passage_anchors.get(id)
    }

    pub fn fact_empty(&self) -> &BTreeSet<PassageId> {
        &self.fact_empty
    }

    /// Extracts quadruples from a stored passage and links them into the
    /// graph. Extraction or embedding failure leaves the store untouched
    /// and flags the passage as fact-empty.
    pub fn ingest_passage(
        &mut self,
        gateway: &dyn LlmGateway,
        passages: &PassageStore,
        id: &PassageId,
    ) -> Result<usize> {
        let passage = passages
            .get(id)
            .ok_or_else(|| Error::ProvenanceViolation(id.to_string()))?;
        let prepared = match self.prepare(gateway, passage) {
            Ok(p) => p,
            Err(e) => {
                tracing::warn!(passage = %id, error = %e, "quadruple extraction failed; passage is fact-empty");
                self.fact_empty.insert(id.clone());
                return Ok(0);
            }
        };
        let added = prepared.facts.len();
        for (draft, embedding) in prepared.facts {
            let subject = self.resolve(&draft.subject, &prepared.names, id);
            let object = draft.object.as_ref().map(|o| {
                if is_literal(o) {
                    FactObject::Literal { text: o.clone() }
                } else {
                    FactObject::Entity {
                        id: self.resolve(o, &prepared.names, id),
                        text: o.clone(),
                    }
                }
            });
            let anchors = self.passage_anchors.entry(id.clone()).or_default();
            anchors.insert(subject);
            if let Some(o) = object.as_ref().and_then(FactObject::entity) {
                anchors.insert(o);
            }
            self.facts.push(Quadruple {
                ordinal: self.facts.len(),
                subject,
                subject_text: draft.subject,
                relation: draft.relation,
                object,
                temporal: draft.temporal,
                provenance: ProvenanceSet::single(id.clone()),
                embedding,
            });
        }
        Ok(added)
    }

    /// Every model call an ingest needs, done before any mutation.
    fn prepare(&self, gateway: &dyn LlmGateway, passage: &Passage) -> Result<Prepared> {
        let input = if passage.speaker.is_empty() {
            passage.text.clone()
        } else {
            format!("{}: {}", passage.speaker, passage.text)
        };
        let reference = passage.timestamp.as_ref().and_then(|t| t.instant);
        let drafts = gateway.extract_quadruples(&input, reference)?;
        let mut names = HashMap::new();
        let mut facts = Vec::with_capacity(drafts.len());
        for d in drafts {
            d.validate()?;
            let mut surface = vec![d.subject.clone()];
            if let Some(o) = d.object.as_ref().filter(|o| !is_literal(o)) {
                surface.push(o.clone());
            }
            for s in surface {
                if !self.alias_index.contains_key(&s) && !names.contains_key(&s) {
                    let e = gateway.embed(&s)?;
                    names.insert(s, e);
                }
            }
            let e = gateway.embed(&d.serialized())?;
            facts.push((d, e));
        }
        Ok(Prepared { names, facts })
    }

    /// Maps a surface form to an entity. Known aliases resolve directly;
    /// a new form joins every entity owning an alias within the merge
    /// threshold (absorbing all of them into the oldest) or starts a new one.
    fn resolve(&mut self, name: &str, embeddings: &HashMap<String, Embedding>, passage: &PassageId) -> EntityId {
        if let Some(&id) = self.alias_index.get(name) {
            self.link(id, passage);
            return id;
        }
        let e = embeddings[name].clone();
        // best matching alias per entity
        let mut matches: BTreeMap<EntityId, (String, f64)> = BTreeMap::new();
        for (alias, ae) in &self.alias_embeddings {
            let sim = e.cosine(ae).unwrap_or(f64::NEG_INFINITY);
            if sim >= self.merge_threshold {
                let owner = self.alias_index[alias];
                let slot = matches.entry(owner).or_insert_with(|| (alias.clone(), sim));
                if sim > slot.1 {
                    *slot = (alias.clone(), sim);
                }
            }
        }

        let target = match matches.keys().next() {
            None => {
                let id = EntityId(self.next_entity_id);
                self.next_entity_id += 1;
                self.entities.insert(
                    id,
                    EntityNode {
                        entity_id: id,
                        canonical_name: name.to_string(),
                        aliases: BTreeSet::from([name.to_string()]),
                        embedding: e.clone(),
                        linked_passages: ProvenanceSet::single(passage.clone()),
                    },
                );
                id
            }
            Some(&target) => {
                for (&owner, (alias, sim)) in &matches {
                    let (a, b) = if alias.as_str() < name {
                        (alias.clone(), name.to_string())
                    } else {
                        (name.to_string(), alias.clone())
                    };
                    self.synonymy_edges.push(SynonymyEdge {
                        entity: owner,
                        a,
                        b,
                        similarity: *sim,
                    });
                }
                let absorbed: Vec<EntityId> = matches.keys().skip(1).copied().collect();
                for other in absorbed {
                    self.absorb(other, target);
                }
                let node = self.entities.get_mut(&target).expect("live entity");
                node.aliases.insert(name.to_string());
                self.link(target, passage);
                target
            }
        };
        self.alias_index.insert(name.to_string(), target);
        self.alias_embeddings.insert(name.to_string(), e);
        target
    }

    fn link(&mut self, id: EntityId, passage: &PassageId) {
        let node = self.entities.get_mut(&id).expect("live entity");
        if !node.linked_passages.contains(passage) {
            node.linked_passages = node.linked_passages.union(&ProvenanceSet::single(passage.clone()));
        }
    }

    /// Folds entity `from` into `into`, rewriting every reference.
    fn absorb(&mut self, from: EntityId, into: EntityId) {
        let Some(node) = self.entities.remove(&from) else {
            return;
        };
        let target = self.entities.get_mut(&into).expect("live entity");
        target.linked_passages = target.linked_passages.union(&node.linked_passages);
        for alias in node.aliases {
            self.alias_index.insert(alias.clone(), into);
            target.aliases.insert(alias);
        }
        for f in &mut self.facts {
            if f.subject == from {
                f.subject = into;
            }
            if let Some(FactObject::Entity { id, .. }) = &mut f.object {
                if *id == from {
                    *id = into;
                }
            }
        }
        for anchors in self.passage_anchors.values_mut() {
            if anchors.remove(&from) {
                anchors.insert(into);
            }
        }
        for e in &mut self.synonymy_edges {
            if e.entity == from {
                e.entity = into;
            }
        }
    }

    /// Embeddings for a query: one per extracted query quadruple, or the raw
    /// query as a single pseudo-quadruple when none come out.
    pub fn query_embeddings(
        gateway: &dyn LlmGateway,
        query: &str,
    ) -> Result<(Vec<QuadrupleDraft>, Vec<Embedding>)> {
        let drafts = gateway.extract_quadruples(query, None).unwrap_or_else(|e| {
            tracing::warn!(error = %e, "query quadruple extraction failed; using raw query");
            Vec::new()
        });
        if drafts.is_empty() {
            return Ok((drafts, vec![gateway.embed(query)?]));
        }
        let vecs = drafts
            .iter()
            .map(|d| gateway.embed(&d.serialized()))
            .collect::<Result<Vec<_>>>()?;
        Ok((drafts, vecs))
    }

    /// Top-k facts by best cosine against any query vector; ties by ordinal.
    pub fn topk_facts(&self, query: &[Embedding], k: usize) -> Result<Vec<(usize, f64)>> {
        if k == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        if query.is_empty() {
            return Err(Error::Input("no query vectors".into()));
        }
        let mut scored = Vec::with_capacity(self.facts.len());
        for f in &self.facts {
            let mut best = f64::NEG_INFINITY;
            for q in query {
                best = best.max(q.cosine(&f.embedding)?);
            }
            scored.push((f.ordinal, best));
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored)
    }

    /// Uniform mass over the distinct entities of the given facts.
    pub fn seeds_for_facts(&self, ordinals: &[usize]) -> BTreeMap<EntityId, f64> {
        let mut nodes = BTreeSet::new();
        for &o in ordinals {
            if let Some(f) = self.facts.get(o) {
                nodes.insert(f.subject);
                if let Some(id) = f.object.as_ref().and_then(FactObject::entity) {
                    nodes.insert(id);
                }
            }
        }
        let mass = 1.0 / nodes.len().max(1) as f64;
        nodes.into_iter().map(|n| (n, mass)).collect()
    }

    /// Entity graph used for propagation: every fact between two distinct
    /// entities is a weight-1 edge in both directions. Synonymy edges join
    /// aliases of one node and add no links.
    pub fn propagation_graph(&self) -> (WeightedGraph, Vec<EntityId>) {
        let ids: Vec<EntityId> = self.entities.keys().copied().collect();
        let pos: HashMap<EntityId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let mut g = WeightedGraph::new(ids.len());
        for f in &self.facts {
            if let Some(o) = f.object.as_ref().and_then(FactObject::entity) {
                if o != f.subject {
                    g.add_undirected(pos[&f.subject], pos[&o], 1.0);
                }
            }
        }
        (g, ids)
    }

    pub fn ppr(&self, seeds: &BTreeMap<EntityId, f64>, config: &RetrievalConfig) -> Result<EntityScores> {
        let (g, ids) = self.propagation_graph();
        if g.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut s = vec![0.0; ids.len()];
        for (id, mass) in seeds {
            let i = ids
                .binary_search(id)
                .map_err(|_| Error::Seed(format!("seed entity {id} is not live")))?;
            s[i] = *mass;
        }
        let r = personalized_pagerank(&g, &s, config.damping, config.ppr_tolerance, config.ppr_max_iters)?;
        if !r.converged {
            tracing::warn!(iterations = r.iterations, "PPR hit max_iters before converging");
        }
        Ok(EntityScores {
            scores: ids.into_iter().zip(r.scores).collect(),
            iterations: r.iterations,
            converged: r.converged,
        })
    }

    /// Passages ranked by the summed scores of the entities they anchor,
    /// ties in chronological order. Passages with zero score are left out.
    pub fn passages_from_scores(
        &self,
        scores: &BTreeMap<EntityId, f64>,
        n: usize,
        passages: &PassageStore,
    ) -> Vec<(PassageId, f64)> {
        let mut ranked: Vec<(usize, PassageId, f64)> = self
            .passage_anchors
            .iter()
            .map(|(p, anchors)| {
                let s: f64 = anchors.iter().filter_map(|e| scores.get(e)).sum();
                (passages.position(p).unwrap_or(usize::MAX), p.clone(), s)
            })
            .filter(|(_, _, s)| *s > 0.0)
            .collect();
        ranked.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
        ranked.into_iter().take(n).map(|(_, p, s)| (p, s)).collect()
    }

    pub fn graph_stats(&self) -> GraphStats {
        GraphStats {
            entities: self.entities.len(),
            facts: self.facts.len(),
            temporal_anchors: self.facts.iter().filter(|f| f.temporal.is_some()).count(),
            synonymy_edges: self.synonymy_edges.len(),
        }
    }

    /// Referential checks over facts, anchors, aliases and synonymy edges.
    pub fn audit(&self, passages: &PassageStore) -> Result<()> {
        let bad = |m: String| Err(Error::Input(m));
        for (i, f) in self.facts.iter().enumerate() {
            if f.ordinal != i {
                return bad(format!("fact at {i} has ordinal {}", f.ordinal));
            }
            passages.check_closure(&f.provenance)?;
            let mut ends = vec![f.subject];
            ends.extend(f.object.as_ref().and_then(FactObject::entity));
            for e in ends {
                if !self.entities.contains_key(&e) {
                    return bad(format!("fact {i} references dead entity {e}"));
                }
                for p in f.provenance.iter() {
                    if !self.passage_anchors.get(p).is_some_and(|a| a.contains(&e)) {
                        return bad(format!("passage {p} is not anchored to entity {e} of fact {i}"));
                    }
                }
            }
        }
        for (p, anchors) in &self.passage_anchors {
            if !passages.contains(p) {
                return Err(Error::ProvenanceViolation(p.to_string()));
            }
            if let Some(e) = anchors.iter().find(|e| !self.entities.contains_key(e)) {
                return bad(format!("passage {p} anchored to dead entity {e}"));
            }
        }
        for node in self.entities.values() {
            passages.check_closure(&node.linked_passages)?;
            for a in &node.aliases {
                if self.alias_index.get(a) != Some(&node.entity_id) {
                    return bad(format!("alias {a} is not indexed to entity {}", node.entity_id));
                }
            }
        }
        for e in &self.synonymy_edges {
            if e.a >= e.b {
                return bad(format!("synonymy edge ({}, {}) is not canonical", e.a, e.b));
            }
            let Some(node) = self.entities.get(&e.entity) else {
                return bad(format!("synonymy edge on dead entity {}", e.entity));
            };
            if !node.aliases.contains(&e.a) || !node.aliases.contains(&e.b) {
                return bad(format!("synonymy edge ({}, {}) outside entity {}", e.a, e.b, e.entity));
            }
        }
        Ok(())
    }
}

struct Prepared {
    names: HashMap<String, Embedding>,
    facts: Vec<(QuadrupleDraft, Embedding)>,
}

#[derive(Deserialize)]
struct GraphRepr {
    merge_threshold: f64,
    next_entity_id: u64,
    entities: BTreeMap<EntityId, EntityNode>,
    alias_embeddings: BTreeMap<String, Embedding>,
    facts: Vec<Quadruple>,
    synonymy_edges: Vec<SynonymyEdge>,
    passage_anchors: BTreeMap<PassageId, BTreeSet<EntityId>>,
    fact_empty: BTreeSet<PassageId>,
}

impl<'de> Deserialize<'de> for GraphStore {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = GraphRepr::deserialize(d)?;
        let alias_index = r
            .entities
            .values()
            .flat_map(|n| n.aliases.iter().map(|a| (a.clone(), n.entity_id)))
            .collect();
        Ok(GraphStore {
            merge_threshold: r.merge_threshold,
            next_entity_id: r.next_entity_id,
            entities: r.entities,
            alias_embeddings: r.alias_embeddings,
            facts: r.facts,
            synonymy_edges: r.synonymy_edges,
            passage_anchors: r.passage_anchors,
            fact_empty: r.fact_empty,
            alias_index,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::MockGateway;

    fn corpus(mock: &MockGateway, rows: &[(&str, &str)]) -> PassageStore {
        let mut s = PassageStore::new(mock.embedding_dim());
        for (i, (speaker, text)) in rows.iter().enumerate() {
            let p = Passage::new("s", i as u32, *speaker, Some("2023-05-01"), *text).unwrap();
            s.insert(p, mock.embed(text).unwrap()).unwrap();
        }
        s
    }

    fn build(mock: &MockGateway, ps: &PassageStore, threshold: f64) -> GraphStore {
        let mut g = GraphStore::new(threshold);
        for p in ps.iter() {
            g.ingest_passage(mock, ps, &p.passage_id).unwrap();
        }
        g.audit(ps).unwrap();
        g
    }

    #[test]
    fn literal_objects() {
        assert!(is_literal("January 5, 2024"));
        assert!(is_literal("42"));
        assert!(is_literal("since 2019"));
        assert!(!is_literal("study abroad program"));
        assert!(!is_literal("them"));
    }

    #[test]
    fn zero_quadruples() {
        let mock = MockGateway::default();
        let ps = corpus(&mock, &[("", "hmm, okay!")]);
        let g = build(&mock, &ps, 0.9);
        assert_eq!(g.graph_stats(), GraphStats::default());
        assert!(g.anchors(&PassageId::new("s", 0)).is_none());
    }

    #[test]
    fn rob_and_robert_merge() {
        let mut rob = vec![0.0f32; 256];
        rob[0] = 1.0;
        let mut robert = vec![0.0f32; 256];
        robert[0] = 0.95;
        robert[1] = 0.312_25; // cosine = 0.95 / sqrt(0.95^2 + 0.31225^2) ~ 0.95
        let mock = MockGateway::default()
            .with_embedding("Rob", rob)
            .unwrap()
            .with_embedding("Robert", robert)
            .unwrap();
        let ps = corpus(&mock, &[("", "Rob bought a guitar."), ("", "Robert plays the guitar.")]);
        let g = build(&mock, &ps, 0.9);
        let node = g.entity_by_alias("Rob").unwrap();
        assert_eq!(node.aliases, BTreeSet::from(["Rob".to_string(), "Robert".to_string()]));
        assert_eq!(g.entity_by_alias("Robert").unwrap().entity_id, node.entity_id);
        assert_eq!(g.synonymy_edges().len(), 1);
        assert_eq!(node.linked_passages.len(), 2);
        // incumbent geometry kept
        assert_eq!(node.embedding, mock.embed("Rob").unwrap());
    }

    #[test]
    fn bridging_alias_absorbs_entities() {
        let v = |x: f32, y: f32| {
            let mut e = vec![0.0f32; 256];
            e[0] = x;
            e[1] = y;
            e
        };
        // Ann and Anne are ~0.87 apart, both ~0.97 from Annie
        let mock = MockGateway::default()
            .with_embedding("Ann", v(1.0, 0.28)).unwrap()
            .with_embedding("Anne", v(1.0, -0.28)).unwrap()
            .with_embedding("Annie", v(1.0, 0.0)).unwrap();
        let ps = corpus(&mock, &[("", "Ann met Tom."), ("", "Anne met Sue."), ("", "Annie met Bo.")]);
        let g = build(&mock, &ps, 0.9);
        let id = g.entity_by_alias("Ann").unwrap().entity_id;
        assert_eq!(g.entity_by_alias("Anne").unwrap().entity_id, id);
        assert_eq!(g.entity_by_alias("Annie").unwrap().entity_id, id);
        assert_eq!(g.synonymy_edges().len(), 2);
        assert!(g.facts().iter().all(|f| g.entity(f.subject).is_some()));
    }

    #[test]
    fn stats_count_temporal_anchors() {
        let mock = MockGateway::default();
        let ps = corpus(
            &mock,
            &[
                ("Ada", "I adopted Rex on March 3, 2021."),
                ("Ben", "I sold my car in 2020."),
                ("Cy", "I like Paris."),
            ],
        );
        let g = build(&mock, &ps, 0.9);
        let s = g.graph_stats();
        assert_eq!(s.facts, 3);
        assert_eq!(s.temporal_anchors, 2);
    }

    #[test]
    fn topk_orders_and_breaks_ties() {
        let mock = MockGateway::default();
        let ps = corpus(&mock, &[("Ada", "I adopted Rex."), ("Ada", "I adopted Rex."), ("Ben", "I sold Max.")]);
        let g = build(&mock, &ps, 0.9);
        let q = mock.embed(&g.fact(0).unwrap().serialized()).unwrap();
        let top = g.topk_facts(&[q], 2).unwrap();
        assert_eq!(top.iter().map(|t| t.0).collect::<Vec<_>>(), vec![0, 1]);
        assert!(g.topk_facts(&[], 2).is_err());
    }

    #[test]
    fn passage_scores_sum_anchors() {
        let mock = MockGateway::default();
        let ps = corpus(&mock, &[("Ada", "I met Ben."), ("Cy", "I met Dee.")]);
        let g = build(&mock, &ps, 0.9);
        let ada = g.entity_by_alias("Ada").unwrap().entity_id;
        let ben = g.entity_by_alias("Ben").unwrap().entity_id;
        let cy = g.entity_by_alias("Cy").unwrap().entity_id;
        let scores = BTreeMap::from([(ada, 0.3), (ben, 0.3), (cy, 0.4)]);
        let top = g.passages_from_scores(&scores, 1, &ps);
        assert_eq!(top, vec![(PassageId::new("s", 0), 0.6)]);
        let both = g.passages_from_scores(&scores, 5, &ps);
        assert_eq!(both.len(), 2);
    }

    #[test]
    fn serde_roundtrip() {
        let mock = MockGateway::default();
        let ps = corpus(&mock, &[("Ada", "I met Ben."), ("Cy", "I met Dee.")]);
        let g = build(&mock, &ps, 0.9);
        let json = serde_json::to_string(&g).unwrap();
        let back: GraphStore = serde_json::from_str(&json).unwrap();
        back.audit(&ps).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}

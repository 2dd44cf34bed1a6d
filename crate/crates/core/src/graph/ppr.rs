//! Personalized PageRank by power iteration.

use crate::error::{Error, Result};

/// Weighted adjacency lists over nodes `0..n`. Rows are normalized when
/// propagating, so weights only need to be relative.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightedGraph {
    adj: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    pub fn new(nodes: usize) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
        }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    /// Adds weight to the directed edge `from -> to`, merging parallel edges.
    pub fn add_edge(&mut self, from: usize, to: usize, weight: f64) {
        assert!(from < self.len() && to < self.len(), "edge endpoint out of range");
        let row = &mut self.adj[from];
        match row.iter_mut().find(|(t, _)| *t == to) {
            Some(e) => e.1 += weight,
            None => row.push((to, weight)),
        }
    }

    pub fn add_undirected(&mut self, a: usize, b: usize, weight: f64) {
        self.add_edge(a, b, weight);
        if a != b {
            self.add_edge(b, a, weight);
        }
    }

    pub fn out_edges(&self, node: usize) -> &[(usize, f64)] {
        &self.adj[node]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PprResult {
    pub scores: Vec<f64>,
    pub iterations: usize,
    /// False when `max_iters` was reached before the L1 change fell below
    /// the tolerance.
    pub converged: bool,
}

fn check_seeds(seeds: &[f64], n: usize) -> Result<()> {
    if seeds.len() != n {
        return Err(Error::Seed(format!("{} seed entries for {n} nodes", seeds.len())));
    }
    if seeds.iter().any(|m| !m.is_finite() || *m < 0.0) {
        return Err(Error::Seed("seed masses must be finite and non-negative".into()));
    }
    let total: f64 = seeds.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Seed(format!("seed mass sums to {total}, expected 1")));
    }
    Ok(())
}

/// Iterates `x <- (1-d) s + d W^T x` with `W` the row-normalized adjacency.
/// Mass on nodes without out-edges returns to the seed distribution.
pub fn personalized_pagerank(
    graph: &WeightedGraph,
    seeds: &[f64],
    damping: f64,
    tol: f64,
    max_iters: usize,
) -> Result<PprResult> {
    let n = graph.len();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    check_seeds(seeds, n)?;
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::Config(format!("damping {damping} outside (0, 1)")));
    }

    let out_weight: Vec<f64> = (0..n)
        .map(|i| graph.out_edges(i).iter().map(|(_, w)| w).sum())
        .collect();
    let mut x = seeds.to_vec();
    let mut next = vec![0.0; n];
    for iter in 1..=max_iters {
        let mut dangling = 0.0;
        next.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            if out_weight[i] > 0.0 {
                let share = x[i] / out_weight[i];
                for &(j, w) in graph.out_edges(i) {
                    next[j] += damping * share * w;
                }
            } else {
                dangling += x[i];
            }
        }
        let restart = (1.0 - damping) + damping * dangling;
        let mut delta = 0.0;
        for j in 0..n {
            next[j] += restart * seeds[j];
            delta += (next[j] - x[j]).abs();
        }
        std::mem::swap(&mut x, &mut next);
        if delta < tol {
            return Ok(PprResult {
                scores: x,
                iterations: iter,
                converged: true,
            });
        }
    }
    Ok(PprResult {
        scores: x,
        iterations: max_iters,
        converged: false,
    })
}

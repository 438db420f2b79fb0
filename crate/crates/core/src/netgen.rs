//! Watts-Strogatz small-world graph generation for simulation studies.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{SocialGraph, WeightMode};
use crate::seeds;

/// Parameters of the Watts-Strogatz generator: a ring lattice of `n` nodes
/// each tied to its `k` nearest neighbors, with every lattice edge rewired
/// with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WattsStrogatzParams {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub seed: u64,
}

impl WattsStrogatzParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k % 2 != 0 {
            return Err(Error::Domain(format!("ring degree k must be even and positive, got {}", self.k)));
        }
        if self.k >= self.n {
            return Err(Error::Domain(format!("k = {} must be smaller than n = {}", self.k, self.n)));
        }
        if !(0.0..=1.0).contains(&self.p) || self.p.is_nan() {
            return Err(Error::Domain(format!("rewiring probability {} outside [0,1]", self.p)));
        }
        Ok(())
    }
}

/// Generate a Watts-Strogatz graph with uniform influence weights; call
/// `assign_influence` to reweight. Rewiring keeps the edge count: a rewire
/// target colliding with an existing edge is redrawn up to `n` times, after
/// which the original lattice edge is kept.
pub fn watts_strogatz(params: &WattsStrogatzParams) -> Result<SocialGraph> {
    params.validate()?;
    let n = params.n;
    let half_k = params.k / 2;
    let mut rng = seeds::rng_for(params.seed, &[]);

    // adjacency as a sorted edge set over (min, max) pairs
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n * half_k);
    let mut has_edge = vec![std::collections::HashSet::new(); n];
    let insert = |a: usize, b: usize, has: &mut Vec<std::collections::HashSet<usize>>, edges: &mut Vec<(usize, usize)>| {
        has[a].insert(b);
        has[b].insert(a);
        edges.push((a.min(b), a.max(b)));
    };
    for i in 0..n {
        for j in 1..=half_k {
            insert(i, (i + j) % n, &mut has_edge, &mut edges);
        }
    }
    // rewire the far endpoint of each lattice edge with probability p
    for idx in 0..edges.len() {
        if rng.random::<f64>() >= params.p {
            continue;
        }
        let (a, b) = edges[idx];
        let mut attempts = 0;
        loop {
            if attempts >= n {
                break; // keep the original edge
            }
            attempts += 1;
            let c = rng.random_range(0..n);
            if c == a || has_edge[a].contains(&c) {
                continue;
            }
            has_edge[a].remove(&b);
            has_edge[b].remove(&a);
            has_edge[a].insert(c);
            has_edge[c].insert(a);
            edges[idx] = (a.min(c), a.max(c));
            break;
        }
    }
    SocialGraph::from_indexed_edges(n, &edges)
}

/// Reassign influence weights on an existing graph; shares the weight
/// routine with graph loading.
pub fn assign_influence(graph: &SocialGraph, mode: WeightMode, seed: u64) -> Result<SocialGraph> {
    let mut g = graph.clone();
    g.assign_weights(mode, seed, &[])?;
    Ok(g)
}

//! Shared domain types: rating scales, the sparse ratings table, the social
//! graph with per-node influence weights, contagion state, and susceptibility
//! profiles. Everything here is immutable after construction.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seeds;

pub const WEIGHT_SUM_TOL: f64 = 1e-9;
const GIVEN_WEIGHT_TOL: f64 = 1e-6;

/// A rating scale: either the signed binary scale {-1, +1} or an integer
/// 1-to-R scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RatingScale {
    levels: u32,
    binary: bool,
}

impl RatingScale {
    pub fn new(levels: u32) -> Result<Self> {
        if levels < 2 {
            return Err(Error::Domain(format!("rating scale needs R >= 2, got {levels}")));
        }
        Ok(RatingScale { levels, binary: false })
    }

    /// The {-1, +1} like/dislike scale.
    pub fn binary() -> Self {
        RatingScale { levels: 2, binary: true }
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn is_binary(&self) -> bool {
        self.binary
    }

    pub fn min_value(&self) -> f64 {
        if self.binary {
            -1.0
        } else {
            1.0
        }
    }

    pub fn max_value(&self) -> f64 {
        if self.binary {
            1.0
        } else {
            f64::from(self.levels)
        }
    }

    pub fn midpoint(&self) -> f64 {
        (self.min_value() + self.max_value()) / 2.0
    }

    pub fn contains_rating(&self, r: i32) -> bool {
        if self.binary {
            r == -1 || r == 1
        } else {
            r >= 1 && r <= self.levels as i32
        }
    }

    /// Active contagion levels: {-1,+1} for binary, otherwise
    /// {±1..±⌊R/2⌋} plus 0 when R is odd.
    pub fn active_levels(&self) -> Vec<i32> {
        if self.binary {
            return vec![-1, 1];
        }
        let half = (self.levels / 2) as i32;
        let mut out: Vec<i32> = (-half..=half).collect();
        if self.levels % 2 == 0 {
            out.retain(|&s| s != 0);
        }
        out
    }

    pub fn is_active_level(&self, s: i32) -> bool {
        if self.binary {
            s == -1 || s == 1
        } else {
            let half = (self.levels / 2) as i32;
            s.abs() <= half && (s != 0 || self.levels % 2 == 1)
        }
    }

    /// Clamp a numeric prediction into the scale's range.
    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.min_value(), self.max_value())
    }

    /// Normalize a scale value into [0, 1].
    pub fn normalize(&self, x: f64) -> f64 {
        ((x - self.min_value()) / (self.max_value() - self.min_value())).clamp(0.0, 1.0)
    }
}

/// Sparse user x item rating table. Ids are opaque strings mapped to dense
/// indices in first-appearance order.
#[derive(Debug, Clone)]
pub struct RatingsTable {
    scale: RatingScale,
    users: Vec<String>,
    user_idx: HashMap<String, usize>,
    items: Vec<String>,
    item_idx: HashMap<String, usize>,
    by_user: Vec<Vec<(usize, i32)>>,
    by_item: Vec<Vec<(usize, i32)>>,
}

impl RatingsTable {
    pub fn new(scale: RatingScale) -> Self {
        RatingsTable {
            scale,
            users: Vec::new(),
            user_idx: HashMap::new(),
            items: Vec::new(),
            item_idx: HashMap::new(),
            by_user: Vec::new(),
            by_item: Vec::new(),
        }
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn num_entries(&self) -> usize {
        self.by_user.iter().map(Vec::len).sum()
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn user_index(&self, id: &str) -> Option<usize> {
        self.user_idx.get(id).copied()
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.item_idx.get(id).copied()
    }

    fn intern_user(&mut self, id: &str) -> usize {
        if let Some(&u) = self.user_idx.get(id) {
            return u;
        }
        let u = self.users.len();
        self.users.push(id.to_string());
        self.user_idx.insert(id.to_string(), u);
        self.by_user.push(Vec::new());
        u
    }

    fn intern_item(&mut self, id: &str) -> usize {
        if let Some(&i) = self.item_idx.get(id) {
            return i;
        }
        let i = self.items.len();
        self.items.push(id.to_string());
        self.item_idx.insert(id.to_string(), i);
        self.by_item.push(Vec::new());
        i
    }

    pub fn insert(&mut self, user: &str, item: &str, rating: i32) -> Result<()> {
        if !self.scale.contains_rating(rating) {
            return Err(Error::Domain(format!(
                "rating {rating} outside scale [{}, {}]",
                self.scale.min_value(),
                self.scale.max_value()
            )));
        }
        let u = self.intern_user(user);
        let i = self.intern_item(item);
        if self.by_user[u].iter().any(|&(it, _)| it == i) {
            return Err(Error::Duplicate { user: user.to_string(), item: item.to_string() });
        }
        self.by_user[u].push((i, rating));
        self.by_item[i].push((u, rating));
        Ok(())
    }

    pub fn rating(&self, u: usize, i: usize) -> Option<i32> {
        self.by_user.get(u)?.iter().find(|&&(it, _)| it == i).map(|&(_, r)| r)
    }

    /// Items rated by user `u`, as (item index, rating) in insertion order.
    pub fn ratings_of(&self, u: usize) -> &[(usize, i32)] {
        &self.by_user[u]
    }

    /// Users who rated item `i`, as (user index, rating).
    pub fn raters_of(&self, i: usize) -> &[(usize, i32)] {
        &self.by_item[i]
    }

    /// Arithmetic mean of all of `u`'s ratings.
    pub fn user_mean(&self, u: usize) -> Result<f64> {
        let row = &self.by_user[u];
        if row.is_empty() {
            return Err(Error::UndefinedMean(self.users[u].clone()));
        }
        Ok(row.iter().map(|&(_, r)| f64::from(r)).sum::<f64>() / row.len() as f64)
    }

    /// Parse `user_id,item_id,rating` lines. `#`-prefixed lines and blank
    /// lines are ignored; a single `user_id,item_id,rating` header is too.
    pub fn load(path: &Path, scale: RatingScale) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, scale)
    }

    pub fn parse(text: &str, scale: RatingScale) -> Result<Self> {
        let mut table = RatingsTable::new(scale);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if lineno == 0 && line.eq_ignore_ascii_case("user_id,item_id,rating") {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected `user_id,item_id,rating`, got `{line}`"),
                });
            }
            let rating: i32 = parts[2].parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("rating `{}` is not an integer", parts[2]),
            })?;
            table.insert(parts[0], parts[1], rating)?;
        }
        Ok(table)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (u, row) in self.by_user.iter().enumerate() {
            for &(i, r) in row {
                writeln!(out, "{},{},{}", self.users[u], self.items[i], r).unwrap();
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// How influence weights b_{v,w} are assigned to graph edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// Both directed weights come from the input file.
    Given,
    /// b_{v,w} = 1 / |N(v)|.
    Uniform,
    /// Draw i.i.d. Uniform(0,1) per neighbor and normalize per node.
    RandomPartition,
}

/// Undirected friendship graph with per-node normalized influence weights.
/// The adjacency is symmetric but b_{v,w} and b_{w,v} are independent:
/// row-normalization makes influence asymmetric.
#[derive(Debug, Clone)]
pub struct SocialGraph {
    nodes: Vec<String>,
    node_idx: HashMap<String, usize>,
    neighbors: Vec<Vec<usize>>,
    weights: Vec<Vec<f64>>,
}

impl SocialGraph {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_idx.get(id).copied()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Influence weights of `v`'s neighbors, aligned with `neighbors(v)`.
    pub fn weights(&self, v: usize) -> &[f64] {
        &self.weights[v]
    }

    pub fn weight(&self, v: usize, w: usize) -> Option<f64> {
        let pos = self.neighbors[v].iter().position(|&x| x == w)?;
        Some(self.weights[v][pos])
    }

    pub fn has_edge(&self, v: usize, w: usize) -> bool {
        self.neighbors[v].contains(&w)
    }

    /// Build from an undirected edge list over integer node ids 0..n.
    /// Weights start unassigned (uniform); call `with_weights` to reassign.
    pub fn from_indexed_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let nodes: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let mut g = SocialGraph::from_named_edges_internal(nodes, None)?;
        for &(a, b) in edges {
            g.add_edge(a, b)?;
        }
        g.assign_weights(WeightMode::Uniform, 0, &[])?;
        Ok(g)
    }

    fn from_named_edges_internal(nodes: Vec<String>, _unused: Option<()>) -> Result<Self> {
        let mut node_idx = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if node_idx.insert(n.clone(), i).is_some() {
                return Err(Error::Domain(format!("duplicate node id `{n}`")));
            }
        }
        let n = nodes.len();
        Ok(SocialGraph {
            nodes,
            node_idx,
            neighbors: vec![Vec::new(); n],
            weights: vec![Vec::new(); n],
        })
    }

    fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        if a == b {
            return Err(Error::Domain(format!("self-loop on node `{}`", self.nodes[a])));
        }
        if self.neighbors[a].contains(&b) {
            return Err(Error::Domain(format!(
                "duplicate edge ({}, {})",
                self.nodes[a], self.nodes[b]
            )));
        }
        self.neighbors[a].push(b);
        self.neighbors[b].push(a);
        self.weights[a].push(0.0);
        self.weights[b].push(0.0);
        Ok(())
    }

    /// Reassign influence weights. `given` carries (v, w, b_vw) triples for
    /// `WeightMode::Given` and is ignored otherwise.
    pub fn assign_weights(
        &mut self,
        mode: WeightMode,
        seed: u64,
        given: &[(usize, usize, f64)],
    ) -> Result<()> {
        match mode {
            WeightMode::Uniform => {
                for v in 0..self.nodes.len() {
                    let deg = self.neighbors[v].len();
                    if deg > 0 {
                        self.weights[v] = vec![1.0 / deg as f64; deg];
                    }
                }
            }
            WeightMode::RandomPartition => {
                for v in 0..self.nodes.len() {
                    let deg = self.neighbors[v].len();
                    if deg == 0 {
                        continue;
                    }
                    // per-node stream so weights do not depend on iteration order
                    let mut rng = seeds::rng_for(seed, &[v as u64]);
                    let draws: Vec<f64> =
                        (0..deg).map(|_| rng.random::<f64>().max(f64::MIN_POSITIVE)).collect();
                    let total: f64 = draws.iter().sum();
                    self.weights[v] = draws.into_iter().map(|x| x / total).collect();
                }
            }
            WeightMode::Given => {
                for v in 0..self.nodes.len() {
                    for (pos, &w) in self.neighbors[v].clone().iter().enumerate() {
                        let found = given
                            .iter()
                            .find(|&&(a, b, _)| a == v && b == w)
                            .map(|&(_, _, x)| x)
                            .ok_or_else(|| {
                                Error::Normalization(format!(
                                    "missing weight for edge ({}, {})",
                                    self.nodes[v], self.nodes[w]
                                ))
                            })?;
                        if !(0.0..=1.0).contains(&found) {
                            return Err(Error::Normalization(format!(
                                "weight {found} for ({}, {}) outside [0,1]",
                                self.nodes[v], self.nodes[w]
                            )));
                        }
                        self.weights[v][pos] = found;
                    }
                    let sum: f64 = self.weights[v].iter().sum();
                    if !self.neighbors[v].is_empty() && (sum - 1.0).abs() > GIVEN_WEIGHT_TOL {
                        return Err(Error::Normalization(format!(
                            "weights of node `{}` sum to {sum}, expected 1",
                            self.nodes[v]
                        )));
                    }
                }
            }
        }
        self.check_normalized()
    }

    fn check_normalized(&self) -> Result<()> {
        for v in 0..self.nodes.len() {
            if self.neighbors[v].is_empty() {
                continue;
            }
            let sum: f64 = self.weights[v].iter().sum();
            if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(Error::Normalization(format!(
                    "weights of node `{}` sum to {sum}",
                    self.nodes[v]
                )));
            }
        }
        Ok(())
    }

    /// Parse `u,v` or `u,v,weight_uv,weight_vu` lines.
    pub fn load(path: &Path, mode: WeightMode, seed: u64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, mode, seed)
    }

    pub fn parse(text: &str, mode: WeightMode, seed: u64) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let mut name_idx: HashMap<String, usize> = HashMap::new();
        let intern = |id: &str, names: &mut Vec<String>, idx: &mut HashMap<String, usize>| {
            if let Some(&i) = idx.get(id) {
                i
            } else {
                let i = names.len();
                names.push(id.to_string());
                idx.insert(id.to_string(), i);
                i
            }
        };
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut given: Vec<(usize, usize, f64)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 2 && parts.len() != 4 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected `u,v` or `u,v,weight_uv,weight_vu`, got `{line}`"),
                });
            }
            if parts[0] == parts[1] {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("self-loop on `{}`", parts[0]),
                });
            }
            let a = intern(parts[0], &mut names, &mut name_idx);
            let b = intern(parts[1], &mut names, &mut name_idx);
            if parts.len() == 4 {
                let wab: f64 = parts[2].parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("bad weight `{}`", parts[2]),
                })?;
                let wba: f64 = parts[3].parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("bad weight `{}`", parts[3]),
                })?;
                given.push((a, b, wab));
                given.push((b, a, wba));
            } else if mode == WeightMode::Given {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: "weight_mode=given requires `u,v,weight_uv,weight_vu` rows".to_string(),
                });
            }
            edges.push((a, b));
        }
        let mut g = SocialGraph::from_named_edges_internal(names, None)?;
        for &(a, b) in &edges {
            g.add_edge(a, b)?;
        }
        g.assign_weights(mode, seed, &given)?;
        Ok(g)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in 0..self.nodes.len() {
            for (pos, &w) in self.neighbors[v].iter().enumerate() {
                if v < w {
                    let back = self.weight(w, v).unwrap();
                    writeln!(
                        out,
                        "{},{},{},{}",
                        self.nodes[v], self.nodes[w], self.weights[v][pos], back
                    )
                    .unwrap();
                }
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Per-user contagion state on one item.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeState {
    Inactive,
    Active { level: i32, step: usize },
}

impl NodeState {
    pub fn is_active(&self) -> bool {
        matches!(self, NodeState::Active { .. })
    }

    pub fn level(&self) -> Option<i32> {
        match self {
            NodeState::Active { level, .. } => Some(*level),
            NodeState::Inactive => None,
        }
    }
}

/// Contagion state of every node for one item. Progressive: once active,
/// a node's level and step never change.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    item: String,
    scale: RatingScale,
    states: Vec<NodeState>,
    step: usize,
}

impl StateVector {
    pub fn new(item: &str, scale: RatingScale, num_nodes: usize) -> Self {
        StateVector {
            item: item.to_string(),
            scale,
            states: vec![NodeState::Inactive; num_nodes],
            step: 0,
        }
    }

    pub fn item(&self) -> &str {
        &self.item
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Current step index (0 before any contagion step has run).
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn state(&self, v: usize) -> NodeState {
        self.states[v]
    }

    pub fn states(&self) -> &[NodeState] {
        &self.states
    }

    pub fn num_active(&self) -> usize {
        self.states.iter().filter(|s| s.is_active()).count()
    }

    /// Mark `v` initially active at `level` (activation step 0).
    pub fn seed(&mut self, v: usize, level: i32) -> Result<()> {
        if !self.scale.is_active_level(level) {
            return Err(Error::Domain(format!("level {level} not in the active-state set")));
        }
        if self.states[v].is_active() {
            return Err(Error::Domain(format!("node {v} already seeded")));
        }
        self.states[v] = NodeState::Active { level, step: 0 };
        Ok(())
    }

    /// Internal: advance to the next step with the given newly-active nodes.
    pub(crate) fn advanced(&self, newly: &[(usize, i32)]) -> StateVector {
        let mut next = self.clone();
        next.step += 1;
        for &(v, level) in newly {
            debug_assert!(!next.states[v].is_active());
            next.states[v] = NodeState::Active { level, step: next.step };
        }
        next
    }
}

/// Per-user susceptibility α_u ∈ [0, 1].
#[derive(Debug, Clone)]
pub struct SusceptibilityProfile {
    default: f64,
    per_user: HashMap<String, f64>,
}

impl SusceptibilityProfile {
    pub fn uniform(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(SusceptibilityProfile { default: alpha, per_user: HashMap::new() })
    }

    pub fn set(&mut self, user: &str, alpha: f64) -> Result<()> {
        check_alpha(alpha)?;
        self.per_user.insert(user.to_string(), alpha);
        Ok(())
    }

    pub fn alpha(&self, user: &str) -> f64 {
        self.per_user.get(user).copied().unwrap_or(self.default)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) || alpha.is_nan() {
        return Err(Error::Domain(format!("susceptibility {alpha} outside [0,1]")));
    }
    Ok(())
}

//! Linear-threshold social contagion on one item: the binary like/dislike
//! process, the general 1-to-R level process, and the three-strategy
//! coordination game whose synchronous best-response dynamics reproduce the
//! binary cascade.
//!
//! Updates are synchronous: every inactive node is evaluated against the
//! previous step's states, and the process is progressive (activated nodes
//! never change).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{NodeState, RatingScale, SocialGraph, StateVector};
use crate::seeds;

/// How per-node thresholds θ_{v,i} are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdPolicy {
    Constant(f64),
    Uniform { lo: f64, hi: f64 },
    /// θ derived from each node's normalized CF prediction: θ = p_v when the
    /// current weighted neighbor signal opposes the node's own leaning, else
    /// min{p_v, 1 - p_v}. Re-evaluated each step against the live signal.
    CfDerived,
}

/// Realized thresholds. Constant and uniform thresholds are fixed once;
/// CF-derived thresholds depend on the current neighbor signal.
#[derive(Debug, Clone, PartialEq)]
pub enum Thresholds {
    Fixed(Vec<f64>),
    CfDerived { p: Vec<f64>, leaning: Vec<f64> },
}

impl Thresholds {
    /// θ for node `v` given the current signed weighted neighbor signal.
    pub fn value(&self, v: usize, signal: f64) -> f64 {
        match self {
            Thresholds::Fixed(t) => t[v],
            Thresholds::CfDerived { p, leaning } => {
                if leaning[v] * signal < 0.0 {
                    p[v]
                } else {
                    p[v].min(1.0 - p[v])
                }
            }
        }
    }
}

/// Realize a threshold policy for every node of `graph`. `cf_row` supplies a
/// normalized prediction in [0,1] per node and is required for
/// `ThresholdPolicy::CfDerived`; the leaning is the sign of p - 1/2.
pub fn realize_thresholds(
    policy: &ThresholdPolicy,
    graph: &SocialGraph,
    cf_row: Option<&[f64]>,
    seed: u64,
) -> Result<Thresholds> {
    let n = graph.num_nodes();
    match policy {
        ThresholdPolicy::Constant(c) => {
            if !(0.0..=1.0).contains(c) {
                return Err(Error::Config(format!("constant threshold {c} outside [0,1]")));
            }
            Ok(Thresholds::Fixed(vec![*c; n]))
        }
        ThresholdPolicy::Uniform { lo, hi } => {
            if !(0.0 <= *lo && lo <= hi && *hi <= 1.0) {
                return Err(Error::Config(format!(
                    "uniform threshold bounds [{lo}, {hi}] invalid"
                )));
            }
            let mut rng = seeds::rng_for(seed, &[]);
            let t = (0..n).map(|_| rng.random_range(*lo..=*hi)).collect();
            Ok(Thresholds::Fixed(t))
        }
        ThresholdPolicy::CfDerived => {
            let p = cf_row.ok_or_else(|| {
                Error::Config("cf_derived thresholds need a prediction per node".to_string())
            })?;
            if p.len() != n {
                return Err(Error::Config(format!(
                    "cf_derived predictions cover {} nodes, graph has {n}",
                    p.len()
                )));
            }
            for (v, &x) in p.iter().enumerate() {
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::Config(format!(
                        "normalized prediction {x} for node {v} outside [0,1]"
                    )));
                }
            }
            let leaning = p.iter().map(|&x| (x - 0.5).signum() * f64::from(x != 0.5)).collect();
            Ok(Thresholds::CfDerived { p: p.to_vec(), leaning })
        }
    }
}

/// Cascade configuration for one item.
#[derive(Debug, Clone)]
pub struct CascadeConfig {
    pub scale: RatingScale,
    pub threshold: ThresholdPolicy,
    /// Fixed-point search cap; defaults to the node count (a progressive
    /// process cannot take longer).
    pub max_steps: Option<usize>,
    /// Whether active-0 neighbors carry influence in the general process.
    pub zero_level_influences: bool,
}

impl CascadeConfig {
    pub fn new(scale: RatingScale, threshold: ThresholdPolicy) -> Self {
        CascadeConfig { scale, threshold, max_steps: None, zero_level_influences: false }
    }
}

/// State counts for one step of a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepCounts {
    pub inactive: usize,
    pub active: BTreeMap<i32, usize>,
    pub newly_activated: usize,
}

/// Per-step record of a cascade, plus the fixed-point state.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    steps: Vec<StepCounts>,
    final_states: StateVector,
    steps_to_convergence: usize,
    converged: bool,
}

impl SimulationTrace {
    pub fn steps(&self) -> &[StepCounts] {
        &self.steps
    }

    pub fn final_states(&self) -> &StateVector {
        &self.final_states
    }

    /// Number of steps in which at least one node activated.
    pub fn steps_to_convergence(&self) -> usize {
        self.steps_to_convergence
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// CSV export: step, per-state counts, newly activated.
    pub fn to_csv(&self) -> String {
        let levels = self.final_states.scale().active_levels();
        let mut out = String::from("step,inactive");
        for s in &levels {
            write!(out, ",active_{s}").unwrap();
        }
        out.push_str(",newly_activated\n");
        for (i, sc) in self.steps.iter().enumerate() {
            write!(out, "{i},{}", sc.inactive).unwrap();
            for s in &levels {
                write!(out, ",{}", sc.active.get(s).copied().unwrap_or(0)).unwrap();
            }
            writeln!(out, ",{}", sc.newly_activated).unwrap();
        }
        out
    }
}

fn counts_of(states: &StateVector, newly: usize) -> StepCounts {
    let mut active = BTreeMap::new();
    let mut inactive = 0;
    for s in states.states() {
        match s {
            NodeState::Inactive => inactive += 1,
            NodeState::Active { level, .. } => *active.entry(*level).or_insert(0) += 1,
        }
    }
    StepCounts { inactive, active, newly_activated: newly }
}

/// Signed weighted neighbor signal Σ_{w∈N(v)} b_vw · S_{w,i} for the binary
/// process; active-0 contributes 0.
fn binary_signal(graph: &SocialGraph, states: &StateVector, v: usize) -> f64 {
    graph
        .neighbors(v)
        .iter()
        .zip(graph.weights(v))
        .filter_map(|(&w, &b)| states.state(w).level().map(|s| b * f64::from(s.signum())))
        .sum()
}

/// One synchronous step of the binary process: an inactive node activates to
/// sign(σ) when |σ| meets its threshold and σ ≠ 0.
pub fn step_binary(
    graph: &SocialGraph,
    states: &StateVector,
    thresholds: &Thresholds,
) -> Result<StateVector> {
    if !states.scale().is_binary() {
        return Err(Error::Domain("step_binary requires the binary scale".to_string()));
    }
    let mut newly = Vec::new();
    for v in 0..states.len() {
        if states.state(v).is_active() {
            continue;
        }
        let sigma = binary_signal(graph, states, v);
        let theta = thresholds.value(v, sigma);
        if sigma != 0.0 && sigma.abs() >= theta {
            newly.push((v, if sigma > 0.0 { 1 } else { -1 }));
        }
    }
    Ok(states.advanced(&newly))
}

/// One synchronous step of the 1-to-R process: per level s, sum the signed
/// weighted contributions of neighbors at |level| = s, pick the level with
/// the largest absolute sum (ties break to the smaller level), and activate
/// when that sum meets the threshold.
pub fn step_general(
    graph: &SocialGraph,
    states: &StateVector,
    thresholds: &Thresholds,
    config: &CascadeConfig,
) -> Result<StateVector> {
    let scale = states.scale();
    if scale.is_binary() {
        return Err(Error::Domain("step_general requires a 1-to-R scale".to_string()));
    }
    let half = (scale.levels() / 2) as i32;
    let mut newly = Vec::new();
    for v in 0..states.len() {
        if states.state(v).is_active() {
            continue;
        }
        // (level magnitude, signed sum); scanned in ascending magnitude so a
        // strict comparison keeps the smaller level on ties
        let mut best: Option<(i32, f64)> = None;
        let lo = if config.zero_level_influences && scale.levels() % 2 == 1 { 0 } else { 1 };
        for s in lo..=half {
            let mut sum = 0.0;
            for (&w, &b) in graph.neighbors(v).iter().zip(graph.weights(v)) {
                if let Some(level) = states.state(w).level() {
                    if level.abs() == s {
                        sum += if s == 0 { b } else { b * f64::from(level.signum()) };
                    }
                }
            }
            if best.is_none_or(|(_, bs)| sum.abs() > bs.abs()) {
                best = Some((s, sum));
            }
        }
        if let Some((s, sum)) = best {
            let theta = thresholds.value(v, sum);
            if sum != 0.0 && sum.abs() >= theta {
                let level = if s == 0 { 0 } else { s * if sum > 0.0 { 1 } else { -1 } };
                newly.push((v, level));
            }
        }
    }
    Ok(states.advanced(&newly))
}

fn run_dynamics<F>(initial: &StateVector, max_steps: usize, mut step: F) -> Result<SimulationTrace>
where
    F: FnMut(&StateVector) -> Result<StateVector>,
{
    let mut steps = vec![counts_of(initial, initial.num_active())];
    let mut current = initial.clone();
    let mut productive = 0;
    let mut converged = false;
    for _ in 0..max_steps {
        let next = step(&current)?;
        let newly = next.num_active() - current.num_active();
        if newly == 0 {
            converged = true;
            break;
        }
        steps.push(counts_of(&next, newly));
        productive += 1;
        current = next;
    }
    if !converged {
        // a full sweep with no activation also means a fixed point
        let probe = step(&current)?;
        converged = probe.num_active() == current.num_active();
    }
    Ok(SimulationTrace {
        steps,
        final_states: current,
        steps_to_convergence: productive,
        converged,
    })
}

/// Run the threshold process from `initial` until a fixed point or
/// `config.max_steps`. Deterministic given (graph, initial, config, seed).
pub fn run_cascade(
    graph: &SocialGraph,
    initial: &StateVector,
    config: &CascadeConfig,
    cf_row: Option<&[f64]>,
    seed: u64,
) -> Result<SimulationTrace> {
    let thresholds = realize_thresholds(&config.threshold, graph, cf_row, seed)?;
    let max_steps = config.max_steps.unwrap_or(graph.num_nodes().max(1));
    if config.scale.is_binary() {
        run_dynamics(initial, max_steps, |s| step_binary(graph, s, &thresholds))
    } else {
        run_dynamics(initial, max_steps, |s| step_general(graph, s, &thresholds, config))
    }
}

/// Contagion prediction P^si for one node: the active sign on the binary
/// scale, the de-mapped rating on a 1-to-R scale, `None` while inactive.
pub fn si_prediction(trace: &SimulationTrace, node: usize, scale: RatingScale) -> Result<Option<i32>> {
    if node >= trace.final_states.len() {
        return Err(Error::Argument(format!("node {node} not in the simulated graph")));
    }
    match trace.final_states.state(node).level() {
        None => Ok(None),
        Some(level) if scale.is_binary() => Ok(Some(level)),
        Some(level) => Ok(Some(map_level_inverse(level, scale)?)),
    }
}

/// Map a 1-to-R rating onto its signed contagion level.
pub fn map_level(r: i32, scale: RatingScale) -> Result<i32> {
    if !scale.contains_rating(r) {
        return Err(Error::Domain(format!("rating {r} not on the scale")));
    }
    if scale.is_binary() {
        return Ok(r);
    }
    let big_r = scale.levels() as i32;
    let r_bar = if big_r % 2 == 1 {
        (big_r + 1) / 2
    } else if r > big_r / 2 {
        big_r / 2
    } else {
        big_r / 2 + 1
    };
    Ok(r - r_bar)
}

/// Inverse of `map_level`.
pub fn map_level_inverse(s: i32, scale: RatingScale) -> Result<i32> {
    if !scale.is_active_level(s) {
        return Err(Error::Domain(format!("level {s} not in the active-state set")));
    }
    if scale.is_binary() {
        return Ok(s);
    }
    let big_r = scale.levels() as i32;
    if big_r % 2 == 1 {
        Ok(s + (big_r + 1) / 2)
    } else if s > 0 {
        Ok(s + big_r / 2)
    } else {
        Ok(s + big_r / 2 + 1)
    }
}

/// Penalty an active strategy pays for each inactive neighbor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyRule {
    /// θ_v split evenly over the currently inactive neighbors, so the total
    /// penalty is exactly θ_v. The total is kept at θ_v even when no
    /// neighbor is inactive (the continuous extension), which is what makes
    /// best-response dynamics coincide with the threshold process.
    ThresholdSplit,
    /// A fixed penalty per inactive neighbor.
    PerInactive(f64),
}

/// Parameters of the three-strategy coordination game. `a` overrides the
/// pairwise payoff weights (aligned with each node's neighbor list); the
/// default is a_vw = b_vw.
#[derive(Debug, Clone, Default)]
pub struct GamePayoffParams {
    pub a: Option<Vec<Vec<f64>>>,
    pub penalty: Option<PenaltyRule>,
}

impl GamePayoffParams {
    fn penalty_total(&self, theta_v: f64, inactive_neighbors: usize) -> f64 {
        match self.penalty.unwrap_or(PenaltyRule::ThresholdSplit) {
            PenaltyRule::ThresholdSplit => theta_v,
            PenaltyRule::PerInactive(f) => f * inactive_neighbors as f64,
        }
    }

    fn a_weight(&self, graph: &SocialGraph, v: usize, pos: usize) -> f64 {
        match &self.a {
            Some(a) => a[v][pos],
            None => graph.weights(v)[pos],
        }
    }
}

/// Total payoffs (like, dislike, inactive) for node `v` against the current
/// states. Playing inactive always pays 0.
pub fn payoffs(
    graph: &SocialGraph,
    states: &StateVector,
    v: usize,
    params: &GamePayoffParams,
    theta_v: f64,
) -> Result<(f64, f64, f64)> {
    if !states.scale().is_binary() {
        return Err(Error::Domain("the coordination game is defined on the binary scale".to_string()));
    }
    let mut coord = 0.0;
    let mut inactive_neighbors = 0;
    for (pos, &w) in graph.neighbors(v).iter().enumerate() {
        match states.state(w).level() {
            Some(s) => coord += params.a_weight(graph, v, pos) * f64::from(s.signum()),
            None => inactive_neighbors += 1,
        }
    }
    let penalty = params.penalty_total(theta_v, inactive_neighbors);
    Ok((coord - penalty, -coord - penalty, 0.0))
}

/// Synchronous best-response dynamics of the coordination game, restricted to
/// inactive nodes (the process stays progressive). With default parameters
/// the trace coincides step for step with `run_cascade` on the binary scale.
pub fn best_response_dynamics(
    graph: &SocialGraph,
    initial: &StateVector,
    params: &GamePayoffParams,
    thresholds: &Thresholds,
    max_steps: usize,
) -> Result<SimulationTrace> {
    if !initial.scale().is_binary() {
        return Err(Error::Domain("best-response dynamics require the binary scale".to_string()));
    }
    run_dynamics(initial, max_steps, |states| {
        let mut newly = Vec::new();
        for v in 0..states.len() {
            if states.state(v).is_active() {
                continue;
            }
            let sigma = binary_signal(graph, states, v);
            let theta = thresholds.value(v, sigma);
            let (p_like, p_dislike, p_inactive) = payoffs(graph, states, v, params, theta)?;
            let best_active = p_like.max(p_dislike);
            // ties go to inactive between ±1 (only at σ = 0), to active
            // against inactive (mirrors the ≥ in the threshold rule)
            if best_active >= p_inactive && p_like != p_dislike {
                newly.push((v, if p_like > p_dislike { 1 } else { -1 }));
            }
        }
        Ok(states.advanced(&newly))
    })
}

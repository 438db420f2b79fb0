//! Python bindings: ratings tables, social graphs, CF predictions, blended
//! recommendations, group equilibria, and the simulation harness.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use socirec::blend;
use socirec::cf::{self, Neighborhood, SimilarityMatrix};
use socirec::contagion::{CascadeConfig, ThresholdPolicy};
use socirec::experiments::{self, ExperimentSpec};
use socirec::group::{self, AggregationRule, SolveMethod};
use socirec::model::{RatingScale, SusceptibilityProfile, WeightMode};
use socirec::netgen::{self, WattsStrogatzParams};

fn err(e: socirec::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn scale(levels: u32) -> PyResult<RatingScale> {
    RatingScale::new(levels).map_err(err)
}

fn parse_weight_mode(mode: &str) -> PyResult<WeightMode> {
    match mode {
        "given" => Ok(WeightMode::Given),
        "uniform" => Ok(WeightMode::Uniform),
        "random_partition" => Ok(WeightMode::RandomPartition),
        other => Err(PyValueError::new_err(format!("unknown weight mode `{other}`"))),
    }
}

fn parse_threshold(spec: &str) -> PyResult<ThresholdPolicy> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| PyValueError::new_err(format!("bad threshold number `{s}`")))
    };
    match parts.as_slice() {
        ["constant", c] => Ok(ThresholdPolicy::Constant(num(c)?)),
        ["uniform", lo, hi] => Ok(ThresholdPolicy::Uniform { lo: num(lo)?, hi: num(hi)? }),
        ["cf"] => Ok(ThresholdPolicy::CfDerived),
        _ => Err(PyValueError::new_err(format!("unknown threshold policy `{spec}`"))),
    }
}

/// Sparse user-item rating table on a 1..R scale.
#[pyclass]
struct RatingsTable {
    inner: socirec::RatingsTable,
}

#[pymethods]
impl RatingsTable {
    #[new]
    #[pyo3(signature = (levels=5))]
    fn new(levels: u32) -> PyResult<Self> {
        Ok(RatingsTable { inner: socirec::RatingsTable::new(scale(levels)?) })
    }

    #[staticmethod]
    #[pyo3(signature = (path, levels=5))]
    fn load(path: PathBuf, levels: u32) -> PyResult<Self> {
        Ok(RatingsTable { inner: socirec::RatingsTable::load(&path, scale(levels)?).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (text, levels=5))]
    fn parse(text: &str, levels: u32) -> PyResult<Self> {
        Ok(RatingsTable { inner: socirec::RatingsTable::parse(text, scale(levels)?).map_err(err)? })
    }

    fn insert(&mut self, user: &str, item: &str, rating: i32) -> PyResult<()> {
        self.inner.insert(user, item, rating).map_err(err)
    }

    fn rating(&self, user: &str, item: &str) -> Option<i32> {
        let u = self.inner.user_index(user)?;
        let i = self.inner.item_index(item)?;
        self.inner.rating(u, i)
    }

    fn users(&self) -> Vec<String> {
        self.inner.users().to_vec()
    }

    fn items(&self) -> Vec<String> {
        self.inner.items().to_vec()
    }

    fn num_entries(&self) -> usize {
        self.inner.num_entries()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    /// Pearson similarity over the co-rated set; None when undefined.
    #[pyo3(signature = (u, v, min_overlap=2))]
    fn pearson(&self, u: &str, v: &str, min_overlap: usize) -> PyResult<Option<f64>> {
        let iu = self.user_idx(u)?;
        let iv = self.user_idx(v)?;
        cf::pearson(&self.inner, iu, iv, min_overlap).map_err(err)
    }

    /// CF prediction for `user` on `item`, clamped to the rating scale.
    #[pyo3(signature = (user, item, min_overlap=2, top_k=None))]
    fn predict(&self, user: &str, item: &str, min_overlap: usize, top_k: Option<usize>) -> PyResult<f64> {
        let u = self.user_idx(user)?;
        let i = self
            .inner
            .item_index(item)
            .ok_or_else(|| PyValueError::new_err(format!("unknown item `{item}`")))?;
        let sims = SimilarityMatrix::build(&self.inner, min_overlap).map_err(err)?;
        let hood = match top_k {
            None => Neighborhood::All,
            Some(k) => Neighborhood::Top(k),
        };
        cf::predict_cf(&self.inner, &sims, u, i, hood, true).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.num_entries()
    }
}

impl RatingsTable {
    fn user_idx(&self, user: &str) -> PyResult<usize> {
        self.inner
            .user_index(user)
            .ok_or_else(|| PyValueError::new_err(format!("unknown user `{user}`")))
    }
}

/// Undirected friendship graph with per-node normalized influence weights.
#[pyclass]
struct SocialGraph {
    inner: socirec::SocialGraph,
}

#[pymethods]
impl SocialGraph {
    #[staticmethod]
    #[pyo3(signature = (path, weight_mode="random_partition", seed=42))]
    fn load(path: PathBuf, weight_mode: &str, seed: u64) -> PyResult<Self> {
        let mode = parse_weight_mode(weight_mode)?;
        Ok(SocialGraph { inner: socirec::SocialGraph::load(&path, mode, seed).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (text, weight_mode="random_partition", seed=42))]
    fn parse(text: &str, weight_mode: &str, seed: u64) -> PyResult<Self> {
        let mode = parse_weight_mode(weight_mode)?;
        Ok(SocialGraph { inner: socirec::SocialGraph::parse(text, mode, seed).map_err(err)? })
    }

    /// Watts-Strogatz small-world graph: ring lattice of degree `k`, each
    /// edge rewired with probability `p`.
    #[staticmethod]
    #[pyo3(signature = (n, k, p=0.1, seed=42, weight_mode="random_partition"))]
    fn watts_strogatz(n: usize, k: usize, p: f64, seed: u64, weight_mode: &str) -> PyResult<Self> {
        let g = netgen::watts_strogatz(&WattsStrogatzParams { n, k, p, seed }).map_err(err)?;
        let g = netgen::assign_influence(&g, parse_weight_mode(weight_mode)?, seed).map_err(err)?;
        Ok(SocialGraph { inner: g })
    }

    fn num_nodes(&self) -> usize {
        self.inner.num_nodes()
    }

    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    fn nodes(&self) -> Vec<String> {
        self.inner.nodes().to_vec()
    }

    fn neighbors(&self, node: &str) -> PyResult<Vec<(String, f64)>> {
        let v = self
            .inner
            .node_index(node)
            .ok_or_else(|| PyValueError::new_err(format!("unknown node `{node}`")))?;
        Ok(self
            .inner
            .neighbors(v)
            .iter()
            .zip(self.inner.weights(v))
            .map(|(&w, &b)| (self.inner.nodes()[w].clone(), b))
            .collect())
    }
}

/// One blended recommendation row.
#[pyclass]
struct Recommendation {
    #[pyo3(get)]
    item: String,
    #[pyo3(get)]
    score: f64,
    #[pyo3(get)]
    p_cf: f64,
    #[pyo3(get)]
    p_si: Option<f64>,
    #[pyo3(get)]
    alpha: f64,
}

#[pymethods]
impl Recommendation {
    fn __repr__(&self) -> String {
        format!(
            "Recommendation(item='{}', score={:.3}, p_cf={:.3}, p_si={:?}, alpha={})",
            self.item, self.score, self.p_cf, self.p_si, self.alpha
        )
    }
}

/// Top-k items for `user`, blending the CF prediction with a per-item
/// social-contagion cascade by susceptibility `alpha`.
#[pyfunction]
#[pyo3(signature = (table, graph, user, k=10, alpha=0.5, threshold="cf", min_overlap=2, seed=42))]
#[allow(clippy::too_many_arguments)]
fn recommend(
    table: &RatingsTable,
    graph: &SocialGraph,
    user: &str,
    k: usize,
    alpha: f64,
    threshold: &str,
    min_overlap: usize,
    seed: u64,
) -> PyResult<Vec<Recommendation>> {
    let sims = SimilarityMatrix::build(&table.inner, min_overlap).map_err(err)?;
    let config = CascadeConfig::new(table.inner.scale(), parse_threshold(threshold)?);
    let alphas = SusceptibilityProfile::uniform(alpha).map_err(err)?;
    let recs = blend::recommend_top_k(user, k, &table.inner, &sims, &graph.inner, &config, &alphas, seed)
        .map_err(err)?;
    Ok(recs
        .into_iter()
        .map(|r| Recommendation {
            item: r.item,
            score: r.score,
            p_cf: r.p_cf,
            p_si: r.p_si,
            alpha: r.alpha,
        })
        .collect())
}

/// Settled group opinions and the aggregated group score.
#[pyclass]
struct GroupResult {
    #[pyo3(get)]
    settled: Vec<f64>,
    #[pyo3(get)]
    score: f64,
    #[pyo3(get)]
    residual: f64,
}

#[pymethods]
impl GroupResult {
    fn __repr__(&self) -> String {
        format!("GroupResult(score={:.3}, settled={:?})", self.score, self.settled)
    }
}

/// Solve the group influence equilibrium P = AWP + (I-A)P1 and aggregate.
#[pyfunction]
#[pyo3(signature = (alphas, influence, initial, levels=5, method="direct", rule="mean"))]
fn group_equilibrium(
    alphas: Vec<f64>,
    influence: Vec<Vec<f64>>,
    initial: Vec<f64>,
    levels: u32,
    method: &str,
    rule: &str,
) -> PyResult<GroupResult> {
    let n = alphas.len();
    if influence.len() != n || influence.iter().any(|row| row.len() != n) || initial.len() != n {
        return Err(PyValueError::new_err(format!("alphas, influence, and initial must all be {n}-sized")));
    }
    let w = DMatrix::from_fn(n, n, |r, c| influence[r][c]);
    let members = (0..n).map(|i| format!("m{i}")).collect();
    let mut sys = group::GroupSystem::new(members, alphas, w, scale(levels)?).map_err(err)?;
    sys.set_initial("item", DVector::from_vec(initial)).map_err(err)?;
    let method = match method {
        "direct" => SolveMethod::Direct,
        "iterative" => SolveMethod::Iterative,
        other => return Err(PyValueError::new_err(format!("unknown method `{other}`"))),
    };
    let rule = match rule {
        "mean" => AggregationRule::Mean,
        "min" => AggregationRule::Min,
        "max" => AggregationRule::Max,
        other => return Err(PyValueError::new_err(format!("unknown aggregation rule `{other}`"))),
    };
    let eq = group::solve_equilibrium(&sys, "item", method, 1e-10, 10_000).map_err(err)?;
    let score = group::aggregate(&eq.settled, rule).map_err(err)?;
    Ok(GroupResult { settled: eq.settled.iter().copied().collect(), score, residual: eq.residual })
}

/// Per-ratio summary of a contagion experiment sweep.
#[pyclass]
struct RatioSummary {
    #[pyo3(get)]
    ratio: f64,
    #[pyo3(get)]
    mean_majority_frac: f64,
    #[pyo3(get)]
    mean_minority_frac: f64,
    #[pyo3(get)]
    mean_inactive_frac: f64,
    #[pyo3(get)]
    mean_iterations: f64,
}

#[pymethods]
impl RatioSummary {
    fn __repr__(&self) -> String {
        format!(
            "RatioSummary(ratio={}, majority={:.3}, minority={:.3}, inactive={:.3}, iterations={:.2})",
            self.ratio,
            self.mean_majority_frac,
            self.mean_minority_frac,
            self.mean_inactive_frac,
            self.mean_iterations
        )
    }
}

/// Replicated binary-contagion sweep on fresh Watts-Strogatz networks.
#[pyfunction]
#[pyo3(signature = (ratios, n=1000, k=10, p=0.1, threshold="constant:0.1", p_like=0.7, replicates=500, seed=42))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    ratios: Vec<f64>,
    n: usize,
    k: usize,
    p: f64,
    threshold: &str,
    p_like: f64,
    replicates: usize,
    seed: u64,
) -> PyResult<Vec<RatioSummary>> {
    let spec = ExperimentSpec {
        network: WattsStrogatzParams { n, k, p, seed },
        threshold: parse_threshold(threshold)?,
        initial_active_ratios: ratios,
        p_like,
        replicates,
        master_seed: seed,
        fixed_network: false,
    };
    let result = experiments::run_experiment(&spec).map_err(err)?;
    Ok(result
        .ratios
        .iter()
        .map(|r| RatioSummary {
            ratio: r.ratio,
            mean_majority_frac: r.mean_majority_frac(),
            mean_minority_frac: r.mean_minority_frac(),
            mean_inactive_frac: r.mean_inactive_frac(),
            mean_iterations: r.mean_iterations(),
        })
        .collect())
}

#[pymodule]
fn socirec_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<RatingsTable>()?;
    m.add_class::<SocialGraph>()?;
    m.add_class::<Recommendation>()?;
    m.add_class::<GroupResult>()?;
    m.add_class::<RatioSummary>()?;
    m.add_function(wrap_pyfunction!(recommend, m)?)?;
    m.add_function(wrap_pyfunction!(group_equilibrium, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}

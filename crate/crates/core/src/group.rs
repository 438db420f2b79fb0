//! Group recommendation: opinion evolution under interpersonal influence,
//! its equilibrium, and preference aggregation.
//!
//! The dynamics are P⁽ᵗ⁾ = A·W·P⁽ᵗ⁻¹⁾ + (I−A)·P⁽¹⁾ with diagonal
//! susceptibilities A and a row-stochastic influence matrix W; the settled
//! opinions are P⁽∞⁾ = (I−AW)⁻¹(I−A)·P⁽¹⁾ when I−AW is nonsingular.

use std::cmp::Ordering;
use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::cf::{self, Neighborhood, SimilarityMatrix};
use crate::error::{Error, Result};
use crate::model::{RatingScale, RatingsTable};

pub const RESIDUAL_TOL: f64 = 1e-8;
const ROW_SUM_TOL: f64 = 1e-6;
const CONDITION_LIMIT: f64 = 1e12;

/// A group of members with susceptibilities, an interpersonal influence
/// matrix, and per-item initial opinions.
#[derive(Debug, Clone)]
pub struct GroupSystem {
    members: Vec<String>,
    alphas: Vec<f64>,
    influence: DMatrix<f64>,
    initial: HashMap<String, DVector<f64>>,
    scale: RatingScale,
}

impl GroupSystem {
    /// Validates the susceptibilities and row-normalizes `influence`; rows
    /// off by more than 1e-6 are rejected.
    pub fn new(
        members: Vec<String>,
        alphas: Vec<f64>,
        influence: DMatrix<f64>,
        scale: RatingScale,
    ) -> Result<Self> {
        let n = members.len();
        if n == 0 {
            return Err(Error::Argument("a group needs at least one member".to_string()));
        }
        if alphas.len() != n || influence.nrows() != n || influence.ncols() != n {
            return Err(Error::Argument(format!(
                "dimension mismatch: {} members, {} susceptibilities, {}x{} influence matrix",
                n,
                alphas.len(),
                influence.nrows(),
                influence.ncols()
            )));
        }
        for (i, &a) in alphas.iter().enumerate() {
            if !(0.0..=1.0).contains(&a) || a.is_nan() {
                return Err(Error::Domain(format!(
                    "susceptibility {a} of `{}` outside [0,1]",
                    members[i]
                )));
            }
        }
        let mut influence = influence;
        for r in 0..n {
            let mut sum = 0.0;
            for c in 0..n {
                let w = influence[(r, c)];
                if !(0.0..=1.0).contains(&w) || w.is_nan() {
                    return Err(Error::Domain(format!(
                        "influence weight {w} in row {} outside [0,1]",
                        r + 1
                    )));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Normalization(format!(
                    "influence row {} sums to {sum}, expected 1",
                    r + 1
                )));
            }
            for c in 0..n {
                influence[(r, c)] /= sum;
            }
        }
        Ok(GroupSystem {
            members,
            alphas,
            influence,
            initial: HashMap::new(),
            scale,
        })
    }

    pub fn members(&self) -> &[String] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn influence(&self) -> &DMatrix<f64> {
        &self.influence
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    /// Register the initial opinion vector for one item.
    pub fn set_initial(&mut self, item: &str, p1: DVector<f64>) -> Result<()> {
        if p1.len() != self.len() {
            return Err(Error::Argument(format!(
                "initial opinions for `{item}` have length {}, group has {}",
                p1.len(),
                self.len()
            )));
        }
        for &x in p1.iter() {
            if x < self.scale.min_value() - 1e-9 || x > self.scale.max_value() + 1e-9 {
                return Err(Error::Domain(format!(
                    "initial opinion {x} for `{item}` outside the rating scale"
                )));
            }
        }
        self.initial.insert(item.to_string(), p1);
        Ok(())
    }

    pub fn initial(&self, item: &str) -> Option<&DVector<f64>> {
        self.initial.get(item)
    }

    pub fn items(&self) -> Vec<String> {
        let mut items: Vec<String> = self.initial.keys().cloned().collect();
        items.sort();
        items
    }

    fn aw(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut aw = self.influence.clone();
        for r in 0..n {
            for c in 0..n {
                aw[(r, c)] *= self.alphas[r];
            }
        }
        aw
    }
}

/// Solver route for the equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    Iterative,
}

/// Settled opinions for one item, with the total-influence matrix when the
/// direct route was taken.
#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub settled: DVector<f64>,
    pub total_influence: Option<DMatrix<f64>>,
    pub method: SolveMethod,
    pub iterations: Option<usize>,
    pub residual: f64,
}

/// One step of the influence dynamics: A·W·p + (I−A)·P⁽¹⁾.
pub fn evolve_step(sys: &GroupSystem, item: &str, p_prev: &DVector<f64>) -> Result<DVector<f64>> {
    let p1 = sys
        .initial(item)
        .ok_or_else(|| Error::Argument(format!("no initial opinions for item `{item}`")))?;
    if p_prev.len() != sys.len() {
        return Err(Error::Argument(format!(
            "opinion vector has length {}, group has {}",
            p_prev.len(),
            sys.len()
        )));
    }
    let mut out = sys.aw() * p_prev;
    for i in 0..sys.len() {
        out[i] += (1.0 - sys.alphas()[i]) * p1[i];
    }
    Ok(out)
}

fn residual_norm(sys: &GroupSystem, item: &str, p: &DVector<f64>) -> Result<f64> {
    let step = evolve_step(sys, item, p)?;
    Ok((p - step).amax())
}

/// ∞-norm (maximum absolute row sum).
fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solve for the settled opinions on `item`. The direct route solves
/// (I−AW)x = (I−A)P⁽¹⁾ and also returns V = (I−AW)⁻¹(I−A); the iterative
/// route applies `evolve_step` to a fixed point.
pub fn solve_equilibrium(
    sys: &GroupSystem,
    item: &str,
    method: SolveMethod,
    tol: f64,
    max_iter: usize,
) -> Result<EquilibriumResult> {
    let p1 = sys
        .initial(item)
        .ok_or_else(|| Error::Argument(format!("no initial opinions for item `{item}`")))?
        .clone();
    let n = sys.len();
    match method {
        SolveMethod::Direct => {
            let m = DMatrix::identity(n, n) - sys.aw();
            let m_norm = inf_norm(&m);
            let inv = m
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Singular("I - AW is not invertible".to_string()))?;
            let inv_norm = inf_norm(&inv);
            if m_norm * inv_norm > CONDITION_LIMIT {
                return Err(Error::Singular(format!(
                    "condition estimate {:.3e} exceeds {CONDITION_LIMIT:.0e}",
                    m_norm * inv_norm
                )));
            }
            let mut i_minus_a = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                i_minus_a[(i, i)] = 1.0 - sys.alphas()[i];
            }
            let total = &inv * i_minus_a;
            let settled = &total * &p1;
            let residual = residual_norm(sys, item, &settled)?;
            if residual > RESIDUAL_TOL {
                return Err(Error::Singular(format!(
                    "direct solve residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}"
                )));
            }
            Ok(EquilibriumResult {
                settled,
                total_influence: Some(total),
                method,
                iterations: None,
                residual,
            })
        }
        SolveMethod::Iterative => {
            let mut p = p1.clone();
            for it in 1..=max_iter {
                let next = evolve_step(sys, item, &p)?;
                let delta = (&next - &p).amax();
                p = next;
                if delta < tol {
                    let residual = residual_norm(sys, item, &p)?;
                    if residual > RESIDUAL_TOL {
                        return Err(Error::NonConvergence { max_iter: it, residual });
                    }
                    return Ok(EquilibriumResult {
                        settled: p,
                        total_influence: None,
                        method,
                        iterations: Some(it),
                        residual,
                    });
                }
            }
            let residual = residual_norm(sys, item, &p)?;
            Err(Error::NonConvergence { max_iter, residual })
        }
    }
}

/// Aggregation rule over settled member opinions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationRule {
    Mean,
    /// Least-misery: the minimum member opinion.
    Min,
    /// Most-pleasure: the maximum member opinion.
    Max,
}

pub fn aggregate(opinions: &DVector<f64>, rule: AggregationRule) -> Result<f64> {
    if opinions.is_empty() {
        return Err(Error::Argument("cannot aggregate an empty opinion vector".to_string()));
    }
    Ok(match rule {
        AggregationRule::Mean => opinions.sum() / opinions.len() as f64,
        AggregationRule::Min => opinions.min(),
        AggregationRule::Max => opinions.max(),
    })
}

/// How per-item initial opinions are assembled from data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialOpinionRule {
    /// Use opinions already registered on the system.
    Explicit,
    /// Existing rating preferred, CF prediction fallback.
    Mixed,
    /// Always the CF prediction, even for already-rated items.
    PredictedOnly,
}

/// Assemble P⁽¹⁾ for one item from the ratings table per the chosen rule.
pub fn assemble_initial(
    members: &[String],
    item: &str,
    rule: InitialOpinionRule,
    table: &RatingsTable,
    sims: &SimilarityMatrix,
) -> Result<DVector<f64>> {
    let item_idx = table
        .item_index(item)
        .ok_or_else(|| Error::Argument(format!("unknown item `{item}`")))?;
    let mut out = DVector::zeros(members.len());
    for (pos, member) in members.iter().enumerate() {
        let missing = || Error::Assembly { user: member.clone(), item: item.to_string() };
        let u = table.user_index(member).ok_or_else(missing)?;
        let existing = table.rating(u, item_idx).map(f64::from);
        let value = match rule {
            InitialOpinionRule::Explicit => {
                return Err(Error::Argument(
                    "explicit initial opinions are registered via set_initial".to_string(),
                ))
            }
            InitialOpinionRule::Mixed => match existing {
                Some(r) => r,
                None => cf::predict_cf(table, sims, u, item_idx, Neighborhood::All, true)
                    .map_err(|_| missing())?,
            },
            InitialOpinionRule::PredictedOnly => {
                cf::predict_cf(table, sims, u, item_idx, Neighborhood::All, true)
                    .map_err(|_| missing())?
            }
        };
        out[pos] = value;
    }
    Ok(out)
}

/// One ranked group candidate.
#[derive(Debug, Clone)]
pub struct GroupRecommendation {
    pub item: String,
    pub score: f64,
    pub settled: DVector<f64>,
    pub initial: DVector<f64>,
}

/// Rank candidate items by aggregated settled opinion, descending, ties by
/// item id ascending, truncated to `k`.
pub fn group_recommend(
    sys: &GroupSystem,
    items: &[String],
    rule: AggregationRule,
    k: usize,
) -> Result<Vec<GroupRecommendation>> {
    if k == 0 {
        return Err(Error::Argument("k must be at least 1".to_string()));
    }
    let mut out = Vec::new();
    for item in items {
        let initial = sys
            .initial(item)
            .ok_or_else(|| Error::Argument(format!("no initial opinions for item `{item}`")))?
            .clone();
        let eq = solve_equilibrium(sys, item, SolveMethod::Direct, 1e-10, 10_000)?;
        let score = aggregate(&eq.settled, rule)?;
        out.push(GroupRecommendation { item: item.clone(), score, settled: eq.settled, initial });
    }
    out.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.item.cmp(&b.item))
    });
    out.truncate(k);
    Ok(out)
}

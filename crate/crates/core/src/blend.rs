//! Individual recommendation: combine the CF prediction with the contagion
//! outcome through each user's susceptibility and rank the results.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::cf::{self, Neighborhood, SimilarityMatrix};
use crate::contagion::{self, CascadeConfig, ThresholdPolicy};
use crate::error::{Error, Result};
use crate::model::{RatingsTable, SocialGraph, StateVector, SusceptibilityProfile};
use crate::seeds;

/// One scored candidate item.
#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub item: String,
    pub score: f64,
    pub p_cf: f64,
    /// `None` when the cascade left the target inactive.
    pub p_si: Option<f64>,
    pub alpha: f64,
}

/// (1 - α)·P^cf + α·P^si, or P^cf alone when the contagion outcome is the
/// inactive marker.
pub fn blend(p_cf: f64, p_si: Option<f64>, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) || alpha.is_nan() {
        return Err(Error::Domain(format!("susceptibility {alpha} outside [0,1]")));
    }
    Ok(match p_si {
        None => p_cf,
        Some(si) => (1.0 - alpha) * p_cf + alpha * si,
    })
}

/// Rank the top-k unrated items for `user`: per-item cascades seeded by
/// existing raters, blended with the CF prediction. Ties break by item id
/// ascending. Per-item cascades draw sub-seeds from `(seed, item index)`.
#[allow(clippy::too_many_arguments)]
pub fn recommend_top_k(
    user: &str,
    k: usize,
    table: &RatingsTable,
    sims: &SimilarityMatrix,
    graph: &SocialGraph,
    config: &CascadeConfig,
    alphas: &SusceptibilityProfile,
    seed: u64,
) -> Result<Vec<Recommendation>> {
    if k == 0 {
        return Err(Error::Argument("k must be at least 1".to_string()));
    }
    let u = table
        .user_index(user)
        .ok_or_else(|| Error::Argument(format!("unknown user `{user}`")))?;
    let target_node = graph.node_index(user);
    let alpha = alphas.alpha(user);
    let scale = table.scale();

    let rated: Vec<usize> = table.ratings_of(u).iter().map(|&(i, _)| i).collect();
    let mut recs: Vec<Recommendation> = Vec::new();
    for item in 0..table.num_items() {
        if rated.contains(&item) {
            continue;
        }
        let p_cf = cf::predict_cf(table, sims, u, item, Neighborhood::All, true)?;

        let p_si = match target_node {
            None => None,
            Some(node) => {
                let trace = run_item_cascade(table, sims, graph, config, item, seed)?;
                contagion::si_prediction(&trace, node, scale)?.map(f64::from)
            }
        };
        let score = blend(p_cf, p_si, alpha)?;
        recs.push(Recommendation {
            item: table.items()[item].clone(),
            score,
            p_cf,
            p_si,
            alpha,
        });
    }
    recs.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.item.cmp(&b.item))
    });
    recs.truncate(k);
    Ok(recs)
}

/// Cascade for one item, seeded by every graph node with an existing rating.
pub fn run_item_cascade(
    table: &RatingsTable,
    sims: &SimilarityMatrix,
    graph: &SocialGraph,
    config: &CascadeConfig,
    item: usize,
    seed: u64,
) -> Result<contagion::SimulationTrace> {
    let scale = table.scale();
    let mut initial = StateVector::new(&table.items()[item], scale, graph.num_nodes());
    for &(rater, rating) in table.raters_of(item) {
        if let Some(node) = graph.node_index(&table.users()[rater]) {
            let level =
                if scale.is_binary() { rating } else { contagion::map_level(rating, scale)? };
            initial.seed(node, level)?;
        }
    }
    let cf_row = match config.threshold {
        ThresholdPolicy::CfDerived => Some(normalized_cf_row(table, sims, graph, item)?),
        _ => None,
    };
    let item_seed = seeds::derive_seed(seed, &[item as u64]);
    contagion::run_cascade(graph, &initial, config, cf_row.as_deref(), item_seed)
}

/// Normalized CF predictions per graph node for threshold derivation. Nodes
/// without a defined prediction fall back to their mean (or the scale
/// midpoint for unknown users), normalized into [0,1].
fn normalized_cf_row(
    table: &RatingsTable,
    sims: &SimilarityMatrix,
    graph: &SocialGraph,
    item: usize,
) -> Result<Vec<f64>> {
    let scale = table.scale();
    let mut row = Vec::with_capacity(graph.num_nodes());
    for name in graph.nodes() {
        let p = match table.user_index(name) {
            Some(v) => cf::predict_cf(table, sims, v, item, Neighborhood::All, true)
                .unwrap_or(scale.midpoint()),
            None => scale.midpoint(),
        };
        row.push(scale.normalize(p));
    }
    Ok(row)
}

/// CSV export: `rank,item_id,score,p_cf,p_si,alpha` with scores rounded to
/// two decimals for display.
pub fn recommendations_to_csv(recs: &[Recommendation]) -> String {
    let mut out = String::from("rank,item_id,score,p_cf,p_si,alpha\n");
    for (i, r) in recs.iter().enumerate() {
        let p_si = r.p_si.map_or("inactive".to_string(), |x| format!("{x:.2}"));
        writeln!(
            out,
            "{},{},{:.2},{:.2},{},{}",
            i + 1,
            r.item,
            r.score,
            r.p_cf,
            p_si,
            r.alpha
        )
        .unwrap();
    }
    out
}

//! User-based collaborative filtering: Pearson similarity over co-rated
//! items and mean-centered weighted-sum prediction.
//!
//! Two different means are in play. Similarity centers each user on the mean
//! of the co-rated set only; prediction centers each rater on their global
//! mean.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::RatingsTable;

pub const DEFAULT_MIN_OVERLAP: usize = 2;

/// Sparse symmetric user-user similarity store. Entries are absent when the
/// co-rated set is too small or either centered vector has zero norm.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    sims: HashMap<(usize, usize), f64>,
    min_overlap: usize,
}

fn key(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl SimilarityMatrix {
    /// Compute every defined pairwise similarity in `table`.
    pub fn build(table: &RatingsTable, min_overlap: usize) -> Result<Self> {
        let mut sims = HashMap::new();
        let n = table.num_users();
        for u in 0..n {
            for v in (u + 1)..n {
                if let Some(w) = pearson(table, u, v, min_overlap)? {
                    sims.insert((u, v), w);
                }
            }
        }
        Ok(SimilarityMatrix { sims, min_overlap })
    }

    pub fn min_overlap(&self) -> usize {
        self.min_overlap
    }

    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        self.sims.get(&key(u, v)).copied()
    }

    pub fn len(&self) -> usize {
        self.sims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sims.is_empty()
    }

    /// `u,v,w` cache lines, sorted so a save/load cycle is bit-identical.
    pub fn to_text(&self, table: &RatingsTable) -> String {
        let mut pairs: Vec<(&(usize, usize), &f64)> = self.sims.iter().collect();
        pairs.sort_by_key(|(k, _)| **k);
        let mut out = String::new();
        for (&(u, v), &w) in pairs {
            writeln!(out, "{},{},{}", table.users()[u], table.users()[v], w).unwrap();
        }
        out
    }

    pub fn save(&self, path: &Path, table: &RatingsTable) -> Result<()> {
        std::fs::write(path, self.to_text(table))?;
        Ok(())
    }

    pub fn load(path: &Path, table: &RatingsTable, min_overlap: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut sims = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected `u,v,w`, got `{line}`"),
                });
            }
            let u = table
                .user_index(parts[0])
                .ok_or_else(|| Error::Argument(format!("unknown user `{}`", parts[0])))?;
            let v = table
                .user_index(parts[1])
                .ok_or_else(|| Error::Argument(format!("unknown user `{}`", parts[1])))?;
            let w: f64 = parts[2].parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("bad similarity `{}`", parts[2]),
            })?;
            sims.insert(key(u, v), w);
        }
        Ok(SimilarityMatrix { sims, min_overlap })
    }
}

/// Pearson correlation between users `u` and `v` over their co-rated items,
/// with means taken over the co-rated set. `None` when the overlap is below
/// `min_overlap` or either centered vector has zero norm.
pub fn pearson(
    table: &RatingsTable,
    u: usize,
    v: usize,
    min_overlap: usize,
) -> Result<Option<f64>> {
    if u == v {
        return Err(Error::Argument("pearson requires two distinct users".to_string()));
    }
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for &(item, ru) in table.ratings_of(u) {
        if let Some(rv) = table.rating(v, item) {
            pairs.push((f64::from(ru), f64::from(rv)));
        }
    }
    if pairs.len() < min_overlap {
        return Ok(None);
    }
    let n = pairs.len() as f64;
    let mu: f64 = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mv: f64 = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut du = 0.0;
    let mut dv = 0.0;
    for &(a, b) in &pairs {
        num += (a - mu) * (b - mv);
        du += (a - mu) * (a - mu);
        dv += (b - mv) * (b - mv);
    }
    if du == 0.0 || dv == 0.0 {
        return Ok(None);
    }
    Ok(Some(num / (du.sqrt() * dv.sqrt())))
}

/// Neighborhood restriction for the weighted-sum prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighborhood {
    /// Every user with a defined similarity contributes.
    All,
    /// Only the top-k raters by |similarity|.
    Top(usize),
}

/// Weighted-sum prediction for user `u` on item `i`: the user's global mean
/// plus the similarity-weighted average of globally-mean-centered ratings of
/// users who rated `i`. Falls back to the user's mean when no rater has a
/// defined similarity; clamped to the scale range when `clamp` is set.
pub fn predict_cf(
    table: &RatingsTable,
    sims: &SimilarityMatrix,
    u: usize,
    item: usize,
    neighborhood: Neighborhood,
    clamp: bool,
) -> Result<f64> {
    if u >= table.num_users() {
        return Err(Error::UndefinedPrediction(format!("#{u}"), "unknown user".to_string()));
    }
    let mean_u = table
        .user_mean(u)
        .map_err(|_| Error::UndefinedPrediction(table.users()[u].clone(), "no ratings".to_string()))?;

    let mut contribs: Vec<(f64, f64)> = Vec::new(); // (w_uv, r_vi - mean_v)
    for &(v, rvi) in table.raters_of(item) {
        if v == u {
            continue;
        }
        if let Some(w) = sims.get(u, v) {
            let mean_v = table.user_mean(v)?;
            contribs.push((w, f64::from(rvi) - mean_v));
        }
    }
    if let Neighborhood::Top(k) = neighborhood {
        contribs.sort_by(|a, b| b.0.abs().partial_cmp(&a.0.abs()).unwrap());
        contribs.truncate(k);
    }
    let denom: f64 = contribs.iter().map(|c| c.0.abs()).sum();
    let p = if denom == 0.0 {
        mean_u
    } else {
        mean_u + contribs.iter().map(|c| c.0 * c.1).sum::<f64>() / denom
    };
    Ok(if clamp { table.scale().clamp(p) } else { p })
}

/// Predictions for every item `u` has not rated, as (item index, prediction).
pub fn predict_all(
    table: &RatingsTable,
    sims: &SimilarityMatrix,
    u: usize,
    neighborhood: Neighborhood,
) -> Result<Vec<(usize, f64)>> {
    let rated: Vec<usize> = table.ratings_of(u).iter().map(|&(i, _)| i).collect();
    let mut out = Vec::new();
    for item in 0..table.num_items() {
        if rated.contains(&item) {
            continue;
        }
        out.push((item, predict_cf(table, sims, u, item, neighborhood, true)?));
    }
    Ok(out)
}

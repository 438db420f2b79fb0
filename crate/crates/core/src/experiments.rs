//! Seeded experiment harness for the binary contagion simulation study:
//! sweeps over threshold regimes and initial activation ratios, replicate
//! averaging, and plot-ready CSV export.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::contagion::{CascadeConfig, ThresholdPolicy};
use crate::error::{Error, Result};
use crate::model::{RatingScale, SocialGraph, StateVector, WeightMode};
use crate::netgen::{self, WattsStrogatzParams};
use crate::seeds;
use crate::contagion;

/// Experiment description: network parameters, threshold regime, sweep over
/// initial activation ratios, and replicate count.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub network: WattsStrogatzParams,
    pub threshold: ThresholdPolicy,
    pub initial_active_ratios: Vec<f64>,
    /// Probability that an initially active node is in state like (+1).
    pub p_like: f64,
    pub replicates: usize,
    pub master_seed: u64,
    /// Reuse one network across replicates instead of a fresh one each.
    pub fixed_network: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if self.initial_active_ratios.is_empty() {
            return Err(Error::Config("at least one initial active ratio is required".to_string()));
        }
        for &r in &self.initial_active_ratios {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::Config(format!("initial active ratio {r} outside (0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.p_like) {
            return Err(Error::Config(format!("p_like {} outside [0,1]", self.p_like)));
        }
        if self.replicates == 0 {
            return Err(Error::Config("at least one replicate is required".to_string()));
        }
        Ok(())
    }
}

/// Outcome of a single replicate. Fractions are over all nodes and sum to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateOutcome {
    pub majority_frac: f64,
    pub minority_frac: f64,
    pub inactive_frac: f64,
    pub iterations: usize,
    /// Fraction of initially inactive nodes that ended active.
    pub newly_activated_frac: f64,
    /// Fraction of initially inactive nodes that ended in the majority state.
    pub majority_adoption_frac: f64,
}

/// Per-ratio summary across replicates.
#[derive(Debug, Clone)]
pub struct RatioSummary {
    pub ratio: f64,
    pub replicates: Vec<ReplicateOutcome>,
}

macro_rules! summary_mean {
    ($name:ident, $field:ident) => {
        pub fn $name(&self) -> f64 {
            self.replicates.iter().map(|r| r.$field as f64).sum::<f64>()
                / self.replicates.len() as f64
        }
    };
}

impl RatioSummary {
    summary_mean!(mean_majority_frac, majority_frac);
    summary_mean!(mean_minority_frac, minority_frac);
    summary_mean!(mean_inactive_frac, inactive_frac);
    summary_mean!(mean_newly_activated_frac, newly_activated_frac);
    summary_mean!(mean_majority_adoption_frac, majority_adoption_frac);
    summary_mean!(mean_iterations, iterations);

    fn stddev<F: Fn(&ReplicateOutcome) -> f64>(&self, f: F) -> f64 {
        let n = self.replicates.len() as f64;
        let mean = self.replicates.iter().map(&f).sum::<f64>() / n;
        (self.replicates.iter().map(|r| (f(r) - mean).powi(2)).sum::<f64>() / n).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub regime: String,
    pub ratios: Vec<RatioSummary>,
}

fn regime_label(policy: &ThresholdPolicy) -> String {
    match policy {
        ThresholdPolicy::Constant(c) => format!("constant_{c}"),
        ThresholdPolicy::Uniform { lo, hi } => format!("uniform_{lo}_{hi}"),
        ThresholdPolicy::CfDerived => "cf_derived".to_string(),
    }
}

fn run_replicate(
    spec: &ExperimentSpec,
    shared_network: Option<&SocialGraph>,
    ratio: f64,
    ratio_idx: usize,
    replicate: usize,
) -> Result<ReplicateOutcome> {
    let rep_seed = seeds::derive_seed(spec.master_seed, &[ratio_idx as u64, replicate as u64]);
    let graph = match shared_network {
        Some(g) => g.clone(),
        None => {
            let net = WattsStrogatzParams {
                seed: seeds::derive_seed(rep_seed, &[0]),
                ..spec.network
            };
            let g = netgen::watts_strogatz(&net)?;
            netgen::assign_influence(&g, WeightMode::RandomPartition, seeds::derive_seed(rep_seed, &[1]))?
        }
    };

    let n = graph.num_nodes();
    let num_seeds = ((ratio * n as f64).round() as usize).clamp(1, n);
    let mut rng = seeds::rng_for(rep_seed, &[2]);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut initial = StateVector::new("item", RatingScale::binary(), n);
    let mut likes = 0usize;
    for &v in order.iter().take(num_seeds) {
        let level = if rng.random::<f64>() < spec.p_like { 1 } else { -1 };
        if level == 1 {
            likes += 1;
        }
        initial.seed(v, level)?;
    }
    // majority = the state held by more initial actives; ties go to like
    let majority = if likes * 2 >= num_seeds { 1 } else { -1 };

    let config = CascadeConfig::new(RatingScale::binary(), spec.threshold.clone());
    let trace = contagion::run_cascade(&graph, &initial, &config, None, seeds::derive_seed(rep_seed, &[3]))?;

    let final_states = trace.final_states();
    let mut majority_count = 0usize;
    let mut minority_count = 0usize;
    let mut inactive = 0usize;
    let mut adopted_majority = 0usize;
    let mut adopted_any = 0usize;
    for v in 0..n {
        match final_states.state(v).level() {
            None => inactive += 1,
            Some(level) => {
                if level == majority {
                    majority_count += 1;
                } else {
                    minority_count += 1;
                }
                if !initial.state(v).is_active() {
                    adopted_any += 1;
                    if level == majority {
                        adopted_majority += 1;
                    }
                }
            }
        }
    }
    let initially_inactive = n - num_seeds;
    let frac = |x: usize| x as f64 / n as f64;
    Ok(ReplicateOutcome {
        majority_frac: frac(majority_count),
        minority_frac: frac(minority_count),
        inactive_frac: frac(inactive),
        iterations: trace.steps_to_convergence(),
        newly_activated_frac: if initially_inactive == 0 {
            0.0
        } else {
            adopted_any as f64 / initially_inactive as f64
        },
        majority_adoption_frac: if initially_inactive == 0 {
            0.0
        } else {
            adopted_majority as f64 / initially_inactive as f64
        },
    })
}

/// Run the full sweep. Replicates execute in parallel; results are reduced
/// by index, so the outcome is independent of scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let shared_network = if spec.fixed_network {
        let g = netgen::watts_strogatz(&spec.network)?;
        Some(netgen::assign_influence(
            &g,
            WeightMode::RandomPartition,
            seeds::derive_seed(spec.master_seed, &[u64::MAX]),
        )?)
    } else {
        None
    };
    let mut ratios = Vec::new();
    for (ratio_idx, &ratio) in spec.initial_active_ratios.iter().enumerate() {
        let replicates: Result<Vec<ReplicateOutcome>> = (0..spec.replicates)
            .into_par_iter()
            .map(|rep| run_replicate(spec, shared_network.as_ref(), ratio, ratio_idx, rep))
            .collect();
        ratios.push(RatioSummary { ratio, replicates: replicates? });
    }
    Ok(ExperimentResult { regime: regime_label(&spec.threshold), ratios })
}

/// Plot-ready CSV: one row per ratio with means and standard deviations.
pub fn results_to_csv(result: &ExperimentResult) -> String {
    let mut out = String::from(
        "regime,ratio,mean_majority_frac,mean_minority_frac,mean_inactive_frac,mean_iterations,\
         std_majority_frac,std_minority_frac,std_inactive_frac,std_iterations\n",
    );
    for r in &result.ratios {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            result.regime,
            r.ratio,
            r.mean_majority_frac(),
            r.mean_minority_frac(),
            r.mean_inactive_frac(),
            r.mean_iterations(),
            r.stddev(|x| x.majority_frac),
            r.stddev(|x| x.minority_frac),
            r.stddev(|x| x.inactive_frac),
            r.stddev(|x| x.iterations as f64),
        )
        .unwrap();
    }
    out
}

pub fn export_results(result: &ExperimentResult, path: &Path) -> Result<()> {
    if result.ratios.is_empty() {
        return Err(Error::Argument("nothing to export".to_string()));
    }
    std::fs::write(path, results_to_csv(result))?;
    Ok(())
}

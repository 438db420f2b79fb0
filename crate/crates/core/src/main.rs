//! Command-line front door: individual recommendation, group recommendation,
//! the contagion simulation harness, and network generation.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical
//! error. Diagnostics go to stderr, data to the output path or stdout.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use socirec::blend;
use socirec::cf::SimilarityMatrix;
use socirec::contagion::{CascadeConfig, ThresholdPolicy};
use socirec::error::{Error, Result};
use socirec::experiments::{self, ExperimentSpec};
use socirec::group::{self, AggregationRule, InitialOpinionRule};
use socirec::model::{RatingScale, RatingsTable, SocialGraph, SusceptibilityProfile, WeightMode};
use socirec::netgen::{self, WattsStrogatzParams};

/// Fixed default seed so reruns are reproducible out of the box.
const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "socirec", version, about = "Social-influence recommendation engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Top-k items for one user: CF blended with a social contagion cascade
    Recommend(RecommendArgs),
    /// Rank items for a group via interpersonal-influence equilibrium
    GroupRecommend(GroupRecommendArgs),
    /// Replicated binary-contagion simulation sweep on small-world networks
    Simulate(SimulateArgs),
    /// Generate a Watts-Strogatz network file
    GenNetwork(GenNetworkArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightModeArg {
    Given,
    Uniform,
    RandomPartition,
}

impl From<WeightModeArg> for WeightMode {
    fn from(m: WeightModeArg) -> WeightMode {
        match m {
            WeightModeArg::Given => WeightMode::Given,
            WeightModeArg::Uniform => WeightMode::Uniform,
            WeightModeArg::RandomPartition => WeightMode::RandomPartition,
        }
    }
}

/// `constant:C`, `uniform:LO:HI`, or `cf`.
fn parse_threshold(s: &str) -> Result<ThresholdPolicy> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Config(format!("bad threshold spec `{s}` (constant:C | uniform:LO:HI | cf)"));
    match parts.as_slice() {
        ["cf"] => Ok(ThresholdPolicy::CfDerived),
        ["constant", c] => Ok(ThresholdPolicy::Constant(c.parse().map_err(|_| bad())?)),
        ["uniform", lo, hi] => Ok(ThresholdPolicy::Uniform {
            lo: lo.parse().map_err(|_| bad())?,
            hi: hi.parse().map_err(|_| bad())?,
        }),
        _ => Err(bad()),
    }
}

#[derive(Args)]
struct RecommendArgs {
    /// Ratings file: `user_id,item_id,rating` lines
    #[arg(long)]
    ratings: PathBuf,
    /// Graph file: `u,v` or `u,v,weight_uv,weight_vu` lines
    #[arg(long)]
    graph: PathBuf,
    /// Target user id
    #[arg(long)]
    user: String,
    /// Number of rating levels R
    #[arg(long, default_value_t = 5)]
    scale: u32,
    /// Use the binary {-1,+1} scale instead of 1..R
    #[arg(long)]
    binary: bool,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Susceptibility α applied to every user
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Threshold policy: constant:C, uniform:LO:HI, or cf
    #[arg(long, default_value = "cf")]
    threshold: String,
    #[arg(long, value_enum, default_value_t = WeightModeArg::RandomPartition)]
    weight_mode: WeightModeArg,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GroupRecommendArgs {
    /// Group config file (members, alpha, W rows, items)
    #[arg(long)]
    config: PathBuf,
    /// Ratings file, needed when p1_source is mixed or predicted_only
    #[arg(long)]
    ratings: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, value_enum, default_value_t = RuleArg::Mean)]
    rule: RuleArg,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Mean,
    Min,
    Max,
}

impl From<RuleArg> for AggregationRule {
    fn from(r: RuleArg) -> AggregationRule {
        match r {
            RuleArg::Mean => AggregationRule::Mean,
            RuleArg::Min => AggregationRule::Min,
            RuleArg::Max => AggregationRule::Max,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 1000)]
    nodes: usize,
    /// Ring-lattice degree (even)
    #[arg(long, default_value_t = 10)]
    degree: usize,
    /// Rewiring probability
    #[arg(long, default_value_t = 0.1)]
    rewire: f64,
    /// Threshold policy: constant:C or uniform:LO:HI
    #[arg(long, default_value = "constant:0.1")]
    threshold: String,
    /// Comma-separated initial active ratios
    #[arg(long, default_value = "0.05,0.1,0.2,0.4")]
    ratios: String,
    #[arg(long, default_value_t = 0.7)]
    p_like: f64,
    #[arg(long, default_value_t = 500)]
    replicates: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Reuse one network across replicates
    #[arg(long)]
    fixed_network: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenNetworkArgs {
    #[arg(long)]
    nodes: usize,
    /// Ring-lattice degree (even)
    #[arg(long)]
    degree: usize,
    /// Rewiring probability
    #[arg(long, default_value_t = 0.1)]
    rewire: f64,
    #[arg(long, value_enum, default_value_t = WeightModeArg::RandomPartition)]
    weight_mode: WeightModeArg,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn emit(output: Option<&PathBuf>, data: &str) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, data)?,
        None => print!("{data}"),
    }
    Ok(())
}

fn cmd_recommend(args: &RecommendArgs) -> Result<()> {
    let scale = if args.binary { RatingScale::binary() } else { RatingScale::new(args.scale)? };
    let table = RatingsTable::load(&args.ratings, scale)?;
    if table.user_index(&args.user).is_none() {
        return Err(Error::Argument(format!("unknown user `{}`", args.user)));
    }
    let graph = SocialGraph::load(&args.graph, args.weight_mode.into(), args.seed)?;
    let sims = SimilarityMatrix::build(&table, socirec::cf::DEFAULT_MIN_OVERLAP)?;
    let config = CascadeConfig::new(scale, parse_threshold(&args.threshold)?);
    let alphas = SusceptibilityProfile::uniform(args.alpha)?;
    let recs = blend::recommend_top_k(
        &args.user, args.k, &table, &sims, &graph, &config, &alphas, args.seed,
    )?;
    emit(args.output.as_ref(), &blend::recommendations_to_csv(&recs))
}

/// Parse the group config file: `members`, `alpha`, `scale`, `p1_source`
/// key=value lines, repeated `w = ...` matrix rows, and `item` lines
/// (`item = id: v1,v2,...` for explicit opinions or `item = id` for
/// assembly from ratings).
fn parse_group_config(
    text: &str,
    ratings: Option<&RatingsTable>,
) -> Result<(group::GroupSystem, Vec<String>)> {
    let mut members: Option<Vec<String>> = None;
    let mut alphas: Option<Vec<f64>> = None;
    let mut scale = RatingScale::new(5)?;
    let mut source = InitialOpinionRule::Explicit;
    let mut w_rows: Vec<Vec<f64>> = Vec::new();
    let mut items: Vec<(String, Option<Vec<f64>>)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: lineno + 1,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let parse_floats = |v: &str| -> Result<Vec<f64>> {
            v.split(',')
                .map(|x| {
                    x.trim().parse::<f64>().map_err(|_| Error::Parse {
                        line: lineno + 1,
                        msg: format!("bad number `{x}`"),
                    })
                })
                .collect()
        };
        match key {
            "members" => {
                members = Some(value.split(',').map(|s| s.trim().to_string()).collect());
            }
            "alpha" => alphas = Some(parse_floats(value)?),
            "scale" => {
                scale = RatingScale::new(value.parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("bad scale `{value}`"),
                })?)?;
            }
            "p1_source" => {
                source = match value {
                    "explicit" => InitialOpinionRule::Explicit,
                    "mixed" => InitialOpinionRule::Mixed,
                    "predicted_only" => InitialOpinionRule::PredictedOnly,
                    other => {
                        return Err(Error::Parse {
                            line: lineno + 1,
                            msg: format!("unknown p1_source `{other}`"),
                        })
                    }
                };
            }
            "w" => {
                w_rows.push(parse_floats(value).map_err(|e| match e {
                    Error::Parse { msg, .. } => Error::Parse {
                        line: lineno + 1,
                        msg: format!("W row {}: {msg}", w_rows.len() + 1),
                    },
                    other => other,
                })?);
            }
            "item" => match value.split_once(':') {
                Some((id, vals)) => items.push((id.trim().to_string(), Some(parse_floats(vals)?))),
                None => items.push((value.to_string(), None)),
            },
            other => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("unknown key `{other}`"),
                })
            }
        }
    }

    let members = members.ok_or_else(|| Error::Config("group config needs `members`".to_string()))?;
    let alphas = alphas.ok_or_else(|| Error::Config("group config needs `alpha`".to_string()))?;
    if w_rows.len() != members.len() || w_rows.iter().any(|r| r.len() != members.len()) {
        return Err(Error::Config(format!(
            "W must be a {0}x{0} matrix (one `w = ...` row per member)",
            members.len()
        )));
    }
    let n = members.len();
    let w = nalgebra::DMatrix::from_fn(n, n, |r, c| w_rows[r][c]);
    let mut sys = group::GroupSystem::new(members.clone(), alphas, w, scale)?;

    let sims = match (source, ratings) {
        (InitialOpinionRule::Explicit, _) => None,
        (_, Some(table)) => Some(SimilarityMatrix::build(table, socirec::cf::DEFAULT_MIN_OVERLAP)?),
        (_, None) => {
            return Err(Error::Config(
                "p1_source mixed/predicted_only needs --ratings".to_string(),
            ))
        }
    };
    let mut item_ids = Vec::new();
    for (id, explicit) in items {
        let p1 = match (&explicit, source) {
            (Some(vals), _) => nalgebra::DVector::from_vec(vals.clone()),
            (None, InitialOpinionRule::Explicit) => {
                return Err(Error::Config(format!(
                    "item `{id}` has no opinions and p1_source is explicit"
                )))
            }
            (None, rule) => group::assemble_initial(
                &members,
                &id,
                rule,
                ratings.unwrap(),
                sims.as_ref().unwrap(),
            )?,
        };
        sys.set_initial(&id, p1)?;
        item_ids.push(id);
    }
    if item_ids.is_empty() {
        return Err(Error::Config("group config names no items".to_string()));
    }
    Ok((sys, item_ids))
}

fn cmd_group_recommend(args: &GroupRecommendArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)?;
    // the config's scale line governs how ratings are validated
    let scale = text
        .lines()
        .filter_map(|l| l.trim().strip_prefix("scale"))
        .filter_map(|rest| rest.trim().strip_prefix('='))
        .find_map(|v| v.trim().parse::<u32>().ok())
        .map_or_else(|| RatingScale::new(5), RatingScale::new)?;
    let table = match &args.ratings {
        Some(path) => Some(RatingsTable::load(path, scale)?),
        None => None,
    };
    let (sys, items) = parse_group_config(&text, table.as_ref())?;
    let recs = group::group_recommend(&sys, &items, args.rule.into(), args.k)?;
    let mut out = String::from("rank,item_id,score,settled_opinions,initial_opinions\n");
    for (i, r) in recs.iter().enumerate() {
        let settled: Vec<String> = r.settled.iter().map(|x| format!("{x:.2}")).collect();
        let initial: Vec<String> = r.initial.iter().map(|x| format!("{x:.2}")).collect();
        writeln!(
            out,
            "{},{},{:.2},{},{}",
            i + 1,
            r.item,
            r.score,
            settled.join("|"),
            initial.join("|")
        )
        .unwrap();
    }
    emit(args.output.as_ref(), &out)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let ratios: Result<Vec<f64>> = args
        .ratios
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad ratio `{x}`")))
        })
        .collect();
    let spec = ExperimentSpec {
        network: WattsStrogatzParams { n: args.nodes, k: args.degree, p: args.rewire, seed: args.seed },
        threshold: parse_threshold(&args.threshold)?,
        initial_active_ratios: ratios?,
        p_like: args.p_like,
        replicates: args.replicates,
        master_seed: args.seed,
        fixed_network: args.fixed_network,
    };
    let result = experiments::run_experiment(&spec)?;
    emit(args.output.as_ref(), &experiments::results_to_csv(&result))
}

fn cmd_gen_network(args: &GenNetworkArgs) -> Result<()> {
    let params = WattsStrogatzParams { n: args.nodes, k: args.degree, p: args.rewire, seed: args.seed };
    let graph = netgen::watts_strogatz(&params)?;
    let graph = netgen::assign_influence(&graph, args.weight_mode.into(), args.seed)?;
    emit(args.output.as_ref(), &graph.to_text())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::Recommend(args) => cmd_recommend(args),
        Command::GroupRecommend(args) => cmd_group_recommend(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::GenNetwork(args) => cmd_gen_network(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use socirec::group::SolveMethod;

    #[test]
    fn threshold_specs() {
        assert_eq!(parse_threshold("constant:0.5").unwrap(), ThresholdPolicy::Constant(0.5));
        assert_eq!(
            parse_threshold("uniform:0.05:0.8").unwrap(),
            ThresholdPolicy::Uniform { lo: 0.05, hi: 0.8 }
        );
        assert_eq!(parse_threshold("cf").unwrap(), ThresholdPolicy::CfDerived);
        assert!(parse_threshold("bogus").is_err());
    }

    #[test]
    fn group_config_parses_paper_fixture() {
        let text = "\
members = jessica, mike, eric
alpha = 0.9, 0.9, 0.5
scale = 5
w = 0.1, 0.1, 0.8
w = 0.1, 0.1, 0.8
w = 0.25, 0.25, 0.5
item = movie_a: 2, 3, 5
";
        let (sys, items) = parse_group_config(text, None).unwrap();
        assert_eq!(items, vec!["movie_a".to_string()]);
        assert_eq!(sys.members(), ["jessica", "mike", "eric"]);
        let eq = group::solve_equilibrium(&sys, "movie_a", SolveMethod::Direct, 1e-10, 1000).unwrap();
        assert!((eq.settled[2] - 4.86).abs() < 0.01);
    }

    #[test]
    fn group_config_bad_row_named() {
        let text = "members = a, b\nalpha = 0.5, 0.5\nw = 0.5, 0.5\nw = 0.5, oops\nitem = x: 1, 2\n";
        let err = parse_group_config(text, None).unwrap_err();
        match err {
            Error::Parse { line, msg } => {
                assert_eq!(line, 4);
                assert!(msg.contains("W row 2"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}

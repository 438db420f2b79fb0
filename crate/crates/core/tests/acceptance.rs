//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line (run with `cargo test --test acceptance -- --nocapture`
//! to see them).

use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use socirec::blend;
use socirec::cf::{self, Neighborhood, SimilarityMatrix};
use socirec::contagion::{
    self, best_response_dynamics, realize_thresholds, CascadeConfig, GamePayoffParams,
    ThresholdPolicy,
};
use socirec::experiments::{self, ExperimentSpec};
use socirec::group::{self, AggregationRule, GroupSystem, SolveMethod};
use socirec::model::{RatingScale, RatingsTable, StateVector, SusceptibilityProfile, WeightMode};
use socirec::netgen::{self, WattsStrogatzParams};
use socirec::seeds;

fn check(name: &str, body: impl FnOnce()) {
    let started = Instant::now();
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(body)) {
        Ok(()) => println!("criterion {name}: PASS ({:.1?})", started.elapsed()),
        Err(cause) => {
            println!("criterion {name}: FAIL ({:.1?})", started.elapsed());
            std::panic::resume_unwind(cause);
        }
    }
}

fn ws_graph(n: usize, k: usize, p: f64, seed: u64) -> socirec::SocialGraph {
    let g = netgen::watts_strogatz(&WattsStrogatzParams { n, k, p, seed }).unwrap();
    netgen::assign_influence(&g, WeightMode::RandomPartition, seed).unwrap()
}

/// 1. The three-member influence system settles at (4.52, 4.62, 4.86) and
///    mean-aggregates to 4.66 versus the direct mean 3.33.
#[test]
fn criterion_1_group_worked_example() {
    check("1 (group worked example)", || {
    let mut sys = GroupSystem::new(
        vec!["jessica".into(), "mike".into(), "eric".into()],
        vec![0.9, 0.9, 0.5],
        nalgebra::dmatrix![0.1, 0.1, 0.8; 0.1, 0.1, 0.8; 0.25, 0.25, 0.5],
        RatingScale::new(5).unwrap(),
    )
    .unwrap();
    sys.set_initial("movie_a", nalgebra::dvector![2.0, 3.0, 5.0]).unwrap();

    let solve_started = Instant::now();
    let eq = group::solve_equilibrium(&sys, "movie_a", SolveMethod::Direct, 1e-10, 10_000).unwrap();
    let solve_time = solve_started.elapsed();

    let expect = [4.52, 4.62, 4.86];
    for (i, &e) in expect.iter().enumerate() {
        assert!((eq.settled[i] - e).abs() <= 0.01, "component {i}: {} vs {e}", eq.settled[i]);
    }
    let settled_mean = group::aggregate(&eq.settled, AggregationRule::Mean).unwrap();
    assert!((settled_mean - 4.66).abs() <= 0.01, "settled mean {settled_mean}");
    let direct_mean =
        group::aggregate(&nalgebra::dvector![2.0, 3.0, 5.0], AggregationRule::Mean).unwrap();
    assert!((direct_mean - 3.33).abs() <= 0.01, "direct mean {direct_mean}");
    assert!(solve_time.as_micros() < 1000, "solve took {solve_time:?}, budget 1 ms");
    });
}

/// 2. Direct and iterative equilibria agree within 1e-6 max-norm on 200
///    random systems (N <= 10, alpha in [0, 0.99]); residuals within 1e-8.
#[test]
fn criterion_2_solver_cross_check() {
    check("2 (solver cross-check)", || {
    let scale = RatingScale::new(5).unwrap();
    for trial in 0..200u64 {
        let mut rng = seeds::rng_for(0xC2, &[trial]);
        let n = rng.random_range(1..=10);
        let members: Vec<String> = (0..n).map(|i| format!("m{i}")).collect();
        let alphas: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=0.99)).collect();
        let mut w = DMatrix::<f64>::zeros(n, n);
        for r in 0..n {
            let draws: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
            let total: f64 = draws.iter().sum();
            for col in 0..n {
                w[(r, col)] = draws[col] / total;
            }
        }
        let mut sys = GroupSystem::new(members, alphas, w, scale).unwrap();
        let p1 = DVector::from_fn(n, |_, _| rng.random_range(1.0..=5.0));
        sys.set_initial("item", p1).unwrap();

        let direct = group::solve_equilibrium(&sys, "item", SolveMethod::Direct, 1e-10, 10_000)
            .unwrap_or_else(|e| panic!("trial {trial}: direct failed: {e}"));
        let iterative =
            group::solve_equilibrium(&sys, "item", SolveMethod::Iterative, 1e-10, 10_000)
                .unwrap_or_else(|e| panic!("trial {trial}: iterative failed: {e}"));
        let diff = (&direct.settled - &iterative.settled).amax();
        assert!(diff <= 1e-6, "trial {trial}: methods differ by {diff}");
        assert!(direct.residual <= 1e-8 && iterative.residual <= 1e-8);
    }
    });
}

/// 3. Best-response dynamics with default payoffs matches the threshold
///    cascade state for state on 100 seeded small-world graphs.
#[test]
fn criterion_3_game_oracle_equivalence() {
    check("3 (game-oracle equivalence)", || {
    let binary = RatingScale::binary();
    for trial in 0..100u64 {
        let mut rng = seeds::rng_for(0xC3, &[trial]);
        let n = *[6, 8, 10, 12].get(rng.random_range(0..4)).unwrap();
        let k = if rng.random::<bool>() { 2 } else { 4 };
        let graph = ws_graph(n, k, 0.3, trial);

        let mut initial = StateVector::new("item", binary, n);
        let mut seeded_any = false;
        for v in 0..n {
            if rng.random::<f64>() < 0.3 {
                initial.seed(v, if rng.random::<f64>() < 0.6 { 1 } else { -1 }).unwrap();
                seeded_any = true;
            }
        }
        if !seeded_any {
            initial.seed(0, 1).unwrap();
        }

        let policy = ThresholdPolicy::Uniform { lo: 0.0, hi: 1.0 };
        let thresholds = realize_thresholds(&policy, &graph, None, trial).unwrap();
        let mut config = CascadeConfig::new(binary, policy);
        config.max_steps = Some(n);
        let cascade = contagion::run_cascade(&graph, &initial, &config, None, trial).unwrap();
        let game =
            best_response_dynamics(&graph, &initial, &GamePayoffParams::default(), &thresholds, n)
                .unwrap();
        assert_eq!(
            cascade.steps(),
            game.steps(),
            "trial {trial}: step counts diverge"
        );
        assert_eq!(
            cascade.final_states(),
            game.final_states(),
            "trial {trial}: final states diverge"
        );
    }
    });
}

/// 4. Qualitative reproduction of the simulation study at n=1000, k=10,
///    p=0.1, 100 replicates, p_like=0.7.
#[test]
fn criterion_4_simulation_study_shape() {
    check("4 (simulation study shape)", || {
        let network = WattsStrogatzParams { n: 1000, k: 10, p: 0.1, seed: 0 };
        let run = |threshold: ThresholdPolicy, ratios: Vec<f64>| {
            experiments::run_experiment(&ExperimentSpec {
                network,
                threshold,
                initial_active_ratios: ratios,
                p_like: 0.7,
                replicates: 100,
                master_seed: 0xC4,
                fixed_network: false,
            })
            .unwrap()
        };
        let mut failures: Vec<String> = Vec::new();
        let mut clause = |name: &str, ok: bool, detail: String| {
            println!("  4{name}: {} ({detail})", if ok { "pass" } else { "fail" });
            if !ok {
                failures.push(format!("4{name}: {detail}"));
            }
        };

        // (a) low threshold: a 10% seed activates almost everyone
        let low = run(ThresholdPolicy::Constant(0.1), vec![0.1, 0.2]);
        let inactive = low.ratios[0].mean_inactive_frac();
        clause("a", inactive < 0.05, format!("mean inactive fraction {inactive:.4}"));

        // (b) high threshold: a 5% seed barely spreads, and convergence at a
        // 20% seed is strictly faster than in the low-threshold regime
        let high = run(ThresholdPolicy::Constant(0.5), vec![0.05, 0.2]);
        let newly = high.ratios[0].mean_newly_activated_frac();
        clause("b-spread", newly < 0.15, format!("mean newly-activated fraction {newly:.4}"));
        let iters_high = high.ratios[1].mean_iterations();
        let iters_low = low.ratios[1].mean_iterations();
        clause(
            "b-speed",
            iters_high < iters_low,
            format!(
                "mean iterations at ratio 0.2: {iters_high:.2} (theta 0.5) vs {iters_low:.2} (theta 0.1)"
            ),
        );

        // (c) uniform thresholds: majority adoption above one half at a 20%
        // seed and stable (±0.15) at 30% and 40%
        let uniform = run(ThresholdPolicy::Uniform { lo: 0.05, hi: 0.8 }, vec![0.2, 0.3, 0.4]);
        let base = uniform.ratios[0].mean_majority_adoption_frac();
        clause("c-majority", base > 0.5, format!("majority adoption {base:.4} at ratio 0.2"));
        for summary in &uniform.ratios[1..] {
            let rate = summary.mean_majority_adoption_frac();
            clause(
                "c-stability",
                (rate - base).abs() <= 0.15,
                format!("adoption {rate:.4} at ratio {} vs {base:.4} at 0.2", summary.ratio),
            );
        }
        assert!(failures.is_empty(), "failed clauses: {failures:?}");
    });
}

/// 5. Level mapping is a bijection for R in 2..9 and matches the listed
///    1-5 assignment exactly.
#[test]
fn criterion_5_level_map_round_trip() {
    check("5 (level-map round trip)", || {
    for levels in 2..=9u32 {
        let scale = RatingScale::new(levels).unwrap();
        for r in 1..=levels as i32 {
            let s = contagion::map_level(r, scale).unwrap();
            assert_eq!(contagion::map_level_inverse(s, scale).unwrap(), r, "R={levels}, r={r}");
        }
    }
    let five = RatingScale::new(5).unwrap();
    for (r, s) in [(1, -2), (2, -1), (3, 0), (4, 1), (5, 2)] {
        assert_eq!(contagion::map_level(r, five).unwrap(), s);
    }
    });
}

/// 6. Similarity and prediction match an independent brute-force evaluation
///    of the correlation and weighted-sum formulas on 100 random tables.
#[test]
fn criterion_6_cf_oracle_equivalence() {
    check("6 (CF oracle equivalence)", || {
    let scale = RatingScale::new(5).unwrap();
    for trial in 0..100u64 {
        let mut rng = seeds::rng_for(0xC6, &[trial]);
        // dense mirror of a random 10x10 table
        let mut dense = [[None::<f64>; 10]; 10];
        let mut table = RatingsTable::new(scale);
        for u in 0..10 {
            for i in 0..10 {
                if rng.random::<f64>() < 0.7 {
                    let r = rng.random_range(1..=5);
                    dense[u][i] = Some(f64::from(r));
                    table.insert(&format!("u{u}"), &format!("i{i}"), r).unwrap();
                }
            }
        }

        // oracle: correlation over the co-rated set, means over that set only
        let oracle_pearson = |u: usize, v: usize| -> Option<f64> {
            let pairs: Vec<(f64, f64)> = (0..10)
                .filter_map(|i| Some((dense[u][i]?, dense[v][i]?)))
                .collect();
            if pairs.len() < 2 {
                return None;
            }
            let n = pairs.len() as f64;
            let mu = pairs.iter().map(|p| p.0).sum::<f64>() / n;
            let mv = pairs.iter().map(|p| p.1).sum::<f64>() / n;
            let num: f64 = pairs.iter().map(|&(a, b)| (a - mu) * (b - mv)).sum();
            let du: f64 = pairs.iter().map(|&(a, _)| (a - mu).powi(2)).sum::<f64>().sqrt();
            let dv: f64 = pairs.iter().map(|&(_, b)| (b - mv).powi(2)).sum::<f64>().sqrt();
            if du == 0.0 || dv == 0.0 {
                None
            } else {
                Some(num / (du * dv))
            }
        };
        let global_mean = |u: usize| -> Option<f64> {
            let vals: Vec<f64> = (0..10).filter_map(|i| dense[u][i]).collect();
            if vals.is_empty() {
                None
            } else {
                Some(vals.iter().sum::<f64>() / vals.len() as f64)
            }
        };
        // oracle: mean_u + Σ_v w_uv (r_vi - mean_v) / Σ_v |w_uv| over raters
        let oracle_predict = |u: usize, i: usize| -> Option<f64> {
            let mean_u = global_mean(u)?;
            let mut num = 0.0;
            let mut den = 0.0;
            for v in 0..10 {
                if v == u {
                    continue;
                }
                let (Some(rvi), Some(w)) = (dense[v][i], oracle_pearson(u, v)) else {
                    continue;
                };
                num += w * (rvi - global_mean(v)?);
                den += w.abs();
            }
            Some(if den == 0.0 { mean_u } else { mean_u + num / den })
        };

        let sims = SimilarityMatrix::build(&table, 2).unwrap();
        for u in 0..10 {
            let iu = table.user_index(&format!("u{u}"));
            for v in (u + 1)..10 {
                let iv = table.user_index(&format!("u{v}"));
                let (Some(iu), Some(iv)) = (iu, iv) else { continue };
                let got = cf::pearson(&table, iu, iv, 2).unwrap();
                let expect = oracle_pearson(u, v);
                match (got, expect) {
                    (Some(g), Some(e)) => {
                        assert!((g - e).abs() <= 1e-12, "trial {trial}: pearson {g} vs {e}")
                    }
                    (None, None) => {}
                    other => panic!("trial {trial}: defined-ness mismatch {other:?}"),
                }
            }
            if let Some(iu) = iu {
                for i in 0..10 {
                    if dense[u][i].is_some() {
                        continue;
                    }
                    let Some(item) = table.item_index(&format!("i{i}")) else { continue };
                    let got =
                        cf::predict_cf(&table, &sims, iu, item, Neighborhood::All, false).unwrap();
                    let expect = oracle_predict(u, i).unwrap();
                    assert!(
                        (got - expect).abs() <= 1e-12,
                        "trial {trial}: predict {got} vs {expect}"
                    );
                }
            }
        }
    }
    });
}

/// 7. Blend identities: alpha = 0 reproduces the CF ranking, alpha = 1
///    reproduces cascade outcomes on activated items, inactive items score
///    exactly the CF prediction.
#[test]
fn criterion_7_blend_identities() {
    check("7 (blend identities)", || {
    let scale = RatingScale::new(5).unwrap();
    let table = RatingsTable::parse(
        "u,a,5\nu,b,3\nu,c,1\n\
         v,a,4\nv,b,1\nv,c,2\nv,x,4\nv,y,2\n\
         w,a,5\nw,b,4\nw,c,2\nw,x,5\nw,y,1\n\
         z,a,1\nz,b,3\nz,c,4\nz,x,2\nz,y,5\n",
        scale,
    )
    .unwrap();
    let sims = SimilarityMatrix::build(&table, 2).unwrap();
    let graph =
        socirec::SocialGraph::parse("u,v\nu,w\nv,w\nw,z\n", WeightMode::RandomPartition, 4).unwrap();
    let config = CascadeConfig::new(scale, ThresholdPolicy::Constant(0.3));

    // alpha = 0: the ranking equals pure CF
    let zero = SusceptibilityProfile::uniform(0.0).unwrap();
    let recs = blend::recommend_top_k("u", 10, &table, &sims, &graph, &config, &zero, 7).unwrap();
    let u = table.user_index("u").unwrap();
    let mut cf_rows = cf::predict_all(&table, &sims, u, Neighborhood::All).unwrap();
    cf_rows.sort_by(|a, b| {
        b.1.partial_cmp(&a.1).unwrap().then_with(|| table.items()[a.0].cmp(&table.items()[b.0]))
    });
    for (rec, (item, p)) in recs.iter().zip(&cf_rows) {
        assert_eq!(rec.item, table.items()[*item]);
        assert_eq!(rec.score, *p);
    }

    // alpha = 1: every activated item scores the cascade outcome exactly;
    // inactive items score exactly the CF prediction
    let one = SusceptibilityProfile::uniform(1.0).unwrap();
    let recs = blend::recommend_top_k("u", 10, &table, &sims, &graph, &config, &one, 7).unwrap();
    let node = graph.node_index("u").unwrap();
    let mut saw_active = false;
    for rec in &recs {
        let item = table.item_index(&rec.item).unwrap();
        let trace = blend::run_item_cascade(&table, &sims, &graph, &config, item, 7).unwrap();
        match contagion::si_prediction(&trace, node, scale).unwrap() {
            Some(r) => {
                saw_active = true;
                assert_eq!(rec.score, f64::from(r), "item {}", rec.item);
            }
            None => assert_eq!(rec.score, rec.p_cf, "item {}", rec.item),
        }
        if rec.p_si.is_none() {
            assert_eq!(rec.score, rec.p_cf);
        }
    }
    assert!(saw_active, "fixture never activated the target; identity untested");
    });
}

/// 8. Every CLI subcommand rerun with an identical config and seed writes
///    byte-identical output.
#[test]
fn criterion_8_cli_determinism() {
    check("8 (CLI determinism)", || {
    let dir = tempfile::tempdir().unwrap();
    let ratings = dir.path().join("ratings.csv");
    let graph = dir.path().join("graph.csv");
    let group_cfg = dir.path().join("group.cfg");
    std::fs::write(
        &ratings,
        "u,a,5\nu,b,3\nv,a,4\nv,b,1\nv,x,4\nw,a,5\nw,b,4\nw,x,5\nz,a,1\nz,b,3\nz,x,2\n",
    )
    .unwrap();
    std::fs::write(&graph, "u,v\nu,w\nv,w\nw,z\n").unwrap();
    std::fs::write(
        &group_cfg,
        "members = a, b, c\nalpha = 0.9, 0.9, 0.5\nscale = 5\n\
         w = 0.1, 0.1, 0.8\nw = 0.1, 0.1, 0.8\nw = 0.25, 0.25, 0.5\n\
         item = movie_a: 2, 3, 5\nitem = movie_b: 4, 4, 1\n",
    )
    .unwrap();

    let commands: Vec<Vec<String>> = vec![
        vec![
            "recommend".into(),
            format!("--ratings={}", ratings.display()),
            format!("--graph={}", graph.display()),
            "--user=u".into(),
            "--seed=7".into(),
        ],
        vec!["group-recommend".into(), format!("--config={}", group_cfg.display())],
        vec![
            "simulate".into(),
            "--nodes=60".into(),
            "--degree=4".into(),
            "--replicates=3".into(),
            "--ratios=0.1,0.3".into(),
            "--seed=5".into(),
        ],
        vec!["gen-network".into(), "--nodes=24".into(), "--degree=4".into(), "--seed=5".into()],
    ];
    for (idx, args) in commands.iter().enumerate() {
        let out1 = dir.path().join(format!("{idx}_1.csv"));
        let out2 = dir.path().join(format!("{idx}_2.csv"));
        for out in [&out1, &out2] {
            let status = Command::new(env!("CARGO_BIN_EXE_socirec"))
                .args(args)
                .arg(format!("--output={}", out.display()))
                .status()
                .unwrap();
            assert!(status.success(), "command {args:?} failed");
        }
        assert_eq!(
            std::fs::read(&out1).unwrap(),
            std::fs::read(&out2).unwrap(),
            "command {args:?} is not byte-deterministic"
        );
    }
    });
}

/// 9. Monotonicity suite on 1000 seeded small instances: active sets grow
///    step over step with fractions conserved (mixed-sign seeds), and raising
///    thresholds never enlarges the final active set (same-sign seeds, where
///    the process is a standard monotone threshold cascade; with opposed
///    seeds a higher threshold can suppress a cancelling activation and is
///    not order-preserving).
#[test]
fn criterion_9_monotonicity_suite() {
    check("9 (monotonicity suite)", || {
        let binary = RatingScale::binary();
        for trial in 0..1000u64 {
            let mut rng = seeds::rng_for(0xC9, &[trial]);
            let n = rng.random_range(8..=16);
            let graph = ws_graph(n, 4, 0.2, trial);

            // per-step monotonicity and conservation under mixed-sign seeds
            let mut mixed = StateVector::new("item", binary, n);
            mixed.seed(rng.random_range(0..n), 1).unwrap();
            let second = rng.random_range(0..n);
            if !mixed.state(second).is_active() {
                mixed.seed(second, -1).unwrap();
            }
            let theta = rng.random_range(0.05..0.6);
            let config = CascadeConfig::new(binary, ThresholdPolicy::Constant(theta));
            let trace = contagion::run_cascade(&graph, &mixed, &config, None, trial).unwrap();
            let mut prev = 0usize;
            for step in trace.steps() {
                let active: usize = step.active.values().sum();
                assert!(active >= prev, "trial {trial}: active set shrank");
                assert_eq!(active + step.inactive, n, "trial {trial}: counts not conserved");
                prev = active;
            }

            // threshold monotonicity under same-sign seeds
            let mut aligned = StateVector::new("item", binary, n);
            aligned.seed(rng.random_range(0..n), 1).unwrap();
            let second = rng.random_range(0..n);
            if !aligned.state(second).is_active() {
                aligned.seed(second, 1).unwrap();
            }
            let lo = CascadeConfig::new(binary, ThresholdPolicy::Constant(theta));
            let hi = CascadeConfig::new(
                binary,
                ThresholdPolicy::Constant((theta + rng.random_range(0.05..0.3)).min(1.0)),
            );
            let trace_lo = contagion::run_cascade(&graph, &aligned, &lo, None, trial).unwrap();
            let trace_hi = contagion::run_cascade(&graph, &aligned, &hi, None, trial).unwrap();
            for v in 0..n {
                if trace_hi.final_states().state(v).is_active() {
                    assert!(
                        trace_lo.final_states().state(v).is_active(),
                        "trial {trial}: node {v} active under the higher threshold only"
                    );
                }
            }
        }
    });
}

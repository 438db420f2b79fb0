//! Property tests for the spec-level invariants: similarity symmetry and
//! invariance, weight normalization, level-map bijection, blend convexity,
//! and cascade monotonicity.

use proptest::prelude::*;

use socirec::blend::blend;
use socirec::cf;
use socirec::contagion::{self, CascadeConfig, ThresholdPolicy, Thresholds};
use socirec::model::{NodeState, RatingScale, RatingsTable, SocialGraph, StateVector, WeightMode};
use socirec::netgen::{self, WattsStrogatzParams};

fn two_user_table(a: &[i32], b: &[i32]) -> RatingsTable {
    let scale = RatingScale::new(9).unwrap();
    let mut t = RatingsTable::new(scale);
    for (i, &r) in a.iter().enumerate() {
        t.insert("u", &format!("i{i}"), r).unwrap();
    }
    for (i, &r) in b.iter().enumerate() {
        t.insert("v", &format!("i{i}"), r).unwrap();
    }
    t
}

proptest! {
    #[test]
    fn pearson_symmetry(
        a in proptest::collection::vec(1..=9i32, 3..8),
        b in proptest::collection::vec(1..=9i32, 3..8),
    ) {
        let n = a.len().min(b.len());
        let t = two_user_table(&a[..n], &b[..n]);
        let uv = cf::pearson(&t, 0, 1, 2).unwrap();
        let vu = cf::pearson(&t, 1, 0, 2).unwrap();
        prop_assert_eq!(uv, vu);
        if let Some(w) = uv {
            prop_assert!(w.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn pearson_shift_scale_invariance(
        a in proptest::collection::vec(1..=4i32, 3..6),
        b in proptest::collection::vec(1..=4i32, 3..6),
    ) {
        let n = a.len().min(b.len());
        // v's ratings transformed by 2r + 1 stay on a 1..9 scale
        let b_scaled: Vec<i32> = b[..n].iter().map(|&r| 2 * r + 1).collect();
        let base = two_user_table(&a[..n], &b[..n]);
        let scaled = two_user_table(&a[..n], &b_scaled);
        let w1 = cf::pearson(&base, 0, 1, 2).unwrap();
        let w2 = cf::pearson(&scaled, 0, 1, 2).unwrap();
        match (w1, w2) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9),
            (None, None) => {}
            other => prop_assert!(false, "defined-ness changed: {:?}", other),
        }
    }

    #[test]
    fn weights_normalized_in_all_modes(seed in any::<u64>(), n in 6usize..30, k in 1usize..3) {
        let params = WattsStrogatzParams { n, k: 2 * k, p: 0.3, seed };
        prop_assume!(2 * k < n);
        let g = netgen::watts_strogatz(&params).unwrap();
        for mode in [WeightMode::Uniform, WeightMode::RandomPartition] {
            let g = netgen::assign_influence(&g, mode, seed).unwrap();
            for v in 0..n {
                if !g.neighbors(v).is_empty() {
                    let sum: f64 = g.weights(v).iter().sum();
                    prop_assert!((sum - 1.0).abs() < 1e-9);
                }
                // adjacency stays symmetric
                for &w in g.neighbors(v) {
                    prop_assert!(g.has_edge(w, v));
                }
            }
        }
    }

    #[test]
    fn level_map_bijection(levels in 2u32..=9) {
        let scale = RatingScale::new(levels).unwrap();
        let mut seen = std::collections::HashSet::new();
        for r in 1..=levels as i32 {
            let s = contagion::map_level(r, scale).unwrap();
            prop_assert!(scale.is_active_level(s));
            prop_assert!(seen.insert(s));
            prop_assert_eq!(contagion::map_level_inverse(s, scale).unwrap(), r);
        }
        prop_assert_eq!(seen.len(), scale.active_levels().len());
    }

    #[test]
    fn blend_is_convex(p_cf in 1.0..5.0f64, p_si in 1.0..5.0f64, alpha in 0.0..=1.0f64) {
        let out = blend(p_cf, Some(p_si), alpha).unwrap();
        prop_assert!(out >= p_cf.min(p_si) - 1e-12);
        prop_assert!(out <= p_cf.max(p_si) + 1e-12);
    }

    #[test]
    fn cascade_monotone_and_deterministic(
        seed in any::<u64>(),
        n in 6usize..20,
        num_seeds in 1usize..5,
        theta in 0.05..0.9f64,
    ) {
        let g = netgen::watts_strogatz(&WattsStrogatzParams { n, k: 4, p: 0.2, seed }).unwrap();
        let g = netgen::assign_influence(&g, WeightMode::RandomPartition, seed).unwrap();
        let mut initial = StateVector::new("i", RatingScale::binary(), n);
        for s in 0..num_seeds.min(n) {
            initial.seed(s * n / num_seeds.min(n), if s % 3 == 0 { -1 } else { 1 }).unwrap();
        }
        let cfg = CascadeConfig::new(RatingScale::binary(), ThresholdPolicy::Constant(theta));
        let t1 = contagion::run_cascade(&g, &initial, &cfg, None, seed).unwrap();
        let t2 = contagion::run_cascade(&g, &initial, &cfg, None, seed).unwrap();
        prop_assert_eq!(&t1, &t2);

        // active sets never shrink and activated nodes never change level
        let mut prev_active = 0;
        for step in t1.steps() {
            let active: usize = step.active.values().sum();
            prop_assert!(active >= prev_active);
            prop_assert_eq!(active + step.inactive, n);
            prev_active = active;
        }
        for v in 0..n {
            if let NodeState::Active { level, step } = initial.state(v) {
                prop_assert_eq!(t1.final_states().state(v), NodeState::Active { level, step });
            }
        }
    }

    #[test]
    fn raising_thresholds_never_enlarges_final_set(
        seed in any::<u64>(),
        n in 6usize..16,
        low in 0.05..0.5f64,
        bump in 0.01..0.4f64,
    ) {
        let g = netgen::watts_strogatz(&WattsStrogatzParams { n, k: 4, p: 0.2, seed }).unwrap();
        let g = netgen::assign_influence(&g, WeightMode::RandomPartition, seed).unwrap();
        let mut initial = StateVector::new("i", RatingScale::binary(), n);
        initial.seed(0, 1).unwrap();
        initial.seed(n / 2, 1).unwrap();
        let lo_t = Thresholds::Fixed(vec![low; n]);
        let hi_t = Thresholds::Fixed(vec![low + bump; n]);
        let run = |t: &Thresholds| {
            let mut s = initial.clone();
            for _ in 0..n {
                let next = contagion::step_binary(&g, &s, t).unwrap();
                if next.num_active() == s.num_active() {
                    break;
                }
                s = next;
            }
            s
        };
        let final_lo = run(&lo_t);
        let final_hi = run(&hi_t);
        prop_assert!(final_hi.num_active() <= final_lo.num_active());
        for v in 0..n {
            if final_hi.state(v).is_active() {
                prop_assert!(final_lo.state(v).is_active());
            }
        }
    }

    #[test]
    fn ratings_round_trip(entries in proptest::collection::btree_set((0usize..8, 0usize..8), 1..20)) {
        let scale = RatingScale::new(5).unwrap();
        let mut t = RatingsTable::new(scale);
        for (i, &(u, it)) in entries.iter().enumerate() {
            t.insert(&format!("u{u}"), &format!("i{it}"), (i % 5 + 1) as i32).unwrap();
        }
        let back = RatingsTable::parse(&t.to_text(), scale).unwrap();
        prop_assert_eq!(back.to_text(), t.to_text());
        prop_assert_eq!(back.num_entries(), t.num_entries());
    }
}

#[test]
fn cancellation_never_activates() {
    // exact cancellation: two equal-weight neighbors with opposite opinions
    let g = SocialGraph::parse("v,a,0.5,1.0\nv,b,0.5,1.0\n", WeightMode::Given, 0).unwrap();
    let v = g.node_index("v").unwrap();
    for theta in [0.01, 0.2, 0.5, 1.0] {
        let mut s = StateVector::new("i", RatingScale::binary(), 3);
        s.seed(g.node_index("a").unwrap(), 1).unwrap();
        s.seed(g.node_index("b").unwrap(), -1).unwrap();
        let t = Thresholds::Fixed(vec![theta; 3]);
        let next = contagion::step_binary(&g, &s, &t).unwrap();
        assert_eq!(next.state(v), NodeState::Inactive);
    }
}

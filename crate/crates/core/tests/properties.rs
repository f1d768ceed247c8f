//! Property tests for the structural invariants of every module, each
//! checked against an independently written oracle where one exists.

#![allow(clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};

use opiniond_core::agents::{assign_opinions, compute_trust, normalize};
use opiniond_core::dynamics::{payoff, update_step};
use opiniond_core::experiments::{mean_std, replicate, AggregateTrajectory, SimulationConfig};
use opiniond_core::graph::{generate_scale_free, prune_leaves};
use opiniond_core::stats::compute_stats;
use opiniond_core::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_edges(max_n: u32, max_m: usize) -> impl Strategy<Value = (u32, Vec<(u32, u32)>)> {
    (2..max_n).prop_flat_map(move |n| (Just(n), prop::collection::vec((0..n, 0..n), 1..max_m)))
}

fn build(n: u32, edges: &[(u32, u32)]) -> SocialGraph {
    SocialGraph::from_edges((0..n).map(|i| format!("v{i}")).collect(), edges.iter().copied()).0
}

fn arb_opinion() -> impl Strategy<Value = Opinion> {
    prop_oneof![Just(Opinion::A), Just(Opinion::B)]
}

/// Graph, normalized attributes and an opinion state.
fn arb_fixture() -> impl Strategy<Value = (SocialGraph, AgentAttributes, Vec<Opinion>)> {
    arb_edges(40, 200).prop_flat_map(|(n, edges)| {
        let n = n as usize;
        (
            Just(build(n as u32, &edges)),
            prop::collection::vec(0.0..=1.0f64, n),
            prop::collection::vec(0.0..=1.0f64, n),
            prop::collection::vec(0.0..=1.0f64, n),
            prop::collection::vec(arb_opinion(), n),
        )
            .prop_map(|(g, t, e, s, o)| {
                let a = AgentAttributes {
                    expertise_raw: e.clone(),
                    trust_raw: t.clone(),
                    stubborn_raw: s.clone(),
                    expertise: e,
                    trust: t,
                    stubborn: s,
                };
                (g, a, o)
            })
    })
}

fn arb_params() -> impl Strategy<Value = ModelParams> {
    (0.1..3.0f64, 0.1..3.0f64, 0.0..2.0f64, 0.0..2.0f64, 0.0..2.0f64).prop_map(|(b, c, w1, w2, w3)| ModelParams {
        b,
        c,
        omega1: w1,
        omega2: w2,
        omega3: w3,
        ..Default::default()
    })
}

/// Accumulates every edge's contribution into its follower's payoff by
/// walking the edge list, not the per-node leader slices.
fn per_edge_payoffs(g: &SocialGraph, a: &AgentAttributes, p: &ModelParams, o: &[Opinion]) -> Vec<f64> {
    let mut benefit = vec![0.0; g.node_count()];
    let mut cost = vec![0.0; g.node_count()];
    for (f, l) in g.edges() {
        let (f, l) = (f as usize, l as usize);
        let same = o[f].value() * o[l].value() == 1;
        let base = 1.0 + p.omega1 * a.trust[l] + p.omega2 * a.expertise[l];
        if same {
            benefit[f] += base;
        } else {
            cost[f] += base - p.omega3 * a.stubborn[f];
        }
    }
    (0..g.node_count()).map(|i| p.b * benefit[i] - p.c * cost[i]).collect()
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjacency_is_consistent((n, edges) in arb_edges(30, 120)) {
        let g = build(n, &edges);
        let expect: BTreeSet<(u32, u32)> = edges.iter().copied().filter(|(a, b)| a != b).collect();
        prop_assert_eq!(g.edge_count(), expect.len());
        prop_assert_eq!(g.edges().collect::<BTreeSet<_>>(), expect);
        let mut total = 0;
        for i in 0..g.node_count() {
            prop_assert_eq!(g.in_degree(i), g.followers_of(i).len());
            total += g.in_degree(i);
            for &l in g.leaders_of(i) {
                prop_assert!(l as usize != i);
                prop_assert!(g.followers_of(l as usize).contains(&(i as u32)));
            }
            for &f in g.followers_of(i) {
                prop_assert!(g.leaders_of(f as usize).contains(&(i as u32)));
            }
        }
        prop_assert_eq!(total, g.edge_count());
    }

    #[test]
    fn prune_matches_repeated_filter((n, edges) in arb_edges(25, 60), threshold in 1usize..4) {
        let g = build(n, &edges);
        // oracle: drop all low-degree nodes and recount, until stable
        let mut alive: BTreeSet<u32> = (0..n).collect();
        let dedup: BTreeSet<(u32, u32)> = g.edges().collect();
        loop {
            let mut deg: BTreeMap<u32, usize> = alive.iter().map(|&v| (v, 0)).collect();
            for &(f, l) in &dedup {
                if alive.contains(&f) && alive.contains(&l) {
                    *deg.get_mut(&f).unwrap() += 1;
                    *deg.get_mut(&l).unwrap() += 1;
                }
            }
            let drop: Vec<u32> = deg.iter().filter(|(_, &d)| d <= threshold).map(|(&v, _)| v).collect();
            if drop.is_empty() { break; }
            for v in drop { alive.remove(&v); }
        }
        match prune_leaves(&g, threshold) {
            Ok(r) => {
                let kept: BTreeSet<String> = r.graph.labels().iter().cloned().collect();
                let want: BTreeSet<String> = alive.iter().map(|v| format!("v{v}")).collect();
                prop_assert_eq!(kept, want);
                // idempotent
                let again = prune_leaves(&r.graph, threshold).unwrap();
                prop_assert_eq!(again.removed, 0);
                prop_assert_eq!(&again.graph, &r.graph);
                // degrees never grow
                for i in 0..r.graph.node_count() {
                    let orig = g.labels().iter().position(|l| l == r.graph.label(i)).unwrap();
                    prop_assert!(r.graph.in_degree(i) <= g.in_degree(orig));
                    prop_assert!(r.graph.out_degree(i) <= g.out_degree(orig));
                }
            }
            Err(Error::EmptyAfterPrune { .. }) => prop_assert!(alive.is_empty()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn stats_match_floyd_warshall((n, edges) in arb_edges(18, 50)) {
        let g = build(n, &edges);
        let s = compute_stats(&g);
        let n = g.node_count();
        let inf = usize::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        let mut adj = vec![vec![false; n]; n];
        for i in 0..n { d[i][i] = 0; }
        for (f, l) in g.edges() {
            let (f, l) = (f as usize, l as usize);
            d[f][l] = 1; d[l][f] = 1;
            adj[f][l] = true; adj[l][f] = true;
        }
        for k in 0..n { for i in 0..n { for j in 0..n {
            if d[i][k] + d[k][j] < d[i][j] { d[i][j] = d[i][k] + d[k][j]; }
        }}}
        let (mut diam, mut sum, mut pairs) = (0, 0, 0);
        for i in 0..n { for j in 0..n {
            if i != j && d[i][j] < inf { diam = diam.max(d[i][j]); sum += d[i][j]; pairs += 1; }
        }}
        prop_assert_eq!(s.diameter, diam);
        if pairs > 0 {
            prop_assert!(close(s.avg_path_length, sum as f64 / pairs as f64));
        }
        prop_assert!(s.avg_path_length <= s.diameter as f64);
        // brute-force clustering
        let mut c_sum = 0.0;
        for v in 0..n {
            let nb: Vec<usize> = (0..n).filter(|&u| adj[v][u]).collect();
            if nb.len() < 2 { continue; }
            let mut links = 0;
            for a in 0..nb.len() { for b in a + 1..nb.len() { if adj[nb[a]][nb[b]] { links += 1; } } }
            c_sum += links as f64 / (nb.len() * (nb.len() - 1) / 2) as f64;
        }
        prop_assert!(close(s.avg_clustering, c_sum / n as f64));
        prop_assert!((0.0..=1.0).contains(&s.avg_clustering));
        prop_assert_eq!(s.in_degree_histogram.values().sum::<usize>(), n);
    }

    #[test]
    fn clique_stats(n in 3u32..12) {
        let edges: Vec<(u32, u32)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        let s = compute_stats(&build(n, &edges));
        prop_assert_eq!(s.diameter, 1);
        prop_assert_eq!(s.avg_path_length, 1.0);
        prop_assert_eq!(s.avg_clustering, 1.0);
    }

    #[test]
    fn generator_is_reproducible(n in 5usize..200, m in 1usize..4, seed: u64) {
        prop_assume!(n > m);
        let a = generate_scale_free(n, m, seed).unwrap();
        prop_assert_eq!(&a, &generate_scale_free(n, m, seed).unwrap());
        prop_assert_eq!(a.edge_count(), (n - m) * m);
    }

    #[test]
    fn normalize_lands_in_unit_interval(v in prop::collection::vec(-1e6..1e6f64, 1..50)) {
        let out = normalize(&v).unwrap();
        prop_assert!(out.iter().all(|x| (0.0..=1.0).contains(x)));
        // idempotent once min is 0 and max is 1
        if out.contains(&1.0) {
            prop_assert_eq!(normalize(&out).unwrap(), out);
        }
    }

    #[test]
    fn trust_is_monotone_in_in_degree((n, edges) in arb_edges(30, 120), alpha in 0.1..3.0f64) {
        let g = build(n, &edges);
        let t = compute_trust(&g, &ModelParams { alpha, ..Default::default() });
        for i in 0..g.node_count() { for j in 0..g.node_count() {
            if g.in_degree(i) >= g.in_degree(j) { prop_assert!(t[i] >= t[j]); }
        }}
    }

    #[test]
    fn normalized_stubbornness_ignores_beta(beta in 0.01..50.0f64, seed: u64) {
        let g = generate_scale_free(60, 2, 3).unwrap();
        let base = AgentAttributes::sample(&g, &ModelParams::default(), seed).unwrap();
        let scaled = AgentAttributes::sample(&g, &ModelParams { beta, ..Default::default() }, seed).unwrap();
        for (a, b) in base.stubborn.iter().zip(&scaled.stubborn) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn seeded_fraction_is_exact(f in 0.05..0.95f64, k in 0usize..20, kind in 0usize..3, seed: u64) {
        let g = generate_scale_free(300, 3, 11).unwrap();
        let a = AgentAttributes::sample(&g, &ModelParams::default(), seed).unwrap();
        let s = SeedingStrategy { kind: SeedingKind::ALL[kind], initial_fraction: f, leader_count: k };
        let want = (f * 300.0).round() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match assign_opinions(&g, &a, &s, &mut rng) {
            Ok(o) => prop_assert_eq!(o.iter().filter(|&&x| x == Opinion::A).count(), want),
            Err(_) => prop_assert!(kind != 0 && k > want),
        }
    }

    #[test]
    fn payoff_matches_per_edge_oracle((g, a, o) in arb_fixture(), p in arb_params()) {
        let oracle = per_edge_payoffs(&g, &a, &p, &o);
        for i in 0..g.node_count() {
            prop_assert!(close(payoff(i, &o, &g, &a, &p), oracle[i]));
        }
    }

    #[test]
    fn update_rule_properties((g, a, o) in arb_fixture(), p in arb_params()) {
        let state = OpinionState::initial(o.clone());
        let (next, m) = update_step(&state, &g, &a, &p);
        let pay: Vec<f64> = (0..g.node_count()).map(|i| payoff(i, &o, &g, &a, &p)).collect();
        prop_assert_eq!(next.flips, pay.iter().filter(|&&x| x < 0.0).count());
        prop_assert!(close(m.mean_payoff, pay.iter().sum::<f64>() / pay.len() as f64));
        for i in 0..g.node_count() {
            let leaders = g.leaders_of(i);
            if leaders.is_empty() || leaders.iter().all(|&x| o[x as usize] == o[i]) {
                prop_assert_eq!(next.opinions[i], o[i]);
            }
            prop_assert_eq!(next.opinions[i] != o[i], pay[i] < 0.0);
        }
    }

    #[test]
    fn update_ignores_processing_order((g, a, o) in arb_fixture(), p in arb_params(), seed: u64) {
        let (next, _) = update_step(&OpinionState::initial(o.clone()), &g, &a, &p);
        // write nodes in a shuffled order into a fresh buffer, reading only the old state
        let mut order: Vec<usize> = (0..g.node_count()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut shuffled = o.clone();
        for i in order {
            if payoff(i, &o, &g, &a, &p) < 0.0 { shuffled[i] = o[i].flipped(); }
        }
        prop_assert_eq!(next.opinions, shuffled);
    }

    #[test]
    fn unanimity_is_absorbing((g, a, _) in arb_fixture(), p in arb_params(), all_a: bool) {
        let op = if all_a { Opinion::A } else { Opinion::B };
        let mut s = OpinionState::initial(vec![op; g.node_count()]);
        for _ in 0..5 {
            let (n, _) = update_step(&s, &g, &a, &p);
            prop_assert!(n.opinions.iter().all(|&x| x == op));
            s = n;
        }
    }

    #[test]
    fn relabeling_mirrors_trajectory((g, a, o) in arb_fixture(), p in arb_params()) {
        let crit = RelaxationCriterion { t_max: 30, ..Default::default() };
        let mirrored: Vec<Opinion> = o.iter().map(|x| x.flipped()).collect();
        let r1 = dynamics::run_simulation(&g, &a, &p, o, &crit);
        let r2 = dynamics::run_simulation(&g, &a, &p, mirrored, &crit);
        prop_assert_eq!(r1.trajectory.len(), r2.trajectory.len());
        for (x, y) in r1.trajectory.iter().zip(&r2.trajectory) {
            prop_assert!((x.prop_a - (1.0 - y.prop_a)).abs() < 1e-12);
            prop_assert_eq!(x.mean_payoff, y.mean_payoff);
            prop_assert_eq!(x.flips, y.flips);
        }
        prop_assert_eq!(r1.relaxation_time, r2.relaxation_time);
    }

    #[test]
    fn config_round_trip(
        b in 0.01..10.0f64, sigma2 in 0.01..4.0f64, f in 0.05..0.95f64, eps in 0.0..0.1f64,
        window in 1usize..20, extra in 0usize..100, reps in 1usize..500, seed: u64, kind in 0usize..3,
        vary in 0usize..5,
    ) {
        let mut o: Vec<(String, String)> = vec![
            ("b".into(), b.to_string()),
            ("sigma2".into(), sigma2.to_string()),
            ("initial_fraction".into(), f.to_string()),
            ("epsilon".into(), eps.to_string()),
            ("window".into(), window.to_string()),
            ("t_max".into(), (window + extra).to_string()),
            ("replications".into(), reps.to_string()),
            ("seed".into(), seed.to_string()),
            ("strategy".into(), SeedingKind::ALL[kind].to_string()),
            ("leader_count".into(), "10".into()),
            ("vary".into(), ["init-prop", "bc", "seeding", "alpha", "sigma2"][vary].into()),
        ];
        if vary == 1 { o.push(("values".into(), format!("{},{}", b / 2.0, b))); }
        let cfg = parse_config("", &o).unwrap();
        let again = parse_config(&cfg.to_config_string(), &[]).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(again.config_hash(), cfg.config_hash());
    }
}

#[test]
fn seed_isolation() {
    let g = generate_scale_free(400, 3, 2).unwrap();
    let cfg = SimulationConfig::default();
    let short = replicate(&g, &cfg, 5, 99).unwrap();
    let long = replicate(&g, &cfg, 10, 99).unwrap();
    assert_eq!(short.runs[..], long.runs[..5]);
}

#[test]
fn aggregates_match_brute_force() {
    let g = generate_scale_free(400, 3, 2).unwrap();
    let agg = replicate(&g, &SimulationConfig::default(), 25, 7).unwrap();
    let len = agg.runs.iter().map(|r| r.trajectory.len()).max().unwrap();
    assert_eq!(agg.steps.len(), len);
    for t in 0..len {
        // hold each run's last recorded value past its end
        let vals: Vec<f64> = agg
            .runs
            .iter()
            .map(|r| r.trajectory.get(t).unwrap_or_else(|| r.trajectory.last().unwrap()).prop_a)
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(close(agg.steps[t].mean_prop_a, mean));
        assert!(close(agg.steps[t].std_prop_a, std));
        assert!(agg.steps[t].std_prop_a >= 0.0);
    }
    let finals: Vec<f64> = agg.runs.iter().map(|r| r.final_prop_a).collect();
    let (m, s) = mean_std(finals.iter().copied());
    assert!(close(agg.mean_final_prop, m) && close(agg.std_final_prop, s));
    let last = agg.steps.last().unwrap();
    assert!(close(last.mean_prop_a, m) && close(last.std_prop_a, s));

    let rebuilt = AggregateTrajectory::from_runs(agg.runs.clone());
    assert_eq!(rebuilt, agg);
}

#[test]
fn replication_is_schedule_invariant() {
    let g = generate_scale_free(400, 3, 2).unwrap();
    let cfg = SimulationConfig::default();
    let parallel = replicate(&g, &cfg, 12, 5).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| replicate(&g, &cfg, 12, 5).unwrap());
    assert_eq!(parallel, serial);
}

mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_graph, random_mechanism, random_prior, random_range};
use roadpriv_core::graph::{make_two_vertex, EUCLIDEAN_TOLERANCE};
use roadpriv_core::metrics::{check_hiding_bound, check_informed_bound, EvaluationReport};
use roadpriv_core::optimizer::{approx_ae_topk, approx_qloss_topk, incremental_qloss_trajectory};
use roadpriv_core::*;

fn instance(seed: u64, max_n: usize) -> (ChaCha8Rng, RoadGraph, DistanceMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_n);
    let g = random_graph(&mut rng, n, n);
    let d = all_pairs(&g);
    (rng, g, d)
}

/// Relaxes every edge `|V|` times.
fn bellman_ford(g: &RoadGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.len()];
    dist[source] = 0.0;
    for _ in 0..g.len() {
        for e in g.edges() {
            let (a, b) = (dist[e.u] + e.weight, dist[e.v] + e.weight);
            if a < dist[e.v] {
                dist[e.v] = a;
            }
            if b < dist[e.u] {
                dist[e.u] = b;
            }
        }
    }
    dist
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dijkstra_matches_bellman_ford(seed in any::<u64>()) {
        let (_, g, d) = instance(seed, 25);
        for s in 0..g.len() {
            let oracle = bellman_ford(&g, s);
            for (t, want) in oracle.iter().enumerate() {
                prop_assert!((d.shortest(s, t) - want).abs() <= 1e-9 * want.max(1.0));
            }
        }
    }

    #[test]
    fn distance_matrix_is_a_metric_above_euclidean(seed in any::<u64>()) {
        let (_, _, d) = instance(seed, 15);
        let n = d.len();
        for i in 0..n {
            prop_assert_eq!(d.shortest(i, i), 0.0);
            for j in 0..n {
                prop_assert_eq!(d.shortest(i, j), d.shortest(j, i));
                prop_assert!(d.shortest(i, j) >= d.euclidean(i, j) - EUCLIDEAN_TOLERANCE);
                for k in 0..n {
                    prop_assert!(d.shortest(i, k) <= d.shortest(i, j) + d.shortest(j, k) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn graph_text_round_trips(seed in any::<u64>()) {
        let (_, g, _) = instance(seed, 20);
        let back = load_graph(&g.to_text()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn gem_is_stochastic_and_certified(seed in any::<u64>(), eps in 0.001f64..0.1) {
        let (mut rng, _, d) = instance(seed, 20);
        let range = random_range(&mut rng, d.len(), d.len());
        let m = gem_matrix(&d, &range, eps).unwrap();
        for v in 0..d.len() {
            prop_assert!((m.row(v).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        prop_assert!(privacy_loss(&m, &d) <= eps + 1e-9);
    }

    #[test]
    fn post_processing_never_increases_loss(seed in any::<u64>()) {
        let (mut rng, _, d) = instance(seed, 12);
        let n = d.len();
        let range = random_range(&mut rng, n, n);
        let m = random_mechanism(&mut rng, n, &range);
        let image: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let f = postprocess(&m, |w| image[w]).unwrap();
        prop_assert!(privacy_loss(&f, &d) <= privacy_loss(&m, &d) + 1e-9);
    }

    #[test]
    fn optimal_attack_beats_posterior(seed in any::<u64>()) {
        let (mut rng, _, d) = instance(seed, 10);
        let n = d.len();
        let prior = random_prior(&mut rng, n);
        let m = gem_matrix(&d, &random_range(&mut rng, n, n), 0.01).unwrap();
        for metric in [Metric::Shortest, Metric::Euclidean] {
            let opt = adversarial_error(&prior, &m, &optimal_attack(&prior, &m, &d, metric).unwrap(), &d, metric).unwrap();
            let post = adversarial_error(&prior, &m, &posterior_strategy(&prior, &m).unwrap(), &d, metric).unwrap();
            prop_assert!(opt <= post + 1e-9);
        }
        let qe = q_loss(&prior, &m, &d, Metric::Euclidean).unwrap();
        let qs = q_loss(&prior, &m, &d, Metric::Shortest).unwrap();
        prop_assert!(qe <= qs + 1e-9);
    }

    #[test]
    fn report_round_trips(seed in any::<u64>()) {
        let (mut rng, _, d) = instance(seed, 8);
        let n = d.len();
        let prior = random_prior(&mut rng, n);
        let m = gem_matrix(&d, &random_range(&mut rng, n, n), 0.02).unwrap();
        for attack in [Attack::Optimal, Attack::Posterior] {
            let r = EvaluationReport::evaluate(&prior, &m, &d, Metric::Shortest, attack).unwrap();
            prop_assert_eq!(EvaluationReport::from_csv_row(&r.to_csv_row()).unwrap(), r);
        }
        let back = MechanismMatrix::from_csv(&m.to_csv()).unwrap();
        prop_assert_eq!(back, m);
        prop_assert_eq!(Prior::from_csv(&prior.to_csv(), n).unwrap(), prior);
    }

    #[test]
    fn characteristic_bounds_hold(seed in any::<u64>(), eps in 0.001f64..0.1) {
        let (mut rng, _, d) = instance(seed, 10);
        let n = d.len();
        let prior = random_prior(&mut rng, n);
        let m = gem_matrix(&d, &OutputRange::full(n), eps).unwrap();
        let phi: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        prop_assert!(check_hiding_bound(&prior, &m, &phi, eps, &d).unwrap().holds(1e-9));
        let subset = random_range(&mut rng, n, 3).into_vec();
        prop_assert!(check_informed_bound(&prior, &m, &subset, eps, &d).unwrap().holds(1e-9));
    }

    #[test]
    fn topk_with_full_k_is_exact(seed in any::<u64>()) {
        let (mut rng, _, d) = instance(seed, 12);
        let n = d.len();
        let prior = random_prior(&mut rng, n);
        let range = random_range(&mut rng, n, n);
        let m = gem_matrix(&d, &range, 0.01).unwrap();
        let q = q_loss(&prior, &m, &d, Metric::Shortest).unwrap();
        let ae = adversarial_error(&prior, &m, &posterior_strategy(&prior, &m).unwrap(), &d, Metric::Shortest).unwrap();
        prop_assert!((approx_qloss_topk(&prior, &d, &range, 0.01, range.len(), Metric::Shortest).unwrap() - q).abs() < 1e-9);
        prop_assert!((approx_ae_topk(&prior, &d, &range, 0.01, range.len(), Metric::Shortest).unwrap() - ae).abs() < 1e-9);
    }

    #[test]
    fn greedy_invariants(seed in any::<u64>()) {
        let (mut rng, _, d) = instance(seed, 8);
        let prior = random_prior(&mut rng, d.len());
        let w0 = init_range_by_qloss(&d, &prior, 0.01).unwrap();
        let full = OutputRange::full(d.len());
        let m_full = gem_matrix(&d, &full, 0.01).unwrap();
        let m_w0 = gem_matrix(&d, &w0, 0.01).unwrap();
        prop_assert!(q_loss(&prior, &m_w0, &d, Metric::Shortest).unwrap() <= q_loss(&prior, &m_full, &d, Metric::Shortest).unwrap() + 1e-9);
        let r = greedy_optimize(&d, &prior, &OptimizationConfig::new(0.01, Objective::MaximizePc), &w0).unwrap();
        prop_assert!(r.final_range.as_slice().iter().all(|&v| w0.contains(v)));
        prop_assert!(r.trace.iter().all(|t| t.after > t.before));
        prop_assert!(r.final_q_loss <= r.initial_q_loss + 1e-9);
        prop_assert!(r.sweeps <= w0.len());
        // idempotence: the result is a fixed point
        let again = greedy_optimize(&d, &prior, &OptimizationConfig::new(0.01, Objective::MaximizePc), &r.final_range).unwrap();
        prop_assert!(again.trace.is_empty());
    }
}

#[test]
fn gem_tp_grows_with_detour() {
    let prior = Prior::uniform(2);
    let mut last = 0.0;
    for s in [100.0, 150.0, 300.0, 700.0, 1500.0] {
        let d = all_pairs(&make_two_vertex(100.0, s).unwrap());
        let m = gem_matrix(&d, &OutputRange::full(2), 0.01).unwrap();
        let tp = metrics::true_probability(&prior, &m, &map_attack(&prior, &m).unwrap()).unwrap();
        assert!(tp > last);
        last = tp;
    }
}

#[test]
fn incremental_qloss_over_fifty_removals() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let g = random_graph(&mut rng, 60, 40);
    let d = all_pairs(&g);
    let prior = random_prior(&mut rng, 60);
    let w0 = OutputRange::full(60);
    let mut order: Vec<usize> = (0..60).collect();
    rand::seq::SliceRandom::shuffle(&mut order[..], &mut rng);
    let removals = &order[..50];
    let traj = incremental_qloss_trajectory(&d, &prior, 0.01, Metric::Shortest, &w0, removals).unwrap();
    let mut members: Vec<usize> = (0..60).collect();
    for (step, v) in removals.iter().enumerate() {
        members.retain(|w| w != v);
        let m = gem_matrix(&d, &OutputRange::new(members.clone(), 60).unwrap(), 0.01).unwrap();
        let exact = q_loss(&prior, &m, &d, Metric::Shortest).unwrap();
        assert!((traj[step] - exact).abs() < 1e-9, "step {step}");
    }
}

mod common;

use common::simple_paths;
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nodecap::graph::{cost_to_f64, UndirectedMultigraph};
use nodecap::mcnc::halluc::{hallucinate, path_counts, round_lp_h, sampling_probability, solve_lp_h, x_cap, LpH};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Path formulation solved exactly.
fn lp_oracle(g: &UndirectedMultigraph, pairs: &[(usize, usize)], q: u64, c_x: f64) -> f64 {
    let n = g.node_count();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let cap = x_cap(n, c_x);
    let x: Vec<_> = (0..n).map(|v| lp.add_var(cost_to_f64(&g.cost(v)), (0.0, cap))).collect();
    let mut through: Vec<Vec<(minilp::Variable, f64)>> = vec![Vec::new(); n];
    for &(s, t) in pairs {
        let mut demand = Vec::new();
        for p in simple_paths(g, s, t) {
            let f = lp.add_var(0.0, (0.0, f64::INFINITY));
            demand.push((f, 1.0));
            for v in p {
                through[v].push((f, 1.0));
            }
        }
        lp.add_constraint(&demand, ComparisonOp::Ge, q as f64);
    }
    for v in 0..n {
        let mut row = through[v].clone();
        row.push((x[v], -(q as f64)));
        lp.add_constraint(&row, ComparisonOp::Le, 0.0);
    }
    lp.solve().unwrap().objective()
}

fn check_constraints(lp: &LpH, pairs: &[(usize, usize)], q: u64, n: usize) {
    assert_eq!(lp.flows.len(), pairs.len());
    let mut load = vec![0.0; n];
    for (paths, &(s, t)) in lp.flows.iter().zip(pairs) {
        let total: f64 = paths.iter().map(|p| p.1).sum();
        assert!((total - q as f64).abs() < 1e-6 * q as f64, "pair routes {total}");
        for (p, amt) in paths {
            assert_eq!((p[0], *p.last().unwrap()), (s, t));
            for &v in p {
                load[v] += amt;
            }
        }
    }
    for v in 0..n {
        assert!(load[v] <= q as f64 * lp.x[v] + 1e-6);
        assert!(lp.x[v] <= lp.x_cap + 1e-6);
    }
}

#[test]
fn shared_node_gets_two() {
    // 0 - 2 - 1 and 3 - 2 - 4, node 2 is a cut node
    let g = UndirectedMultigraph::from_int_costs(&[1, 1, 5, 1, 1], &[(0, 2), (2, 1), (3, 2), (2, 4)]).unwrap();
    let pairs = [(0, 1), (3, 4)];
    let lp = solve_lp_h(&g, &pairs, 3, 8.0, 0.1).unwrap();
    check_constraints(&lp, &pairs, 3, 5);
    assert!((lp.x[2] - 2.0).abs() < 1e-6, "{:?}", lp.x);
    let exact = lp_oracle(&g, &pairs, 3, 8.0);
    assert!((lp.cost - exact).abs() < 1e-6, "{} vs {exact}", lp.cost);
}

#[test]
fn matches_exact_lp_within_tolerance() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let eps = 0.1;
    for _ in 0..25 {
        let n = rng.gen_range(4..=8);
        let mut edges = Vec::new();
        for v in 1..n {
            edges.push((rng.gen_range(0..v), v));
        }
        for _ in 0..n {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if a != b {
                edges.push((a, b));
            }
        }
        let costs: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=6)).collect();
        let g = UndirectedMultigraph::from_int_costs(&costs, &edges).unwrap();
        let k = rng.gen_range(1..=3);
        let pairs: Vec<(usize, usize)> = (0..k)
            .map(|_| {
                let s = rng.gen_range(0..n);
                let t = (s + rng.gen_range(1..n)) % n;
                (s, t)
            })
            .collect();
        let q = rng.gen_range(1..=4);
        let lp = solve_lp_h(&g, &pairs, q, 8.0, eps).unwrap();
        check_constraints(&lp, &pairs, q, n);
        let exact = lp_oracle(&g, &pairs, q, 8.0);
        assert!(lp.cost >= exact - 1e-6, "below the optimum: {} < {exact}", lp.cost);
        assert!(lp.cost <= exact * (1.0 + 2.0 * eps) / (1.0 - eps) + 1e-6, "{} vs {exact}", lp.cost);
    }
}

#[test]
fn sampling_rate_within_three_sigma() {
    let pairs: Vec<usize> = (0..1000).collect();
    let p = sampling_probability(100, 64, 4.0);
    assert!((p - 4.0 * 64f64.ln() / 100.0).abs() < 1e-12);
    let mut total = 0usize;
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        total += hallucinate(&pairs, 100, 64, 4.0, &mut rng).sampled.len();
    }
    let trials = 200.0 * 1000.0;
    let rate = total as f64 / trials;
    let sigma = (p * (1.0 - p) / trials).sqrt();
    assert!((rate - p).abs() <= 3.0 * sigma, "rate {rate} vs {p}");
}

#[test]
fn even_split_rounds_evenly() {
    // two disjoint routes 0-1-3 and 0-2-3, each of capacity q/2
    let g = UndirectedMultigraph::from_int_costs(&[0, 1, 1, 0], &[(0, 1), (1, 3), (0, 2), (2, 3)]).unwrap();
    let q = 4;
    let c_x = 0.5 / 4f64.ln();
    let lp = solve_lp_h(&g, &[(0, 3)], q, c_x, 0.1).unwrap();
    assert_eq!(lp.flows[0].len(), 2);
    let mut hits = 0;
    let seeds = 400;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if round_lp_h(&lp, &mut rng)[0].contains(&1) {
            hits += 1;
        }
    }
    let share: f64 = lp.flows[0].iter().filter(|(p, _)| p.contains(&1)).map(|p| p.1).sum::<f64>() / q as f64;
    let sigma = (share * (1.0 - share) / seeds as f64).sqrt();
    let rate = hits as f64 / seeds as f64;
    assert!((share - 0.5).abs() < 0.05, "share {share}");
    assert!((rate - share).abs() <= 3.0 * sigma, "rate {rate} vs {share}");
}

#[test]
fn rounded_paths_cost_matches_lp_in_expectation() {
    let g = UndirectedMultigraph::from_int_costs(&[0, 2, 3, 0, 1], &[(0, 1), (1, 3), (0, 2), (2, 3), (0, 4), (4, 3)]).unwrap();
    let q = 2;
    let lp = solve_lp_h(&g, &[(0, 3)], q, 0.3, 0.1).unwrap();
    let mut sum = 0.0;
    let seeds = 2000;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let paths = round_lp_h(&lp, &mut rng);
        sum += paths[0].iter().map(|&v| cost_to_f64(&g.cost(v))).sum::<f64>();
        assert!(path_counts(&paths, 5).into_iter().all(|c| c <= 1));
    }
    let mean = sum / seeds as f64;
    assert!((mean - lp.cost).abs() < 0.1 * lp.cost.max(1.0), "{mean} vs {}", lp.cost);
}

use nodecap::graph::{McncInstance, UndirectedMultigraph};
use nodecap::mcnc::{outer_round_cap, solve_mcnc, McncKnobs};
use nodecap::oracle::{exact_mcnc_fractional, EnumerationOrder, OracleBudget};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_instance(rng: &mut ChaCha8Rng) -> McncInstance {
    let n = rng.gen_range(4..=10);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.gen_range(0..v), v));
    }
    for _ in 0..rng.gen_range(0..2 * n) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            edges.push((a, b));
        }
    }
    let costs: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=9)).collect();
    let g = UndirectedMultigraph::from_int_costs(&costs, &edges).unwrap();
    let k = rng.gen_range(1..=4.min(n / 2));
    let mut pool: Vec<usize> = (0..n).collect();
    let mut pairs = Vec::new();
    for _ in 0..k {
        let s = pool.remove(rng.gen_range(0..pool.len()));
        let t = pool.remove(rng.gen_range(0..pool.len()));
        pairs.push((s, t));
    }
    let q = [1u64, 2, 4, 8][rng.gen_range(0..4)];
    McncInstance::new(g, &pairs, q).unwrap()
}

fn check_routing(inst: &McncInstance, routing: &[Vec<usize>]) {
    assert_eq!(routing.len(), inst.pairs.len());
    for (p, path) in inst.pairs.iter().zip(routing) {
        assert_eq!(path.first(), Some(&p.source));
        assert_eq!(path.last(), Some(&p.sink));
        for w in path.windows(2) {
            assert!(inst.graph.has_edge(w[0], w[1]), "{} - {} is not an edge", w[0], w[1]);
        }
    }
}

#[test]
fn audits_hold_and_ratio_within_envelope() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = (0.0f64, 0.0f64);
    for case in 0..40 {
        let inst = random_instance(&mut rng);
        let sol = solve_mcnc(&inst, &McncKnobs::default(), case).unwrap();
        check_routing(&inst, &sol.routing);
        let failed: Vec<_> = sol.failed_audits().collect();
        assert!(failed.is_empty(), "case {case}: {failed:?}");
        assert!(sol.rounds.len() <= outer_round_cap(inst.pairs.len(), 8.0));
        let Some(opt) = exact_mcnc_fractional(&inst, &OracleBudget::default(), EnumerationOrder::CostAscending).unwrap() else {
            continue;
        };
        let ratio = (sol.cost / opt.cost).to_f64().unwrap();
        assert!(ratio <= 100.0, "case {case}: ratio {ratio}");
        assert!(sol.congestion <= 64.0, "case {case}: congestion {}", sol.congestion);
        worst = (worst.0.max(ratio), worst.1.max(sol.congestion));
    }
    println!("worst mcnc ratio {:.3}, congestion {:.3}", worst.0, worst.1);
}

#[test]
fn same_seed_same_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for case in 0..10 {
        let inst = random_instance(&mut rng);
        let a = solve_mcnc(&inst, &McncKnobs::default(), case).unwrap();
        let b = solve_mcnc(&inst, &McncKnobs::default(), case).unwrap();
        assert_eq!(a, b);
    }
}

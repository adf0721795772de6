//! Hallucinated demands and the subgraph bought to route them.

use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{concurrent_mcf, McfDemand, McfNetwork, McfResult};
use crate::graph::{cost_to_f64, NodeId, UndirectedMultigraph};

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct HallucinationPlan {
    pub sampled: Vec<usize>,
    pub prob: f64,
    /// One path per sampled pair, in `sampled` order, once rounded.
    pub paths: Vec<Vec<NodeId>>,
}

/// `min(1, c_h ln n / q)`.
pub fn sampling_probability(q: u64, n: usize, c_h: f64) -> f64 {
    (c_h * (n.max(1) as f64).ln() / q as f64).min(1.0)
}

/// Includes each pair independently, in list order.
pub fn hallucinate<R: Rng>(pairs: &[usize], q: u64, n: usize, c_h: f64, rng: &mut R) -> HallucinationPlan {
    let prob = sampling_probability(q, n, c_h);
    let sampled = pairs.iter().copied().filter(|_| rng.gen_bool(prob)).collect();
    HallucinationPlan {
        sampled,
        prob,
        paths: Vec::new(),
    }
}

/// Fractional solution of the hallucinated routing LP: flows of `q` per
/// pair and node usage `x_v = load_v / q`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpH {
    pub x: Vec<f64>,
    pub cost: f64,
    /// Per pair, node paths with their flow.
    pub flows: Vec<Vec<(Vec<NodeId>, f64)>>,
    pub x_cap: f64,
    pub bisection_steps: usize,
}

pub fn x_cap(n: usize, c_x: f64) -> f64 {
    (c_x * (n.max(1) as f64).ln()).max(1.0)
}

struct LpNetwork {
    net: McfNetwork,
    budget: Option<usize>,
    n: usize,
}

fn lp_network(g: &UndirectedMultigraph, q: u64, cap: f64) -> LpNetwork {
    let n = g.node_count();
    let mut net = McfNetwork::new(2 * n);
    let costs: Vec<f64> = g.costs().iter().map(cost_to_f64).collect();
    let budget = costs.iter().any(|&c| c > 0.0).then_some(n);
    let node_res: Vec<usize> = (0..n).map(|_| net.add_resource(q as f64 * cap)).collect();
    let loose = costs.iter().sum::<f64>() * cap * 2.0;
    let budget_res = budget.map(|_| net.add_resource(loose));
    for v in 0..n {
        let mut uses = vec![(node_res[v], 1.0)];
        if let Some(b) = budget_res {
            if costs[v] > 0.0 {
                uses.push((b, costs[v] / q as f64));
            }
        }
        net.add_arc(2 * v, 2 * v + 1, uses);
    }
    let edges: BTreeSet<(NodeId, NodeId)> = g.edges().iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    for (a, b) in edges {
        net.add_arc(2 * a + 1, 2 * b, Vec::new());
        net.add_arc(2 * b + 1, 2 * a, Vec::new());
    }
    LpNetwork {
        net,
        budget: budget_res,
        n,
    }
}

fn to_node_flows(res: &McfResult, n: usize) -> Vec<Vec<(Vec<NodeId>, f64)>> {
    let scale = 1.0 / res.lambda;
    res.flows
        .iter()
        .map(|ps| {
            ps.iter()
                .map(|(arcs, amt)| (arcs.iter().copied().filter(|&a| a < n).collect(), amt * scale))
                .collect()
        })
        .collect()
}

fn evaluate(flows: &[Vec<(Vec<NodeId>, f64)>], g: &UndirectedMultigraph, q: u64) -> (Vec<f64>, f64) {
    let mut x = vec![0.0; g.node_count()];
    for (path, amt) in flows.iter().flatten() {
        for &v in path {
            x[v] += amt / q as f64;
        }
    }
    let cost = x.iter().enumerate().map(|(v, xv)| xv * cost_to_f64(&g.cost(v))).sum();
    (x, cost)
}

/// Minimises `sum c_v x_v` subject to routing `q` units per pair with node
/// load at most `q x_v` and `x_v <= c_x ln n`. The cost budget is found by
/// bisection around a concurrent-flow feasibility test.
pub fn solve_lp_h(g: &UndirectedMultigraph, pairs: &[(NodeId, NodeId)], q: u64, c_x: f64, eps: f64) -> Result<LpH> {
    let n = g.node_count();
    let cap = x_cap(n, c_x);
    for &(s, t) in pairs {
        if !g.reachable(s, None)[t] {
            return Err(Error::Infeasible(format!("no path between {s} and {t}: the empty cut separates them")));
        }
    }
    if pairs.is_empty() {
        return Ok(LpH {
            x: vec![0.0; n],
            cost: 0.0,
            flows: Vec::new(),
            x_cap: cap,
            bisection_steps: 0,
        });
    }
    let mut lp = lp_network(g, q, cap);
    let demands: Vec<McfDemand> = pairs
        .iter()
        .map(|&(s, t)| McfDemand {
            source: 2 * s,
            sink: 2 * t + 1,
            amount: q as f64,
        })
        .collect();
    let run = |lp: &LpNetwork| concurrent_mcf(&lp.net, &demands, eps);
    let first = run(&lp);
    if first.lambda < 1.0 {
        return Err(Error::Infeasible(format!(
            "hallucinated pairs do not fit even with x = {cap:.3} everywhere (throughput {:.3}, dual bound {:.3})",
            first.lambda, first.upper_bound
        )));
    }
    let mut best = to_node_flows(&first, lp.n);
    let (_, mut best_cost) = evaluate(&best, g, q);
    let mut steps = 0;
    if let Some(b) = lp.budget {
        let mut lo = 0.0;
        let mut hi = best_cost;
        for _ in 0..20 {
            if hi - lo <= 0.5 * eps * hi {
                break;
            }
            steps += 1;
            let mid = 0.5 * (lo + hi);
            lp.net.capacity[b] = mid;
            let res = run(&lp);
            if res.lambda >= 1.0 {
                let flows = to_node_flows(&res, lp.n);
                let (_, c) = evaluate(&flows, g, q);
                if c < best_cost {
                    best = flows;
                    best_cost = c;
                }
                hi = mid.min(best_cost);
            } else {
                lo = mid;
            }
        }
    }
    let (x, cost) = evaluate(&best, g, q);
    Ok(LpH {
        x,
        cost,
        flows: best,
        x_cap: cap,
        bisection_steps: steps,
    })
}

/// Picks one path per pair with probability proportional to its flow.
pub fn round_lp_h<R: Rng>(lp: &LpH, rng: &mut R) -> Vec<Vec<NodeId>> {
    lp.flows
        .iter()
        .map(|paths| {
            let total: f64 = paths.iter().map(|p| p.1).sum();
            let mut r = rng.gen::<f64>() * total;
            for (p, amt) in paths {
                if r < *amt {
                    return p.clone();
                }
                r -= amt;
            }
            paths.last().map(|p| p.0.clone()).unwrap_or_default()
        })
        .collect()
}

/// How many of the paths visit each node.
pub fn path_counts(paths: &[Vec<NodeId>], n: usize) -> Vec<u32> {
    let mut c = vec![0u32; n];
    for p in paths {
        for &v in p {
            c[v] += 1;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn everything_sampled_when_q_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let plan = hallucinate(&[0, 1, 2], 2, 64, 4.0, &mut rng);
        assert_eq!(plan.prob, 1.0);
        assert_eq!(plan.sampled, vec![0, 1, 2]);
        assert!(hallucinate(&[], 2, 64, 4.0, &mut rng).sampled.is_empty());
    }

    #[test]
    fn single_path_pair() {
        let g = UndirectedMultigraph::from_int_costs(&[1, 2, 3], &[(0, 1), (1, 2)]).unwrap();
        let lp = solve_lp_h(&g, &[(0, 2)], 4, 8.0, 0.1).unwrap();
        for v in 0..3 {
            assert!((lp.x[v] - 1.0).abs() < 1e-6, "x = {:?}", lp.x);
        }
        assert!((lp.cost - 6.0).abs() < 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(round_lp_h(&lp, &mut rng), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn disconnected_pair_infeasible() {
        let g = UndirectedMultigraph::from_int_costs(&[1, 1, 1], &[(0, 1)]).unwrap();
        assert!(matches!(solve_lp_h(&g, &[(0, 2)], 4, 8.0, 0.1), Err(Error::Infeasible(_))));
    }
}

//! Energy-efficient routing through the tiered reduction to node-capacitated
//! design.
//!
//! A router carrying load `f > 0` draws `sigma + f^alpha`; an idle router
//! draws nothing. Each node is replaced by copies of capacity `q'` whose
//! costs price successive blocks of `q'` units.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{cost_to_f64, shortcut_walk, Cost, McncInstance, NodeId, UndirectedMultigraph};
use crate::mcnc::{solve_mcnc, McncKnobs, McncSolution};

pub const ENERGY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct EevrpInstance {
    pub graph: UndirectedMultigraph,
    pub pairs: Vec<(NodeId, NodeId)>,
    pub sigma: f64,
    pub alpha: f64,
}

impl EevrpInstance {
    pub fn new(graph: UndirectedMultigraph, pairs: Vec<(NodeId, NodeId)>, sigma: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::InvalidInstance(format!("exponent must exceed 1, got {alpha}")));
        }
        if !(sigma >= 1.0 && sigma.is_finite()) {
            return Err(Error::InvalidInstance(format!(
                "static power must be at least 1, got {sigma}; use plain convex routing for sigma = 0"
            )));
        }
        let n = graph.node_count();
        for &(s, t) in &pairs {
            if s >= n || t >= n || s == t {
                return Err(Error::InvalidInstance(format!("bad pair ({s},{t})")));
            }
        }
        if pairs.len() as f64 > (n as f64).powi(4) {
            return Err(Error::InvalidInstance(format!("{} pairs exceed n^4 for n = {n}", pairs.len())));
        }
        Ok(EevrpInstance { graph, pairs, sigma, alpha })
    }
}

/// `max(1, ceil(sigma^(1/alpha)))`, tolerant to floating error at exact powers.
pub fn q_prime(sigma: f64, alpha: f64) -> u64 {
    let root = sigma.powf(1.0 / alpha);
    ((root - ENERGY_TOL * root.max(1.0)).ceil() as u64).max(1)
}

/// Cost of the `i`-th copy (1-based).
pub fn tier_cost(i: usize, sigma: f64, alpha: f64, qp: u64) -> f64 {
    if i == 1 {
        return 2.0 * sigma;
    }
    let qp = qp as f64;
    let i = i as f64;
    (i * qp).powf(alpha) - ((i - 1.0) * qp + 1.0).powf(alpha)
}

/// Power of a routing: every node with positive load pays `sigma + f^alpha`.
pub fn energy_of(paths: &[Vec<NodeId>], n: usize, sigma: f64, alpha: f64) -> f64 {
    node_loads(paths, n)
        .into_iter()
        .filter(|&f| f > 0)
        .map(|f| sigma + (f as f64).powf(alpha))
        .sum()
}

pub fn node_loads(paths: &[Vec<NodeId>], n: usize) -> Vec<u64> {
    let mut loads = vec![0u64; n];
    for p in paths {
        for &v in p {
            loads[v] += 1;
        }
    }
    loads
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TieredReduction {
    pub q_prime: u64,
    pub tier_costs: Vec<f64>,
    /// Reduced node ids of each original node's copies, cheapest first.
    pub copy_map: Vec<Vec<NodeId>>,
    /// Pendant terminals per pair.
    pub pendants: Vec<(NodeId, NodeId)>,
    /// Original node behind every reduced node.
    pub original: Vec<NodeId>,
    pub monotone: bool,
}

fn tier_as_cost(c: f64) -> Cost {
    Ratio::new((c * 1000.0).round() as i64, 1000)
}

/// Builds the capacitated instance: `ceil(k/q')` tiered copies per node,
/// complete bipartite edges between copies of adjacent nodes and one
/// zero-cost pendant per terminal, attached greedily to the cheapest copy
/// with room.
pub fn reduce_to_mcnc(e: &EevrpInstance) -> Result<(McncInstance, TieredReduction)> {
    let n = e.graph.node_count();
    let k = e.pairs.len();
    let qp = q_prime(e.sigma, e.alpha);
    let copies = k.div_ceil(qp as usize).max(1);
    let tier_costs: Vec<f64> = (1..=copies).map(|i| tier_cost(i, e.sigma, e.alpha, qp)).collect();
    let monotone = tier_costs.windows(2).all(|w| w[0] <= w[1] + ENERGY_TOL * w[1].abs().max(1.0));
    if !monotone {
        log::warn!("tier costs {tier_costs:?} are not non-decreasing");
    }
    let mut g = UndirectedMultigraph::with_costs(Vec::new(), Vec::new())?;
    let mut copy_map = vec![Vec::with_capacity(copies); n];
    let mut original = Vec::new();
    for v in 0..n {
        for (i, &c) in tier_costs.iter().enumerate() {
            let id = g.add_node(tier_as_cost(c), format!("{}#{}", e.graph.label(v), i + 1));
            copy_map[v].push(id);
            original.push(v);
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for &(a, b) in e.graph.edges() {
        if !seen.insert((a.min(b), a.max(b))) {
            continue;
        }
        for &x in &copy_map[a] {
            for &y in &copy_map[b] {
                g.add_edge(x, y)?;
            }
        }
    }
    let mut attached: BTreeMap<NodeId, u64> = BTreeMap::new();
    let mut pendant = |g: &mut UndirectedMultigraph, original: &mut Vec<NodeId>, v: NodeId| -> Result<NodeId> {
        let slot = copy_map[v]
            .iter()
            .copied()
            .find(|c| attached.get(c).copied().unwrap_or(0) < qp)
            .ok_or_else(|| Error::InvalidInstance(format!("node {v} is a terminal of more than {} pairs", copies as u64 * qp)))?;
        *attached.entry(slot).or_default() += 1;
        let p = g.add_node(Cost::from_integer(0), format!("{}~p{}", e.graph.label(v), original.len()));
        original.push(v);
        g.add_edge(p, slot)?;
        Ok(p)
    };
    let mut pendants = Vec::with_capacity(k);
    for &(s, t) in &e.pairs {
        let ps = pendant(&mut g, &mut original, s)?;
        let pt = pendant(&mut g, &mut original, t)?;
        pendants.push((ps, pt));
    }
    let inst = McncInstance::new(g, &pendants, qp)?;
    Ok((
        inst,
        TieredReduction {
            q_prime: qp,
            tier_costs,
            copy_map,
            pendants,
            original,
            monotone,
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiftedSolution {
    pub paths: Vec<Vec<NodeId>>,
    pub loads: Vec<u64>,
    pub energy: f64,
    /// Reduced cost over the reference optimum, when one is supplied.
    pub rho1: Option<f64>,
    /// Congestion of the reduced solution, at least 1.
    pub rho2: f64,
    pub factor: Option<f64>,
}

/// Collapses copies and pendants back onto original nodes.
pub fn lift_paths(routing: &[Vec<NodeId>], red: &TieredReduction, e: &EevrpInstance) -> Result<Vec<Vec<NodeId>>> {
    let mut out = Vec::with_capacity(routing.len());
    for (i, path) in routing.iter().enumerate() {
        let mut walk: Vec<NodeId> = Vec::with_capacity(path.len());
        for &x in path {
            let v = *red
                .original
                .get(x)
                .ok_or_else(|| Error::MalformedSolution(format!("node {x} is not part of the reduction")))?;
            if walk.last() != Some(&v) {
                walk.push(v);
            }
        }
        for w in walk.windows(2) {
            if !e.graph.has_edge(w[0], w[1]) {
                return Err(Error::MalformedSolution(format!("pair {i} jumps from {} to {} after collapsing copies", w[0], w[1])));
            }
        }
        let (s, t) = e.pairs[i];
        if walk.first() != Some(&s) || walk.last() != Some(&t) {
            return Err(Error::MalformedSolution(format!("pair {i} does not connect {s} and {t}")));
        }
        out.push(shortcut_walk(&walk));
    }
    Ok(out)
}

pub fn lift_solution(sol: &McncSolution, red: &TieredReduction, e: &EevrpInstance, reference: Option<&Cost>) -> Result<LiftedSolution> {
    let paths = lift_paths(&sol.routing, red, e)?;
    let n = e.graph.node_count();
    let loads = node_loads(&paths, n);
    let energy = energy_of(&paths, n, e.sigma, e.alpha);
    let rho2 = sol.congestion.max(1.0);
    let rho1 = reference.map(|opt| {
        let opt = cost_to_f64(opt);
        if opt > 0.0 {
            (cost_to_f64(&sol.cost) / opt).max(1.0)
        } else {
            1.0
        }
    });
    Ok(LiftedSolution {
        paths,
        loads,
        energy,
        rho1,
        rho2,
        factor: rho1.map(|r| r * rho2.powf(e.alpha)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergySolution {
    pub reduction: TieredReduction,
    pub reduced: McncSolution,
    pub lifted: LiftedSolution,
}

pub fn solve_energy(e: &EevrpInstance, knobs: &McncKnobs, seed: u64) -> Result<EnergySolution> {
    let (inst, red) = reduce_to_mcnc(e)?;
    let reduced = solve_mcnc(&inst, knobs, seed).map_err(|err| err.in_phase("reduced solve"))?;
    let lifted = lift_solution(&reduced, &red, e, None)?;
    Ok(EnergySolution {
        reduction: red,
        reduced,
        lifted,
    })
}

//! Exact brute-force baselines for small instances.

use std::time::{Duration, Instant};

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::max_flow_multi_source;
use crate::graph::{Cost, McncInstance, NodeId, SsncInstance, UndirectedMultigraph};
use crate::steiner::{density_target_cap, DensityCandidate, SteinerTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_nodes: usize,
    pub max_pairs: usize,
    pub time_cap: Duration,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_nodes: 12,
            max_pairs: 5,
            time_cap: Duration::from_secs(30),
        }
    }
}

struct Clock {
    start: Instant,
    cap: Duration,
}

impl Clock {
    fn new(b: &OracleBudget) -> Self {
        Clock {
            start: Instant::now(),
            cap: b.time_cap,
        }
    }

    fn check(&self) -> Result<()> {
        if self.start.elapsed() > self.cap {
            Err(Error::Exhausted(format!("time cap of {:?} reached", self.cap)))
        } else {
            Ok(())
        }
    }
}

/// Subset enumeration order. Both orders must agree on every optimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnumerationOrder {
    CostAscending,
    SizeAscending,
}

fn node_budget(n: usize, b: &OracleBudget) -> Result<()> {
    if n > b.max_nodes {
        return Err(Error::Exhausted(format!("{n} nodes exceed the oracle budget of {}", b.max_nodes)));
    }
    Ok(())
}

fn mask_nodes(mask: u32, n: usize) -> Vec<NodeId> {
    (0..n).filter(|v| mask & (1 << v) != 0).collect()
}

/// All masks containing `required`, in the requested order. Cost order
/// breaks ties by size, then by mask value.
fn ordered_masks(n: usize, required: u32, weight: impl Fn(u32) -> Cost, order: EnumerationOrder) -> Vec<u32> {
    let mut masks: Vec<u32> = (0u32..(1 << n)).filter(|m| m & required == required).collect();
    match order {
        EnumerationOrder::CostAscending => {
            let mut keyed: Vec<(Cost, u32, u32)> = masks.iter().map(|&m| (weight(m), m.count_ones(), m)).collect();
            keyed.sort();
            masks = keyed.into_iter().map(|k| k.2).collect();
        }
        EnumerationOrder::SizeAscending => masks.sort_by_key(|&m| (m.count_ones(), m)),
    }
    masks
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SsncOptimum {
    pub nodes: Vec<NodeId>,
    pub cost: Cost,
    /// One path per source, in source order.
    pub paths: Vec<Vec<NodeId>>,
}

/// Depth-first search for single paths per demand with node loads within
/// capacity. `targets[i]` is the destination of demand `i`.
struct PathSearch<'a> {
    g: &'a UndirectedMultigraph,
    allowed: Vec<bool>,
    cap: Vec<u64>,
    load: Vec<u64>,
    clock: &'a Clock,
    steps: u64,
}

impl<'a> PathSearch<'a> {
    fn assign(&mut self, order: &[(NodeId, NodeId, u64)], i: usize, paths: &mut Vec<Vec<NodeId>>) -> Result<bool> {
        if i == order.len() {
            return Ok(true);
        }
        let (s, t, d) = order[i];
        if self.load[s] + d > self.cap[s] {
            return Ok(false);
        }
        let mut path = vec![s];
        self.load[s] += d;
        let found = self.extend(order, i, d, t, &mut path, paths)?;
        self.load[s] -= d;
        Ok(found)
    }

    fn extend(
        &mut self,
        order: &[(NodeId, NodeId, u64)],
        i: usize,
        d: u64,
        t: NodeId,
        path: &mut Vec<NodeId>,
        paths: &mut Vec<Vec<NodeId>>,
    ) -> Result<bool> {
        self.steps += 1;
        if self.steps.is_multiple_of(4096) {
            self.clock.check()?;
        }
        let x = *path.last().unwrap();
        if x == t {
            paths.push(path.clone());
            if self.assign(order, i + 1, paths)? {
                return Ok(true);
            }
            paths.pop();
            return Ok(false);
        }
        let nbrs: Vec<NodeId> = self.g.neighbors(x).to_vec();
        let mut last = usize::MAX;
        for y in nbrs {
            if y == last {
                continue;
            }
            last = y;
            if !self.allowed[y] || path.contains(&y) || self.load[y] + d > self.cap[y] {
                continue;
            }
            self.load[y] += d;
            path.push(y);
            let found = self.extend(order, i, d, t, path, paths)?;
            path.pop();
            self.load[y] -= d;
            if found {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

fn ssnc_feasible_in(inst: &SsncInstance, mask: u32, clock: &Clock) -> Result<Option<Vec<Vec<NodeId>>>> {
    let n = inst.graph.node_count();
    let allowed: Vec<bool> = (0..n).map(|v| mask & (1 << v) != 0).collect();
    // fractional prefilter on the induced subgraph
    let mut dg = inst.to_directed();
    dg.arcs.retain(|&(a, b)| allowed[a] && allowed[b]);
    let total = inst.total_demand();
    let (value, _) = max_flow_multi_source(&dg, &inst.sources, inst.sink);
    if value < total {
        return Ok(None);
    }
    let mut order: Vec<(usize, (NodeId, NodeId, u64))> = inst
        .sources
        .iter()
        .enumerate()
        .map(|(i, &(s, d))| (i, (s, inst.sink, d)))
        .collect();
    order.sort_by(|a, b| b.1 .2.cmp(&a.1 .2).then(a.0.cmp(&b.0)));
    let cap: Vec<u64> = (0..n).map(|v| inst.node_capacity(v).unwrap_or(u64::MAX / 4)).collect();
    let mut search = PathSearch {
        g: &inst.graph,
        allowed,
        cap,
        load: vec![0; n],
        clock,
        steps: 0,
    };
    let jobs: Vec<(NodeId, NodeId, u64)> = order.iter().map(|o| o.1).collect();
    let mut found = Vec::new();
    if !search.assign(&jobs, 0, &mut found)? {
        return Ok(None);
    }
    let mut paths = vec![Vec::new(); jobs.len()];
    for (slot, p) in order.iter().zip(found) {
        paths[slot.0] = p;
    }
    Ok(Some(paths))
}

/// Minimum-cost node set that supports an unsplittable routing of every
/// demand. `Ok(None)` means the instance is infeasible.
pub fn exact_ssnc(inst: &SsncInstance, budget: &OracleBudget, order: EnumerationOrder) -> Result<Option<SsncOptimum>> {
    let n = inst.graph.node_count();
    node_budget(n, budget)?;
    if inst.sources.len() > budget.max_pairs {
        return Err(Error::Exhausted(format!("{} sources exceed the oracle budget", inst.sources.len())));
    }
    let clock = Clock::new(budget);
    let mut required = 1u32 << inst.sink;
    for &(s, _) in &inst.sources {
        required |= 1 << s;
    }
    let weight = |m: u32| mask_nodes(m, n).iter().fold(Cost::zero(), |a, &v| a + inst.cost(v));
    let mut best: Option<SsncOptimum> = None;
    for mask in ordered_masks(n, required, weight, order) {
        clock.check()?;
        let cost = weight(mask);
        if let Some(b) = &best {
            if order == EnumerationOrder::CostAscending || cost >= b.cost {
                if order == EnumerationOrder::CostAscending {
                    break;
                }
                continue;
            }
        }
        if let Some(paths) = ssnc_feasible_in(inst, mask, &clock)? {
            best = Some(SsncOptimum {
                nodes: mask_nodes(mask, n),
                cost,
                paths,
            });
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McncOptimum {
    pub nodes: Vec<NodeId>,
    pub cost: Cost,
    /// Optimum under integral single-path routing, when computed (at most
    /// three pairs) and different from the fractional one.
    pub integral_cost: Option<Cost>,
}

/// Fractional multicommodity feasibility of the subgraph induced by `mask`:
/// an exact LP over arc flows with node loads at most `capacity`.
fn mcnc_fractional_feasible(inst: &McncInstance, allowed: &[bool]) -> bool {
    let g = &inst.graph;
    let n = g.node_count();
    let mut arcs = Vec::new();
    for &(a, b) in g.edges() {
        if allowed[a] && allowed[b] {
            arcs.push((a, b));
            arcs.push((b, a));
        }
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let k = inst.pairs.len();
    let vars: Vec<Vec<minilp::Variable>> = (0..k)
        .map(|_| arcs.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect())
        .collect();
    for (j, p) in inst.pairs.iter().enumerate() {
        for v in 0..n {
            if !allowed[v] {
                continue;
            }
            let mut row = Vec::new();
            for (i, &(a, b)) in arcs.iter().enumerate() {
                if a == v {
                    row.push((vars[j][i], 1.0));
                } else if b == v {
                    row.push((vars[j][i], -1.0));
                }
            }
            let rhs = if v == p.source {
                1.0
            } else if v == p.sink {
                -1.0
            } else {
                0.0
            };
            if row.is_empty() {
                if rhs != 0.0 {
                    return false;
                }
                continue;
            }
            lp.add_constraint(row.as_slice(), ComparisonOp::Eq, rhs);
        }
    }
    let q = inst.capacity as f64;
    for v in 0..n {
        if !allowed[v] {
            continue;
        }
        let mut row = Vec::new();
        let mut fixed = 0.0;
        for (j, p) in inst.pairs.iter().enumerate() {
            if p.source == v {
                fixed += 1.0;
            }
            for (i, &(_, b)) in arcs.iter().enumerate() {
                if b == v {
                    row.push((vars[j][i], 1.0));
                }
            }
        }
        if row.is_empty() {
            if fixed > q {
                return false;
            }
            continue;
        }
        lp.add_constraint(row.as_slice(), ComparisonOp::Le, q - fixed);
    }
    lp.solve().is_ok()
}

fn mcnc_integral_feasible(inst: &McncInstance, allowed: &[bool], clock: &Clock) -> Result<bool> {
    let n = inst.graph.node_count();
    let jobs: Vec<(NodeId, NodeId, u64)> = inst.pairs.iter().map(|p| (p.source, p.sink, 1)).collect();
    let mut search = PathSearch {
        g: &inst.graph,
        allowed: allowed.to_vec(),
        cap: vec![inst.capacity; n],
        load: vec![0; n],
        clock,
        steps: 0,
    };
    search.assign(&jobs, 0, &mut Vec::new())
}

/// Minimum-cost node set whose induced subgraph routes one unit per pair
/// fractionally under node capacity `q`. For at most three pairs the
/// integral optimum is computed as well.
pub fn exact_mcnc_fractional(inst: &McncInstance, budget: &OracleBudget, order: EnumerationOrder) -> Result<Option<McncOptimum>> {
    let g = &inst.graph;
    let n = g.node_count();
    node_budget(n, budget)?;
    if inst.pairs.len() > budget.max_pairs {
        return Err(Error::Exhausted(format!("{} pairs exceed the oracle budget", inst.pairs.len())));
    }
    let clock = Clock::new(budget);
    let mut required = 0u32;
    for p in &inst.pairs {
        required |= (1 << p.source) | (1 << p.sink);
    }
    let weight = |m: u32| mask_nodes(m, n).iter().fold(Cost::zero(), |a, &v| a + g.cost(v));
    let masks = ordered_masks(n, required, weight, order);
    let allowed_of = |m: u32| (0..n).map(|v| m & (1 << v) != 0).collect::<Vec<bool>>();
    let mut best: Option<(u32, Cost)> = None;
    for &mask in &masks {
        clock.check()?;
        let cost = weight(mask);
        if let Some((_, b)) = best {
            if order == EnumerationOrder::CostAscending {
                break;
            }
            if cost >= b {
                continue;
            }
        }
        if mcnc_fractional_feasible(inst, &allowed_of(mask)) {
            best = Some((mask, cost));
        }
    }
    let Some((mask, cost)) = best else { return Ok(None) };
    let mut integral_cost = None;
    if inst.pairs.len() <= 3 {
        for &m in &masks {
            let c = weight(m);
            if c < cost {
                continue;
            }
            if mcnc_integral_feasible(inst, &allowed_of(m), &clock)? {
                let better = integral_cost.is_none_or(|b: Cost| c < b);
                if better {
                    integral_cost = Some(c);
                }
                if order == EnumerationOrder::CostAscending {
                    break;
                }
            }
        }
        if integral_cost == Some(cost) {
            integral_cost = None;
        }
    }
    Ok(Some(McncOptimum {
        nodes: mask_nodes(mask, n),
        cost,
        integral_cost,
    }))
}

fn connected_masks(g: &UndirectedMultigraph, allowed: &[bool], order: EnumerationOrder) -> Vec<u32> {
    let n = g.node_count();
    let mut out = Vec::new();
    match order {
        EnumerationOrder::CostAscending => {
            for mask in 1u32..(1 << n) {
                let nodes = mask_nodes(mask, n);
                if nodes.iter().all(|&v| allowed[v]) && g.is_connected_within(&nodes) {
                    out.push(mask);
                }
            }
        }
        EnumerationOrder::SizeAscending => {
            // grow connected sets one neighbor at a time
            let mut layer: std::collections::BTreeSet<u32> = (0..n).filter(|&v| allowed[v]).map(|v| 1u32 << v).collect();
            while !layer.is_empty() {
                out.extend(layer.iter().copied());
                let mut next = std::collections::BTreeSet::new();
                for &m in &layer {
                    for v in mask_nodes(m, n) {
                        for &w in g.neighbors(v) {
                            if allowed[w] && m & (1 << w) == 0 {
                                next.insert(m | (1 << w));
                            }
                        }
                    }
                }
                layer = next;
            }
        }
    }
    out
}

fn mask_weight(mask: u32, vals: &[f64]) -> f64 {
    (0..vals.len()).filter(|v| mask & (1 << v) != 0).map(|v| vals[v]).sum()
}

fn mask_cover(mask: u32, w: &[u64]) -> u64 {
    (0..w.len()).filter(|v| mask & (1 << v) != 0).map(|v| w[v]).sum()
}

fn finite_mask(beta: &[f64]) -> Vec<bool> {
    beta.iter().map(|b| b.is_finite()).collect()
}

/// Cheapest connected node set containing `root` with terminal weight at
/// least `target`. Weights must be exact in `f64` for ties to be stable.
pub fn exact_pnwst(
    g: &UndirectedMultigraph,
    beta: &[f64],
    root: NodeId,
    terminal_weight: &[u64],
    target: u64,
    order: EnumerationOrder,
) -> Result<SteinerTree> {
    let n = g.node_count();
    if n > 20 {
        return Err(Error::Exhausted(format!("{n} nodes is too many to enumerate")));
    }
    let mut best: Option<(f64, u32)> = None;
    for mask in connected_masks(g, &finite_mask(beta), order) {
        if mask & (1 << root) == 0 || mask_cover(mask, terminal_weight) < target {
            continue;
        }
        let c = mask_weight(mask, beta);
        let better = match best {
            None => true,
            Some((bc, bm)) => c < bc || (c == bc && mask_nodes(mask, n) < mask_nodes(bm, n)),
        };
        if better {
            best = Some((c, mask));
        }
    }
    let (cost, mask) = best.ok_or_else(|| Error::Infeasible("no tree reaches the target".into()))?;
    Ok(SteinerTree {
        nodes: mask_nodes(mask, n),
        cost,
        covered: mask_cover(mask, terminal_weight),
    })
}

/// Exact minimum density over connected sets with newly covered demand in
/// `[1, ceil(q (1 + log2 q))]` that cover at least `q` or contain the sink.
pub fn exact_density(g: &UndirectedMultigraph, beta: &[f64], uncovered: &[u64], capacity: u64, sink: NodeId, order: EnumerationOrder) -> Result<DensityCandidate> {
    let n = g.node_count();
    if n > 20 {
        return Err(Error::Exhausted(format!("{n} nodes is too many to enumerate")));
    }
    let lmax = density_target_cap(capacity);
    let mut best: Option<DensityCandidate> = None;
    for mask in connected_masks(g, &finite_mask(beta), order) {
        let c = mask_cover(mask, uncovered);
        let has_sink = mask & (1 << sink) != 0;
        if c == 0 || c > lmax || (c < capacity && !has_sink) {
            continue;
        }
        let cost = mask_weight(mask, beta);
        let cand = DensityCandidate {
            tree: mask_nodes(mask, n),
            covered: c,
            cost,
            density: cost / c as f64,
            contains_sink: has_sink,
        };
        let better = match &best {
            None => true,
            Some(b) => cand.density < b.density || (cand.density == b.density && cand.tree < b.tree),
        };
        if better {
            best = Some(cand);
        }
    }
    best.ok_or_else(|| Error::Infeasible("no admissible tree".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioRecord {
    pub instance: String,
    pub solver_cost: String,
    pub oracle_cost: Option<String>,
    pub ratio: Option<f64>,
    pub congestion: f64,
    /// Set when the oracle gave up, so no ratio exists.
    pub flagged: bool,
}

/// Compares a solver cost with an oracle result.
pub fn ratio_report(instance: &str, solver_cost: Cost, congestion: f64, oracle: &Result<Option<Cost>>) -> RatioRecord {
    let (oracle_cost, ratio, flagged) = match oracle {
        Ok(Some(opt)) => {
            let r = if opt.is_zero() {
                if solver_cost.is_zero() {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                (solver_cost / opt).to_f64().unwrap_or(f64::INFINITY)
            };
            (Some(opt.to_string()), Some(r), false)
        }
        Ok(None) => (None, None, false),
        Err(_) => (None, None, true),
    };
    RatioRecord {
        instance: instance.to_string(),
        solver_cost: solver_cost.to_string(),
        oracle_cost,
        ratio,
        congestion,
        flagged,
    }
}

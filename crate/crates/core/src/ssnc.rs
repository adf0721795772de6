//! Single-sink node-capacitated network design.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::Serialize;

use crate::clustering::{find_clusters_with, Cluster};
use crate::error::{Error, Result};
use crate::flow::min_cost_flow_node_cap;
use crate::graph::{path_to_root, shortcut_walk, validate_ssnc, Cost, DirectedNodeCapGraph, NodeId, SsncInstance, Violation};
use crate::oracle::{exact_ssnc, EnumerationOrder, OracleBudget};

#[derive(Clone, Debug)]
pub struct SsncKnobs {
    /// Per-node capacity multiplier for root routing; `None` picks the default.
    pub u: Option<u64>,
    /// How many times `u` may be doubled when root routing fails.
    pub max_escalations: u32,
    /// Load at which the cover loop excludes a node.
    pub llsc_hard_cap: Option<u32>,
    pub compare_oracle: bool,
}

impl Default for SsncKnobs {
    fn default() -> Self {
        SsncKnobs {
            u: None,
            max_escalations: 4,
            llsc_hard_cap: None,
            compare_oracle: false,
        }
    }
}

/// `ceil(ln q * ln^2 n) + 1`.
pub fn default_u(q: u64, n: usize) -> u64 {
    let ln_n = (n.max(1) as f64).ln();
    ((q.max(1) as f64).ln() * ln_n * ln_n).ceil() as u64 + 1
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SourceRoute {
    pub source: NodeId,
    pub demand: u64,
    pub path: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SsncSolution {
    /// Sorted selected node set.
    pub nodes: Vec<NodeId>,
    pub routing: Vec<SourceRoute>,
    pub cost: Cost,
    pub loads: Vec<u64>,
    /// Maximum load over capacity, ignoring the sink.
    pub congestion: f64,
    pub u: u64,
    pub escalations: u32,
    pub load_bound: u32,
    pub cluster_count: usize,
    /// Largest number of clusters sharing a non-sink node.
    pub max_membership: u32,
    pub oracle_cost: Option<Cost>,
}

/// One cluster after aggregation: its root and the tree path of every
/// assigned source to that root.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregated {
    pub root: NodeId,
    pub demand: u64,
    pub routes: Vec<SourceRoute>,
}

impl Aggregated {
    pub fn loads(&self, n: usize) -> Vec<u64> {
        let mut loads = vec![0u64; n];
        for r in &self.routes {
            for &v in &r.path {
                loads[v] += r.demand;
            }
        }
        loads
    }
}

fn choose_root(inst: &SsncInstance, tree: &[NodeId]) -> NodeId {
    if tree.contains(&inst.sink) {
        return inst.sink;
    }
    tree.iter()
        .filter_map(|&v| inst.graph.cheapest_path(v, inst.sink, None).map(|(_, c)| (c, v)))
        .min()
        .map(|(_, v)| v)
        .unwrap_or(tree[0])
}

/// Roots every cluster (at the sink when the tree contains it, otherwise at
/// its node closest to the sink) and routes its sources to the root inside
/// the tree.
pub fn aggregate_at_roots(clusters: &[Cluster], inst: &SsncInstance) -> Result<Vec<Aggregated>> {
    clusters
        .iter()
        .map(|c| {
            let root = choose_root(inst, &c.tree);
            let parent = inst.graph.bfs_tree(&c.tree, root);
            let routes = c
                .assigned
                .iter()
                .map(|&(s, d)| {
                    if !parent.contains_key(&s) {
                        return Err(Error::MalformedSolution(format!("source {s} outside its cluster tree")));
                    }
                    Ok(SourceRoute {
                        source: s,
                        demand: d,
                        path: path_to_root(&parent, s),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Aggregated {
                root,
                demand: c.load(),
                routes,
            })
        })
        .collect()
}

/// Ships each root's whole demand along one path to the sink. Paths come
/// from a unit-per-root min-cost flow where every node admits `u` roots
/// (scaled up for nodes whose capacity exceeds the uniform one).
pub fn route_roots_to_sink(roots: &[(NodeId, u64)], inst: &SsncInstance, u: u64) -> Result<Vec<Vec<NodeId>>> {
    if u == 0 {
        return Err(Error::InvalidInstance("u must be at least 1".into()));
    }
    let n = inst.graph.node_count();
    let caps = (0..n)
        .map(|v| inst.node_capacity(v).map(|c| u * c.div_ceil(inst.capacity).max(1)))
        .collect();
    let costs = (0..n).map(|v| inst.cost(v)).collect();
    let g = DirectedNodeCapGraph::from_undirected(&inst.graph, caps, costs);
    let movers: Vec<NodeId> = roots.iter().filter(|r| r.0 != inst.sink).map(|r| r.0).collect();
    let (paths, _) = min_cost_flow_node_cap(&g, &movers, inst.sink, u64::MAX)?;
    let mut it = paths.into_iter();
    Ok(roots
        .iter()
        .map(|r| if r.0 == inst.sink { vec![inst.sink] } else { it.next().unwrap() })
        .collect())
}

fn check_instance(inst: &SsncInstance) -> Result<()> {
    let violations = validate_ssnc(inst);
    if let Some(v) = violations.first() {
        let msg = violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
        return Err(match v {
            Violation::DemandExceedsCapacity { .. } | Violation::NoPath { .. } => Error::Infeasible(msg),
            _ => Error::InvalidInstance(msg),
        });
    }
    let n = inst.graph.node_count() as f64;
    if inst.capacity as f64 > n.powi(4) {
        return Err(Error::InvalidInstance(format!(
            "capacity {} exceeds n^4; the instance is a Steiner-tree problem",
            inst.capacity
        )));
    }
    Ok(())
}

/// Checks that every source's path runs from it to the sink along graph
/// edges and recomputes node loads.
pub fn audit_routing(inst: &SsncInstance, routing: &[SourceRoute]) -> Result<Vec<u64>> {
    let mut loads = vec![0u64; inst.graph.node_count()];
    let mut demand: BTreeMap<NodeId, u64> = inst.sources.iter().copied().collect();
    for r in routing {
        if demand.remove(&r.source) != Some(r.demand) {
            return Err(Error::MalformedSolution(format!("source {} routed with the wrong demand", r.source)));
        }
        if r.path.first() != Some(&r.source) || r.path.last() != Some(&inst.sink) {
            return Err(Error::MalformedSolution(format!("path of {} does not reach the sink", r.source)));
        }
        if r.path.windows(2).any(|w| !inst.graph.has_edge(w[0], w[1])) {
            return Err(Error::MalformedSolution(format!("path of {} uses a non-edge", r.source)));
        }
        for &v in &r.path {
            loads[v] += r.demand;
        }
    }
    if let Some((s, _)) = demand.into_iter().next() {
        return Err(Error::MalformedSolution(format!("source {s} not routed")));
    }
    Ok(loads)
}

pub fn solve_ssnc(inst: &SsncInstance, knobs: &SsncKnobs) -> Result<SsncSolution> {
    check_instance(inst)?;
    let n = inst.graph.node_count();
    let report = find_clusters_with(inst, knobs.llsc_hard_cap).map_err(|e| e.in_phase("clustering"))?;
    let aggregated = aggregate_at_roots(&report.clusters, inst).map_err(|e| e.in_phase("aggregation"))?;
    let roots: Vec<(NodeId, u64)> = aggregated.iter().map(|a| (a.root, a.demand)).collect();

    let mut u = knobs.u.unwrap_or_else(|| default_u(inst.capacity, n));
    let mut escalations = 0;
    let paths = loop {
        match route_roots_to_sink(&roots, inst, u) {
            Ok(p) => break p,
            Err(Error::Infeasible(msg)) if escalations < knobs.max_escalations => {
                log::warn!("root routing infeasible at u = {u} ({msg}); doubling");
                u *= 2;
                escalations += 1;
            }
            Err(e) => return Err(e.in_phase("root routing")),
        }
    };

    let mut routing = Vec::new();
    for (agg, p) in aggregated.iter().zip(&paths) {
        for r in &agg.routes {
            let mut walk = r.path.clone();
            walk.extend_from_slice(&p[1..]);
            routing.push(SourceRoute {
                source: r.source,
                demand: r.demand,
                path: shortcut_walk(&walk),
            });
        }
    }
    let order: BTreeMap<NodeId, usize> = inst.sources.iter().enumerate().map(|(i, s)| (s.0, i)).collect();
    routing.sort_by_key(|r| order[&r.source]);
    let loads = audit_routing(inst, &routing)?;

    let mut used = vec![false; n];
    used[inst.sink] = true;
    for r in &routing {
        for &v in &r.path {
            used[v] = true;
        }
    }
    let nodes: Vec<NodeId> = (0..n).filter(|&v| used[v]).collect();
    let cost = nodes.iter().fold(Cost::zero(), |a, &v| a + inst.cost(v));
    let congestion = (0..n)
        .filter(|&v| v != inst.sink)
        .map(|v| loads[v] as f64 / inst.capacity as f64)
        .fold(0.0, f64::max);
    let max_membership = (0..n).filter(|&v| v != inst.sink).map(|v| report.membership[v]).max().unwrap_or(0);
    let oracle_cost = if knobs.compare_oracle {
        match exact_ssnc(inst, &OracleBudget::default(), EnumerationOrder::CostAscending) {
            Ok(opt) => opt.map(|o| o.cost),
            Err(e) => {
                log::info!("oracle skipped: {e}");
                None
            }
        }
    } else {
        None
    };
    Ok(SsncSolution {
        nodes,
        routing,
        cost,
        loads,
        congestion,
        u,
        escalations,
        load_bound: report.load_bound,
        cluster_count: report.clusters.len(),
        max_membership,
        oracle_cost,
    })
}

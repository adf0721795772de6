//! Clustering of single-sink demands into low-load trees.
//!
//! Two constructions live here. [`cluster_recursive`] merges sources along
//! an acyclic unsplittable flow at their deepest merge points, re-running
//! the unsplittable conversion between passes. [`find_clusters`] computes a
//! clustering without a reference flow by greedy low-load set cover over
//! trees, using the max-density oracle.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{dgg_general, dgg_unsplittable, FlowPath, SplittableFlow, UnsplittableFlow};
use crate::graph::{cost_to_f64, Cost, NodeId, SsncInstance};
use crate::steiner::{density_target_cap, max_density_tree, DensityQuery};

/// A tree of graph nodes with the sources assigned to it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cluster {
    /// Sorted node set.
    pub tree: Vec<NodeId>,
    /// Assigned sources with their demands.
    pub assigned: Vec<(NodeId, u64)>,
    pub root: Option<NodeId>,
}

impl Cluster {
    pub fn singleton(source: NodeId, demand: u64) -> Self {
        Cluster {
            tree: vec![source],
            assigned: vec![(source, demand)],
            root: None,
        }
    }

    pub fn load(&self) -> u64 {
        self.assigned.iter().map(|a| a.1).sum()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.tree.binary_search(&v).is_ok()
    }
}

fn union_sorted(parts: impl IntoIterator<Item = NodeId>) -> Vec<NodeId> {
    let set: BTreeSet<NodeId> = parts.into_iter().collect();
    set.into_iter().collect()
}

/// One merge performed by a pass: the center, the indices of the merged
/// inputs, and the prefix of each merged input's path up to the center.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Merge {
    pub center: NodeId,
    pub members: Vec<usize>,
    pub prefixes: Vec<Vec<NodeId>>,
    /// Union of the prefixes.
    pub tau: Vec<NodeId>,
}

#[derive(Clone, Debug, Default)]
pub struct StepOutput {
    pub output: Vec<Cluster>,
    pub next_x: Vec<NodeId>,
    pub next_d: Vec<u64>,
    pub next_trees: Vec<Cluster>,
    /// Suffixes of the merged paths from each new source to the sink.
    pub suffix_flow: SplittableFlow,
    pub merges: Vec<Merge>,
}

fn check_acyclic_paths(flow: &UnsplittableFlow, sink: NodeId) -> Result<Vec<NodeId>> {
    if flow.paths.len() != flow.demands.len() {
        return Err(Error::MalformedFlow("one path per demand required".into()));
    }
    let mut arcs: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    let mut nodes: BTreeSet<NodeId> = BTreeSet::new();
    for (p, &(s, _)) in flow.paths.iter().zip(&flow.demands) {
        if p.first() != Some(&s) || p.last() != Some(&sink) {
            return Err(Error::MalformedFlow(format!("path of source {s} does not run from {s} to {sink}")));
        }
        let distinct: BTreeSet<NodeId> = p.iter().copied().collect();
        if distinct.len() != p.len() {
            return Err(Error::MalformedFlow(format!("path of source {s} repeats a node")));
        }
        nodes.extend(p.iter().copied());
        for w in p.windows(2) {
            arcs.insert((w[0], w[1]));
        }
    }
    // Kahn's algorithm, smallest id first
    let mut indeg: BTreeMap<NodeId, usize> = nodes.iter().map(|&v| (v, 0)).collect();
    let mut out: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &(a, b) in &arcs {
        *indeg.get_mut(&b).unwrap() += 1;
        out.entry(a).or_default().push(b);
    }
    let mut ready: BTreeSet<NodeId> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&v, _)| v).collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &w in out.get(&v).map(|x| x.as_slice()).unwrap_or(&[]) {
            let d = indeg.get_mut(&w).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.insert(w);
            }
        }
    }
    if order.len() != nodes.len() {
        return Err(Error::MalformedFlow("flow support has a directed cycle".into()));
    }
    Ok(order)
}

/// Returns `flow` unchanged when its support is acyclic; otherwise runs it
/// through DGG, whose output support is acyclic.
pub fn make_acyclic(flow: &UnsplittableFlow, sink: NodeId) -> Result<UnsplittableFlow> {
    match check_acyclic_paths(flow, sink) {
        Ok(_) => Ok(flow.clone()),
        Err(Error::MalformedFlow(_)) => dgg_general(&flow.clone().into_splittable(), sink),
        Err(e) => Err(e),
    }
}

/// One pass of the merge procedure over the unsplittable flow `flow`, whose
/// demand `i` belongs to input cluster `trees[i]`.
pub fn cluster_step(flow: &UnsplittableFlow, trees: &[Cluster], sink: NodeId, q: u64) -> Result<StepOutput> {
    if trees.len() != flow.demands.len() {
        return Err(Error::MalformedFlow("one tree per source required".into()));
    }
    let topo = check_acyclic_paths(flow, sink)?;
    let rank: BTreeMap<NodeId, usize> = topo.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let part_cap = density_target_cap(q);
    let mut remaining: BTreeSet<usize> = (0..flow.paths.len()).collect();
    let mut out = StepOutput::default();
    let mut used_tau: BTreeSet<NodeId> = BTreeSet::new();

    while !remaining.is_empty() {
        // streams entering each node: predecessor on the path, or none at a path start
        let mut streams: BTreeMap<NodeId, BTreeSet<Option<NodeId>>> = BTreeMap::new();
        for &i in &remaining {
            let p = &flow.paths[i];
            for (j, &v) in p.iter().enumerate() {
                let pred = if j == 0 { None } else { Some(p[j - 1]) };
                streams.entry(v).or_default().insert(pred);
            }
        }
        let center = streams
            .iter()
            .filter(|(_, s)| s.len() >= 2)
            .map(|(&v, _)| v)
            .min_by_key(|v| rank[v])
            .unwrap_or(sink);
        let members: Vec<usize> = remaining.iter().copied().filter(|&i| flow.paths[i].contains(&center)).collect();
        let prefixes: Vec<Vec<NodeId>> = members
            .iter()
            .map(|&i| {
                let p = &flow.paths[i];
                let pos = p.iter().position(|&v| v == center).unwrap();
                p[..=pos].to_vec()
            })
            .collect();
        let tau = union_sorted(prefixes.iter().flatten().copied());
        for &v in &tau {
            if v != sink && !used_tau.insert(v) {
                return Err(Error::MalformedFlow(format!("merge trees overlap at node {v}")));
            }
        }
        let demand: u64 = members.iter().map(|&i| flow.demands[i].1).sum();
        if center == sink {
            // split the sink-side merge into parts of bounded demand
            let mut part: Vec<usize> = Vec::new();
            let mut part_load = 0u64;
            let flush = |part: &mut Vec<usize>, out: &mut StepOutput| {
                if part.is_empty() {
                    return;
                }
                let tree = union_sorted(part.iter().flat_map(|&k| {
                    let i = members[k];
                    trees[i].tree.iter().copied().chain(prefixes[k].iter().copied())
                }));
                let assigned = part.iter().flat_map(|&k| trees[members[k]].assigned.iter().copied()).collect();
                out.output.push(Cluster {
                    tree,
                    assigned,
                    root: Some(sink),
                });
                part.clear();
            };
            for (k, &i) in members.iter().enumerate() {
                let d = flow.demands[i].1;
                if !part.is_empty() && part_load + d > part_cap {
                    flush(&mut part, &mut out);
                    part_load = 0;
                }
                part.push(k);
                part_load += d;
            }
            flush(&mut part, &mut out);
        } else {
            let tree = union_sorted(members.iter().flat_map(|&i| trees[i].tree.iter().copied()).chain(tau.iter().copied()));
            let assigned: Vec<(NodeId, u64)> = members.iter().flat_map(|&i| trees[i].assigned.iter().copied()).collect();
            let cluster = Cluster {
                tree,
                assigned,
                root: Some(center),
            };
            if demand >= q {
                out.output.push(cluster);
            } else {
                out.next_x.push(center);
                out.next_d.push(demand);
                out.next_trees.push(cluster);
                out.suffix_flow.demands.push((center, demand));
                out.suffix_flow.paths.push(
                    members
                        .iter()
                        .map(|&i| {
                            let p = &flow.paths[i];
                            let pos = p.iter().position(|&v| v == center).unwrap();
                            FlowPath {
                                nodes: p[pos..].to_vec(),
                                amount: flow.demands[i].1,
                            }
                        })
                        .collect(),
                );
            }
        }
        out.merges.push(Merge {
            center,
            members: members.clone(),
            prefixes,
            tau,
        });
        for i in members {
            remaining.remove(&i);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Default)]
pub struct ClusterRun {
    pub clusters: Vec<Cluster>,
    pub calls: usize,
    /// Node loads of the flow handed to each call.
    pub pass_loads: Vec<Vec<u64>>,
}

/// Runs merge passes until every source sits in an output cluster.
pub fn cluster_recursive(flow: &UnsplittableFlow, trees: Vec<Cluster>, sink: NodeId, q: u64) -> Result<ClusterRun> {
    let n = flow
        .paths
        .iter()
        .flatten()
        .copied()
        .chain(trees.iter().flat_map(|t| t.tree.iter().copied()))
        .chain([sink])
        .max()
        .unwrap_or(0)
        + 1;
    let mut run = ClusterRun::default();
    let mut flow = flow.clone();
    let mut trees = trees;
    loop {
        run.calls += 1;
        run.pass_loads.push(flow.node_loads(n));
        let step = cluster_step(&flow, &trees, sink, q)?;
        run.clusters.extend(step.output);
        if step.next_trees.is_empty() {
            return Ok(run);
        }
        flow = dgg_unsplittable(&step.suffix_flow, sink)?;
        trees = step.next_trees;
    }
}

/// Low-load set cover view of a single-sink instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LlscInstance {
    pub node_count: usize,
    pub sink: NodeId,
    /// Demand units (required elements) hanging off each node.
    pub required_per_node: Vec<u64>,
    pub required: u64,
    /// Every node except the sink is capacitated.
    pub capacitated: Vec<bool>,
    pub load_bound: u32,
    pub element_cost: Vec<Cost>,
    pub groundset_size: u64,
    pub capacity: u64,
}

pub fn load_bound(q: u64) -> u32 {
    (q as f64).log2().ceil() as u32 + 1
}

pub fn build_llsc(inst: &SsncInstance) -> LlscInstance {
    let n = inst.graph.node_count();
    let mut required_per_node = vec![0u64; n];
    for &(s, d) in &inst.sources {
        required_per_node[s] += d;
    }
    let required = required_per_node.iter().sum();
    LlscInstance {
        node_count: n,
        sink: inst.sink,
        required_per_node,
        required,
        capacitated: (0..n).map(|v| v != inst.sink).collect(),
        load_bound: load_bound(inst.capacity),
        element_cost: (0..n).map(|v| inst.cost(v)).collect(),
        groundset_size: n as u64 + required,
        capacity: inst.capacity,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverSet {
    pub tree: Vec<NodeId>,
    pub covered: Vec<(NodeId, u64)>,
    pub cost: Cost,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LlscCover {
    pub sets: Vec<CoverSet>,
    pub loads: Vec<u32>,
    pub oracle_calls: usize,
    pub hard_cap: u32,
}

pub fn default_hard_cap(llsc: &LlscInstance) -> u32 {
    let log_u = (llsc.groundset_size.max(2) as f64).log2().ceil() as u32;
    4 * llsc.load_bound * log_u
}

/// Node weight used by the cover loop for a node with the given load.
pub fn inflated_weight(cost: f64, load: u32, p: u32, hard_cap: u32) -> f64 {
    if load >= hard_cap {
        f64::INFINITY
    } else if load < p {
        cost
    } else {
        cost * 2f64.powi(load as i32)
    }
}

/// Greedy minimum-density cover with load-dependent weight inflation.
/// `hard_cap` overrides the load at which a node is excluded.
pub fn llsc_solve(llsc: &LlscInstance, inst: &SsncInstance, hard_cap: Option<u32>) -> Result<LlscCover> {
    let n = llsc.node_count;
    let p = llsc.load_bound;
    let hard_cap = hard_cap.unwrap_or_else(|| default_hard_cap(llsc));
    let mut uncovered = llsc.required_per_node.clone();
    let mut loads = vec![0u32; n];
    let mut sets = Vec::new();
    let mut calls = 0;
    while uncovered.iter().any(|&u| u > 0) {
        let beta: Vec<f64> = (0..n)
            .map(|v| {
                if !llsc.capacitated[v] {
                    0.0
                } else {
                    inflated_weight(cost_to_f64(&llsc.element_cost[v]), loads[v], p, hard_cap)
                }
            })
            .collect();
        calls += 1;
        let cand = max_density_tree(&DensityQuery {
            graph: &inst.graph,
            beta: &beta,
            uncovered: &uncovered,
            capacity: llsc.capacity,
            sink: llsc.sink,
        })?;
        let mut covered = Vec::new();
        for &v in &cand.tree {
            if uncovered[v] > 0 {
                covered.push((v, uncovered[v]));
                uncovered[v] = 0;
            }
            if llsc.capacitated[v] {
                loads[v] += 1;
            }
        }
        let cost = cand.tree.iter().fold(Cost::zero(), |a, &v| a + llsc.element_cost[v]);
        sets.push(CoverSet {
            tree: cand.tree,
            covered,
            cost,
        });
    }
    Ok(LlscCover {
        sets,
        loads,
        oracle_calls: calls,
        hard_cap,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusteringReport {
    pub clusters: Vec<Cluster>,
    /// Number of clusters containing each node.
    pub membership: Vec<u32>,
    /// Sum over clusters of the cost of their nodes.
    pub total_cost: Cost,
    pub oracle_calls: usize,
    pub load_bound: u32,
}

/// Clusters for a single-sink instance: each cluster carries at least `q`
/// demand or contains the sink, and every source is assigned exactly once.
pub fn find_clusters(inst: &SsncInstance) -> Result<ClusteringReport> {
    find_clusters_with(inst, None)
}

pub fn find_clusters_with(inst: &SsncInstance, hard_cap: Option<u32>) -> Result<ClusteringReport> {
    let llsc = build_llsc(inst);
    let cover = llsc_solve(&llsc, inst, hard_cap)?;
    let n = inst.graph.node_count();
    let mut membership = vec![0u32; n];
    let mut total_cost = Cost::zero();
    let mut clusters = Vec::new();
    // expand per-node coverage back to individual sources
    let mut by_node: BTreeMap<NodeId, Vec<(NodeId, u64)>> = BTreeMap::new();
    for &(s, d) in &inst.sources {
        by_node.entry(s).or_default().push((s, d));
    }
    for set in cover.sets {
        for &v in &set.tree {
            membership[v] += 1;
        }
        total_cost += set.cost;
        let assigned: Vec<(NodeId, u64)> = set
            .covered
            .iter()
            .flat_map(|&(v, _)| by_node.get(&v).cloned().unwrap_or_default())
            .collect();
        let root = set.tree.binary_search(&inst.sink).ok().map(|_| inst.sink);
        clusters.push(Cluster {
            tree: set.tree,
            assigned,
            root,
        });
    }
    Ok(ClusteringReport {
        clusters,
        membership,
        total_cost,
        oracle_calls: cover.oracle_calls,
        load_bound: llsc.load_bound,
    })
}

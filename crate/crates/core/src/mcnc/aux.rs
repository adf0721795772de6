//! Auxiliary single-sink instances that drive cluster merging.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::Serialize;

use crate::clustering::{cluster_step, make_acyclic, Cluster};
use crate::error::{Error, Result};
use crate::flow::UnsplittableFlow;
use crate::graph::{shortcut_walk, Cost, NodeId, SsncInstance, UndirectedMultigraph};
use crate::ssnc::{SourceRoute, SsncSolution};

use super::state::{ClusterSet, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AuxKind {
    /// Unsafe clusters routed toward frozen ones.
    Unsafe,
    /// Source-side safe clusters routed toward sink-side ones.
    Safe,
}

/// A single-sink instance built on top of the base graph: one zero-cost
/// source per merging cluster, one zero-cost root per target cluster and a
/// global sink adjacent to every root.
#[derive(Clone, Debug)]
pub struct AuxInstance {
    pub kind: AuxKind,
    pub inst: SsncInstance,
    pub base_nodes: usize,
    pub source_of: BTreeMap<NodeId, usize>,
    pub root_of: BTreeMap<NodeId, usize>,
    pub sink: NodeId,
}

fn build_aux(
    kind: AuxKind,
    g: &UndirectedMultigraph,
    set: &ClusterSet,
    sources: &[usize],
    roots: &[usize],
    cap: u64,
    root_cap: u64,
) -> Result<AuxInstance> {
    let base = g.node_count();
    let mut graph = g.clone();
    let mut source_of = BTreeMap::new();
    let mut root_of = BTreeMap::new();
    let mut demands = Vec::new();
    for &c in sources {
        let s = graph.add_node(Cost::zero(), format!("s_T{c}"));
        for &(v, _) in &set.get(c).cluster.assigned {
            graph.add_edge(s, v)?;
        }
        source_of.insert(s, c);
        demands.push((s, set.get(c).load()));
    }
    for &c in roots {
        let r = graph.add_node(Cost::zero(), format!("v_F{c}"));
        for &(v, _) in &set.get(c).cluster.assigned {
            graph.add_edge(r, v)?;
        }
        root_of.insert(r, c);
    }
    let sink = graph.add_node(Cost::zero(), "t");
    for &r in root_of.keys() {
        graph.add_edge(r, sink)?;
    }
    let mut inst = SsncInstance::new(graph, sink, demands, cap)?;
    if root_cap != cap {
        for &r in root_of.keys() {
            inst.capacity_override.insert(r, root_cap);
        }
    }
    Ok(AuxInstance {
        kind,
        inst,
        base_nodes: base,
        source_of,
        root_of,
        sink,
    })
}

/// Capacity 5q on base nodes; frozen roots get `ceil(8 * beta_hat * 5q)`.
pub fn build_i1(g: &UndirectedMultigraph, set: &ClusterSet, beta_hat: f64) -> Result<AuxInstance> {
    let unsafe_ids = set.with_status(|s| s == Status::ActiveUnsafe);
    let frozen = set.frozen();
    if frozen.is_empty() {
        return Err(Error::InvalidInstance("unsafe clusters need at least one frozen cluster".into()));
    }
    let cap = 5 * set.q;
    let root_cap = (8.0 * beta_hat * cap as f64).ceil() as u64;
    build_aux(AuxKind::Unsafe, g, set, &unsafe_ids, &frozen, cap, root_cap)
}

/// Capacity 9q everywhere, roots included.
pub fn build_i2(g: &UndirectedMultigraph, set: &ClusterSet, plus: &[usize], minus: &[usize]) -> Result<AuxInstance> {
    if plus.is_empty() || minus.is_empty() {
        return Err(Error::InvalidInstance("both sides of the bipartition must be non-empty".into()));
    }
    let cap = 9 * set.q;
    build_aux(AuxKind::Safe, g, set, plus, minus, cap, cap)
}

/// Largest load-over-capacity ratio of an auxiliary solution, sink excluded.
pub fn measured_congestion(aux: &AuxInstance, sol: &SsncSolution) -> f64 {
    (0..aux.inst.graph.node_count())
        .filter(|&v| v != aux.sink)
        .map(|v| sol.loads[v] as f64 / aux.inst.node_capacity(v).unwrap() as f64)
        .fold(0.0, f64::max)
}

pub(crate) fn tree_path(g: &UndirectedMultigraph, tree: &[NodeId], a: NodeId, b: NodeId) -> Result<Vec<NodeId>> {
    let parent = g.bfs_tree(tree, a);
    if !parent.contains_key(&b) {
        return Err(Error::MalformedSolution(format!("nodes {a} and {b} are not connected inside their cluster")));
    }
    let mut p = crate::graph::path_to_root(&parent, b);
    p.reverse();
    Ok(p)
}

/// Replaces hops through auxiliary nodes in the middle of a path by the
/// matching cluster's tree path, so that only the leading source and the
/// trailing root and sink are auxiliary.
fn rewrite_path(aux: &AuxInstance, set: &ClusterSet, path: &[NodeId]) -> Result<Vec<NodeId>> {
    let g = &aux.inst.graph;
    let last = path.len() - 1;
    let mut out = vec![path[0]];
    let mut i = 1;
    while i <= last {
        let v = path[i];
        let interior = v >= aux.base_nodes && i < last && !(i == last - 1 && aux.root_of.contains_key(&v));
        if interior {
            let c = aux.source_of.get(&v).or_else(|| aux.root_of.get(&v)).copied();
            let (Some(c), Some(&prev)) = (c, out.last()) else {
                return Err(Error::MalformedFlow(format!("path passes through auxiliary node {v}")));
            };
            let next = path[i + 1];
            if prev >= aux.base_nodes || next >= aux.base_nodes {
                return Err(Error::MalformedFlow(format!("path hops between auxiliary nodes at {v}")));
            }
            let seg = tree_path(g, &set.get(c).cluster.tree, prev, next)?;
            out.extend_from_slice(&seg[1..]);
            i += 2;
        } else {
            out.push(v);
            i += 1;
        }
    }
    Ok(shortcut_walk(&out))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MergeReport {
    /// Clusters created by merging merging-side clusters among themselves.
    pub formed: Vec<usize>,
    /// Target clusters that absorbed merging-side clusters, with the load
    /// each gained.
    pub grown: Vec<(usize, u64)>,
    /// Base nodes newly added to some cluster tree.
    pub new_nodes: BTreeSet<NodeId>,
}

/// Merges clusters along the deepest merge points of the auxiliary routing.
/// A merge centred at a target root (or passing straight through a root to
/// the global sink) joins the target cluster; any other merge forms a new
/// cluster from the merging clusters and their prefix paths.
pub fn merge_from_flow(aux: &AuxInstance, routing: &[SourceRoute], set: &mut ClusterSet) -> Result<MergeReport> {
    let mut demands = Vec::new();
    let mut paths = Vec::new();
    for r in routing {
        if !aux.source_of.contains_key(&r.source) {
            return Err(Error::MalformedFlow(format!("unexpected source {}", r.source)));
        }
        demands.push((r.source, r.demand));
        paths.push(rewrite_path(aux, set, &r.path)?);
    }
    if demands.len() != aux.source_of.len() {
        return Err(Error::MalformedFlow("not every merging cluster was routed".into()));
    }
    let flow = make_acyclic(&UnsplittableFlow { demands, paths }, aux.sink)?;
    let trees: Vec<Cluster> = flow.demands.iter().map(|&(s, d)| Cluster::singleton(s, d)).collect();
    let step = cluster_step(&flow, &trees, aux.sink, 1)?;

    let before: Vec<BTreeSet<NodeId>> = set
        .states
        .iter()
        .map(|s| s.as_ref().map(|s| s.cluster.tree.iter().copied().collect()).unwrap_or_default())
        .collect();
    let real = |nodes: &[NodeId]| -> Vec<NodeId> { nodes.iter().copied().filter(|&v| v < aux.base_nodes).collect() };
    let mut report = MergeReport::default();
    let mut gained: BTreeMap<usize, u64> = BTreeMap::new();
    let mut absorb = |set: &mut ClusterSet, target: usize, members: &[usize], extra: &[NodeId], report: &mut MergeReport| -> Result<()> {
        let ids: Vec<usize> = members.iter().map(|&k| aux.source_of[&flow.demands[k].0]).collect();
        let added: u64 = ids.iter().map(|&c| set.get(c).load()).sum();
        let mut known: BTreeSet<NodeId> = before[target].clone();
        for &c in &ids {
            known.extend(before[c].iter().copied());
        }
        report.new_nodes.extend(extra.iter().copied().filter(|v| !known.contains(v)));
        set.merge(&ids, extra, Some(target))?;
        *gained.entry(target).or_default() += added;
        Ok(())
    };
    for m in &step.merges {
        if m.center == aux.sink {
            for (k, prefix) in m.members.iter().zip(&m.prefixes) {
                let root = prefix[prefix.len() - 2];
                let target = *aux
                    .root_of
                    .get(&root)
                    .ok_or_else(|| Error::MalformedFlow(format!("path reaches the sink from {root}")))?;
                absorb(set, target, &[*k], &real(prefix), &mut report)?;
            }
        } else if let Some(&target) = aux.root_of.get(&m.center) {
            absorb(set, target, &m.members, &real(&m.tau), &mut report)?;
        } else {
            let ids: Vec<usize> = m.members.iter().map(|&k| aux.source_of[&flow.demands[k].0]).collect();
            let mut known = BTreeSet::new();
            for &c in &ids {
                known.extend(before[c].iter().copied());
            }
            let extra = real(&m.tau);
            report.new_nodes.extend(extra.iter().copied().filter(|v| !known.contains(v)));
            let id = set.merge(&ids, &extra, None)?;
            report.formed.push(id);
        }
    }
    report.grown = gained.into_iter().collect();
    for id in report.formed.iter().copied().chain(report.grown.iter().map(|g| g.0)) {
        if let Some(st) = set.states[id].as_ref() {
            if !aux.inst.graph.is_connected_within(&st.cluster.tree) {
                return Err(Error::MalformedSolution(format!("merged cluster {id} is disconnected")));
            }
        }
    }
    set.recount();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::McncInstance;
    use crate::ssnc::{solve_ssnc, SsncKnobs};

    #[test]
    fn i1_node_count_and_capacities() {
        // path 0-1-2-3, pairs (0,3) and (1,2)
        let g = UndirectedMultigraph::from_int_costs(&[1; 4], &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let inst = McncInstance::new(g, &[(0, 3), (1, 2)], 4).unwrap();
        let mut set = ClusterSet::new(&inst, &(0..2).collect());
        let f = set.owner[&3];
        set.get_mut(f).status = Status::FrozenExternal;
        let u = set.owner[&0];
        set.get_mut(u).status = Status::ActiveUnsafe;
        let aux = build_i1(&inst.graph, &set, 1.0).unwrap();
        assert_eq!(aux.inst.graph.node_count(), 4 + 3);
        assert_eq!(aux.inst.capacity, 20);
        let root = *aux.root_of.keys().next().unwrap();
        assert_eq!(aux.inst.node_capacity(root), Some(160));
    }

    #[test]
    fn i2_capacity_and_rejects_empty_side() {
        let g = UndirectedMultigraph::from_int_costs(&[1; 2], &[(0, 1)]).unwrap();
        let inst = McncInstance::new(g, &[(0, 1)], 4).unwrap();
        let set = ClusterSet::new(&inst, &BTreeSet::from([0]));
        let a = set.owner[&0];
        let b = set.owner[&1];
        let aux = build_i2(&inst.graph, &set, &[a], &[b]).unwrap();
        assert_eq!(aux.inst.capacity, 36);
        assert_eq!(aux.inst.graph.node_count(), 5);
        assert!(build_i2(&inst.graph, &set, &[a], &[]).is_err());
    }

    #[test]
    fn single_pair_merges_into_sink_side() {
        let g = UndirectedMultigraph::from_int_costs(&[1, 2, 1], &[(0, 1), (1, 2)]).unwrap();
        let inst = McncInstance::new(g, &[(0, 2)], 8).unwrap();
        let mut set = ClusterSet::new(&inst, &BTreeSet::from([0]));
        let a = set.owner[&0];
        let b = set.owner[&2];
        let aux = build_i2(&inst.graph, &set, &[a], &[b]).unwrap();
        let sol = solve_ssnc(&aux.inst, &SsncKnobs::default()).unwrap();
        let rep = merge_from_flow(&aux, &sol.routing, &mut set).unwrap();
        assert_eq!(rep.grown, vec![(b, 1)]);
        assert_eq!(set.get(b).cluster.tree, vec![0, 1, 2]);
        assert_eq!(set.get(b).internal_pairs, 1);
        assert!(set.states[a].is_none());
    }

    #[test]
    fn two_sources_merge_at_plain_node() {
        // terminals 0 and 1 both hang off hub 2, which leads to 3; pairs (0,3), (1,4) with 4 next to 3
        let g = UndirectedMultigraph::from_int_costs(&[0, 0, 1, 1, 1], &[(0, 2), (1, 2), (2, 3), (3, 4)]).unwrap();
        let inst = McncInstance::new(g, &[(0, 3), (1, 4)], 64).unwrap();
        let mut set = ClusterSet::new(&inst, &(0..2).collect());
        let a = set.owner[&0];
        let b = set.owner[&1];
        let c = set.owner[&3];
        let d = set.owner[&4];
        let aux = build_i2(&inst.graph, &set, &[a, b], &[c, d]).unwrap();
        let sol = solve_ssnc(&aux.inst, &SsncKnobs::default()).unwrap();
        let rep = merge_from_flow(&aux, &sol.routing, &mut set).unwrap();
        assert_eq!(rep.formed.len(), 1);
        let id = rep.formed[0];
        assert_eq!(set.get(id).load(), 2);
        assert_eq!(set.get(id).cluster.tree, vec![0, 1, 2]);
        assert!(rep.new_nodes.contains(&2));
    }
}

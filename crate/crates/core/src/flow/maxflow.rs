use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use super::split::{split_transform, SplitGraph};
use super::{FlowPath, SplittableFlow};
use crate::graph::{DirectedNodeCapGraph, NodeId};

/// Capacity used for unbounded arcs.
pub const INF_CAP: i128 = i128::MAX / 8;

/// Residual network for Dinic's algorithm. Arc `2i` is the `i`-th added
/// arc, `2i + 1` its reverse.
#[derive(Clone, Debug, Default)]
pub struct FlowNetwork {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i128>,
    init: Vec<i128>,
}

impl FlowNetwork {
    pub fn new(n: usize) -> Self {
        FlowNetwork {
            adj: vec![Vec::new(); n],
            ..Default::default()
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn add_node(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    /// Adds arc `u -> v`; returns its index (as counted by `arc_count`).
    pub fn add_arc(&mut self, u: usize, v: usize, cap: i128) -> usize {
        let id = self.to.len();
        self.to.push(v);
        self.cap.push(cap);
        self.init.push(cap);
        self.adj[u].push(id);
        self.to.push(u);
        self.cap.push(0);
        self.init.push(0);
        self.adj[v].push(id + 1);
        id / 2
    }

    /// Adds an undirected edge as a pair of antiparallel residual arcs
    /// sharing capacity.
    pub fn add_undirected(&mut self, u: usize, v: usize, cap: i128) -> usize {
        let id = self.to.len();
        self.to.push(v);
        self.cap.push(cap);
        self.init.push(cap);
        self.adj[u].push(id);
        self.to.push(u);
        self.cap.push(cap);
        self.init.push(cap);
        self.adj[v].push(id + 1);
        id / 2
    }

    pub fn arc_count(&self) -> usize {
        self.to.len() / 2
    }

    /// Net flow on arc `i` in its forward direction.
    pub fn flow(&self, i: usize) -> i128 {
        self.init[2 * i] - self.cap[2 * i]
    }

    pub fn endpoints(&self, i: usize) -> (usize, usize) {
        (self.to[2 * i + 1], self.to[2 * i])
    }

    pub fn reset(&mut self) {
        self.cap.clone_from(&self.init);
    }

    fn bfs_levels(&self, s: usize, t: usize) -> Option<Vec<usize>> {
        let mut level = vec![usize::MAX; self.adj.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        (level[t] != usize::MAX).then_some(level)
    }

    fn push(&mut self, u: usize, t: usize, limit: i128, level: &[usize], it: &mut [usize]) -> i128 {
        if u == t {
            return limit;
        }
        while it[u] < self.adj[u].len() {
            let e = self.adj[u][it[u]];
            let v = self.to[e];
            if self.cap[e] > 0 && level[v] == level[u] + 1 {
                let got = self.push(v, t, limit.min(self.cap[e]), level, it);
                if got > 0 {
                    self.cap[e] -= got;
                    self.cap[e ^ 1] += got;
                    return got;
                }
            }
            it[u] += 1;
        }
        0
    }

    /// Maximum flow from `s` to `t`, added to whatever flow is present.
    pub fn max_flow(&mut self, s: usize, t: usize) -> i128 {
        if s == t {
            return 0;
        }
        let mut total = 0;
        while let Some(level) = self.bfs_levels(s, t) {
            let mut it = vec![0; self.adj.len()];
            loop {
                let f = self.push(s, t, INF_CAP, &level, &mut it);
                if f == 0 {
                    break;
                }
                total += f;
            }
        }
        total
    }

    /// Nodes reachable from `s` in the residual network (the source side of
    /// a minimum cut after `max_flow`).
    pub fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}

/// Greedy path decomposition by maximal bottleneck. `arcs[i] = (u, v)` with
/// flow `flow[i]`; returns arc-index paths from `s` to `t` with amounts.
/// Leftover circulations are dropped.
pub(crate) fn widest_path_decomposition(
    n: usize,
    arcs: &[(usize, usize)],
    flow: &[i128],
    s: usize,
    t: usize,
) -> Vec<(Vec<usize>, i128)> {
    let mut rem = flow.to_vec();
    let mut out_arcs = vec![Vec::new(); n];
    for (i, &(u, _)) in arcs.iter().enumerate() {
        out_arcs[u].push(i);
    }
    let mut result = Vec::new();
    loop {
        let mut best = vec![0i128; n];
        let mut pred = vec![usize::MAX; n];
        let mut done = vec![false; n];
        best[s] = INF_CAP;
        let mut heap = BinaryHeap::from([(INF_CAP, Reverse(s))]);
        while let Some((b, Reverse(u))) = heap.pop() {
            if done[u] || b != best[u] {
                continue;
            }
            done[u] = true;
            if u == t {
                break;
            }
            for &i in &out_arcs[u] {
                let v = arcs[i].1;
                let nb = b.min(rem[i]);
                if nb > best[v] && !done[v] {
                    best[v] = nb;
                    pred[v] = i;
                    heap.push((nb, Reverse(v)));
                }
            }
        }
        if best[t] <= 0 || s == t {
            break;
        }
        let amount = best[t];
        let mut path = Vec::new();
        let mut cur = t;
        while cur != s {
            let i = pred[cur];
            path.push(i);
            cur = arcs[i].0;
        }
        path.reverse();
        for &i in &path {
            rem[i] -= amount;
        }
        result.push((path, amount));
    }
    result
}

/// Network for the split graph: arc `i` of the split graph is network arc `i`.
pub(crate) fn split_network(split: &SplitGraph, extra_nodes: usize) -> FlowNetwork {
    let mut net = FlowNetwork::new(split.node_count() + extra_nodes);
    for a in &split.arcs {
        net.add_arc(a.from, a.to, a.cap.map_or(INF_CAP, |c| c as i128));
    }
    net
}

/// Original-node sequence of a walk through split nodes.
pub(crate) fn collapse_split_walk(split_nodes: impl IntoIterator<Item = usize>) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = Vec::new();
    for x in split_nodes {
        let v = SplitGraph::original(x);
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    out
}

/// Maximum flow from several sources to `sink`, source `i` supplying at
/// most `sources[i].1` units. Every source node's own capacity applies.
/// The returned flow's demands are the amounts actually routed.
pub fn max_flow_multi_source(g: &DirectedNodeCapGraph, sources: &[(NodeId, u64)], sink: NodeId) -> (u64, SplittableFlow) {
    let bounded: Vec<(NodeId, i128)> = sources.iter().map(|&(s, d)| (s, d as i128)).collect();
    multi_source(g, &bounded, sink)
}

fn multi_source(g: &DirectedNodeCapGraph, sources: &[(NodeId, i128)], sink: NodeId) -> (u64, SplittableFlow) {
    let split = split_transform(g);
    let mut net = split_network(&split, 1);
    let super_s = split.node_count();
    let first_source_arc = net.arc_count();
    for &(s, d) in sources {
        net.add_arc(super_s, SplitGraph::v_in(s), d);
    }
    let t = SplitGraph::v_out(sink);
    let mut flow = SplittableFlow {
        demands: sources.iter().map(|&(s, _)| (s, 0)).collect(),
        paths: vec![Vec::new(); sources.len()],
    };
    if sources.iter().all(|&(s, _)| s == sink) {
        return (0, flow);
    }
    let value = net.max_flow(super_s, t);
    let arcs: Vec<(usize, usize)> = (0..net.arc_count()).map(|i| net.endpoints(i)).collect();
    let flows: Vec<i128> = (0..net.arc_count()).map(|i| net.flow(i).max(0)).collect();
    for (path, amount) in widest_path_decomposition(net.node_count(), &arcs, &flows, super_s, t) {
        let which = path[0] - first_source_arc;
        let nodes = collapse_split_walk(path.iter().map(|&i| arcs[i].1));
        flow.demands[which].1 += amount as u64;
        flow.paths[which].push(FlowPath {
            nodes,
            amount: amount as u64,
        });
    }
    (value as u64, flow)
}

/// Maximum `s`-`t` flow under node capacities with a path decomposition.
pub fn max_flow_node_cap(g: &DirectedNodeCapGraph, s: NodeId, t: NodeId) -> (u64, SplittableFlow) {
    if s == t {
        return (0, SplittableFlow::default());
    }
    multi_source(g, &[(s, INF_CAP)], t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::int_cost;

    fn dg(n: usize, arcs: &[(usize, usize)], caps: &[Option<u64>]) -> DirectedNodeCapGraph {
        DirectedNodeCapGraph::new(n, arcs.to_vec(), caps.to_vec(), vec![int_cost(1); n]).unwrap()
    }

    #[test]
    fn single_arc() {
        let g = dg(2, &[(0, 1)], &[Some(3), None]);
        let (v, f) = max_flow_node_cap(&g, 0, 1);
        assert_eq!(v, 3);
        assert_eq!(f.paths[0], vec![FlowPath { nodes: vec![0, 1], amount: 3 }]);
    }

    #[test]
    fn path_gadget_value_one() {
        let g = dg(3, &[(0, 1), (1, 2)], &[Some(1), Some(2), Some(3)]);
        assert_eq!(max_flow_node_cap(&g, 0, 2).0, 1);
    }

    #[test]
    fn disconnected() {
        let g = dg(3, &[(0, 1)], &[Some(1), Some(1), None]);
        let (v, f) = max_flow_node_cap(&g, 0, 2);
        assert_eq!(v, 0);
        assert!(f.paths[0].is_empty());
    }

    #[test]
    fn zero_capacity_node_blocks() {
        let g = dg(3, &[(0, 1), (1, 2)], &[Some(5), Some(0), None]);
        assert_eq!(max_flow_node_cap(&g, 0, 2).0, 0);
    }

    #[test]
    fn multi_source_respects_shared_node() {
        // sources 0 and 1 both through node 2 (cap 3) to sink 3
        let g = dg(4, &[(0, 2), (1, 2), (2, 3)], &[Some(5), Some(5), Some(3), None]);
        let (v, f) = max_flow_multi_source(&g, &[(0, 2), (1, 2)], 3);
        assert_eq!(v, 3);
        assert!(f.node_loads(4)[2] <= 3);
        assert_eq!(f.routed(0) + f.routed(1), 3);
    }
}

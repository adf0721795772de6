//! Graphs and problem instances shared by every solver.
//!
//! Costs are exact rationals. Capacities are uniform in the user-facing
//! instances; [`DirectedNodeCapGraph`] carries per-node capacities for the
//! auxiliary single-sink instances built by the multicommodity solver.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::fmt;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type Cost = Ratio<i64>;

pub fn cost_to_f64(c: &Cost) -> f64 {
    c.to_f64().unwrap_or(f64::INFINITY)
}

pub fn int_cost(v: i64) -> Cost {
    Ratio::from_integer(v)
}

/// Node-costed undirected multigraph. Parallel edges are kept, self-loops
/// are rejected.
#[derive(Clone, Debug, PartialEq)]
pub struct UndirectedMultigraph {
    costs: Vec<Cost>,
    labels: Vec<String>,
    edges: Vec<(NodeId, NodeId)>,
    adj: Vec<Vec<NodeId>>,
}

impl UndirectedMultigraph {
    pub fn new(costs: Vec<Cost>, labels: Vec<String>, edges: Vec<(NodeId, NodeId)>) -> Result<Self> {
        if costs.len() != labels.len() {
            return Err(Error::InvalidGraph(format!(
                "{} costs but {} labels",
                costs.len(),
                labels.len()
            )));
        }
        if let Some(v) = costs.iter().position(|c| *c < Cost::zero()) {
            return Err(Error::InvalidGraph(format!("negative cost at node {v}")));
        }
        let mut g = UndirectedMultigraph {
            adj: vec![Vec::new(); costs.len()],
            costs,
            labels,
            edges: Vec::with_capacity(edges.len()),
        };
        for (a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    /// Graph with default labels `v0, v1, ...`.
    pub fn with_costs(costs: Vec<Cost>, edges: Vec<(NodeId, NodeId)>) -> Result<Self> {
        let labels = (0..costs.len()).map(|i| format!("v{i}")).collect();
        Self::new(costs, labels, edges)
    }

    /// Integer-cost convenience constructor.
    pub fn from_int_costs(costs: &[i64], edges: &[(NodeId, NodeId)]) -> Result<Self> {
        Self::with_costs(costs.iter().map(|&c| int_cost(c)).collect(), edges.to_vec())
    }

    pub fn add_node(&mut self, cost: Cost, label: impl Into<String>) -> NodeId {
        self.costs.push(cost);
        self.labels.push(label.into());
        self.adj.push(Vec::new());
        self.costs.len() - 1
    }

    pub fn add_edge(&mut self, a: NodeId, b: NodeId) -> Result<()> {
        let n = self.node_count();
        if a >= n || b >= n {
            return Err(Error::InvalidGraph(format!("edge ({a},{b}) out of range for {n} nodes")));
        }
        if a == b {
            return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
        }
        self.edges.push((a, b));
        let pos = self.adj[a].partition_point(|&x| x <= b);
        self.adj[a].insert(pos, b);
        let pos = self.adj[b].partition_point(|&x| x <= a);
        self.adj[b].insert(pos, a);
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.costs.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn cost(&self, v: NodeId) -> Cost {
        self.costs[v]
    }

    pub fn costs(&self) -> &[Cost] {
        &self.costs
    }

    pub fn set_cost(&mut self, v: NodeId, c: Cost) {
        assert!(c >= Cost::zero(), "negative cost");
        self.costs[v] = c;
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    /// Neighbors in ascending id order, with multiplicity.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v]
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    pub fn total_cost<'a>(&self, nodes: impl IntoIterator<Item = &'a NodeId>) -> Cost {
        nodes.into_iter().fold(Cost::zero(), |acc, &v| acc + self.costs[v])
    }

    /// Subgraph induced by `keep`. Returns the subgraph and the map from
    /// new ids to old ids (new id `i` is `keep_sorted[i]`).
    pub fn induced_subgraph(&self, keep: &[NodeId]) -> (UndirectedMultigraph, Vec<NodeId>) {
        let mut old: Vec<NodeId> = keep.to_vec();
        old.sort_unstable();
        old.dedup();
        let mut new_of = vec![usize::MAX; self.node_count()];
        for (i, &v) in old.iter().enumerate() {
            new_of[v] = i;
        }
        let costs = old.iter().map(|&v| self.costs[v]).collect();
        let labels = old.iter().map(|&v| self.labels[v].clone()).collect();
        let edges = self
            .edges
            .iter()
            .filter(|&&(a, b)| new_of[a] != usize::MAX && new_of[b] != usize::MAX)
            .map(|&(a, b)| (new_of[a], new_of[b]))
            .collect();
        let g = UndirectedMultigraph::new(costs, labels, edges).expect("induced subgraph of a valid graph");
        (g, old)
    }

    /// Nodes reachable from `from` using only nodes with `allowed[v]`.
    pub fn reachable(&self, from: NodeId, allowed: Option<&[bool]>) -> Vec<bool> {
        let ok = |v: NodeId| allowed.is_none_or(|a| a[v]);
        let mut seen = vec![false; self.node_count()];
        if !ok(from) {
            return seen;
        }
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            for &w in &self.adj[u] {
                if !seen[w] && ok(w) {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    pub fn is_connected_within(&self, nodes: &[NodeId]) -> bool {
        if nodes.is_empty() {
            return true;
        }
        let mut allowed = vec![false; self.node_count()];
        for &v in nodes {
            allowed[v] = true;
        }
        let seen = self.reachable(nodes[0], Some(&allowed));
        nodes.iter().all(|&v| seen[v])
    }

    /// Cheapest `s`-`t` path by total node cost (both endpoints included),
    /// restricted to `allowed` nodes. Ties resolve toward smaller ids.
    pub fn cheapest_path(&self, s: NodeId, t: NodeId, allowed: Option<&[bool]>) -> Option<(Vec<NodeId>, Cost)> {
        let ok = |v: NodeId| allowed.is_none_or(|a| a[v]);
        if !ok(s) || !ok(t) {
            return None;
        }
        let n = self.node_count();
        let mut dist: Vec<Option<Cost>> = vec![None; n];
        let mut pred = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[s] = Some(self.costs[s]);
        heap.push(Reverse((self.costs[s], s)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if dist[u] != Some(d) {
                continue;
            }
            if u == t {
                break;
            }
            for &w in &self.adj[u] {
                if !ok(w) {
                    continue;
                }
                let nd = d + self.costs[w];
                if dist[w].is_none_or(|old| nd < old) {
                    dist[w] = Some(nd);
                    pred[w] = u;
                    heap.push(Reverse((nd, w)));
                }
            }
        }
        let total = dist[t]?;
        let mut path = vec![t];
        let mut cur = t;
        while cur != s {
            cur = pred[cur];
            path.push(cur);
        }
        path.reverse();
        Some((path, total))
    }

    /// Breadth-first spanning tree of the subgraph induced by `nodes`,
    /// rooted at `root`. Returns the parent of every reached node
    /// (`None` for the root) keyed by node id.
    pub fn bfs_tree(&self, nodes: &[NodeId], root: NodeId) -> BTreeMap<NodeId, Option<NodeId>> {
        let mut allowed = vec![false; self.node_count()];
        for &v in nodes {
            allowed[v] = true;
        }
        let mut parent = BTreeMap::new();
        if !allowed[root] {
            return parent;
        }
        parent.insert(root, None);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &w in &self.adj[u] {
                if allowed[w] && !parent.contains_key(&w) {
                    parent.insert(w, Some(u));
                    queue.push_back(w);
                }
            }
        }
        parent
    }
}

/// Walk from `v` up a parent map to the root.
pub fn path_to_root(parent: &BTreeMap<NodeId, Option<NodeId>>, v: NodeId) -> Vec<NodeId> {
    let mut path = vec![v];
    let mut cur = v;
    while let Some(Some(p)) = parent.get(&cur) {
        path.push(*p);
        cur = *p;
    }
    path
}

/// Removes repeated nodes from a walk by cutting out the loops between
/// repeats. The result is a simple path with the same endpoints.
pub fn shortcut_walk(walk: &[NodeId]) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = Vec::with_capacity(walk.len());
    let mut pos: BTreeMap<NodeId, usize> = BTreeMap::new();
    for &v in walk {
        if let Some(&i) = pos.get(&v) {
            for dropped in out.drain(i + 1..) {
                pos.remove(&dropped);
            }
        } else {
            pos.insert(v, out.len());
            out.push(v);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RequestPair {
    pub source: NodeId,
    pub sink: NodeId,
    pub demand: u64,
}

impl RequestPair {
    pub fn new(source: NodeId, sink: NodeId, demand: u64) -> Result<Self> {
        if source == sink {
            return Err(Error::InvalidInstance(format!("request pair with source = sink = {source}")));
        }
        if demand == 0 {
            return Err(Error::InvalidInstance("request pair with zero demand".into()));
        }
        Ok(RequestPair { source, sink, demand })
    }
}

/// Single-sink instance: every source ships its demand unsplittably to
/// `sink` under uniform node capacity `capacity`.
#[derive(Clone, Debug, PartialEq)]
pub struct SsncInstance {
    pub graph: UndirectedMultigraph,
    pub sink: NodeId,
    pub sources: Vec<(NodeId, u64)>,
    pub capacity: u64,
    /// Per-node capacity exceptions (fake roots of auxiliary instances).
    pub capacity_override: BTreeMap<NodeId, u64>,
}

impl SsncInstance {
    pub fn new(graph: UndirectedMultigraph, sink: NodeId, sources: Vec<(NodeId, u64)>, capacity: u64) -> Result<Self> {
        let n = graph.node_count();
        if sink >= n {
            return Err(Error::InvalidInstance(format!("sink {sink} out of range")));
        }
        if capacity == 0 {
            return Err(Error::InvalidInstance("capacity must be positive".into()));
        }
        for &(s, d) in &sources {
            if s >= n {
                return Err(Error::InvalidInstance(format!("source {s} out of range")));
            }
            if s == sink {
                return Err(Error::InvalidInstance(format!("source {s} coincides with the sink")));
            }
            if d == 0 {
                return Err(Error::InvalidInstance(format!("source {s} has zero demand")));
            }
        }
        Ok(SsncInstance {
            graph,
            sink,
            sources,
            capacity,
            capacity_override: BTreeMap::new(),
        })
    }

    /// Node cost with the sink forced to zero.
    pub fn cost(&self, v: NodeId) -> Cost {
        if v == self.sink {
            Cost::zero()
        } else {
            self.graph.cost(v)
        }
    }

    /// Capacity of `v`; `None` means unbounded (the sink).
    pub fn node_capacity(&self, v: NodeId) -> Option<u64> {
        if v == self.sink {
            None
        } else {
            Some(*self.capacity_override.get(&v).unwrap_or(&self.capacity))
        }
    }

    pub fn total_demand(&self) -> u64 {
        self.sources.iter().map(|s| s.1).sum()
    }

    pub fn max_demand(&self) -> u64 {
        self.sources.iter().map(|s| s.1).max().unwrap_or(0)
    }

    pub fn to_directed(&self) -> DirectedNodeCapGraph {
        let n = self.graph.node_count();
        let caps = (0..n).map(|v| self.node_capacity(v)).collect();
        let costs = (0..n).map(|v| self.cost(v)).collect();
        DirectedNodeCapGraph::from_undirected(&self.graph, caps, costs)
    }

    /// Same instance with every node cost multiplied by `factor`.
    pub fn scaled_costs(&self, factor: i64) -> SsncInstance {
        let mut out = self.clone();
        for v in 0..out.graph.node_count() {
            let c = out.graph.cost(v);
            out.graph.set_cost(v, c * factor);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DummyTerminal {
    pub dummy: NodeId,
    pub original: NodeId,
}

/// Multicommodity instance with unit demands. Every vertex is an endpoint
/// of at most one pair; the constructor hangs zero-cost pendant dummies off
/// shared endpoints and records them.
#[derive(Clone, Debug, PartialEq)]
pub struct McncInstance {
    pub graph: UndirectedMultigraph,
    pub pairs: Vec<RequestPair>,
    pub capacity: u64,
    pub dummies: Vec<DummyTerminal>,
}

impl McncInstance {
    pub fn new(mut graph: UndirectedMultigraph, pairs: &[(NodeId, NodeId)], capacity: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidInstance("capacity must be positive".into()));
        }
        let n = graph.node_count();
        let mut used = vec![false; n];
        let mut dummies = Vec::new();
        let mut out = Vec::with_capacity(pairs.len());
        for &(s, t) in pairs {
            if s >= n || t >= n {
                return Err(Error::InvalidInstance(format!("pair ({s},{t}) out of range")));
            }
            let mut ends = [s, t];
            for end in ends.iter_mut() {
                let orig = *end;
                if used[orig] {
                    let label = format!("{}~d{}", graph.label(orig), dummies.len());
                    let d = graph.add_node(Cost::zero(), label);
                    graph.add_edge(d, orig)?;
                    used.push(true);
                    dummies.push(DummyTerminal { dummy: d, original: orig });
                    *end = d;
                } else {
                    used[orig] = true;
                }
            }
            out.push(RequestPair::new(ends[0], ends[1], 1)?);
        }
        Ok(McncInstance {
            graph,
            pairs: out,
            capacity,
            dummies,
        })
    }

    /// Maps a dummy terminal back to the vertex it hangs off.
    pub fn original_node(&self, v: NodeId) -> NodeId {
        self.dummies
            .iter()
            .find(|d| d.dummy == v)
            .map_or(v, |d| d.original)
    }

    /// The other endpoint of the pair containing terminal `v`.
    pub fn mate_table(&self) -> Vec<Option<NodeId>> {
        let mut mate = vec![None; self.graph.node_count()];
        for p in &self.pairs {
            mate[p.source] = Some(p.sink);
            mate[p.sink] = Some(p.source);
        }
        mate
    }
}

/// Directed graph with node capacities (`None` = unbounded) and node costs.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectedNodeCapGraph {
    pub arcs: Vec<(NodeId, NodeId)>,
    pub capacity: Vec<Option<u64>>,
    pub cost: Vec<Cost>,
}

impl DirectedNodeCapGraph {
    pub fn new(node_count: usize, arcs: Vec<(NodeId, NodeId)>, capacity: Vec<Option<u64>>, cost: Vec<Cost>) -> Result<Self> {
        if capacity.len() != node_count || cost.len() != node_count {
            return Err(Error::InvalidGraph("capacity/cost length mismatch".into()));
        }
        if let Some(&(a, b)) = arcs.iter().find(|&&(a, b)| a >= node_count || b >= node_count) {
            return Err(Error::InvalidGraph(format!("arc ({a},{b}) out of range")));
        }
        Ok(DirectedNodeCapGraph { arcs, capacity, cost })
    }

    /// Both orientations of every undirected edge.
    pub fn from_undirected(g: &UndirectedMultigraph, capacity: Vec<Option<u64>>, cost: Vec<Cost>) -> Self {
        let mut arcs = Vec::with_capacity(2 * g.edge_count());
        for &(a, b) in g.edges() {
            arcs.push((a, b));
            arcs.push((b, a));
        }
        DirectedNodeCapGraph { arcs, capacity, cost }
    }

    pub fn node_count(&self) -> usize {
        self.capacity.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    DemandExceedsCapacity { source: NodeId, demand: u64, capacity: u64 },
    NoPath { source: NodeId, sink: NodeId },
    DuplicateTerminal(NodeId),
    NegativeCost(NodeId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DemandExceedsCapacity { source, demand, capacity } => {
                write!(f, "demand exceeds capacity: source {source} demands {demand} > {capacity}")
            }
            Violation::NoPath { source, sink } => write!(f, "infeasible: no path from {source} to {sink}"),
            Violation::DuplicateTerminal(v) => write!(f, "duplicate terminal {v}"),
            Violation::NegativeCost(v) => write!(f, "negative cost at node {v}"),
        }
    }
}

fn negative_costs(g: &UndirectedMultigraph) -> impl Iterator<Item = Violation> + '_ {
    g.costs()
        .iter()
        .enumerate()
        .filter(|(_, c)| **c < Cost::zero())
        .map(|(v, _)| Violation::NegativeCost(v))
}

/// Every invariant violation of a single-sink instance; empty means valid.
pub fn validate_ssnc(inst: &SsncInstance) -> Vec<Violation> {
    let mut out: Vec<Violation> = negative_costs(&inst.graph).collect();
    let reach = inst.graph.reachable(inst.sink, None);
    let mut seen = BTreeMap::new();
    for &(s, d) in &inst.sources {
        if d > inst.capacity {
            out.push(Violation::DemandExceedsCapacity {
                source: s,
                demand: d,
                capacity: inst.capacity,
            });
        }
        if !reach[s] {
            out.push(Violation::NoPath { source: s, sink: inst.sink });
        }
        if seen.insert(s, ()).is_some() {
            out.push(Violation::DuplicateTerminal(s));
        }
    }
    out
}

/// Every invariant violation of a multicommodity instance.
pub fn validate_mcnc(inst: &McncInstance) -> Vec<Violation> {
    let mut out: Vec<Violation> = negative_costs(&inst.graph).collect();
    let mut used = vec![false; inst.graph.node_count()];
    for p in &inst.pairs {
        for v in [p.source, p.sink] {
            if used[v] {
                out.push(Violation::DuplicateTerminal(v));
            }
            used[v] = true;
        }
        if p.demand > inst.capacity {
            out.push(Violation::DemandExceedsCapacity {
                source: p.source,
                demand: p.demand,
                capacity: inst.capacity,
            });
        }
        if !inst.graph.reachable(p.source, None)[p.sink] {
            out.push(Violation::NoPath {
                source: p.source,
                sink: p.sink,
            });
        }
    }
    out
}

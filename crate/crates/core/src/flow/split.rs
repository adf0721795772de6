use crate::graph::{Cost, DirectedNodeCapGraph, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArcKind {
    /// `v_in -> v_out`, carrying the capacity and cost of node `v`.
    Internal(NodeId),
    /// Image of original arc `i`.
    Original(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitArc {
    pub from: usize,
    pub to: usize,
    /// `None` is unbounded.
    pub cap: Option<u64>,
    pub cost: Cost,
    pub kind: ArcKind,
}

/// Arc-capacitated image of a node-capacitated graph. Node `v` becomes
/// `v_in = 2v` and `v_out = 2v + 1`; arc `i < n` is the internal arc of
/// node `i`, arc `n + j` is the image of original arc `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitGraph {
    pub original_nodes: usize,
    pub arcs: Vec<SplitArc>,
}

impl SplitGraph {
    pub fn node_count(&self) -> usize {
        2 * self.original_nodes
    }

    pub fn v_in(v: NodeId) -> usize {
        2 * v
    }

    pub fn v_out(v: NodeId) -> usize {
        2 * v + 1
    }

    pub fn original(x: usize) -> NodeId {
        x / 2
    }

    /// Per-node load implied by a flow on the split arcs.
    pub fn node_loads(&self, arc_flow: &[u64]) -> Vec<u64> {
        (0..self.original_nodes).map(|v| arc_flow[v]).collect()
    }
}

pub fn split_transform(g: &DirectedNodeCapGraph) -> SplitGraph {
    let n = g.node_count();
    let mut arcs = Vec::with_capacity(n + g.arcs.len());
    for v in 0..n {
        arcs.push(SplitArc {
            from: SplitGraph::v_in(v),
            to: SplitGraph::v_out(v),
            cap: g.capacity[v],
            cost: g.cost[v],
            kind: ArcKind::Internal(v),
        });
    }
    for (j, &(a, b)) in g.arcs.iter().enumerate() {
        arcs.push(SplitArc {
            from: SplitGraph::v_out(a),
            to: SplitGraph::v_in(b),
            cap: None,
            cost: Cost::from_integer(0),
            kind: ArcKind::Original(j),
        });
    }
    SplitGraph { original_nodes: n, arcs }
}

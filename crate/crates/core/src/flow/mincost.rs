use std::collections::VecDeque;

use num_traits::Zero;

use super::maxflow::INF_CAP;
use super::scale_costs;
use super::split::SplitGraph;
use crate::error::{Error, Result};
use crate::graph::{Cost, DirectedNodeCapGraph, NodeId};

struct CostNetwork {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i128>,
    cost: Vec<i128>,
}

impl CostNetwork {
    fn new(n: usize) -> Self {
        CostNetwork {
            adj: vec![Vec::new(); n],
            to: Vec::new(),
            cap: Vec::new(),
            cost: Vec::new(),
        }
    }

    fn add_arc(&mut self, u: usize, v: usize, cap: i128, cost: i128) -> usize {
        let id = self.to.len();
        for (a, b, c, w) in [(u, v, cap, cost), (v, u, 0, -cost)] {
            self.to.push(b);
            self.cap.push(c);
            self.cost.push(w);
            self.adj[a].push(self.to.len() - 1);
        }
        id
    }

    /// Shortest residual path by SPFA; returns predecessor arcs.
    fn shortest(&self, s: usize) -> (Vec<Option<i128>>, Vec<usize>) {
        let n = self.adj.len();
        let mut dist: Vec<Option<i128>> = vec![None; n];
        let mut pred = vec![usize::MAX; n];
        let mut queued = vec![false; n];
        dist[s] = Some(0);
        let mut queue = VecDeque::from([s]);
        queued[s] = true;
        while let Some(u) = queue.pop_front() {
            queued[u] = false;
            let du = dist[u].unwrap();
            for &e in &self.adj[u] {
                if self.cap[e] <= 0 {
                    continue;
                }
                let v = self.to[e];
                let nd = du + self.cost[e];
                if dist[v].is_none_or(|d| nd < d) {
                    dist[v] = Some(nd);
                    pred[v] = e;
                    if !queued[v] {
                        queued[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        (dist, pred)
    }
}

/// Routes one unit from every entry of `unit_sources` to `sink` at minimum
/// total cost, where a unit pays the cost of every node it visits. Node `v`
/// admits at most `min(u, capacity[v])` units (a node without a capacity
/// gets `u`); the sink is unbounded. Returns one path per source, in input
/// order, and the total cost.
pub fn min_cost_flow_node_cap(
    g: &DirectedNodeCapGraph,
    unit_sources: &[NodeId],
    sink: NodeId,
    u: u64,
) -> Result<(Vec<Vec<NodeId>>, Cost)> {
    let n = g.node_count();
    if unit_sources.is_empty() {
        return Ok((Vec::new(), Cost::zero()));
    }
    if u == 0 {
        return Err(Error::Infeasible("per-node capacity 0".into()));
    }
    let scaled = scale_costs(&g.cost);
    let mut net = CostNetwork::new(2 * n + 1);
    for v in 0..n {
        let cap = if v == sink {
            INF_CAP
        } else {
            g.capacity[v].unwrap_or(u).min(u) as i128
        };
        net.add_arc(SplitGraph::v_in(v), SplitGraph::v_out(v), cap, scaled[v]);
    }
    for &(a, b) in &g.arcs {
        net.add_arc(SplitGraph::v_out(a), SplitGraph::v_in(b), INF_CAP, 0);
    }
    let super_s = 2 * n;
    let mut count = vec![0i128; n];
    for &s in unit_sources {
        count[s] += 1;
    }
    let mut source_arc = vec![usize::MAX; n];
    for s in 0..n {
        if count[s] > 0 {
            source_arc[s] = net.add_arc(super_s, SplitGraph::v_in(s), count[s], 0);
        }
    }
    let t = SplitGraph::v_out(sink);
    let need = unit_sources.len() as i128;
    let mut sent = 0i128;
    while sent < need {
        let (dist, pred) = net.shortest(super_s);
        if dist[t].is_none() {
            return Err(Error::Infeasible(format!(
                "only {sent} of {need} units reach node {sink} under per-node capacity {u}"
            )));
        }
        let mut push = need - sent;
        let mut v = t;
        while v != super_s {
            let e = pred[v];
            push = push.min(net.cap[e]);
            v = net.to[e ^ 1];
        }
        let mut v = t;
        while v != super_s {
            let e = pred[v];
            net.cap[e] -= push;
            net.cap[e ^ 1] += push;
            v = net.to[e ^ 1];
        }
        sent += push;
    }

    // Flow on forward arcs equals the residual capacity of the reverse arcs.
    let mut flow: Vec<i128> = (0..net.to.len()).map(|e| if e % 2 == 0 { net.cap[e + 1] } else { 0 }).collect();
    let mut paths = Vec::with_capacity(unit_sources.len());
    let mut total = Cost::zero();
    for &s in unit_sources {
        flow[source_arc[s]] -= 1;
        let mut walk_nodes = vec![SplitGraph::v_in(s)];
        let mut walk_arcs: Vec<usize> = Vec::new();
        while *walk_nodes.last().unwrap() != t {
            let x = *walk_nodes.last().unwrap();
            let e = *net.adj[x]
                .iter()
                .find(|&&e| e % 2 == 0 && flow[e] > 0)
                .expect("flow conservation in min-cost flow");
            let y = net.to[e];
            if let Some(pos) = walk_nodes.iter().position(|&z| z == y) {
                // cancel the cycle closed by e
                flow[e] -= 1;
                for &c in &walk_arcs[pos..] {
                    flow[c] -= 1;
                }
                walk_arcs.truncate(pos);
                walk_nodes.truncate(pos + 1);
            } else {
                walk_arcs.push(e);
                walk_nodes.push(y);
            }
        }
        for &e in &walk_arcs {
            flow[e] -= 1;
        }
        let path = super::maxflow::collapse_split_walk(walk_nodes);
        total += path.iter().fold(Cost::zero(), |acc, &v| acc + g.cost[v]);
        paths.push(path);
    }
    Ok((paths, total))
}

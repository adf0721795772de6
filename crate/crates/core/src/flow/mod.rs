//! Flow primitives over node-capacitated graphs.

mod dgg;
mod maxflow;
mod mcf;
mod mincost;
mod split;

pub use dgg::dgg_unsplittable;
pub(crate) use dgg::dgg_general;
pub use maxflow::{max_flow_multi_source, max_flow_node_cap, FlowNetwork, INF_CAP};
pub use mcf::{concurrent_mcf, McfDemand, McfNetwork, McfResult};
pub use mincost::min_cost_flow_node_cap;
pub use split::{split_transform, ArcKind, SplitArc, SplitGraph};

use crate::graph::NodeId;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowPath {
    pub nodes: Vec<NodeId>,
    pub amount: u64,
}

/// Single-sink flow given as a path decomposition, one list per demand.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SplittableFlow {
    pub demands: Vec<(NodeId, u64)>,
    pub paths: Vec<Vec<FlowPath>>,
}

impl SplittableFlow {
    pub fn node_loads(&self, n: usize) -> Vec<u64> {
        let mut load = vec![0u64; n];
        for p in self.paths.iter().flatten() {
            for &v in &p.nodes {
                load[v] += p.amount;
            }
        }
        load
    }

    pub fn routed(&self, i: usize) -> u64 {
        self.paths[i].iter().map(|p| p.amount).sum()
    }

    /// True when every demand uses a single path.
    pub fn is_unsplittable(&self) -> bool {
        self.paths.iter().all(|ps| ps.len() == 1)
    }
}

/// One path per demand, carrying the whole demand.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct UnsplittableFlow {
    pub demands: Vec<(NodeId, u64)>,
    pub paths: Vec<Vec<NodeId>>,
}

impl UnsplittableFlow {
    pub fn node_loads(&self, n: usize) -> Vec<u64> {
        let mut load = vec![0u64; n];
        for (p, &(_, d)) in self.paths.iter().zip(&self.demands) {
            for &v in p {
                load[v] += d;
            }
        }
        load
    }

    pub fn into_splittable(self) -> SplittableFlow {
        let paths = self
            .paths
            .into_iter()
            .zip(&self.demands)
            .map(|(nodes, &(_, d))| vec![FlowPath { nodes, amount: d }])
            .collect();
        SplittableFlow {
            demands: self.demands,
            paths,
        }
    }
}

/// Costs multiplied by the least common multiple of their denominators.
pub(crate) fn scale_costs(costs: &[crate::graph::Cost]) -> Vec<i128> {
    use num_integer::Integer;
    let l = costs.iter().fold(1i128, |acc, c| acc.lcm(&(*c.denom() as i128)));
    costs
        .iter()
        .map(|c| *c.numer() as i128 * (l / *c.denom() as i128))
        .collect()
}

//! Cluster graphs, min-cut decomposition and cut sampling.

use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;

use crate::flow::FlowNetwork;

pub const DELTA: f64 = 1.0 / 8.0;

/// Multigraph with one vertex per cluster and one edge per crossing pair.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ClusterGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl ClusterGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Self {
        ClusterGraph { n, edges }
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Edges crossing the vertex set `side`.
    pub fn cut_value(&self, side: &[bool]) -> usize {
        self.edges.iter().filter(|&&(a, b)| side[a] != side[b]).count()
    }

    /// Connected components of the vertices in `alive`, using edges in `kept`.
    fn components(&self, kept: &[bool]) -> Vec<Vec<usize>> {
        let mut comp = vec![usize::MAX; self.n];
        let mut adj = vec![Vec::new(); self.n];
        for (i, &(a, b)) in self.edges.iter().enumerate() {
            if kept[i] {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut out = Vec::new();
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            comp[s] = id;
            let mut stack = vec![s];
            let mut members = Vec::new();
            while let Some(u) = stack.pop() {
                members.push(u);
                for &w in &adj[u] {
                    if comp[w] == usize::MAX {
                        comp[w] = id;
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}

/// Global min-cut of the subgraph induced by `verts` using edges in `kept`.
/// Among cuts of minimum value the side with the fewest vertices is
/// returned (as a subset of `verts`).
pub fn min_cut(g: &ClusterGraph, verts: &[usize], kept: &[bool]) -> (usize, Vec<usize>) {
    if verts.len() < 2 {
        return (usize::MAX, Vec::new());
    }
    let mut local = vec![usize::MAX; g.n];
    for (i, &v) in verts.iter().enumerate() {
        local[v] = i;
    }
    let mut net = FlowNetwork::new(verts.len());
    for (i, &(a, b)) in g.edges.iter().enumerate() {
        if kept[i] && local[a] != usize::MAX && local[b] != usize::MAX && a != b {
            net.add_undirected(local[a], local[b], 1);
        }
    }
    let mut best: Option<(usize, Vec<usize>)> = None;
    for s in 0..verts.len() {
        for t in s + 1..verts.len() {
            net.reset();
            let val = net.max_flow(s, t) as usize;
            let reach = net.residual_reachable(s);
            let near: Vec<usize> = (0..verts.len()).filter(|&i| reach[i]).map(|i| verts[i]).collect();
            let far: Vec<usize> = (0..verts.len()).filter(|&i| !reach[i]).map(|i| verts[i]).collect();
            let side = if far.len() < near.len() { far } else { near };
            let better = match &best {
                None => true,
                Some((bv, bs)) => val < *bv || (val == *bv && side.len() < bs.len()),
            };
            if better {
                best = Some((val, side));
            }
        }
    }
    best.expect("at least two vertices")
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Decomposition {
    pub components: Vec<Vec<usize>>,
    /// Indices into the cluster graph's edge list.
    pub removed: Vec<usize>,
    pub cuts: usize,
}

impl Decomposition {
    pub fn component_of(&self, n: usize) -> Vec<usize> {
        let mut c = vec![usize::MAX; n];
        for (i, comp) in self.components.iter().enumerate() {
            for &v in comp {
                c[v] = i;
            }
        }
        c
    }
}

/// Repeatedly removes a smallest-side min-cut from any component whose
/// min-cut is below `delta q / 4`.
pub fn mincut_decompose(g: &ClusterGraph, q: u64) -> Decomposition {
    let threshold = DELTA * q as f64 / 4.0;
    let mut kept = vec![true; g.edges.len()];
    let mut cuts = 0;
    loop {
        let comps = g.components(&kept);
        let mut changed = false;
        for comp in comps.iter().filter(|c| c.len() > 1) {
            let (val, side) = min_cut(g, comp, &kept);
            if (val as f64) < threshold {
                let in_side: BTreeSet<usize> = side.into_iter().collect();
                for (i, &(a, b)) in g.edges.iter().enumerate() {
                    if kept[i] && in_side.contains(&a) != in_side.contains(&b) && comp.binary_search(&a).is_ok() {
                        kept[i] = false;
                    }
                }
                cuts += 1;
                changed = true;
            }
        }
        if !changed {
            let removed = (0..g.edges.len()).filter(|&i| !kept[i]).collect();
            return Decomposition {
                components: comps,
                removed,
                cuts,
            };
        }
    }
}

/// Values of every cut `(S, V \ S)` with `0 ∈ S`, indexed by bitmask over
/// vertices `1..n`. Only for small graphs.
pub fn enumerate_cuts(g: &ClusterGraph) -> Vec<usize> {
    assert!(g.n <= 20, "cut enumeration limited to 20 vertices");
    if g.n < 2 {
        return Vec::new();
    }
    let count = 1usize << (g.n - 1);
    (0..count - 1)
        .map(|mask| {
            let side = |v: usize| v == 0 || (mask >> (v - 1)) & 1 == 1;
            g.edges.iter().filter(|&&(a, b)| side(a) != side(b)).count()
        })
        .collect()
}

/// Exact global min-cut of the subgraph induced by `verts` by enumeration.
pub fn exact_min_cut(g: &ClusterGraph, verts: &[usize], kept: Option<&[bool]>) -> usize {
    let mut local = vec![usize::MAX; g.n];
    for (i, &v) in verts.iter().enumerate() {
        local[v] = i;
    }
    let edges: Vec<(usize, usize)> = g
        .edges
        .iter()
        .enumerate()
        .filter(|&(i, &(a, b))| kept.is_none_or(|k| k[i]) && local[a] != usize::MAX && local[b] != usize::MAX)
        .map(|(_, &(a, b))| (local[a], local[b]))
        .collect();
    enumerate_cuts(&ClusterGraph::new(verts.len(), edges))
        .into_iter()
        .min()
        .unwrap_or(usize::MAX)
}

/// Keeps each edge independently with probability `p`.
pub fn karger_sample<R: Rng>(g: &ClusterGraph, p: f64, rng: &mut R) -> ClusterGraph {
    let edges = g.edges.iter().copied().filter(|_| rng.gen_bool(p)).collect();
    ClusterGraph::new(g.n, edges)
}

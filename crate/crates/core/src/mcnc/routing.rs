//! Turning clusters and hallucinated paths into routed pairs.

use std::collections::BTreeMap;

use serde::Serialize;

use super::aux::tree_path;
use super::state::{ClusterSet, Status};
use crate::error::{Error, Result};
use crate::flow::{concurrent_mcf, McfDemand, McfNetwork};
use crate::graph::{shortcut_walk, NodeId, UndirectedMultigraph};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoutedPair {
    pub pair: usize,
    pub path: Vec<NodeId>,
}

/// Routes every alive pair whose terminals share an internal cluster along
/// that cluster's tree.
pub fn route_internal(g: &UndirectedMultigraph, set: &ClusterSet) -> Result<Vec<RoutedPair>> {
    let mut out = Vec::new();
    for &i in &set.alive {
        let (a, b) = set.ends(i);
        if a != b || set.get(a).status != Status::FrozenInternal {
            continue;
        }
        let (s, t) = set.pairs[i];
        let path = tree_path(g, &set.get(a).cluster.tree, s, t)?;
        out.push(RoutedPair { pair: i, path });
    }
    Ok(out)
}

/// Pairs with both terminals in internal clusters' trees.
pub fn pairs_touching_internal(set: &ClusterSet) -> usize {
    set.alive
        .iter()
        .filter(|&&i| {
            let (a, b) = set.ends(i);
            set.get(a).status == Status::FrozenInternal || set.get(b).status == Status::FrozenInternal
        })
        .count()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ComponentRouting {
    pub routed: Vec<RoutedPair>,
    pub lambda: f64,
    /// Pairs carried by the busiest hallucinated edge after rounding.
    pub max_edge_load: u64,
    /// Largest ratio of a cluster's throughput to the capacity of its
    /// hallucinated edges.
    pub max_throughput_ratio: f64,
}

/// Routes `pairs` between the clusters in `comp` over the hallucinated
/// edges (`sampled`, each a pair id with its chosen path), each of
/// capacity `q`, then expands cluster hops into node paths. Throughput is
/// only certified to within `1 - eps`, so edges may carry up to
/// `q / (1 - eps)` before rounding.
pub fn route_component(
    g: &UndirectedMultigraph,
    set: &ClusterSet,
    comp: &[usize],
    pairs: &[usize],
    sampled: &[(usize, Vec<NodeId>)],
    q: u64,
    eps: f64,
) -> Result<ComponentRouting> {
    if pairs.is_empty() {
        return Ok(ComponentRouting {
            lambda: f64::INFINITY,
            ..Default::default()
        });
    }
    let local: BTreeMap<usize, usize> = comp.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut net = McfNetwork::new(comp.len());
    let mut edge_paths: Vec<&Vec<NodeId>> = Vec::new();
    let mut arc_edge: Vec<usize> = Vec::new();
    for (p, path) in sampled {
        let (a, b) = set.ends(*p);
        let (Some(&la), Some(&lb)) = (local.get(&a), local.get(&b)) else {
            continue;
        };
        if la == lb {
            continue;
        }
        let r = net.add_resource(q as f64);
        for (x, y) in [(la, lb), (lb, la)] {
            net.add_arc(x, y, vec![(r, 1.0)]);
            arc_edge.push(edge_paths.len());
        }
        edge_paths.push(path);
    }
    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for &p in pairs {
        let (a, b) = set.ends(p);
        let (Some(&la), Some(&lb)) = (local.get(&a), local.get(&b)) else {
            return Err(Error::MalformedSolution(format!("pair {p} leaves its component")));
        };
        groups.entry((la, lb)).or_default().push(p);
    }
    let keys: Vec<(usize, usize)> = groups.keys().copied().collect();
    let demands: Vec<McfDemand> = keys
        .iter()
        .map(|&(a, b)| McfDemand {
            source: a,
            sink: b,
            amount: groups[&(a, b)].len() as f64,
        })
        .collect();
    let res = concurrent_mcf(&net, &demands, eps);
    if res.flows.is_empty() || res.lambda < 1.0 - eps {
        return Err(Error::SparsifierFailure(format!(
            "{} pairs over {} hallucinated edges reach throughput {:.3} (< 1 - eps)",
            pairs.len(),
            edge_paths.len(),
            res.lambda
        )));
    }
    let scale = 1.0 / res.lambda;

    let mut through = vec![0.0; comp.len()];
    let mut degree = vec![0usize; comp.len()];
    for (i, arc) in net.arcs.iter().enumerate() {
        if i % 2 == 0 {
            degree[arc.from] += 1;
            degree[arc.to] += 1;
        }
    }
    for (d, paths) in demands.iter().zip(&res.flows) {
        for (arcs, amt) in paths {
            for &a in arcs {
                through[net.arcs[a].from] += amt * scale;
            }
            through[d.sink] += amt * scale;
        }
    }
    let max_throughput_ratio = (0..comp.len())
        .filter(|&v| degree[v] > 0)
        .map(|v| through[v] / (q as f64 * degree[v] as f64))
        .fold(0.0, f64::max);

    let mut edge_load = vec![0u64; edge_paths.len()];
    let mut routed = Vec::new();
    for (key, paths) in keys.iter().zip(&res.flows) {
        let members = &groups[key];
        let counts = apportion(&paths.iter().map(|p| p.1 * scale).collect::<Vec<_>>(), members.len());
        let mut next = members.iter();
        for ((arcs, _), &cnt) in paths.iter().zip(&counts) {
            for _ in 0..cnt {
                let &p = next.next().expect("apportioned counts sum to the group size");
                for &a in arcs {
                    edge_load[arc_edge[a]] += 1;
                }
                let path = expand(g, set, p, arcs, &net, comp, &arc_edge, &edge_paths)?;
                routed.push(RoutedPair { pair: p, path });
            }
        }
    }
    routed.sort_by_key(|r| r.pair);
    Ok(ComponentRouting {
        routed,
        lambda: res.lambda,
        max_edge_load: edge_load.into_iter().max().unwrap_or(0),
        max_throughput_ratio,
    })
}

/// Largest-remainder split of `total` items in proportion to `weights`.
fn apportion(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        let mut c = vec![0; weights.len()];
        c[0] = total;
        return c;
    }
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let mut left = total - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

#[allow(clippy::too_many_arguments)]
fn expand(
    g: &UndirectedMultigraph,
    set: &ClusterSet,
    pair: usize,
    arcs: &[usize],
    net: &McfNetwork,
    comp: &[usize],
    arc_edge: &[usize],
    edge_paths: &[&Vec<NodeId>],
) -> Result<Vec<NodeId>> {
    let (s, t) = set.pairs[pair];
    let mut walk = vec![s];
    let mut cur = s;
    let mut cluster = set.owner[&s];
    let hop = |walk: &mut Vec<NodeId>, cluster: usize, from: NodeId, to: NodeId| -> Result<()> {
        let seg = tree_path(g, &set.get(cluster).cluster.tree, from, to)?;
        walk.extend_from_slice(&seg[1..]);
        Ok(())
    };
    for &a in arcs {
        let u = edge_paths[arc_edge[a]];
        let from = comp[net.arcs[a].from];
        let seg: Vec<NodeId> = if set.owner[&u[0]] == from {
            u.clone()
        } else {
            u.iter().rev().copied().collect()
        };
        hop(&mut walk, cluster, cur, seg[0])?;
        walk.extend_from_slice(&seg[1..]);
        cur = *seg.last().expect("non-empty path");
        cluster = comp[net.arcs[a].to];
    }
    hop(&mut walk, cluster, cur, t)?;
    Ok(shortcut_walk(&walk))
}

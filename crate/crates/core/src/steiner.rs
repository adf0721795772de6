//! Partial node-weighted Steiner trees and the max-density tree oracle.
//!
//! Weights are `f64`: the load-control weights of the cover solver grow
//! geometrically and only feed heuristic choices, never reported costs.
//! Terminals carry integer weights (the number of uncovered demand units
//! hanging off a node), which replaces explicit pendant vertices.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use crate::error::{Error, Result};
use crate::graph::{NodeId, UndirectedMultigraph};

#[derive(Clone, Debug)]
pub struct PnwstQuery<'a> {
    pub graph: &'a UndirectedMultigraph,
    pub beta: &'a [f64],
    pub root: NodeId,
    /// Terminal weight per node; 0 for non-terminals.
    pub terminal_weight: &'a [u64],
    pub target: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteinerTree {
    /// Sorted node set.
    pub nodes: Vec<NodeId>,
    pub cost: f64,
    pub covered: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityCandidate {
    pub tree: Vec<NodeId>,
    pub covered: u64,
    pub cost: f64,
    pub density: f64,
    pub contains_sink: bool,
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Node-weighted shortest paths: `dist[c][x]` sums the weights of the
/// nodes on the path from `c` to `x`, excluding `c`.
struct Apsp {
    dist: Vec<Vec<f64>>,
    pred: Vec<Vec<usize>>,
}

impl Apsp {
    fn new(g: &UndirectedMultigraph, beta: &[f64]) -> Self {
        let n = g.node_count();
        let mut dist = Vec::with_capacity(n);
        let mut pred = Vec::with_capacity(n);
        for c in 0..n {
            let (d, p) = dijkstra(g, beta, c);
            dist.push(d);
            pred.push(p);
        }
        Apsp { dist, pred }
    }

    fn path(&self, c: NodeId, x: NodeId) -> Vec<NodeId> {
        let mut out = vec![x];
        let mut cur = x;
        while cur != c {
            cur = self.pred[c][cur];
            out.push(cur);
        }
        out
    }
}

fn dijkstra(g: &UndirectedMultigraph, beta: &[f64], c: NodeId) -> (Vec<f64>, Vec<usize>) {
    let n = g.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    dist[c] = 0.0;
    let mut heap = BinaryHeap::from([Item(0.0, c)]);
    while let Some(Item(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &v in g.neighbors(u) {
            if !beta[v].is_finite() {
                continue;
            }
            let nd = d + beta[v];
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = u;
                heap.push(Item(nd, v));
            }
        }
    }
    (dist, pred)
}

/// Greedy spider growth from `root` until `target` weight is covered.
fn greedy_spiders(g: &UndirectedMultigraph, beta: &[f64], apsp: &Apsp, root: NodeId, w: &[u64], target: u64) -> Option<BTreeSet<NodeId>> {
    let n = g.node_count();
    let mut tree = BTreeSet::from([root]);
    let mut covered = w[root];
    while covered < target {
        let need = target - covered;
        let mut best: Option<(f64, NodeId, Vec<NodeId>)> = None;
        for c in 0..n {
            if !beta[c].is_finite() {
                continue;
            }
            let (base, _) = if tree.contains(&c) {
                (0.0, c)
            } else {
                let to_tree = tree
                    .iter()
                    .map(|&y| (apsp.dist[c][y] - beta[y], y))
                    .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                    .unwrap();
                if !to_tree.0.is_finite() {
                    continue;
                }
                (beta[c] + to_tree.0, to_tree.1)
            };
            let mut legs: Vec<(f64, NodeId)> = (0..n)
                .filter(|&x| w[x] > 0 && !tree.contains(&x) && apsp.dist[c][x].is_finite())
                .map(|x| {
                    let d = if x == c { 0.0 } else { apsp.dist[c][x] };
                    (d, x)
                })
                .collect();
            legs.sort_by(|a, b| (a.0 / w[a.1] as f64).total_cmp(&(b.0 / w[b.1] as f64)).then(a.1.cmp(&b.1)));
            let mut cost = base;
            let mut gain = 0u64;
            for (j, &(d, x)) in legs.iter().enumerate() {
                cost += d;
                gain += w[x];
                let density = cost / gain.min(need) as f64;
                if best.as_ref().is_none_or(|b| density < b.0) {
                    best = Some((density, c, legs[..=j].iter().map(|l| l.1).collect()));
                }
                if gain >= need {
                    break;
                }
            }
        }
        let (_, c, targets) = best?;
        if !tree.contains(&c) {
            let y = *tree
                .iter()
                .min_by(|&&a, &&b| (apsp.dist[c][a] - beta[a]).total_cmp(&(apsp.dist[c][b] - beta[b])).then(a.cmp(&b)))
                .unwrap();
            for v in apsp.path(c, y) {
                if tree.insert(v) {
                    covered += w[v];
                }
            }
        }
        for x in targets {
            for v in apsp.path(c, x) {
                if tree.insert(v) {
                    covered += w[v];
                }
            }
        }
    }
    Some(tree)
}

/// Spanning tree of `nodes` (which must induce a connected subgraph
/// containing `root`) as children lists, built by shortest paths or BFS.
fn spanning_children(g: &UndirectedMultigraph, beta: &[f64], nodes: &BTreeSet<NodeId>, root: NodeId, shortest: bool) -> Vec<Vec<NodeId>> {
    let n = g.node_count();
    let mut children = vec![Vec::new(); n];
    if shortest {
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![usize::MAX; n];
        dist[root] = 0.0;
        let mut heap = BinaryHeap::from([Item(0.0, root)]);
        while let Some(Item(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &v in g.neighbors(u) {
                if nodes.contains(&v) && d + beta[v] < dist[v] {
                    dist[v] = d + beta[v];
                    pred[v] = u;
                    heap.push(Item(dist[v], v));
                }
            }
        }
        for &v in nodes {
            if v != root && pred[v] != usize::MAX {
                children[pred[v]].push(v);
            }
        }
    } else {
        let allowed: Vec<bool> = (0..n).map(|v| nodes.contains(&v) && beta[v].is_finite()).collect();
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if allowed[v] && !seen[v] {
                    seen[v] = true;
                    children[u].push(v);
                    queue.push_back(v);
                }
            }
        }
    }
    children
}

/// Tree knapsack over a rooted spanning tree. Entry `c` of the result is the
/// cheapest connected subtree containing `root` with coverage `c`; when
/// `saturate` is set coverage is clamped at `cap`, otherwise subtrees above
/// `cap` are discarded.
fn tree_knapsack(children: &[Vec<NodeId>], beta: &[f64], w: &[u64], root: NodeId, cap: u64, saturate: bool) -> Vec<Option<(f64, Vec<NodeId>)>> {
    let cap = cap as usize;
    // post-order
    let mut order = Vec::new();
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        order.push(v);
        stack.extend(children[v].iter().copied());
    }
    order.reverse();
    let n = children.len();
    type Table = Vec<Option<f64>>;
    // stages[v][i] = table after merging the first i children; choice[v][i][c] = coverage taken from child i
    let mut stages: Vec<Vec<Table>> = vec![Vec::new(); n];
    let mut choices: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n];
    let clamp = |c: usize| if saturate { c.min(cap) } else { c };
    for &v in &order {
        let mut table: Table = vec![None; cap + 1];
        let wv = w[v] as usize;
        if saturate || wv <= cap {
            table[clamp(wv)] = Some(beta[v]);
        }
        let mut stage_list = vec![table.clone()];
        let mut choice_list = Vec::new();
        for &u in &children[v] {
            let child = stages[u].last().unwrap().clone();
            let mut next = table.clone();
            let mut choice = vec![0usize; cap + 1];
            for a in 0..=cap {
                let Some(fa) = table[a] else { continue };
                for (b, fb) in child.iter().enumerate() {
                    let Some(fb) = fb else { continue };
                    let c = a + b;
                    if !saturate && c > cap {
                        continue;
                    }
                    let c = clamp(c);
                    let total = fa + fb;
                    if next[c].is_none_or(|x| total < x) {
                        next[c] = Some(total);
                        choice[c] = b + 1;
                    }
                }
            }
            table = next;
            stage_list.push(table.clone());
            choice_list.push(choice);
        }
        stages[v] = stage_list;
        choices[v] = choice_list;
    }

    #[allow(clippy::too_many_arguments)]
    fn collect(
        v: NodeId,
        c: usize,
        children: &[Vec<NodeId>],
        stages: &[Vec<Vec<Option<f64>>>],
        choices: &[Vec<Vec<usize>>],
        cap: usize,
        saturate: bool,
        out: &mut Vec<NodeId>,
    ) {
        out.push(v);
        let mut c = c;
        for i in (0..children[v].len()).rev() {
            let pick = choices[v][i][c];
            if pick == 0 {
                continue;
            }
            let b = pick - 1;
            let u = children[v][i];
            // find the pre-merge coverage a with a + b -> c
            let prev = &stages[v][i];
            let cu = stages[u].last().unwrap()[b].unwrap();
            let target = stages[v][i + 1][c].unwrap();
            let a = (0..=cap)
                .find(|&a| {
                    let cc = if saturate { (a + b).min(cap) } else { a + b };
                    cc == c && prev[a].is_some_and(|fa| fa + cu == target)
                })
                .expect("knapsack back-pointer");
            collect(u, b, children, stages, choices, cap, saturate, out);
            c = a;
        }
    }

    let final_table = stages[root].last().unwrap().clone();
    final_table
        .iter()
        .enumerate()
        .map(|(c, f)| {
            f.map(|cost| {
                let mut nodes = Vec::new();
                collect(root, c, children, &stages, &choices, cap, saturate, &mut nodes);
                nodes.sort_unstable();
                (cost, nodes)
            })
        })
        .collect()
}

fn finite_reach(g: &UndirectedMultigraph, beta: &[f64], root: NodeId) -> Vec<bool> {
    let allowed: Vec<bool> = beta.iter().map(|b| b.is_finite()).collect();
    g.reachable(root, Some(&allowed))
}

fn covered_weight(nodes: &[NodeId], w: &[u64]) -> u64 {
    nodes.iter().map(|&v| w[v]).sum()
}

fn tree_cost(nodes: &[NodeId], beta: &[f64]) -> f64 {
    nodes.iter().map(|&v| beta[v]).sum()
}

/// Cheap tree containing the root and at least `target` terminal weight.
pub fn pnwst_approx(q: &PnwstQuery<'_>) -> Result<SteinerTree> {
    let apsp = Apsp::new(q.graph, q.beta);
    pnwst_with(q, &apsp)
}

fn pnwst_with(q: &PnwstQuery<'_>, apsp: &Apsp) -> Result<SteinerTree> {
    let g = q.graph;
    let w = q.terminal_weight;
    let reach = finite_reach(g, q.beta, q.root);
    let available: u64 = (0..g.node_count()).filter(|&v| reach[v]).map(|v| w[v]).sum();
    if available < q.target {
        return Err(Error::Infeasible(format!(
            "only {available} terminal weight reachable from root {}, target {}",
            q.root, q.target
        )));
    }
    let greedy = greedy_spiders(g, q.beta, apsp, q.root, w, q.target)
        .ok_or_else(|| Error::Infeasible("no spider reaches an uncovered terminal".into()))?;
    let mut best: Vec<NodeId> = greedy.iter().copied().collect();
    let mut best_cost = tree_cost(&best, q.beta);
    let everything: BTreeSet<NodeId> = (0..g.node_count()).filter(|&v| reach[v]).collect();
    for (set, shortest) in [(&greedy, true), (&greedy, false), (&everything, true)] {
        let children = spanning_children(g, q.beta, set, q.root, shortest);
        let table = tree_knapsack(&children, q.beta, w, q.root, q.target, true);
        if let Some((cost, nodes)) = &table[q.target as usize] {
            if *cost < best_cost || (*cost == best_cost && *nodes < best) {
                best_cost = *cost;
                best = nodes.clone();
            }
        }
    }
    Ok(SteinerTree {
        covered: covered_weight(&best, w),
        cost: best_cost,
        nodes: best,
    })
}

/// Parameters of one max-density query.
#[derive(Clone, Debug)]
pub struct DensityQuery<'a> {
    pub graph: &'a UndirectedMultigraph,
    pub beta: &'a [f64],
    /// Uncovered demand units per node.
    pub uncovered: &'a [u64],
    pub capacity: u64,
    pub sink: NodeId,
}

/// Upper end of the target sweep: `ceil(q (1 + log2 q))`.
pub fn density_target_cap(q: u64) -> u64 {
    let qf = q as f64;
    (qf * (1.0 + qf.log2())).ceil() as u64
}

fn better(a: &DensityCandidate, b: &DensityCandidate) -> bool {
    match a.density.total_cmp(&b.density) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => match (a.contains_sink, b.contains_sink) {
            (true, false) => true,
            (false, true) => false,
            _ => a.tree < b.tree,
        },
    }
}

/// Tree minimizing weight per newly covered demand unit, over trees with at
/// least `capacity` uncovered demand and trees containing the sink, with
/// newly covered demand at most [`density_target_cap`].
pub fn max_density_tree(q: &DensityQuery<'_>) -> Result<DensityCandidate> {
    let g = q.graph;
    let n = g.node_count();
    let w = q.uncovered;
    let total: u64 = w.iter().sum();
    if total == 0 {
        return Err(Error::Infeasible("all terminals already covered".into()));
    }
    let lmax = total.min(density_target_cap(q.capacity));
    let apsp = Apsp::new(g, q.beta);
    let mut best: Option<DensityCandidate> = None;
    let mut offer = |tree: Vec<NodeId>, cost: f64, covered: u64| {
        let cand = DensityCandidate {
            contains_sink: tree.binary_search(&q.sink).is_ok(),
            density: cost / covered as f64,
            tree,
            covered,
            cost,
        };
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            best = Some(cand);
        }
    };

    let mut roots: BTreeSet<NodeId> = BTreeSet::new();
    for v in 0..n {
        if w[v] > 0 {
            roots.insert(v);
            roots.extend(g.neighbors(v).iter().copied());
        }
    }
    roots.remove(&q.sink);
    let families = roots
        .into_iter()
        .map(|r| (r, q.capacity))
        .chain(std::iter::once((q.sink, 1)));
    for (root, min_cover) in families {
        if min_cover > lmax {
            continue;
        }
        if !q.beta[root].is_finite() {
            continue;
        }
        let reach = finite_reach(g, q.beta, root);
        let avail: u64 = (0..n).filter(|&v| reach[v]).map(|v| w[v]).sum();
        if avail < min_cover {
            continue;
        }
        let target = lmax.min(avail);
        let greedy = match greedy_spiders(g, q.beta, &apsp, root, w, target) {
            Some(t) => t,
            None => continue,
        };
        let everything: BTreeSet<NodeId> = (0..n).filter(|&v| reach[v]).collect();
        for (set, shortest) in [(&greedy, true), (&greedy, false), (&everything, true)] {
            let children = spanning_children(g, q.beta, set, root, shortest);
            let table = tree_knapsack(&children, q.beta, w, root, lmax, false);
            for (c, entry) in table.into_iter().enumerate() {
                if (c as u64) < min_cover.max(1) {
                    continue;
                }
                if let Some((cost, nodes)) = entry {
                    offer(nodes, cost, c as u64);
                }
            }
        }
    }
    best.ok_or_else(|| Error::Infeasible("no tree reaches the sink or enough uncovered demand".into()))
}

//! Splittable to unsplittable single-sink flow conversion.
//!
//! Works on the reversed split graph, where the sink is the single source
//! of flow and every demand is a terminal that walks back toward it.
//! Terminals move along singular arcs carrying at least their demand;
//! otherwise an alternating cycle is augmented until some arc empties or a
//! move becomes possible.

use std::collections::{BTreeMap, BTreeSet};

use super::maxflow::collapse_split_walk;
use super::split::SplitGraph;
use super::{SplittableFlow, UnsplittableFlow};
use crate::error::{Error, Result};
use crate::graph::NodeId;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Dir {
    Forward,
    Backward,
}

struct Support {
    flow: BTreeMap<(usize, usize), u64>,
    out: Vec<BTreeSet<usize>>,
    inn: Vec<BTreeSet<usize>>,
}

impl Support {
    fn new(n: usize) -> Self {
        Support {
            flow: BTreeMap::new(),
            out: vec![BTreeSet::new(); n],
            inn: vec![BTreeSet::new(); n],
        }
    }

    fn get(&self, u: usize, v: usize) -> u64 {
        *self.flow.get(&(u, v)).unwrap_or(&0)
    }

    fn add(&mut self, u: usize, v: usize, amount: u64) {
        if amount == 0 {
            return;
        }
        *self.flow.entry((u, v)).or_insert(0) += amount;
        self.out[u].insert(v);
        self.inn[v].insert(u);
    }

    fn sub(&mut self, u: usize, v: usize, amount: u64) {
        let f = self.flow.get_mut(&(u, v)).expect("arc in support");
        *f -= amount;
        if *f == 0 {
            self.flow.remove(&(u, v));
            self.out[u].remove(&v);
            self.inn[v].remove(&u);
        }
    }

    /// Vertices from which every reachable vertex has out-degree at most 1.
    fn chain_vertices(&self) -> Vec<bool> {
        let n = self.out.len();
        let mut state = vec![0u8; n]; // 0 unknown, 1 chain, 2 not chain
        for start in 0..n {
            let mut stack = vec![start];
            while let Some(&x) = stack.last() {
                if state[x] != 0 {
                    stack.pop();
                    continue;
                }
                match self.out[x].len() {
                    0 => {
                        state[x] = 1;
                        stack.pop();
                    }
                    1 => {
                        let y = *self.out[x].iter().next().unwrap();
                        if state[y] == 0 {
                            if stack.contains(&y) {
                                state[x] = 2;
                                stack.pop();
                            } else {
                                stack.push(y);
                            }
                        } else {
                            state[x] = state[y];
                            stack.pop();
                        }
                    }
                    _ => {
                        state[x] = 2;
                        stack.pop();
                    }
                }
            }
        }
        state.into_iter().map(|s| s == 1).collect()
    }

    /// Removes flow around directed cycles until the support is acyclic.
    fn cancel_cycles(&mut self) {
        loop {
            let Some(cycle) = self.find_cycle() else { return };
            let eps = cycle
                .windows(2)
                .map(|w| self.get(w[0], w[1]))
                .min()
                .unwrap();
            for w in cycle.windows(2) {
                self.sub(w[0], w[1], eps);
            }
        }
    }

    fn find_cycle(&self) -> Option<Vec<usize>> {
        let n = self.out.len();
        let mut color = vec![0u8; n];
        for root in 0..n {
            if color[root] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, Vec<usize>)> = vec![(root, self.out[root].iter().copied().collect())];
            color[root] = 1;
            while let Some((x, succ)) = stack.last_mut() {
                let x = *x;
                if let Some(y) = succ.pop() {
                    match color[y] {
                        0 => {
                            color[y] = 1;
                            let next: Vec<usize> = self.out[y].iter().copied().collect();
                            stack.push((y, next));
                        }
                        1 => {
                            let pos = stack.iter().position(|(z, _)| *z == y).unwrap();
                            let mut cycle: Vec<usize> = stack[pos..].iter().map(|(z, _)| *z).collect();
                            cycle.push(y);
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    color[x] = 2;
                    stack.pop();
                }
            }
        }
        None
    }
}

fn check_flow(f: &SplittableFlow, sink: NodeId) -> Result<()> {
    if f.demands.len() != f.paths.len() {
        return Err(Error::MalformedFlow("demand and path lists differ in length".into()));
    }
    for (i, (&(s, d), ps)) in f.demands.iter().zip(&f.paths).enumerate() {
        if s == sink {
            return Err(Error::MalformedFlow(format!("demand {i} sits at the sink")));
        }
        let routed: u64 = ps.iter().map(|p| p.amount).sum();
        if routed != d {
            return Err(Error::MalformedFlow(format!("demand {i} routes {routed} of {d}")));
        }
        for p in ps {
            if p.nodes.first() != Some(&s) || p.nodes.last() != Some(&sink) {
                return Err(Error::MalformedFlow(format!("demand {i} has a path not running from {s} to {sink}")));
            }
            if p.nodes.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::MalformedFlow(format!("demand {i} has a path with a repeated hop")));
            }
        }
    }
    Ok(())
}

/// Converts a single-sink splittable flow into an unsplittable one. Every
/// output path uses only arcs carrying flow in the input, and every node's
/// load grows by at most the largest demand.
pub fn dgg_unsplittable(f: &SplittableFlow, sink: NodeId) -> Result<UnsplittableFlow> {
    check_flow(f, sink)?;
    if f.is_unsplittable() {
        return Ok(UnsplittableFlow {
            demands: f.demands.clone(),
            paths: f.paths.iter().map(|ps| ps[0].nodes.clone()).collect(),
        });
    }
    dgg_general(f, sink)
}

/// DGG without the already-unsplittable shortcut; the output support is
/// always acyclic.
pub(crate) fn dgg_general(f: &SplittableFlow, sink: NodeId) -> Result<UnsplittableFlow> {
    check_flow(f, sink)?;
    let n_orig = f
        .paths
        .iter()
        .flatten()
        .flat_map(|p| p.nodes.iter().copied())
        .chain([sink])
        .max()
        .unwrap()
        + 1;
    let n = 2 * n_orig;
    let root = SplitGraph::v_in(sink);

    // Reversed split support: arcs point from the sink toward the sources.
    let mut sup = Support::new(n);
    for p in f.paths.iter().flatten() {
        let mut split = Vec::with_capacity(2 * p.nodes.len());
        for &v in &p.nodes[..p.nodes.len() - 1] {
            split.push(SplitGraph::v_in(v));
            split.push(SplitGraph::v_out(v));
        }
        split.push(root);
        for w in split.windows(2) {
            sup.add(w[1], w[0], p.amount);
        }
    }
    sup.cancel_cycles();

    let k = f.demands.len();
    let demand: Vec<u64> = f.demands.iter().map(|d| d.1).collect();
    let mut pos: Vec<usize> = f.demands.iter().map(|&(s, _)| SplitGraph::v_in(s)).collect();
    let mut trail: Vec<Vec<usize>> = pos.iter().map(|&p| vec![p]).collect();
    let mut at: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (i, &p) in pos.iter().enumerate() {
        at[p].insert(i);
    }

    let budget = 64 * (sup.flow.len() + k + 1) * (sup.flow.len() + k + 1) + 10_000;
    let mut rounds = 0usize;
    loop {
        // move terminals along singular arcs
        loop {
            let chain = sup.chain_vertices();
            let mut moved = false;
            for i in 0..k {
                let v = pos[i];
                if v == root || !chain[v] {
                    continue;
                }
                let from = sup.inn[v].iter().copied().find(|&u| sup.get(u, v) >= demand[i]);
                if let Some(u) = from {
                    sup.sub(u, v, demand[i]);
                    at[v].remove(&i);
                    at[u].insert(i);
                    pos[i] = u;
                    trail[i].push(u);
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
        if pos.iter().all(|&p| p == root) {
            break;
        }
        rounds += 1;
        if rounds > budget {
            return Err(Error::MalformedFlow("unsplittable conversion did not converge".into()));
        }
        let cycle = alternating_cycle(&sup, root)?;
        let mut eps = u64::MAX;
        for &(u, v, dir) in &cycle {
            let fe = sup.get(u, v);
            match dir {
                Dir::Forward => eps = eps.min(fe),
                Dir::Backward => {
                    if let Some(dmin) = at[v].iter().map(|&i| demand[i]).min() {
                        if dmin <= fe {
                            return Err(Error::MalformedFlow("terminal move missed".into()));
                        }
                        eps = eps.min(dmin - fe);
                    }
                }
            }
        }
        for &(u, v, dir) in &cycle {
            match dir {
                Dir::Forward => sup.sub(u, v, eps),
                Dir::Backward => sup.add(u, v, eps),
            }
        }
    }

    let paths = trail
        .into_iter()
        .map(|t| {
            let mut split: Vec<usize> = t;
            if let Some(&last) = split.last() {
                debug_assert_eq!(last, root);
            }
            split.dedup();
            collapse_split_walk(split)
        })
        .collect();
    Ok(UnsplittableFlow {
        demands: f.demands.clone(),
        paths,
    })
}

/// Alternating cycle: forward along arbitrary arcs to a vertex without
/// out-arcs, backward along singular arcs to a branching vertex, forward
/// again, until a vertex repeats.
fn alternating_cycle(sup: &Support, root: usize) -> Result<Vec<(usize, usize, Dir)>> {
    let stuck = || Error::MalformedFlow("no alternating cycle in flow support".into());
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    let mut steps: Vec<(usize, usize, Dir)> = Vec::new();
    let mut x = root;
    seen.insert(x, 0);
    let mut mode = Dir::Forward;
    let mut last: Option<(usize, usize)> = None;
    let mut backward_steps = 0usize;
    loop {
        let next;
        match mode {
            Dir::Forward => {
                if sup.out[x].is_empty() {
                    mode = Dir::Backward;
                    backward_steps = 0;
                    continue;
                }
                let y = sup.out[x]
                    .iter()
                    .copied()
                    .find(|&y| last != Some((x, y)))
                    .ok_or_else(stuck)?;
                steps.push((x, y, Dir::Forward));
                last = Some((x, y));
                next = y;
            }
            Dir::Backward => {
                if backward_steps > 0 && sup.out[x].len() >= 2 {
                    mode = Dir::Forward;
                    continue;
                }
                let u = sup.inn[x]
                    .iter()
                    .copied()
                    .find(|&u| last != Some((u, x)))
                    .ok_or_else(stuck)?;
                steps.push((u, x, Dir::Backward));
                last = Some((u, x));
                backward_steps += 1;
                next = u;
            }
        }
        if let Some(&start) = seen.get(&next) {
            return Ok(steps.split_off(start));
        }
        seen.insert(next, steps.len());
        x = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::FlowPath;

    fn fp(nodes: &[usize], amount: u64) -> FlowPath {
        FlowPath {
            nodes: nodes.to_vec(),
            amount,
        }
    }

    #[test]
    fn identity_on_unsplittable() {
        let f = SplittableFlow {
            demands: vec![(0, 2), (1, 1)],
            paths: vec![vec![fp(&[0, 2, 3], 2)], vec![fp(&[1, 2, 3], 1)]],
        };
        let u = dgg_unsplittable(&f, 3).unwrap();
        assert_eq!(u.paths, vec![vec![0, 2, 3], vec![1, 2, 3]]);
    }

    #[test]
    fn split_demand_picks_one_branch() {
        // s=0 splits 1+1 over 0-1-3 and 0-2-3
        let f = SplittableFlow {
            demands: vec![(0, 2)],
            paths: vec![vec![fp(&[0, 1, 3], 1), fp(&[0, 2, 3], 1)]],
        };
        let u = dgg_unsplittable(&f, 3).unwrap();
        assert!(u.paths[0] == vec![0, 1, 3] || u.paths[0] == vec![0, 2, 3]);
        let load = u.node_loads(4);
        assert_eq!(load[1] + load[2], 2);
        assert!(load[1] <= 1 + 2 && load[2] <= 1 + 2);
    }

    #[test]
    fn shared_middle_node_bound() {
        // sources 0 (d=1) and 1 (d=2), both split between middle nodes 2 and 3
        let f = SplittableFlow {
            demands: vec![(0, 1), (1, 2)],
            paths: vec![
                vec![fp(&[0, 2, 4], 1)],
                vec![fp(&[1, 2, 4], 1), fp(&[1, 3, 4], 1)],
            ],
        };
        let before = f.node_loads(5);
        let u = dgg_unsplittable(&f, 4).unwrap();
        let after = u.node_loads(5);
        for v in 0..4 {
            assert!(after[v] <= before[v] + 2, "node {v}");
        }
        assert!(u.paths[1] == vec![1, 2, 4] || u.paths[1] == vec![1, 3, 4]);
    }

    #[test]
    fn rejects_short_routing() {
        let f = SplittableFlow {
            demands: vec![(0, 2)],
            paths: vec![vec![fp(&[0, 1], 1)]],
        };
        assert!(matches!(dgg_unsplittable(&f, 1), Err(Error::MalformedFlow(_))));
    }

    #[test]
    fn cyclic_input_is_cleaned() {
        // two demands, one uses 2->3 and the other 3->2
        let f = SplittableFlow {
            demands: vec![(0, 2), (1, 2)],
            paths: vec![
                vec![fp(&[0, 2, 3, 5], 1), fp(&[0, 4, 5], 1)],
                vec![fp(&[1, 3, 2, 5], 1), fp(&[1, 4, 5], 1)],
            ],
        };
        let before = f.node_loads(6);
        let u = dgg_unsplittable(&f, 5).unwrap();
        let after = u.node_loads(6);
        for v in 0..5 {
            assert!(after[v] <= before[v] + 2);
        }
    }
}

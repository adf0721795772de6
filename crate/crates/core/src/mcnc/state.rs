use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::clustering::Cluster;
use crate::error::{Error, Result};
use crate::graph::{McncInstance, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    ActiveSafe,
    ActiveUnsafe,
    FrozenInternal,
    FrozenExternal,
}

impl Status {
    pub fn is_active(self) -> bool {
        matches!(self, Status::ActiveSafe | Status::ActiveUnsafe)
    }

    pub fn is_frozen(self) -> bool {
        !self.is_active()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterState {
    pub cluster: Cluster,
    pub status: Status,
    pub crossing_to_active: u64,
    pub crossing_to_frozen: u64,
    pub internal_pairs: u64,
}

impl ClusterState {
    pub fn load(&self) -> u64 {
        self.cluster.assigned.len() as u64
    }

    /// More than half of the assigned terminals have their mate inside.
    pub fn is_internal(&self) -> bool {
        4 * self.internal_pairs > self.load()
    }

    /// At least q/8 assigned terminals have their mate outside.
    pub fn is_external(&self, q: u64) -> bool {
        8 * (self.load() - 2 * self.internal_pairs) >= q
    }
}

/// Clusters of one clustering phase, keyed by stable ids. Merged-away or
/// emptied clusters leave a `None` behind.
#[derive(Clone, Debug)]
pub struct ClusterSet {
    pub states: Vec<Option<ClusterState>>,
    pub owner: BTreeMap<NodeId, usize>,
    pub pairs: Vec<(NodeId, NodeId)>,
    pub alive: BTreeSet<usize>,
    pub q: u64,
}

impl ClusterSet {
    /// Every terminal of the listed pairs starts as its own safe cluster.
    pub fn new(inst: &McncInstance, pair_ids: &BTreeSet<usize>) -> Self {
        let pairs: Vec<(NodeId, NodeId)> = inst.pairs.iter().map(|p| (p.source, p.sink)).collect();
        let mut set = ClusterSet {
            states: Vec::new(),
            owner: BTreeMap::new(),
            pairs,
            alive: pair_ids.clone(),
            q: inst.capacity,
        };
        for &i in pair_ids {
            let (s, t) = set.pairs[i];
            for v in [s, t] {
                set.push(Cluster::singleton(v, 1), Status::ActiveSafe);
            }
        }
        set.recount();
        set
    }

    pub fn push(&mut self, cluster: Cluster, status: Status) -> usize {
        let id = self.states.len();
        for &(v, _) in &cluster.assigned {
            self.owner.insert(v, id);
        }
        self.states.push(Some(ClusterState {
            cluster,
            status,
            crossing_to_active: 0,
            crossing_to_frozen: 0,
            internal_pairs: 0,
        }));
        id
    }

    pub fn get(&self, id: usize) -> &ClusterState {
        self.states[id].as_ref().expect("live cluster id")
    }

    pub fn get_mut(&mut self, id: usize) -> &mut ClusterState {
        self.states[id].as_mut().expect("live cluster id")
    }

    pub fn ids(&self) -> Vec<usize> {
        (0..self.states.len()).filter(|&i| self.states[i].is_some()).collect()
    }

    pub fn with_status(&self, f: impl Fn(Status) -> bool) -> Vec<usize> {
        self.ids().into_iter().filter(|&i| f(self.get(i).status)).collect()
    }

    pub fn active(&self) -> Vec<usize> {
        self.with_status(Status::is_active)
    }

    pub fn frozen(&self) -> Vec<usize> {
        self.with_status(Status::is_frozen)
    }

    /// Cluster ids of both endpoints of an alive pair.
    pub fn ends(&self, pair: usize) -> (usize, usize) {
        let (s, t) = self.pairs[pair];
        (self.owner[&s], self.owner[&t])
    }

    /// Recomputes every crossing and internal count from the alive pairs.
    pub fn recount(&mut self) {
        for st in self.states.iter_mut().flatten() {
            st.crossing_to_active = 0;
            st.crossing_to_frozen = 0;
            st.internal_pairs = 0;
        }
        let alive: Vec<usize> = self.alive.iter().copied().collect();
        for i in alive {
            let (a, b) = self.ends(i);
            if a == b {
                self.get_mut(a).internal_pairs += 1;
                continue;
            }
            for (x, y) in [(a, b), (b, a)] {
                let other_active = self.get(y).status.is_active();
                let st = self.get_mut(x);
                if other_active {
                    st.crossing_to_active += 1;
                } else {
                    st.crossing_to_frozen += 1;
                }
            }
        }
    }

    /// Number of alive pairs between clusters `a` and `b`.
    pub fn demand_between(&self, a: usize, b: usize) -> u64 {
        self.alive
            .iter()
            .filter(|&&i| {
                let (x, y) = self.ends(i);
                (x == a && y == b) || (x == b && y == a)
            })
            .count() as u64
    }

    /// Removes a pair from the phase and unassigns its terminals.
    pub fn delete_pair(&mut self, pair: usize) {
        if !self.alive.remove(&pair) {
            return;
        }
        let (s, t) = self.pairs[pair];
        for v in [s, t] {
            if let Some(id) = self.owner.remove(&v) {
                let st = self.get_mut(id);
                st.cluster.assigned.retain(|a| a.0 != v);
                if st.cluster.assigned.is_empty() {
                    self.states[id] = None;
                }
            }
        }
    }

    /// Merges clusters `ids` plus `extra` tree nodes. With `into`, the result
    /// keeps that cluster's id and status; otherwise a new safe cluster is
    /// created. Returns the id of the result.
    pub fn merge(&mut self, ids: &[usize], extra: &[NodeId], into: Option<usize>) -> Result<usize> {
        let mut tree: BTreeSet<NodeId> = extra.iter().copied().collect();
        let mut assigned = Vec::new();
        for &i in ids {
            if Some(i) == into {
                continue;
            }
            let st = self.states[i]
                .take()
                .ok_or_else(|| Error::MalformedSolution(format!("cluster {i} merged twice")))?;
            tree.extend(st.cluster.tree);
            assigned.extend(st.cluster.assigned);
        }
        let target = match into {
            Some(f) => {
                let st = self.get_mut(f);
                tree.extend(st.cluster.tree.iter().copied());
                st.cluster.tree = tree.into_iter().collect();
                st.cluster.assigned.extend(assigned);
                st.cluster.assigned.sort_unstable();
                f
            }
            None => {
                assigned.sort_unstable();
                self.push(
                    Cluster {
                        tree: tree.into_iter().collect(),
                        assigned,
                        root: None,
                    },
                    Status::ActiveSafe,
                )
            }
        };
        let assigned: Vec<NodeId> = self.get(target).cluster.assigned.iter().map(|a| a.0).collect();
        for v in assigned {
            self.owner.insert(v, target);
        }
        Ok(target)
    }

    /// Freezes the listed active clusters that have become internal or
    /// external. Returns the ids frozen.
    pub fn freeze_if_ready(&mut self, ids: &[usize]) -> Vec<usize> {
        self.recount();
        let q = self.q;
        let mut frozen = Vec::new();
        for &i in ids {
            let Some(st) = self.states[i].as_mut() else {
                continue;
            };
            if !st.status.is_active() {
                continue;
            }
            if st.is_internal() {
                st.status = Status::FrozenInternal;
                frozen.push(i);
            } else if st.is_external(q) {
                st.status = Status::FrozenExternal;
                frozen.push(i);
            }
        }
        self.recount();
        frozen
    }

    /// Number of live clusters whose tree contains each node.
    pub fn membership(&self, n: usize) -> Vec<u32> {
        let mut m = vec![0u32; n];
        for st in self.states.iter().flatten() {
            for &v in &st.cluster.tree {
                if v < n {
                    m[v] += 1;
                }
            }
        }
        m
    }

    /// Alive pairs with both terminals assigned to frozen clusters.
    pub fn pairs_inside_frozen(&self) -> Vec<usize> {
        self.alive
            .iter()
            .copied()
            .filter(|&i| {
                let (a, b) = self.ends(i);
                self.get(a).status.is_frozen() && self.get(b).status.is_frozen()
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct UnsafeReport {
    pub deleted: Vec<usize>,
    pub new_unsafe: Vec<usize>,
    pub newly_internal: Vec<usize>,
    /// Sum of frozen-crossing demand over every cluster the loop acted on.
    pub frozen_crossing_witness: u64,
    /// Deleted pairs that had an endpoint in a frozen cluster.
    pub deleted_touching_frozen: usize,
}

/// Repeatedly turns safe clusters with more than a quarter of their
/// terminals mated into frozen clusters into unsafe ones, deleting their
/// demands to other active clusters.
pub fn make_unsafe(set: &mut ClusterSet) -> UnsafeReport {
    let mut report = UnsafeReport::default();
    loop {
        set.recount();
        let Some(t) = set
            .with_status(|s| s == Status::ActiveSafe)
            .into_iter()
            .find(|&i| 4 * set.get(i).crossing_to_frozen > set.get(i).load())
        else {
            break;
        };
        report.frozen_crossing_witness += set.get(t).crossing_to_frozen;
        let doomed: Vec<usize> = set
            .alive
            .iter()
            .copied()
            .filter(|&i| {
                let (a, b) = set.ends(i);
                let other = if a == t {
                    b
                } else if b == t {
                    a
                } else {
                    return false;
                };
                other != t && set.get(other).status.is_active()
            })
            .collect();
        let mut touched = BTreeSet::from([t]);
        for &i in &doomed {
            let (a, b) = set.ends(i);
            if set.get(a).status.is_frozen() || set.get(b).status.is_frozen() {
                report.deleted_touching_frozen += 1;
            }
            touched.insert(a);
            touched.insert(b);
            set.delete_pair(i);
            report.deleted.push(i);
        }
        set.recount();
        for &c in &touched {
            let Some(st) = set.states[c].as_mut() else {
                continue;
            };
            if st.status.is_active() && st.is_internal() {
                st.status = Status::FrozenInternal;
                report.newly_internal.push(c);
            }
        }
        if let Some(st) = set.states[t].as_mut() {
            if st.status == Status::ActiveSafe {
                st.status = Status::ActiveUnsafe;
                report.new_unsafe.push(t);
            }
        }
    }
    report
}

/// Splits the safe clusters into a source side and a sink side by local
/// search: a cluster with strictly more demand inside its own side than
/// across moves (smallest id first). The larger side is returned first.
pub fn bipartition_safe(set: &ClusterSet, safe: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut w: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let index: BTreeMap<usize, usize> = safe.iter().enumerate().map(|(k, &c)| (c, k)).collect();
    for &i in &set.alive {
        let (a, b) = set.ends(i);
        if a != b {
            if let (Some(&x), Some(&y)) = (index.get(&a), index.get(&b)) {
                *w.entry((x.min(y), x.max(y))).or_default() += 1;
            }
        }
    }
    if w.is_empty() {
        return Err(Error::Degenerate("no demand between safe clusters".into()));
    }
    let k = safe.len();
    let mut adj: Vec<Vec<(usize, u64)>> = vec![Vec::new(); k];
    for (&(x, y), &d) in &w {
        adj[x].push((y, d));
        adj[y].push((x, d));
    }
    let mut side: Vec<bool> = (0..k).map(|i| i % 2 == 0).collect();
    loop {
        let mover = (0..k).find(|&x| {
            let (own, other) = adj[x].iter().fold((0, 0), |(o, t), &(y, d)| {
                if side[y] == side[x] {
                    (o + d, t)
                } else {
                    (o, t + d)
                }
            });
            own > other
        });
        match mover {
            Some(x) => side[x] = !side[x],
            None => break,
        }
    }
    let plus: Vec<usize> = (0..k).filter(|&x| side[x]).map(|x| safe[x]).collect();
    let minus: Vec<usize> = (0..k).filter(|&x| !side[x]).map(|x| safe[x]).collect();
    Ok(if plus.len() >= minus.len() { (plus, minus) } else { (minus, plus) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::UndirectedMultigraph;

    /// Path graph with pairs (0,1), (2,3), ... on consecutive nodes.
    fn paired(n: usize, pairs: &[(usize, usize)], q: u64) -> McncInstance {
        let edges: Vec<(usize, usize)> = (1..n).map(|v| (v - 1, v)).collect();
        let g = UndirectedMultigraph::from_int_costs(&vec![1; n], &edges).unwrap();
        McncInstance::new(g, pairs, q).unwrap()
    }

    #[test]
    fn no_frozen_means_no_unsafe() {
        let inst = paired(4, &[(0, 1), (2, 3)], 8);
        let mut set = ClusterSet::new(&inst, &(0..2).collect());
        let rep = make_unsafe(&mut set);
        assert!(rep.deleted.is_empty() && rep.new_unsafe.is_empty());
    }

    #[test]
    fn all_mates_frozen_gives_unsafe_without_deletion() {
        let inst = paired(4, &[(0, 1), (2, 3)], 8);
        let mut set = ClusterSet::new(&inst, &(0..2).collect());
        // freeze the cluster holding terminal 1
        let c1 = set.owner[&1];
        set.get_mut(c1).status = Status::FrozenExternal;
        let rep = make_unsafe(&mut set);
        assert!(rep.deleted.is_empty());
        assert_eq!(rep.new_unsafe, vec![set.owner[&0]]);
    }

    #[test]
    fn three_cluster_trace() {
        // clusters A={0,2}, B={1}, F={3} with pairs (0,1) and (2,3); F frozen
        let inst = paired(4, &[(0, 1), (2, 3)], 64);
        let mut set = ClusterSet::new(&inst, &(0..2).collect());
        let a = set.merge(&[set.owner[&0], set.owner[&2]], &[1], None).unwrap();
        let f = set.owner[&3];
        set.get_mut(f).status = Status::FrozenExternal;
        let rep = make_unsafe(&mut set);
        // A has 1 of 2 terminals mated into F (> 1/4), so pair (0,1) goes
        assert_eq!(rep.deleted, vec![0]);
        assert_eq!(rep.new_unsafe, vec![a]);
        assert_eq!(rep.frozen_crossing_witness, 1);
        assert!(set.states.iter().flatten().all(|s| s.load() > 0));
        assert_eq!(set.get(a).load(), 1);
    }

    #[test]
    fn bipartition_of_two() {
        let inst = paired(2, &[(0, 1)], 8);
        let set = ClusterSet::new(&inst, &BTreeSet::from([0]));
        let ids = set.ids();
        let (p, m) = bipartition_safe(&set, &ids).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn bipartition_without_demand_is_degenerate() {
        let inst = paired(4, &[(0, 1), (2, 3)], 8);
        let set = ClusterSet::new(&inst, &(0..2).collect());
        let a = set.owner[&0];
        let c = set.owner[&2];
        assert!(matches!(bipartition_safe(&set, &[a, c]), Err(Error::Degenerate(_))));
    }
}

//! Approximate maximum concurrent flow by multiplicative length updates.
//!
//! Arcs consume generic resources, so node capacities, undirected edge
//! capacities and budget constraints all share one code path. The loop
//! stops on a primal/dual certificate: the scaled primal throughput is at
//! least `(1 - eps)` times the best dual bound seen.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

#[derive(Clone, Debug, PartialEq)]
pub struct McfArc {
    pub from: usize,
    pub to: usize,
    /// `(resource, units consumed per unit of flow)`.
    pub uses: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct McfNetwork {
    pub node_count: usize,
    pub arcs: Vec<McfArc>,
    pub capacity: Vec<f64>,
}

impl McfNetwork {
    pub fn new(node_count: usize) -> Self {
        McfNetwork {
            node_count,
            ..Default::default()
        }
    }

    pub fn add_resource(&mut self, cap: f64) -> usize {
        self.capacity.push(cap);
        self.capacity.len() - 1
    }

    pub fn add_arc(&mut self, from: usize, to: usize, uses: Vec<(usize, f64)>) -> usize {
        self.arcs.push(McfArc { from, to, uses });
        self.arcs.len() - 1
    }

    /// Undirected edge of capacity `cap`: two arcs on one resource.
    pub fn add_edge(&mut self, a: usize, b: usize, cap: f64) -> usize {
        let r = self.add_resource(cap);
        self.add_arc(a, b, vec![(r, 1.0)]);
        self.add_arc(b, a, vec![(r, 1.0)]);
        r
    }

    /// Resource usage of a set of arc flows.
    pub fn usage(&self, arc_flow: impl IntoIterator<Item = (usize, f64)>) -> Vec<f64> {
        let mut used = vec![0.0; self.capacity.len()];
        for (a, f) in arc_flow {
            for &(r, c) in &self.arcs[a].uses {
                used[r] += c * f;
            }
        }
        used
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McfDemand {
    pub source: usize,
    pub sink: usize,
    pub amount: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct McfResult {
    /// Feasible concurrent throughput.
    pub lambda: f64,
    /// Dual upper bound on the optimal throughput.
    pub upper_bound: f64,
    /// Per demand: arc paths and amounts, summing to `lambda * amount`.
    pub flows: Vec<Vec<(Vec<usize>, f64)>>,
    /// Largest load/capacity ratio of the returned flow.
    pub max_utilization: f64,
    pub phases: usize,
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

struct Ctx<'a> {
    net: &'a McfNetwork,
    out: Vec<Vec<usize>>,
}

impl<'a> Ctx<'a> {
    fn new(net: &'a McfNetwork) -> Self {
        let mut out = vec![Vec::new(); net.node_count];
        for (i, a) in net.arcs.iter().enumerate() {
            out[a.from].push(i);
        }
        Ctx { net, out }
    }

    fn arc_len(&self, y: &[f64], a: usize) -> f64 {
        self.net.arcs[a].uses.iter().map(|&(r, c)| c * y[r]).sum()
    }

    fn shortest(&self, y: &[f64], s: usize, t: usize) -> Option<(f64, Vec<usize>)> {
        let n = self.net.node_count;
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![usize::MAX; n];
        dist[s] = 0.0;
        let mut heap = BinaryHeap::from([HeapItem(0.0, s)]);
        while let Some(HeapItem(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            if u == t {
                break;
            }
            for &a in &self.out[u] {
                let v = self.net.arcs[a].to;
                let nd = d + self.arc_len(y, a);
                if nd < dist[v] {
                    dist[v] = nd;
                    pred[v] = a;
                    heap.push(HeapItem(nd, v));
                }
            }
        }
        if !dist[t].is_finite() {
            return None;
        }
        let mut path = Vec::new();
        let mut cur = t;
        while cur != s {
            let a = pred[cur];
            path.push(a);
            cur = self.net.arcs[a].from;
        }
        path.reverse();
        Some((dist[t], path))
    }

    /// Largest flow the path can carry on its own.
    fn bottleneck(&self, path: &[usize]) -> f64 {
        let mut per: BTreeMap<usize, f64> = BTreeMap::new();
        for &a in path {
            for &(r, c) in &self.net.arcs[a].uses {
                *per.entry(r).or_insert(0.0) += c;
            }
        }
        per.iter()
            .filter(|(_, &c)| c > 0.0)
            .map(|(&r, &c)| self.net.capacity[r] / c)
            .fold(f64::INFINITY, f64::min)
    }

    fn reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.net.node_count];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.out[u] {
                let v = self.net.arcs[a].to;
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// Widest path bottleneck from `s` to `t` (per-arc capacities only).
    fn widest(&self, s: usize, t: usize) -> f64 {
        let n = self.net.node_count;
        let arc_cap = |a: usize| {
            self.net.arcs[a]
                .uses
                .iter()
                .filter(|&&(_, c)| c > 0.0)
                .map(|&(r, c)| self.net.capacity[r] / c)
                .fold(f64::INFINITY, f64::min)
        };
        let mut best = vec![0.0f64; n];
        best[s] = f64::INFINITY;
        let mut done = vec![false; n];
        for _ in 0..n {
            let u = (0..n)
                .filter(|&v| !done[v] && best[v] > 0.0)
                .max_by(|&a, &b| best[a].total_cmp(&best[b]).then(b.cmp(&a)));
            let Some(u) = u else { break };
            done[u] = true;
            for &a in &self.out[u] {
                let v = self.net.arcs[a].to;
                let nb = best[u].min(arc_cap(a));
                if nb > best[v] {
                    best[v] = nb;
                }
            }
        }
        best[t]
    }
}

/// Maximum concurrent flow within a `(1 - eps)` factor. Deterministic.
pub fn concurrent_mcf(net: &McfNetwork, demands: &[McfDemand], eps: f64) -> McfResult {
    assert!(eps > 0.0 && eps <= 0.5, "eps must lie in (0, 1/2]");
    let ctx = Ctx::new(net);
    let k = demands.len();
    let empty = McfResult {
        flows: vec![Vec::new(); k],
        ..Default::default()
    };
    if k == 0 {
        return McfResult {
            lambda: f64::INFINITY,
            upper_bound: f64::INFINITY,
            ..empty
        };
    }
    for d in demands {
        assert!(d.amount > 0.0, "demand amounts must be positive");
        if d.source == d.sink {
            continue;
        }
        if !ctx.reachable(d.source)[d.sink] {
            return empty;
        }
    }
    // Lower bound on the optimum from widest paths shared k ways.
    let mut lower = f64::INFINITY;
    for d in demands {
        if d.source != d.sink {
            lower = lower.min(ctx.widest(d.source, d.sink) / (k as f64 * d.amount));
        }
    }
    if lower == 0.0 {
        return empty;
    }
    if !lower.is_finite() {
        // every demand is trivial or uses unconstrained paths
        let flows = demands
            .iter()
            .map(|d| {
                if d.source == d.sink {
                    vec![(Vec::new(), d.amount)]
                } else {
                    let (_, p) = ctx.shortest(&vec![0.0; net.capacity.len()], d.source, d.sink).unwrap();
                    vec![(p, d.amount)]
                }
            })
            .collect();
        return McfResult {
            lambda: f64::INFINITY,
            upper_bound: f64::INFINITY,
            flows,
            max_utilization: 0.0,
            phases: 0,
        };
    }
    if eps < 0.5 {
        let coarse = scaled_run(&ctx, demands, 0.5, lower);
        lower = lower.max(coarse.lambda);
    }
    scaled_run(&ctx, demands, eps, lower)
}

/// Multiplicative-weights run on demands scaled by `lower`, a throughput
/// known to be feasible.
fn scaled_run(ctx: &Ctx, demands: &[McfDemand], eps: f64, lower: f64) -> McfResult {
    let net = ctx.net;
    let k = demands.len();
    let scaled: Vec<f64> = demands.iter().map(|d| d.amount * lower).collect();
    let inner = eps / 3.0;
    let mut y: Vec<f64> = net.capacity.iter().map(|&c| if c > 0.0 { 1.0 / c } else { 1e12 }).collect();
    let mut routed: Vec<BTreeMap<Vec<usize>, f64>> = vec![BTreeMap::new(); k];
    let mut load = vec![0.0f64; net.capacity.len()];
    let mut best_ub = f64::INFINITY;
    let mut phases = 0usize;
    let max_phases = 200_000usize;
    let mut lambda_lb = 0.0;
    while phases < max_phases {
        for (j, d) in demands.iter().enumerate() {
            if d.source == d.sink {
                *routed[j].entry(Vec::new()).or_insert(0.0) += scaled[j];
                continue;
            }
            let mut rem = scaled[j];
            while rem > 1e-15 * scaled[j] {
                let (_, path) = ctx.shortest(&y, d.source, d.sink).expect("reachable");
                let f = rem.min(ctx.bottleneck(&path));
                let mut use_r: BTreeMap<usize, f64> = BTreeMap::new();
                for &a in &path {
                    for &(r, c) in &net.arcs[a].uses {
                        *use_r.entry(r).or_insert(0.0) += c * f;
                    }
                }
                for (&r, &u) in &use_r {
                    load[r] += u;
                    if net.capacity[r] > 0.0 {
                        y[r] *= 1.0 + inner * u / net.capacity[r];
                    }
                }
                *routed[j].entry(path).or_insert(0.0) += f;
                rem -= f;
            }
        }
        phases += 1;
        let ymax = y.iter().cloned().fold(0.0, f64::max);
        if ymax > 1e100 {
            for v in y.iter_mut() {
                *v /= ymax;
            }
        }
        let dy: f64 = y.iter().zip(&net.capacity).filter(|(_, c)| c.is_finite()).map(|(a, c)| a * c).sum();
        let alpha: f64 = demands
            .iter()
            .enumerate()
            .filter(|(_, d)| d.source != d.sink)
            .map(|(j, d)| scaled[j] * ctx.shortest(&y, d.source, d.sink).unwrap().0)
            .sum();
        if alpha > 0.0 {
            best_ub = best_ub.min(dy / alpha);
        }
        let kappa = load
            .iter()
            .zip(&net.capacity)
            .map(|(l, c)| if *c > 0.0 { l / c } else if *l > 0.0 { f64::INFINITY } else { 0.0 })
            .fold(0.0, f64::max);
        lambda_lb = if kappa > 0.0 { phases as f64 / kappa } else { f64::INFINITY };
        if lambda_lb >= (1.0 - eps) * best_ub {
            break;
        }
    }

    let lambda = lambda_lb * lower;
    let flows: Vec<Vec<(Vec<usize>, f64)>> = routed
        .into_iter()
        .zip(demands)
        .map(|(paths, d)| {
            let total: f64 = paths.values().sum();
            let factor = lambda * d.amount / total;
            paths.into_iter().map(|(p, f)| (p, f * factor)).collect()
        })
        .collect();
    let used = net.usage(flows.iter().flatten().flat_map(|(p, f)| p.iter().map(move |&a| (a, *f))));
    let max_utilization = used
        .iter()
        .zip(&net.capacity)
        .map(|(u, c)| if *c > 0.0 { u / c } else { 0.0 })
        .fold(0.0, f64::max);
    assert!(max_utilization <= 1.0 + 1e-7, "concurrent flow exceeds capacity: {max_utilization}");
    McfResult {
        lambda,
        upper_bound: best_ub * lower,
        flows,
        max_utilization,
        phases,
    }
}

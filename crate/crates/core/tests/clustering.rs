use std::collections::BTreeMap;

use nodecap::clustering::{cluster_recursive, find_clusters, Cluster};
use nodecap::flow::{dgg_unsplittable, max_flow_multi_source, UnsplittableFlow};
use nodecap::graph::{int_cost, DirectedNodeCapGraph, SsncInstance, UndirectedMultigraph};
use nodecap::steiner::density_target_cap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn log2(q: u64) -> usize {
    q.trailing_zeros() as usize
}

/// Random graph, sink 0, capacity q on every other node; keeps fully routed sources.
fn random_flow(rng: &mut ChaCha8Rng, q: u64) -> Option<(UnsplittableFlow, usize, usize)> {
    let n = rng.gen_range(5..=20);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.gen_range(0..v), v));
    }
    for _ in 0..rng.gen_range(0..n) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            edges.push((a, b));
        }
    }
    let g = UndirectedMultigraph::from_int_costs(&vec![1; n], &edges).unwrap();
    let caps = (0..n).map(|v| if v == 0 { None } else { Some(q) }).collect();
    let dg = DirectedNodeCapGraph::from_undirected(&g, caps, vec![int_cost(1); n]);
    let k = rng.gen_range(1..n);
    let mut sources: Vec<(usize, u64)> = (1..n).map(|s| (s, rng.gen_range(1..=q))).collect();
    sources.truncate(k);
    let (_, f) = max_flow_multi_source(&dg, &sources, 0);
    let mut kept = nodecap::flow::SplittableFlow::default();
    for (i, (&(s, got), ps)) in f.demands.iter().zip(f.paths).enumerate() {
        if got > 0 && got == sources[i].1 {
            kept.demands.push((s, got));
            kept.paths.push(ps);
        }
    }
    if kept.demands.is_empty() {
        return None;
    }
    Some((dgg_unsplittable(&kept, 0).unwrap(), 0, n))
}

/// Complete binary merge tree over q unit sources feeding the sink.
fn binary_merge_flow(q: u64) -> (UnsplittableFlow, usize, usize) {
    let depth = log2(q);
    // heap layout: node 1 is the root, leaves are q..2q, node 0 is the sink
    let n = 2 * q as usize;
    let mut demands = Vec::new();
    let mut paths = Vec::new();
    for leaf in q as usize..n {
        let mut p = vec![leaf];
        let mut v = leaf;
        while v > 1 {
            v /= 2;
            p.push(v);
        }
        p.push(0);
        assert_eq!(p.len(), depth + 2);
        demands.push((leaf, 1));
        paths.push(p);
    }
    (UnsplittableFlow { demands, paths }, 0, n)
}

fn check_existence_properties(flow: &UnsplittableFlow, sink: usize, n: usize, q: u64) {
    let trees: Vec<Cluster> = flow.demands.iter().map(|&(s, d)| Cluster::singleton(s, d)).collect();
    let run = cluster_recursive(flow, trees, sink, q).unwrap();
    let lg = log2(q);
    assert!(run.calls <= lg.max(1), "q={q}: {} calls", run.calls);
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    let mut membership = vec![0usize; n];
    for c in &run.clusters {
        let load = c.load();
        assert!(load <= q * (1 + lg as u64), "q={q}: load {load}");
        assert!(load >= q || c.contains(sink), "q={q}: small non-sink cluster {c:?}");
        for &(s, _) in &c.assigned {
            *seen.entry(s).or_default() += 1;
        }
        for &v in &c.tree {
            if v != sink {
                membership[v] += 1;
            }
        }
    }
    for &(s, _) in &flow.demands {
        assert_eq!(seen.get(&s), Some(&1), "source {s} not assigned exactly once");
    }
    assert_eq!(seen.len(), flow.demands.len());
    for (v, &m) in membership.iter().enumerate() {
        assert!(m <= lg.max(1), "q={q}: node {v} in {m} clusters");
    }
}

#[test]
fn cluster_recursive_existence_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut checked = 0;
    for q in [2u64, 4, 8, 16] {
        let (f, t, n) = binary_merge_flow(q);
        check_existence_properties(&f, t, n, q);
        checked += 1;
    }
    while checked < 100 {
        let q = [2u64, 4, 8, 16][rng.gen_range(0..4)];
        if let Some((f, t, n)) = random_flow(&mut rng, q) {
            check_existence_properties(&f, t, n, q);
            checked += 1;
        }
    }
}

#[test]
fn binary_merge_uses_log_q_calls() {
    for q in [2u64, 4, 8, 16] {
        let (f, t, _) = binary_merge_flow(q);
        let trees = f.demands.iter().map(|&(s, d)| Cluster::singleton(s, d)).collect();
        let run = cluster_recursive(&f, trees, t, q).unwrap();
        assert_eq!(run.calls, log2(q));
        assert_eq!(run.clusters.len(), 1);
    }
}

#[test]
fn find_clusters_cover_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..60 {
        let n = rng.gen_range(3..=12);
        let mut edges = Vec::new();
        for v in 1..n {
            edges.push((rng.gen_range(0..v), v));
        }
        let costs: Vec<i64> = (0..n).map(|_| rng.gen_range(0..6)).collect();
        let g = UndirectedMultigraph::from_int_costs(&costs, &edges).unwrap();
        let q = [1u64, 2, 4][rng.gen_range(0..3)];
        let mut sources: Vec<(usize, u64)> = Vec::new();
        for s in 1..n {
            if rng.gen_bool(0.5) {
                sources.push((s, rng.gen_range(1..=q)));
            }
        }
        if sources.is_empty() {
            continue;
        }
        let inst = SsncInstance::new(g.clone(), 0, sources.clone(), q).unwrap();
        let rep = find_clusters(&inst).unwrap();
        let mut seen = BTreeMap::new();
        for c in &rep.clusters {
            assert!(g.is_connected_within(&c.tree));
            assert!(c.load() >= q || c.contains(0));
            assert!(c.load() <= density_target_cap(q));
            for &(s, _) in &c.assigned {
                *seen.entry(s).or_insert(0) += 1;
            }
        }
        assert_eq!(seen.len(), sources.len());
        assert!(seen.values().all(|&c| c == 1));
    }
}

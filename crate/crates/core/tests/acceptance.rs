//! Acceptance criteria. Runs without the libtest harness so every
//! criterion prints one PASS/FAIL line.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use nodecap::bench::{bench, render_tsv};
use nodecap::clustering::{cluster_recursive, Cluster};
use nodecap::energy::{lift_solution, q_prime, reduce_to_mcnc, solve_energy, tier_cost, EevrpInstance, ENERGY_TOL};
use nodecap::flow::{dgg_unsplittable, max_flow_multi_source, SplittableFlow, UnsplittableFlow};
use nodecap::graph::{int_cost, DirectedNodeCapGraph, UndirectedMultigraph};
use nodecap::io::{Instance, InstanceFile, KnobsFile};
use nodecap::mcnc::cuts::{enumerate_cuts, exact_min_cut, karger_sample, mincut_decompose, ClusterGraph, DELTA};
use nodecap::mcnc::halluc::{hallucinate, path_counts, round_lp_h, sampling_probability, solve_lp_h};
use nodecap::mcnc::{outer_round_cap, solve_mcnc, McncKnobs};
use nodecap::oracle::{exact_mcnc_fractional, exact_ssnc, EnumerationOrder, OracleBudget};
use nodecap::ssnc::{solve_ssnc, SsncKnobs};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fixture_dir(kind: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(kind)
}

fn fixtures(kind: &str) -> Vec<(String, String, InstanceFile)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixture_dir(kind))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let file = InstanceFile::parse(&text, true).unwrap();
            (p.file_stem().unwrap().to_string_lossy().into_owned(), text, file)
        })
        .collect()
}

fn log2(q: u64) -> usize {
    q.trailing_zeros() as usize
}

// 1

fn random_single_sink(rng: &mut ChaCha8Rng) -> (DirectedNodeCapGraph, Vec<(usize, u64)>, usize) {
    let n = rng.gen_range(4..=25);
    let p = rng.gen_range(0.15..0.5);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    let g = UndirectedMultigraph::from_int_costs(&vec![1; n], &edges).unwrap();
    let sink = rng.gen_range(0..n);
    let caps = (0..n).map(|v| if v == sink { None } else { Some(rng.gen_range(1..=8)) }).collect();
    let dg = DirectedNodeCapGraph::from_undirected(&g, caps, vec![int_cost(1); n]);
    let k = rng.gen_range(1..=6.min(n - 1));
    let mut sources = Vec::new();
    let mut used = BTreeSet::new();
    while sources.len() < k {
        let s = rng.gen_range(0..n);
        if s != sink && used.insert(s) {
            sources.push((s, rng.gen_range(1..=4)));
        }
    }
    (dg, sources, sink)
}

fn fully_routed(f: SplittableFlow, wanted: &[(usize, u64)]) -> SplittableFlow {
    let mut out = SplittableFlow::default();
    for (i, (&(s, got), ps)) in f.demands.iter().zip(f.paths).enumerate() {
        if got > 0 && got == wanted[i].1 {
            out.demands.push((s, got));
            out.paths.push(ps);
        }
    }
    out
}

fn dgg_contract() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    while checked < 500 {
        let (g, sources, sink) = random_single_sink(&mut rng);
        let (_, flow) = max_flow_multi_source(&g, &sources, sink);
        let flow = fully_routed(flow, &sources);
        if flow.demands.is_empty() {
            continue;
        }
        let n = g.node_count();
        let support: BTreeSet<(usize, usize)> = flow
            .paths
            .iter()
            .flatten()
            .flat_map(|p| p.nodes.windows(2).map(|w| (w[0], w[1])).collect::<Vec<_>>())
            .collect();
        let before = flow.node_loads(n);
        let dmax = flow.demands.iter().map(|d| d.1).max().unwrap();
        let out = dgg_unsplittable(&flow, sink).map_err(|e| e.to_string())?;
        let after = out.node_loads(n);
        for v in (0..n).filter(|&v| v != sink) {
            ensure!(after[v] <= before[v] + dmax, "instance {checked}, node {v}: {} > {} + {dmax}", after[v], before[v]);
        }
        for (p, &(s, _)) in out.paths.iter().zip(&out.demands) {
            ensure!(p[0] == s && *p.last().unwrap() == sink, "instance {checked}: path endpoints {p:?}");
            for w in p.windows(2) {
                ensure!(support.contains(&(w[0], w[1])), "instance {checked}: hop {w:?} outside the splittable support");
            }
        }
        checked += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1}s");
    Ok(format!("{checked} instances, {secs:.2}s"))
}

// 2

fn random_unsplittable(rng: &mut ChaCha8Rng, q: u64) -> Option<(UnsplittableFlow, usize)> {
    let n = rng.gen_range(5..=20);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.gen_range(0..v), v));
    }
    for _ in 0..rng.gen_range(0..n) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            edges.push((a, b));
        }
    }
    let g = UndirectedMultigraph::from_int_costs(&vec![1; n], &edges).unwrap();
    let caps = (0..n).map(|v| if v == 0 { None } else { Some(q) }).collect();
    let dg = DirectedNodeCapGraph::from_undirected(&g, caps, vec![int_cost(1); n]);
    let k = rng.gen_range(1..n);
    let sources: Vec<(usize, u64)> = (1..=k).map(|s| (s, rng.gen_range(1..=q))).collect();
    let (_, f) = max_flow_multi_source(&dg, &sources, 0);
    let kept = fully_routed(f, &sources);
    if kept.demands.is_empty() {
        return None;
    }
    Some((dgg_unsplittable(&kept, 0).ok()?, n))
}

fn binary_merge(q: u64) -> (UnsplittableFlow, usize) {
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
        demands.push((leaf, 1));
        paths.push(p);
    }
    (UnsplittableFlow { demands, paths }, n)
}

fn existence_properties(flow: &UnsplittableFlow, n: usize, q: u64) -> Result<(), String> {
    let trees: Vec<Cluster> = flow.demands.iter().map(|&(s, d)| Cluster::singleton(s, d)).collect();
    let run = cluster_recursive(flow, trees, 0, q).map_err(|e| e.to_string())?;
    let lg = log2(q);
    ensure!(run.calls <= lg, "q={q}: recursion depth {} > {lg}", run.calls);
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    let mut membership = vec![0usize; n];
    for c in &run.clusters {
        let load = c.load();
        ensure!(load <= q * (1 + lg as u64), "q={q}: cluster load {load}");
        ensure!(load >= q || c.contains(0), "q={q}: non-sink cluster with load {load}");
        for &(s, _) in &c.assigned {
            *seen.entry(s).or_default() += 1;
        }
        for &v in c.tree.iter().filter(|&&v| v != 0) {
            membership[v] += 1;
        }
    }
    for &(s, _) in &flow.demands {
        ensure!(seen.get(&s) == Some(&1), "q={q}: source {s} assigned {:?} times", seen.get(&s));
    }
    ensure!(seen.len() == flow.demands.len(), "q={q}: assignment of unknown sources");
    if let Some((v, &m)) = membership.iter().enumerate().find(|(_, &m)| m > lg) {
        return Err(format!("q={q}: node {v} in {m} clusters"));
    }
    Ok(())
}

fn clustering_existence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    for q in [2u64, 4, 8, 16] {
        let (f, n) = binary_merge(q);
        existence_properties(&f, n, q)?;
        checked += 1;
    }
    while checked < 100 {
        let q = [2u64, 4, 8, 16][rng.gen_range(0..4)];
        if let Some((f, n)) = random_unsplittable(&mut rng, q) {
            existence_properties(&f, n, q)?;
            checked += 1;
        }
    }
    Ok(format!("{checked} flows (4 binary-merge)"))
}

// 3

fn ssnc_vs_oracle() -> Outcome {
    let mut feasible = 0;
    let mut worst = (0.0f64, String::new());
    let mut corpus = Vec::new();
    for (name, _, file) in fixtures("ssnc") {
        let Instance::Ssnc(inst) = file.instance().map_err(|e| e.to_string())? else {
            return Err(format!("{name} is not single-sink"));
        };
        ensure!(inst.graph.node_count() <= 12, "{name} has more than 12 nodes");
        let stored = file.optimum.clone().ok_or(format!("{name} has no stored optimum"))?;
        let opt = exact_ssnc(&inst, &OracleBudget::default(), EnumerationOrder::CostAscending).map_err(|e| e.to_string())?;
        let alt = exact_ssnc(&inst, &OracleBudget::default(), EnumerationOrder::SizeAscending).map_err(|e| e.to_string())?;
        ensure!(opt.as_ref().map(|o| o.cost) == alt.as_ref().map(|o| o.cost), "{name}: enumeration orders disagree");
        ensure!(opt.as_ref().map(|o| o.cost) == stored.cost, "{name}: oracle differs from the stored optimum");
        corpus.push((name.clone(), file.clone()));
        let Some(opt) = opt else { continue };
        feasible += 1;
        let sol = solve_ssnc(&inst, &SsncKnobs::default()).map_err(|e| format!("{name}: {e}"))?;
        let n = inst.graph.node_count() as f64;
        let q = inst.capacity as f64;
        let ratio = if opt.cost == int_cost(0) { 1.0 } else { (sol.cost / opt.cost).to_f64().unwrap() };
        let cap = 8.0 * q.ln() * n.ln().powi(2) + 8.0;
        ensure!(ratio <= cap, "{name}: ratio {ratio} > {cap}");
        let p = sol.load_bound.max(sol.max_membership + 1) as f64;
        let cong_cap = (1.0 + q.log2()) * sol.u as f64 * p;
        ensure!(sol.congestion <= cong_cap, "{name}: congestion {} > {cong_cap}", sol.congestion);
        if ratio > worst.0 {
            worst = (ratio, name);
        }
    }
    ensure!(feasible >= 30, "only {feasible} feasible fixtures");
    let rows = bench(&corpus, &KnobsFile::default(), &[0], &OracleBudget::default());
    for r in &rows {
        let infeasible = r.oracle_cost.is_none();
        ensure!(infeasible || r.status == "ok", "{}: bench status {}", r.instance, r.status);
    }
    Ok(format!("{feasible} feasible of {} fixtures, worst ratio {:.3} ({})", corpus.len(), worst.0, worst.1))
}

// 4

fn random_cluster_graph(rng: &mut ChaCha8Rng) -> ClusterGraph {
    let n = rng.gen_range(3..=14);
    let mut edges = Vec::new();
    // dense blobs joined by a few edges
    let blobs = rng.gen_range(1..=3);
    let blob_of: Vec<usize> = (0..n).map(|_| rng.gen_range(0..blobs)).collect();
    for a in 0..n {
        for b in a + 1..n {
            let m = if blob_of[a] == blob_of[b] { rng.gen_range(0..=4) } else { rng.gen_range(0..=1) * rng.gen_range(0..=1) };
            for _ in 0..m {
                edges.push((a, b));
            }
        }
    }
    ClusterGraph::new(n, edges)
}

fn decomposition_holds(g: &ClusterGraph, q: u64, label: &str) -> Result<(), String> {
    let d = mincut_decompose(g, q);
    let removed_cap = g.n as f64 * DELTA * q as f64 / 4.0;
    ensure!((d.removed.len() as f64) <= removed_cap, "{label}: removed {} > {removed_cap}", d.removed.len());
    let mut kept = vec![true; g.edges.len()];
    for &i in &d.removed {
        kept[i] = false;
    }
    let floor = DELTA * q as f64 / 8.0;
    for comp in d.components.iter().filter(|c| c.len() > 1) {
        let c = exact_min_cut(g, comp, Some(&kept));
        ensure!(c as f64 >= floor, "{label}: component {comp:?} has min-cut {c} < {floor}");
    }
    let covered: usize = d.components.iter().map(Vec::len).sum();
    ensure!(covered == g.n, "{label}: components cover {covered} of {} vertices", g.n);
    Ok(())
}

fn mincut_decomposition() -> Outcome {
    let mut fixed = vec![(
        "dumbbell",
        ClusterGraph::new(6, vec![(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)]),
    )];
    fixed.push(("cycle", ClusterGraph::new(6, (0..6).map(|i| (i, (i + 1) % 6)).collect())));
    let k5: Vec<(usize, usize)> = (0..5).flat_map(|a| (a + 1..5).map(move |b| (a, b))).collect();
    fixed.push(("clique", ClusterGraph::new(5, k5)));
    for (name, g) in &fixed {
        for q in [32u64, 64, 128, 256] {
            decomposition_holds(g, q, &format!("{name} q={q}"))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut cuts = 0;
    for i in 0..50 {
        let g = random_cluster_graph(&mut rng);
        let q = [32u64, 64, 128, 256][rng.gen_range(0..4)];
        decomposition_holds(&g, q, &format!("random {i} q={q}"))?;
        cuts += mincut_decompose(&g, q).cuts;
    }
    Ok(format!("3 fixtures x 4 capacities, 50 random graphs ({cuts} cuts taken)"))
}

// 5

fn parallel(n: usize, pairs: &[(usize, usize)], m: usize) -> ClusterGraph {
    let edges = pairs.iter().flat_map(|&e| std::iter::repeat_n(e, m)).collect();
    ClusterGraph::new(n, edges)
}

fn karger() -> Outcome {
    let eps = 0.5;
    let d = 2.0;
    let k8: Vec<(usize, usize)> = (0..8).flat_map(|a| (a + 1..8).map(move |b| (a, b))).collect();
    let c6: Vec<(usize, usize)> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
    let k6: Vec<(usize, usize)> = (0..6).flat_map(|a| (a + 1..6).map(move |b| (a, b))).collect();
    let cases = [("K8x30", parallel(8, &k8, 30), 0.5), ("C6x90", parallel(6, &c6, 90), 0.5), ("K6x20", parallel(6, &k6, 20), 0.9)];
    let mut report = Vec::new();
    for (name, g, p) in cases {
        let orig = enumerate_cuts(&g);
        let c = *orig.iter().min().unwrap() as f64;
        let need = 3.0 * (d + 2.0) * (g.n as f64).ln() / (eps * eps);
        ensure!(p * c >= need, "{name}: fixture too sparse, p*c = {} < {need}", p * c);
        let seeds = 200;
        let mut good = 0;
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = karger_sample(&g, p, &mut rng);
            let sampled = enumerate_cuts(&h);
            if orig.iter().zip(&sampled).all(|(&o, &s)| (s as f64 - p * o as f64).abs() <= eps * p * o as f64) {
                good += 1;
            }
        }
        let rate = good as f64 / seeds as f64;
        ensure!(rate >= 0.95, "{name}: only {:.1}% of seeds preserve every cut", 100.0 * rate);
        report.push(format!("{name} {:.1}%", 100.0 * rate));
    }
    Ok(report.join(", "))
}

// 6

fn hallucination_statistics() -> Outcome {
    let knobs = McncKnobs::default();
    let pairs: Vec<usize> = (0..1000).collect();
    let p = sampling_probability(100, 64, knobs.c_h);
    let mut total = 0usize;
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        total += hallucinate(&pairs, 100, 64, knobs.c_h, &mut rng).sampled.len();
    }
    let trials = 200.0 * 1000.0;
    let rate = total as f64 / trials;
    let sigma = (p * (1.0 - p) / trials).sqrt();
    ensure!((rate - p).abs() <= 3.0 * sigma, "sampling rate {rate} vs {p} (3 sigma = {})", 3.0 * sigma);

    let mut worst_share = 1.0f64;
    let mut max_count = 0u32;
    for (name, _, file) in fixtures("mcnc") {
        let Instance::Mcnc(inst) = file.instance().map_err(|e| e.to_string())? else { continue };
        let n = inst.graph.node_count();
        let cap = 3.0 * knobs.c_x * (n as f64).ln();
        let ids: Vec<usize> = (0..inst.pairs.len()).collect();
        let seeds = 20;
        let mut ok = 0;
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let plan = hallucinate(&ids, inst.capacity, n, knobs.c_h, &mut rng);
            let sampled: Vec<(usize, usize)> = plan.sampled.iter().map(|&i| (inst.pairs[i].source, inst.pairs[i].sink)).collect();
            if sampled.is_empty() {
                ok += 1;
                continue;
            }
            let lp = solve_lp_h(&inst.graph, &sampled, inst.capacity, knobs.c_x, knobs.eps).map_err(|e| format!("{name}: {e}"))?;
            let counts = path_counts(&round_lp_h(&lp, &mut rng), n);
            let m = counts.into_iter().max().unwrap_or(0);
            max_count = max_count.max(m);
            if m as f64 <= cap {
                ok += 1;
            }
        }
        worst_share = worst_share.min(ok as f64 / seeds as f64);
    }
    ensure!(worst_share >= 0.95, "path-count bound held in only {:.1}% of seeds on some fixture", 100.0 * worst_share);
    Ok(format!("rate {rate:.5} vs {p:.5}, max per-node path count {max_count}, worst fixture share {:.0}%", 100.0 * worst_share))
}

// 7

fn mcnc_ledger() -> Outcome {
    let knobs = McncKnobs::default();
    let mut solves = 0;
    let mut within_cap = 0;
    let mut audits = 0;
    let mut worst_share = 1.0f64;
    for (name, _, file) in fixtures("mcnc") {
        let Instance::Mcnc(inst) = file.instance().map_err(|e| e.to_string())? else { continue };
        let k = inst.pairs.len();
        let cap = outer_round_cap(k, knobs.c_outer);
        let seeds = 10;
        let mut ok = 0;
        for seed in 0..seeds {
            solves += 1;
            let sol = match solve_mcnc(&inst, &knobs, seed) {
                Ok(s) => s,
                Err(e) if matches!(e.exit_code(), 3) => continue,
                Err(e) => return Err(format!("{name} seed {seed}: {e}")),
            };
            audits += sol.audits.len();
            if let Some(a) = sol.failed_audits().next() {
                return Err(format!("{name} seed {seed}: property {} ({}) fails: {} > {}", a.property, a.name, a.lhs, a.rhs));
            }
            ensure!(sol.audits.iter().any(|a| a.property == 9), "{name} seed {seed}: no final-cluster audit recorded");
            if sol.rounds.len() <= cap {
                ok += 1;
            }
        }
        within_cap += ok;
        worst_share = worst_share.min(ok as f64 / seeds as f64);
    }
    ensure!(worst_share >= 0.95, "outer loop within its cap on only {:.0}% of seeds for some fixture", 100.0 * worst_share);
    Ok(format!("{solves} solves, {audits} audits hold, {within_cap} within the round cap"))
}

// 8

fn mcnc_vs_oracle() -> Outcome {
    let mut compared = 0;
    let mut worst = (0.0f64, 0.0f64);
    for (name, _, file) in fixtures("mcnc") {
        let Instance::Mcnc(inst) = file.instance().map_err(|e| e.to_string())? else { continue };
        let Some(stored) = file.optimum.as_ref() else { continue };
        let Some(opt_cost) = stored.cost else { continue };
        if file.graph.nodes.len() > 10 || inst.pairs.len() > 4 {
            continue;
        }
        let opt = exact_mcnc_fractional(&inst, &OracleBudget::default(), EnumerationOrder::CostAscending).map_err(|e| e.to_string())?;
        ensure!(opt.map(|o| o.cost) == Some(opt_cost), "{name}: oracle differs from the stored optimum");
        for seed in 0..3 {
            let sol = solve_mcnc(&inst, &McncKnobs::default(), seed).map_err(|e| format!("{name} seed {seed}: {e}"))?;
            let ratio = if opt_cost == int_cost(0) { 1.0 } else { (sol.cost / opt_cost).to_f64().unwrap() };
            ensure!(ratio <= 100.0, "{name} seed {seed}: ratio {ratio}");
            ensure!(sol.congestion <= 64.0, "{name} seed {seed}: congestion {}", sol.congestion);
            worst = (worst.0.max(ratio), worst.1.max(sol.congestion));
            compared += 1;
        }
    }
    ensure!(compared > 0, "no fixture within the oracle budget");
    Ok(format!("{compared} solves, worst ratio {:.3}, worst congestion/q {:.3}", worst.0, worst.1))
}

// 9

fn random_energy_instance(rng: &mut ChaCha8Rng) -> EevrpInstance {
    let n = rng.gen_range(3..=6);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.gen_range(0..v), v));
    }
    for _ in 0..rng.gen_range(0..n) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            edges.push((a, b));
        }
    }
    let g = UndirectedMultigraph::from_int_costs(&vec![0; n], &edges).unwrap();
    let k = rng.gen_range(1..=3);
    let pairs = (0..k)
        .map(|_| {
            let s = rng.gen_range(0..n);
            (s, (s + rng.gen_range(1..n)) % n)
        })
        .collect();
    let (sigma, alpha) = [(9.0, 2.0), (16.0, 2.0), (27.0, 3.0), (10.0, 1.5)][rng.gen_range(0..4)];
    EevrpInstance::new(g, pairs, sigma, alpha).unwrap()
}

fn energy_reduction() -> Outcome {
    let qp = q_prime(16.0, 2.0);
    let tiers: Vec<f64> = (1..=3).map(|i| tier_cost(i, 16.0, 2.0, qp)).collect();
    ensure!(tiers == vec![32.0, 39.0, 63.0], "tiers {tiers:?}");
    for (sigma, alpha) in [(16.0, 2.0), (9.0, 2.0), (27.0, 3.0), (10.0, 1.5), (1.0, 2.5)] {
        let qp = q_prime(sigma, alpha);
        for f in 1..=3 * qp {
            let up = f.div_ceil(qp) * qp;
            let base = sigma + (f as f64).powf(alpha);
            let rounded = sigma + (up as f64).powf(alpha);
            ensure!(rounded <= 2f64.powf(alpha) * base * (1.0 + ENERGY_TOL), "sigma {sigma} alpha {alpha} load {f}: {rounded} > 2^a * {base}");
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    let mut excess = 0.0f64;
    let mut violations = Vec::new();
    let cases = 40;
    for case in 0..cases {
        let e = random_energy_instance(&mut rng);
        let best = common::min_energy(&e);
        let sol = solve_energy(&e, &McncKnobs::default(), case).map_err(|err| format!("case {case}: {err}"))?;
        let (reduced, red) = reduce_to_mcnc(&e).map_err(|err| err.to_string())?;
        let opt = exact_mcnc_fractional(&reduced, &OracleBudget::default(), EnumerationOrder::CostAscending)
            .map_err(|err| format!("case {case}: {err}"))?
            .ok_or(format!("case {case}: reduced instance infeasible"))?;
        let lifted = lift_solution(&sol.reduced, &red, &e, Some(&opt.cost)).map_err(|err| err.to_string())?;
        let factor = lifted.factor.unwrap();
        ensure!(best <= lifted.energy * (1.0 + ENERGY_TOL), "case {case}: lifted energy {} below the optimum {best}", lifted.energy);
        if lifted.energy > factor * best * (1.0 + ENERGY_TOL) {
            violations.push(format!("case {case} (E {} > {factor} x {best})", lifted.energy));
        }
        worst = worst.max(lifted.energy / best);
        excess = excess.max(lifted.energy / (factor * best));
    }
    ensure!(
        violations.is_empty(),
        "lifted energy exceeds rho1*rho2^a x optimum on {} of {cases} instances: {}; worst energy / (factor x optimum) = {excess:.3}",
        violations.len(),
        violations.join(", ")
    );
    Ok(format!("tiers 32/39/63, rounding <= 2^a, {cases} instances, worst energy ratio {worst:.3}"))
}

// 10

fn determinism_and_round_trip() -> Outcome {
    let mut files = 0;
    for kind in ["ssnc", "mcnc"] {
        for (name, text, file) in fixtures(kind) {
            ensure!(file.to_json() + "\n" == text, "{name}: serialized text differs from the file");
            let again = InstanceFile::parse(&file.to_json(), true).map_err(|e| e.to_string())?;
            ensure!(again == file, "{name}: parse(serialize(f)) != f");
            files += 1;
        }
    }
    let corpus: Vec<(String, InstanceFile)> = fixtures("mcnc").into_iter().take(12).map(|(n, _, f)| (n, f)).collect();
    let a = render_tsv(&bench(&corpus, &KnobsFile::default(), &[0, 1], &OracleBudget::default()), false);
    let b = render_tsv(&bench(&corpus, &KnobsFile::default(), &[0, 1], &OracleBudget::default()), false);
    ensure!(a == b, "library bench tables differ");
    let exe = env!("CARGO_BIN_EXE_nodecap");
    let run = || {
        Command::new(exe)
            .arg("bench")
            .arg(fixture_dir("ssnc"))
            .args(["--seeds", "0,1"])
            .output()
            .map_err(|e| e.to_string())
    };
    let (x, y) = (run()?, run()?);
    ensure!(x.status.success(), "cli bench failed: {}", String::from_utf8_lossy(&x.stderr));
    ensure!(x.stdout == y.stdout, "cli bench tables differ");
    let lines = x.stdout.iter().filter(|&&c| c == b'\n').count();
    Ok(format!("{files} files round-trip, bench tables identical ({} + {} rows)", a.lines().count() - 1, lines - 1))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("dgg contract", dgg_contract),
        ("clustering existence properties", clustering_existence),
        ("ssnc vs oracle", ssnc_vs_oracle),
        ("min-cut decomposition", mincut_decomposition),
        ("karger sampling", karger),
        ("hallucination statistics", hallucination_statistics),
        ("mcnc iteration ledger", mcnc_ledger),
        ("mcnc vs fractional oracle", mcnc_vs_oracle),
        ("energy reduction", energy_reduction),
        ("determinism and round-trip", determinism_and_round_trip),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

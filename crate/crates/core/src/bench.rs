//! Ratio and congestion tables over an instance corpus.

use std::fmt::Write as _;
use std::time::Instant;

use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{lift_solution, reduce_to_mcnc, solve_energy};
use crate::error::{Error, Result};
use crate::graph::Cost;
use crate::io::{Instance, InstanceFile, KnobsFile};
use crate::mcnc::solve_mcnc;
use crate::oracle::{exact_mcnc_fractional, exact_ssnc, EnumerationOrder, OracleBudget};
use crate::ssnc::solve_ssnc;

pub const HEADER: [&str; 11] = [
    "instance",
    "kind",
    "seed",
    "status",
    "cost",
    "oracle_cost",
    "ratio",
    "congestion",
    "iterations",
    "deferrals",
    "energy",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub instance: String,
    pub kind: &'static str,
    pub seed: u64,
    pub status: String,
    pub cost: Option<Cost>,
    pub oracle_cost: Option<Cost>,
    pub ratio: Option<f64>,
    pub congestion: Option<f64>,
    pub iterations: Option<usize>,
    pub deferrals: Option<usize>,
    pub energy: Option<f64>,
    pub runtime_ms: f64,
}

/// Status word for a failed solve.
pub fn status_of(e: &Error) -> String {
    match e.root() {
        Error::Infeasible(_) => "infeasible".into(),
        Error::PhaseStall(_) | Error::OuterStall(_) => "stall".into(),
        Error::Exhausted(_) => "exhausted".into(),
        other => format!("error: {}", other.to_string().replace(['\t', '\n'], " ")),
    }
}

/// Exact optimum for the instance, or for its reduction in the energy case.
/// `Ok(None)` means the instance is infeasible.
pub fn oracle_cost(file: &InstanceFile, budget: &OracleBudget) -> Result<Option<Cost>> {
    Ok(match file.instance()? {
        Instance::Ssnc(i) => exact_ssnc(&i, budget, EnumerationOrder::CostAscending)?.map(|o| o.cost),
        Instance::Mcnc(i) => exact_mcnc_fractional(&i, budget, EnumerationOrder::CostAscending)?.map(|o| o.cost),
        Instance::Eevrp(e) => {
            let (reduced, _) = reduce_to_mcnc(&e)?;
            exact_mcnc_fractional(&reduced, budget, EnumerationOrder::CostAscending)?.map(|o| o.cost)
        }
    })
}

fn ratio(cost: &Cost, opt: &Option<Cost>) -> Option<f64> {
    let opt = opt.as_ref()?;
    if opt.is_zero() {
        return Some(if cost.is_zero() { 1.0 } else { f64::INFINITY });
    }
    (cost / opt).to_f64()
}

fn run_one(name: &str, file: &InstanceFile, knobs: &KnobsFile, seed: u64, opt: &Result<Option<Cost>>) -> BenchRow {
    let start = Instant::now();
    let opt_cost = opt.as_ref().ok().cloned().flatten();
    let mut row = BenchRow {
        instance: name.to_string(),
        kind: file.problem.kind(),
        seed,
        status: "ok".into(),
        cost: None,
        oracle_cost: opt_cost,
        ratio: None,
        congestion: None,
        iterations: None,
        deferrals: None,
        energy: None,
        runtime_ms: 0.0,
    };
    let outcome: Result<()> = (|| {
        match file.instance()? {
            Instance::Ssnc(i) => {
                let s = solve_ssnc(&i, &knobs.ssnc())?;
                row.ratio = ratio(&s.cost, &opt_cost);
                row.cost = Some(s.cost);
                row.congestion = Some(s.congestion);
                row.iterations = Some(s.escalations as usize + 1);
                row.deferrals = Some(0);
            }
            Instance::Mcnc(i) => {
                let s = solve_mcnc(&i, &knobs.mcnc(false), seed)?;
                row.ratio = ratio(&s.cost, &opt_cost);
                row.cost = Some(s.cost);
                row.congestion = Some(s.congestion);
                row.iterations = Some(s.rounds.iter().map(|r| r.phase_iterations).sum());
                row.deferrals = Some(s.rounds.iter().map(|r| r.sparsifier_failures).sum());
            }
            Instance::Eevrp(e) => {
                let s = solve_energy(&e, &knobs.mcnc(false), seed)?;
                let lifted = lift_solution(&s.reduced, &s.reduction, &e, opt_cost.as_ref())?;
                row.ratio = ratio(&s.reduced.cost, &opt_cost);
                row.cost = Some(s.reduced.cost);
                row.congestion = Some(s.reduced.congestion);
                row.iterations = Some(s.reduced.rounds.iter().map(|r| r.phase_iterations).sum());
                row.deferrals = Some(s.reduced.rounds.iter().map(|r| r.sparsifier_failures).sum());
                row.energy = Some(lifted.energy);
            }
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        row.status = status_of(&e);
    }
    if opt.is_err() && row.status == "ok" {
        row.status = "ok, oracle exhausted".into();
    }
    row.runtime_ms = start.elapsed().as_secs_f64() * 1000.0;
    row
}

/// One row per instance and seed, in corpus order. Instances run in
/// parallel; each solve is single-threaded and seeded.
pub fn bench(corpus: &[(String, InstanceFile)], knobs: &KnobsFile, seeds: &[u64], budget: &OracleBudget) -> Vec<BenchRow> {
    corpus
        .par_iter()
        .map(|(name, file)| {
            let opt = oracle_cost(file, budget);
            seeds.iter().map(|&s| run_one(name, file, knobs, s, &opt)).collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn opt_str<T>(v: &Option<T>, f: impl Fn(&T) -> String) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), f)
}

/// Tab-separated table with a fixed header. `runtime_ms` is appended only
/// when `timing` is set, so untimed tables are byte-reproducible.
pub fn render_tsv(rows: &[BenchRow], timing: bool) -> String {
    let mut out = HEADER.join("\t");
    if timing {
        out.push_str("\truntime_ms");
    }
    out.push('\n');
    for r in rows {
        let fields = [
            r.instance.clone(),
            r.kind.to_string(),
            r.seed.to_string(),
            r.status.clone(),
            opt_str(&r.cost, |c| c.to_string()),
            opt_str(&r.oracle_cost, |c| c.to_string()),
            opt_str(&r.ratio, |x| format!("{x:.6}")),
            opt_str(&r.congestion, |x| format!("{x:.6}")),
            opt_str(&r.iterations, |x| x.to_string()),
            opt_str(&r.deferrals, |x| x.to_string()),
            opt_str(&r.energy, |x| format!("{x:.6}")),
        ];
        out.push_str(&fields.join("\t"));
        if timing {
            let _ = write!(out, "\t{:.3}", r.runtime_ms);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{generate, Family, GenParams, Kind};

    fn corpus() -> Vec<(String, InstanceFile)> {
        [Kind::Ssnc, Kind::Mcnc, Kind::Eevrp]
            .into_iter()
            .enumerate()
            .map(|(i, kind)| {
                let p = GenParams {
                    family: Family::Grid,
                    kind,
                    n: 6,
                    demands: 2,
                    capacity: 2,
                    sigma: 9.0,
                    ..GenParams::default()
                };
                (format!("g{i}"), generate(&p, i as u64).unwrap())
            })
            .collect()
    }

    #[test]
    fn table_is_reproducible() {
        let c = corpus();
        let a = render_tsv(&bench(&c, &KnobsFile::default(), &[0, 1], &OracleBudget::default()), false);
        let b = render_tsv(&bench(&c, &KnobsFile::default(), &[0, 1], &OracleBudget::default()), false);
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 7);
        assert!(a.starts_with("instance\tkind\tseed"));
        assert!(!a.contains("runtime_ms"));
    }

    #[test]
    fn timing_adds_a_column() {
        let rows = bench(&corpus()[..1], &KnobsFile::default(), &[0], &OracleBudget::default());
        let t = render_tsv(&rows, true);
        assert!(t.lines().next().unwrap().ends_with("runtime_ms"));
        assert_eq!(t.lines().nth(1).unwrap().split('\t').count(), 12);
    }

    #[test]
    fn failures_become_rows() {
        let mut c = corpus();
        // disconnect the grid
        c[1].1.graph.edges.clear();
        let rows = bench(&c[1..2], &KnobsFile::default(), &[0], &OracleBudget::default());
        assert_eq!(rows.len(), 1);
        assert_ne!(rows[0].status, "ok");
    }
}

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use nodecap::bench::{bench, render_tsv};
use nodecap::energy::solve_energy;
use nodecap::error::{Error, Result};
use nodecap::gen::{generate, Family, GenParams, Kind};
use nodecap::graph::Cost;
use nodecap::io::{write_audit_ledger, FixtureOptimum, Instance, InstanceFile, KnobsFile};
use nodecap::mcnc::{solve_mcnc, AuditRecord};
use nodecap::oracle::{exact_mcnc_fractional, exact_ssnc, EnumerationOrder, OracleBudget};
use nodecap::ssnc::solve_ssnc;

#[derive(Parser)]
#[command(name = "nodecap", version, about = "Node-capacitated network design solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Instance file
    instance: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON file overriding solver knobs
    #[arg(long)]
    knobs: Option<PathBuf>,
    /// Append one JSON line per audit record to this file
    #[arg(long)]
    audit_ledger: Option<PathBuf>,
    /// Fail when an audit does not hold
    #[arg(long)]
    strict: bool,
    /// Warn on unknown instance fields instead of rejecting them
    #[arg(long)]
    lenient: bool,
    /// Write the solution here instead of stdout
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Single-sink design
    SolveSsnc(Common),
    /// Multicommodity design
    SolveMcnc(Common),
    /// Energy-efficient routing through the tiered reduction
    SolveEnergy(Common),
    /// Exact optimum of a small instance
    Oracle {
        instance: PathBuf,
        #[arg(long, default_value_t = 12)]
        max_nodes: usize,
        #[arg(long, default_value_t = 5)]
        max_pairs: usize,
        #[arg(long, default_value_t = 30)]
        time_cap_secs: u64,
        #[arg(long)]
        lenient: bool,
        /// Store the optimum in the instance file instead of printing it
        #[arg(long)]
        annotate: bool,
    },
    /// Generate an instance
    Gen {
        #[arg(long, default_value = "random-geometric")]
        family: Family,
        #[arg(long, default_value = "ssnc")]
        kind: Kind,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        #[arg(long, default_value_t = 4)]
        demands: usize,
        #[arg(long, default_value_t = 1)]
        max_demand: u64,
        #[arg(long, default_value_t = 4)]
        capacity: u64,
        #[arg(long, default_value_t = 9)]
        max_cost: i64,
        #[arg(long, default_value_t = 16.0)]
        sigma: f64,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Solve every instance under each seed and print a ratio table
    Bench {
        /// Instance files or directories of `.json` files
        #[arg(required = true)]
        corpus: Vec<PathBuf>,
        /// Comma-separated seeds
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long)]
        knobs: Option<PathBuf>,
        /// Add a runtime_ms column
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        lenient: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn emit<T: Serialize>(path: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

fn ledger(c: &Common, audits: &[AuditRecord]) -> Result<()> {
    if let Some(path) = &c.audit_ledger {
        let f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        write_audit_ledger(BufWriter::new(f), &c.instance.display().to_string(), c.seed, audits)?;
    }
    Ok(())
}

fn knobs(path: &Option<PathBuf>) -> Result<KnobsFile> {
    path.as_deref().map_or_else(|| Ok(KnobsFile::default()), KnobsFile::read)
}

fn wrong_kind(want: &str, file: &InstanceFile) -> Error {
    Error::InvalidInstance(format!("expected a {want} instance, found {}", file.problem.kind()))
}

fn solve(c: &Common, want: &str) -> Result<()> {
    let file = InstanceFile::read(&c.instance, !c.lenient)?;
    let k = knobs(&c.knobs)?;
    match (want, file.instance()?) {
        ("ssnc", Instance::Ssnc(i)) => {
            let sol = solve_ssnc(&i, &k.ssnc())?;
            let q = i.capacity as f64;
            let p = sol.load_bound.max(sol.max_membership + 1) as f64;
            let audit = AuditRecord {
                round: 0,
                iteration: 0,
                property: 1,
                name: "congestion envelope".into(),
                holds: sol.congestion <= (1.0 + q.log2()) * sol.u as f64 * p,
                lhs: sol.congestion,
                rhs: (1.0 + q.log2()) * sol.u as f64 * p,
            };
            ledger(c, std::slice::from_ref(&audit))?;
            if c.strict && !audit.holds {
                return Err(Error::MalformedSolution(format!("congestion {} exceeds {}", audit.lhs, audit.rhs)));
            }
            emit(&c.out, &sol)
        }
        ("mcnc", Instance::Mcnc(i)) => {
            let sol = solve_mcnc(&i, &k.mcnc(c.strict), c.seed)?;
            ledger(c, &sol.audits)?;
            emit(&c.out, &sol)
        }
        ("eevrp", Instance::Eevrp(e)) => {
            let sol = solve_energy(&e, &k.mcnc(c.strict), c.seed)?;
            ledger(c, &sol.reduced.audits)?;
            emit(&c.out, &sol)
        }
        _ => Err(wrong_kind(want, &file)),
    }
}

fn corpus_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn name_of(p: &Path) -> String {
    p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
}

#[derive(Serialize)]
struct OracleReport {
    kind: &'static str,
    feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimum: Option<serde_json::Value>,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SolveSsnc(c) => solve(&c, "ssnc"),
        Command::SolveMcnc(c) => solve(&c, "mcnc"),
        Command::SolveEnergy(c) => solve(&c, "eevrp"),
        Command::Oracle {
            instance,
            max_nodes,
            max_pairs,
            time_cap_secs,
            lenient,
            annotate,
        } => {
            let file = InstanceFile::read(&instance, !lenient)?;
            let budget = OracleBudget {
                max_nodes,
                max_pairs,
                time_cap: std::time::Duration::from_secs(time_cap_secs),
            };
            let solve = |order| -> Result<Option<(Cost, Vec<usize>, serde_json::Value)>> {
                Ok(match file.instance()? {
                    Instance::Ssnc(i) => exact_ssnc(&i, &budget, order)?.map(|o| (o.cost, o.nodes.clone(), to_json(o))),
                    Instance::Mcnc(i) => exact_mcnc_fractional(&i, &budget, order)?.map(|o| (o.cost, o.nodes.clone(), to_json(o))),
                    Instance::Eevrp(_) => return Err(wrong_kind("ssnc or mcnc", &file)),
                })
            };
            let optimum = solve(EnumerationOrder::CostAscending)?;
            let other = solve(EnumerationOrder::SizeAscending)?;
            if optimum.as_ref().map(|o| o.0) != other.as_ref().map(|o| o.0) {
                return Err(Error::MalformedSolution("enumeration orders disagree on the optimum".into()));
            }
            if annotate {
                let mut file = file.clone();
                file.optimum = Some(FixtureOptimum {
                    cost: optimum.as_ref().map(|o| o.0),
                    nodes: optimum.as_ref().map(|o| o.1.clone()).unwrap_or_default(),
                    infeasible: optimum.is_none(),
                });
                std::fs::write(&instance, file.to_json() + "\n")?;
                return Ok(());
            }
            let report = OracleReport {
                kind: file.problem.kind(),
                feasible: optimum.is_some(),
                optimum: optimum.map(|o| o.2),
            };
            emit(&None, &report)?;
            if report.feasible {
                Ok(())
            } else {
                Err(Error::Infeasible("no feasible node set".into()))
            }
        }
        Command::Gen {
            family,
            kind,
            n,
            rows,
            cols,
            demands,
            max_demand,
            capacity,
            max_cost,
            sigma,
            alpha,
            seed,
            out,
        } => {
            let p = GenParams {
                family,
                kind,
                n,
                rows,
                cols,
                demands,
                max_demand,
                capacity,
                max_cost,
                sigma,
                alpha,
            };
            let file = generate(&p, seed)?;
            let mut w = output(&out)?;
            writeln!(w, "{}", file.to_json())?;
            Ok(())
        }
        Command::Bench {
            corpus,
            seeds,
            knobs: knob_path,
            timing,
            lenient,
            out,
        } => {
            let files = corpus_files(&corpus)?;
            let loaded = files
                .iter()
                .map(|f| Ok((name_of(f), InstanceFile::read(f, !lenient)?)))
                .collect::<Result<Vec<_>>>()?;
            let rows = bench(&loaded, &knobs(&knob_path)?, &seeds, &OracleBudget::default());
            let mut w = output(&out)?;
            w.write_all(render_tsv(&rows, timing).as_bytes())?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: T) -> serde_json::Value {
    serde_json::to_value(v).expect("solver outputs serialize")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nodecap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

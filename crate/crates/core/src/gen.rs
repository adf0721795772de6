//! Seeded instance generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{int_cost, NodeId, UndirectedMultigraph};
use crate::io::{InstanceFile, Problem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    RandomGeometric,
    Grid,
    StarPathological,
    BinaryMerge,
    Dumbbell,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "random-geometric" => Family::RandomGeometric,
            "grid" => Family::Grid,
            "star-pathological" | "star" => Family::StarPathological,
            "binary-merge" => Family::BinaryMerge,
            "dumbbell" => Family::Dumbbell,
            _ => return Err(Error::InvalidInstance(format!("unknown family {s}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Ssnc,
    Mcnc,
    Eevrp,
}

impl std::str::FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ssnc" => Kind::Ssnc,
            "mcnc" => Kind::Mcnc,
            "eevrp" => Kind::Eevrp,
            _ => return Err(Error::InvalidInstance(format!("unknown problem kind {s}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub family: Family,
    pub kind: Kind,
    pub n: usize,
    /// Grid shape; defaults to the squarest shape with at least `n` nodes.
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    /// Sources (ssnc) or pairs (mcnc, eevrp).
    pub demands: usize,
    pub max_demand: u64,
    pub capacity: u64,
    pub max_cost: i64,
    pub sigma: f64,
    pub alpha: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            family: Family::RandomGeometric,
            kind: Kind::Ssnc,
            n: 10,
            rows: None,
            cols: None,
            demands: 4,
            max_demand: 1,
            capacity: 4,
            max_cost: 9,
            sigma: 16.0,
            alpha: 2.0,
        }
    }
}

struct Skeleton {
    edges: Vec<(NodeId, NodeId)>,
    n: usize,
    /// Preferred sink and terminal pool for the family.
    sink: Option<NodeId>,
    terminals: Vec<NodeId>,
}

fn random_geometric(n: usize, rng: &mut ChaCha8Rng) -> Vec<(NodeId, NodeId)> {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
    let d = |a: usize, b: usize| ((pts[a].0 - pts[b].0).powi(2) + (pts[a].1 - pts[b].1).powi(2)).sqrt();
    let r = (2.0 * (n.max(2) as f64).ln() / n as f64).sqrt();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if d(a, b) <= r {
                edges.push((a, b));
            }
        }
    }
    // join components through their closest pair of points
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], x: usize) -> usize {
        if c[x] != x {
            c[x] = find(c, c[x]);
        }
        c[x]
    }
    for &(a, b) in &edges {
        let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
        comp[ra] = rb;
    }
    loop {
        let root0 = find(&mut comp, 0);
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..n {
            if find(&mut comp, a) != root0 {
                continue;
            }
            for b in 0..n {
                if find(&mut comp, b) != root0 && best.is_none_or(|x| d(a, b) < x.0) {
                    best = Some((d(a, b), a, b));
                }
            }
        }
        let Some((_, a, b)) = best else { break };
        edges.push((a.min(b), a.max(b)));
        let rb = find(&mut comp, b);
        comp[rb] = root0;
    }
    edges
}

fn skeleton(p: &GenParams, rng: &mut ChaCha8Rng) -> Result<Skeleton> {
    let n = p.n;
    if n < 2 {
        return Err(Error::InvalidInstance("generators need at least two nodes".into()));
    }
    Ok(match p.family {
        Family::RandomGeometric => Skeleton {
            edges: random_geometric(n, rng),
            n,
            sink: None,
            terminals: (0..n).collect(),
        },
        Family::Grid => {
            let rows = p.rows.unwrap_or_else(|| ((n as f64).sqrt().floor() as usize).max(1));
            let cols = p.cols.unwrap_or_else(|| n.div_ceil(rows));
            let mut edges = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    let v = r * cols + c;
                    if c + 1 < cols {
                        edges.push((v, v + 1));
                    }
                    if r + 1 < rows {
                        edges.push((v, v + cols));
                    }
                }
            }
            Skeleton {
                edges,
                n: rows * cols,
                sink: None,
                terminals: (0..rows * cols).collect(),
            }
        }
        Family::StarPathological => Skeleton {
            edges: (1..n).map(|v| (0, v)).collect(),
            n,
            sink: Some(1),
            terminals: (1..n).collect(),
        },
        Family::BinaryMerge => Skeleton {
            edges: (1..n).map(|v| ((v - 1) / 2, v)).collect(),
            n,
            sink: Some(0),
            terminals: (0..n).filter(|&v| 2 * v + 1 >= n).collect(),
        },
        Family::Dumbbell => {
            let half = n / 2;
            if half < 2 {
                return Err(Error::InvalidInstance("a dumbbell needs at least four nodes".into()));
            }
            let mut edges = Vec::new();
            for (lo, hi) in [(0, half), (half, n)] {
                for a in lo..hi {
                    for b in a + 1..hi {
                        edges.push((a, b));
                    }
                }
            }
            edges.push((half - 1, half));
            Skeleton {
                edges,
                n,
                sink: Some(n - 1),
                terminals: (0..n).collect(),
            }
        }
    })
}

/// Deterministic instance for `p` and `seed`.
pub fn generate(p: &GenParams, seed: u64) -> Result<InstanceFile> {
    if p.capacity == 0 || p.max_cost < 0 || p.max_demand == 0 {
        return Err(Error::InvalidInstance("capacity and max_demand must be positive, max_cost non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sk = skeleton(p, &mut rng)?;
    let costs: Vec<i64> = (0..sk.n).map(|_| rng.gen_range(0..=p.max_cost)).collect();
    let labels = (0..sk.n).map(|v| format!("v{v}")).collect();
    let g = UndirectedMultigraph::new(costs.into_iter().map(int_cost).collect(), labels, sk.edges)?;
    let problem = match p.kind {
        Kind::Ssnc => {
            let sink = sk.sink.unwrap_or_else(|| rng.gen_range(0..sk.n));
            let mut pool: Vec<NodeId> = sk.terminals.iter().copied().filter(|&v| v != sink).collect();
            if pool.is_empty() {
                pool = (0..sk.n).filter(|&v| v != sink).collect();
            }
            pool.shuffle(&mut rng);
            pool.truncate(p.demands.max(1));
            pool.sort_unstable();
            let sources = pool.into_iter().map(|v| (v, rng.gen_range(1..=p.max_demand))).collect();
            Problem::Ssnc {
                capacity: p.capacity,
                sink,
                sources,
            }
        }
        Kind::Mcnc | Kind::Eevrp => {
            let pool = if sk.terminals.len() >= 2 { sk.terminals.clone() } else { (0..sk.n).collect() };
            let pairs = (0..p.demands.max(1))
                .map(|_| {
                    let mut two = pool.choose_multiple(&mut rng, 2).copied();
                    (two.next().unwrap(), two.next().unwrap())
                })
                .collect();
            if p.kind == Kind::Mcnc {
                Problem::Mcnc {
                    capacity: p.capacity,
                    pairs,
                }
            } else {
                Problem::Eevrp {
                    sigma: p.sigma,
                    alpha: p.alpha,
                    pairs,
                }
            }
        }
    };
    let file = InstanceFile::from_graph(&g, problem);
    file.instance()?;
    Ok(file)
}

//! Instance files, knob files and audit ledgers.
//!
//! Instances are JSON objects. Node costs are exact integer or rational
//! strings (`"3"`, `"7/2"`) so a file round-trips without loss.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::energy::EevrpInstance;
use crate::error::{Error, Result};
use crate::graph::{Cost, McncInstance, NodeId, SsncInstance, UndirectedMultigraph};
use crate::mcnc::{AuditRecord, McncKnobs};
use crate::ssnc::SsncKnobs;

pub const FORMAT_VERSION: u32 = 1;

mod cost_str {
    use super::*;

    pub fn serialize<S: Serializer>(c: &Cost, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&c.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Cost, D::Error> {
        let s = String::deserialize(d)?;
        let c = Cost::from_str(s.trim()).map_err(|e| serde::de::Error::custom(format!("bad cost {s:?}: {e}")))?;
        if c < Cost::from_integer(0) {
            return Err(serde::de::Error::custom(format!("negative cost {s:?}")));
        }
        Ok(c)
    }
}

mod opt_cost_str {
    use super::*;

    pub fn serialize<S: Serializer>(c: &Option<Cost>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match c {
            Some(c) => s.serialize_str(&c.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Cost>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        s.map(|s| Cost::from_str(s.trim()).map_err(|e| serde::de::Error::custom(format!("bad cost {s:?}: {e}"))))
            .transpose()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    #[serde(with = "cost_str")]
    pub cost: Cost,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<(NodeId, NodeId)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Problem {
    Ssnc {
        capacity: u64,
        sink: NodeId,
        sources: Vec<(NodeId, u64)>,
    },
    Mcnc {
        capacity: u64,
        pairs: Vec<(NodeId, NodeId)>,
    },
    Eevrp {
        sigma: f64,
        alpha: f64,
        pairs: Vec<(NodeId, NodeId)>,
    },
}

impl Problem {
    pub fn kind(&self) -> &'static str {
        match self {
            Problem::Ssnc { .. } => "ssnc",
            Problem::Mcnc { .. } => "mcnc",
            Problem::Eevrp { .. } => "eevrp",
        }
    }
}

/// Hand-verified optimum stored alongside a fixture.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureOptimum {
    #[serde(with = "opt_cost_str", default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<Cost>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<NodeId>,
    #[serde(default)]
    pub infeasible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub format_version: u32,
    pub graph: GraphSpec,
    pub problem: Problem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimum: Option<FixtureOptimum>,
}

pub enum Instance {
    Ssnc(SsncInstance),
    Mcnc(McncInstance),
    Eevrp(EevrpInstance),
}

fn parse_error(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.into(),
        message: message.into(),
    }
}

/// Deserializes `text`, reporting the failing key path and line. Unknown
/// fields are errors when `strict`, warnings otherwise.
pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, strict: bool) -> Result<T> {
    let mut unknown = Vec::new();
    let mut de = serde_json::Deserializer::from_str(text);
    let mut track = |p: serde_ignored::Path| unknown.push(p.to_string());
    let ignored = serde_ignored::Deserializer::new(&mut de, &mut track);
    let value: T = serde_path_to_error::deserialize(ignored).map_err(|e| {
        let path = e.path().to_string();
        parse_error(path, e.into_inner().to_string())
    })?;
    de.end().map_err(|e| parse_error(".", e.to_string()))?;
    if let Some(first) = unknown.first() {
        if strict {
            return Err(parse_error(first.clone(), "unknown field"));
        }
        for p in &unknown {
            log::warn!("ignoring unknown field {p}");
        }
    }
    Ok(value)
}

impl InstanceFile {
    pub fn parse(text: &str, strict: bool) -> Result<Self> {
        let f: InstanceFile = parse_json(text, strict)?;
        if f.format_version != FORMAT_VERSION {
            return Err(parse_error("format_version", format!("unsupported version {}", f.format_version)));
        }
        if f.graph.nodes.is_empty() {
            return Err(parse_error("graph.nodes", "empty graph"));
        }
        Ok(f)
    }

    pub fn read(path: &std::path::Path, strict: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        InstanceFile::parse(&text, strict).map_err(|e| match e {
            Error::Parse { path: p, message } => Error::Parse {
                path: format!("{}: {p}", path.display()),
                message,
            },
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance files always serialize")
    }

    pub fn graph(&self) -> Result<UndirectedMultigraph> {
        let costs = self.graph.nodes.iter().map(|n| n.cost).collect();
        let labels = self
            .graph
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| if n.label.is_empty() { format!("v{i}") } else { n.label.clone() })
            .collect();
        UndirectedMultigraph::new(costs, labels, self.graph.edges.clone())
    }

    pub fn instance(&self) -> Result<Instance> {
        let g = self.graph()?;
        Ok(match &self.problem {
            Problem::Ssnc { capacity, sink, sources } => Instance::Ssnc(SsncInstance::new(g, *sink, sources.clone(), *capacity)?),
            Problem::Mcnc { capacity, pairs } => Instance::Mcnc(McncInstance::new(g, pairs, *capacity)?),
            Problem::Eevrp { sigma, alpha, pairs } => Instance::Eevrp(EevrpInstance::new(g, pairs.clone(), *sigma, *alpha)?),
        })
    }

    pub fn from_graph(g: &UndirectedMultigraph, problem: Problem) -> Self {
        let nodes = (0..g.node_count())
            .map(|v| NodeSpec {
                cost: g.cost(v),
                label: g.label(v).to_string(),
            })
            .collect();
        InstanceFile {
            format_version: FORMAT_VERSION,
            graph: GraphSpec {
                nodes,
                edges: g.edges().to_vec(),
            },
            problem,
            optimum: None,
        }
    }
}

/// Optional overrides for solver knobs; absent fields keep the defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KnobsFile {
    pub u: Option<u64>,
    pub max_escalations: Option<u32>,
    pub llsc_hard_cap: Option<u32>,
    pub c_h: Option<f64>,
    pub c_x: Option<f64>,
    pub c_outer: Option<f64>,
    pub eps: Option<f64>,
    pub beta_hat: Option<f64>,
}

impl KnobsFile {
    pub fn read(path: &std::path::Path) -> Result<Self> {
        parse_json(&std::fs::read_to_string(path)?, true)
    }

    pub fn ssnc(&self) -> SsncKnobs {
        let mut k = SsncKnobs::default();
        if self.u.is_some() {
            k.u = self.u;
        }
        if let Some(m) = self.max_escalations {
            k.max_escalations = m;
        }
        if self.llsc_hard_cap.is_some() {
            k.llsc_hard_cap = self.llsc_hard_cap;
        }
        k
    }

    pub fn mcnc(&self, strict: bool) -> McncKnobs {
        let d = McncKnobs::default();
        McncKnobs {
            c_h: self.c_h.unwrap_or(d.c_h),
            c_x: self.c_x.unwrap_or(d.c_x),
            c_outer: self.c_outer.unwrap_or(d.c_outer),
            eps: self.eps.unwrap_or(d.eps),
            beta_hat: self.beta_hat.or(d.beta_hat),
            strict_audits: strict,
            ssnc: self.ssnc(),
        }
    }
}

/// Writes one JSON object per audit record.
pub fn write_audit_ledger(mut out: impl Write, instance: &str, seed: u64, audits: &[AuditRecord]) -> Result<()> {
    #[derive(Serialize)]
    struct Line<'a> {
        instance: &'a str,
        seed: u64,
        #[serde(flatten)]
        audit: &'a AuditRecord,
    }
    for audit in audits {
        let line = serde_json::to_string(&Line { instance, seed, audit }).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
  "format_version": 1,
  "graph": {
    "nodes": [{"cost": "0", "label": "s"}, {"cost": "7/2"}, {"cost": "3"}],
    "edges": [[0, 1], [1, 2]]
  },
  "problem": {"kind": "ssnc", "capacity": 2, "sink": 2, "sources": [[0, 1]]}
}"#;

    #[test]
    fn parses_rational_costs() {
        let f = InstanceFile::parse(SAMPLE, true).unwrap();
        assert_eq!(f.graph.nodes[1].cost, Cost::new(7, 2));
        assert!(matches!(f.instance().unwrap(), Instance::Ssnc(_)));
    }

    #[test]
    fn round_trip_is_identity() {
        let f = InstanceFile::parse(SAMPLE, true).unwrap();
        let again = InstanceFile::parse(&f.to_json(), true).unwrap();
        assert_eq!(f, again);
        assert_eq!(f.to_json(), again.to_json());
    }

    #[test]
    fn empty_graph_rejected() {
        let text = r#"{"format_version":1,"graph":{"nodes":[],"edges":[]},"problem":{"kind":"mcnc","capacity":1,"pairs":[]}}"#;
        let err = InstanceFile::parse(text, true).unwrap_err();
        assert!(matches!(err, Error::Parse { ref path, .. } if path == "graph.nodes"), "{err}");
    }

    #[test]
    fn unknown_field_strict_and_lenient() {
        let text = SAMPLE.replacen("\"format_version\": 1,", "\"format_version\": 1, \"colour\": 3,", 1);
        let err = InstanceFile::parse(&text, true).unwrap_err();
        assert!(matches!(err, Error::Parse { ref path, .. } if path == "colour"), "{err}");
        assert!(InstanceFile::parse(&text, false).is_ok());
    }

    #[test]
    fn bad_field_reports_path() {
        let text = SAMPLE.replace("\"7/2\"", "\"seven\"");
        let err = InstanceFile::parse(&text, true).unwrap_err();
        let Error::Parse { path, message } = err else { panic!() };
        assert_eq!(path, "graph.nodes[1].cost");
        assert!(message.contains("line 4"), "{message}");
    }

    #[test]
    fn knobs_override_defaults() {
        let k: KnobsFile = parse_json(r#"{"c_h": 2.0, "u": 5}"#, true).unwrap();
        let m = k.mcnc(true);
        assert_eq!(m.c_h, 2.0);
        assert_eq!(m.c_x, McncKnobs::default().c_x);
        assert_eq!(m.ssnc.u, Some(5));
        assert!(m.strict_audits);
        assert!(parse_json::<KnobsFile>(r#"{"c_z": 1}"#, true).is_err());
    }
}

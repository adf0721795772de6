//! Multicommodity node-capacitated network design.

pub mod aux;
pub mod cuts;
pub mod halluc;
pub mod routing;
pub mod state;

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{validate_mcnc, Cost, McncInstance, NodeId, Violation};
use crate::ssnc::{solve_ssnc, SsncKnobs};

use aux::{build_i1, build_i2, measured_congestion, merge_from_flow, AuxInstance, MergeReport};
use cuts::{mincut_decompose, ClusterGraph};
use halluc::{hallucinate, path_counts, round_lp_h, solve_lp_h};
use routing::{pairs_touching_internal, route_component, route_internal, RoutedPair};
use state::{bipartition_safe, make_unsafe, ClusterSet, Status};

#[derive(Clone, Debug)]
pub struct McncKnobs {
    pub c_h: f64,
    pub c_x: f64,
    pub c_outer: f64,
    pub eps: f64,
    /// Floor for the measured single-sink congestion used by I1 and the audits.
    pub beta_hat: Option<f64>,
    /// Fail the solve when an audit does not hold.
    pub strict_audits: bool,
    pub ssnc: SsncKnobs,
}

impl Default for McncKnobs {
    fn default() -> Self {
        McncKnobs {
            c_h: 4.0,
            c_x: 8.0,
            c_outer: 8.0,
            eps: 0.1,
            beta_hat: None,
            strict_audits: false,
            ssnc: SsncKnobs::default(),
        }
    }
}

/// One checked inequality `lhs <= rhs`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRecord {
    pub round: usize,
    pub iteration: usize,
    pub property: u8,
    pub name: String,
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

fn record(out: &mut Vec<AuditRecord>, round: usize, iteration: usize, property: u8, name: &str, lhs: f64, rhs: f64) {
    let holds = lhs <= rhs + 1e-9 * rhs.abs().max(1.0);
    if !holds {
        log::warn!("audit {property} ({name}) fails in round {round}, iteration {iteration}: {lhs} > {rhs}");
    }
    out.push(AuditRecord {
        round,
        iteration,
        property,
        name: name.to_string(),
        holds,
        lhs,
        rhs,
    });
}

#[derive(Clone, Debug)]
pub struct PhaseOutcome {
    pub set: ClusterSet,
    pub deleted: Vec<usize>,
    pub iterations: usize,
    pub audits: Vec<AuditRecord>,
    pub beta_hat: f64,
    /// Clusters frozen without being internal or external because no demand
    /// was left between safe clusters.
    pub forced_freezes: usize,
    /// External clusters that ended the phase internal after absorbing
    /// their mates.
    pub retyped: usize,
}

struct Merged {
    report: MergeReport,
    cost: Cost,
}

fn run_aux(aux: &AuxInstance, set: &mut ClusterSet, knobs: &SsncKnobs, beta: &mut f64, phase: &'static str) -> Result<Merged> {
    let sol = solve_ssnc(&aux.inst, knobs).map_err(|e| e.in_phase(phase))?;
    *beta = beta.max(measured_congestion(aux, &sol));
    let report = merge_from_flow(aux, &sol.routing, set).map_err(|e| e.in_phase(phase))?;
    Ok(Merged { report, cost: sol.cost })
}

/// Grows clusters over the `remaining` pairs until none is active. Every
/// iteration checks the eight per-iteration properties against the
/// measured single-sink congestion.
pub fn clustering_phase(inst: &McncInstance, remaining: &BTreeSet<usize>, knobs: &McncKnobs, round: usize) -> Result<PhaseOutcome> {
    let g = &inst.graph;
    let n = g.node_count();
    let q = inst.capacity as f64;
    let mut set = ClusterSet::new(inst, remaining);
    let mut beta = knobs.beta_hat.unwrap_or(1.0).max(1.0);
    let mut audits = Vec::new();
    let mut deleted = Vec::new();
    let mut forced = 0;
    let mut it = 0;
    let limit = 4 * remaining.len() + 4;
    while !set.active().is_empty() {
        it += 1;
        if it > limit {
            return Err(Error::PhaseStall(format!("{} active clusters left after {limit} iterations", set.active().len())));
        }
        let active_before = set.active().len();
        let membership_before = set.membership(n);
        let frozen_before: BTreeSet<usize> = set.frozen().into_iter().collect();

        let rep = make_unsafe(&mut set);
        deleted.extend(rep.deleted.iter().copied());
        let ts = set.with_status(|s| s == Status::ActiveSafe);
        let tu = set.with_status(|s| s == Status::ActiveUnsafe);
        let mut newly_frozen = rep.newly_internal.clone();
        let mut new_nodes = BTreeSet::new();
        let mut aux_cost = Cost::zero();
        let mut frozen_gain: u64 = 0;

        if !tu.is_empty() {
            let aux = build_i1(g, &set, beta)?;
            let m = run_aux(&aux, &mut set, &knobs.ssnc, &mut beta, "unsafe merge")?;
            aux_cost += m.cost;
            new_nodes.extend(m.report.new_nodes.iter().copied());
            let mut touched = m.report.formed.clone();
            for &(id, gain) in &m.report.grown {
                if frozen_before.contains(&id) {
                    frozen_gain = frozen_gain.max(gain);
                }
                touched.push(id);
            }
            newly_frozen.extend(set.freeze_if_ready(&touched));
        }

        let safe: Vec<usize> = ts
            .iter()
            .copied()
            .filter(|&c| set.states[c].as_ref().is_some_and(|s| s.status == Status::ActiveSafe))
            .collect();
        if !safe.is_empty() {
            match bipartition_safe(&set, &safe) {
                Ok((plus, minus)) => {
                    let aux = build_i2(g, &set, &plus, &minus)?;
                    let m = run_aux(&aux, &mut set, &knobs.ssnc, &mut beta, "safe merge")?;
                    aux_cost += m.cost;
                    new_nodes.extend(m.report.new_nodes.iter().copied());
                    let touched: Vec<usize> = m.report.formed.iter().copied().chain(m.report.grown.iter().map(|g| g.0)).collect();
                    newly_frozen.extend(set.freeze_if_ready(&touched));
                }
                Err(Error::Degenerate(_)) => {
                    let ready = set.freeze_if_ready(&safe);
                    for &c in &safe {
                        if let Some(st) = set.states[c].as_mut() {
                            if st.status.is_active() {
                                st.status = Status::FrozenInternal;
                                forced += 1;
                            }
                        }
                    }
                    set.recount();
                    newly_frozen.extend(ready);
                    newly_frozen.extend(safe.iter().copied().filter(|c| set.states[*c].is_some()));
                }
                Err(e) => return Err(e),
            }
        }
        newly_frozen.sort_unstable();
        newly_frozen.dedup();

        let max_new_load = newly_frozen
            .iter()
            .filter_map(|&c| set.states[c].as_ref())
            .map(|s| s.load())
            .max()
            .unwrap_or(0);
        record(&mut audits, round, it, 1, "newly frozen load", max_new_load as f64, 9.0 * beta * q + q / 4.0);
        record(&mut audits, round, it, 2, "frozen load increase", frozen_gain as f64, 40.0 * beta * beta * q);
        let max_cross = set.frozen().iter().map(|&c| set.get(c).crossing_to_active).max().unwrap_or(0);
        record(&mut audits, round, it, 3, "frozen demand to active clusters", max_cross as f64, 9.0 * beta * q);
        let new_cost = g.total_cost(new_nodes.iter());
        record(
            &mut audits,
            round,
            it,
            4,
            "cost of new tree nodes",
            crate::graph::cost_to_f64(&new_cost),
            crate::graph::cost_to_f64(&aux_cost),
        );
        let membership_after = set.membership(n);
        let growth = membership_after
            .iter()
            .zip(&membership_before)
            .map(|(a, b)| a.saturating_sub(*b))
            .max()
            .unwrap_or(0);
        record(&mut audits, round, it, 5, "per-node membership increase", growth as f64, 2.0);
        let active_after = set.active().len();
        record(
            &mut audits,
            round,
            it,
            6,
            "active clusters shrink",
            4.0 * active_after as f64,
            3.0 * ts.len() as f64 + 2.0 * tu.len() as f64,
        );
        record(
            &mut audits,
            round,
            it,
            7,
            "deletions against frozen demand",
            rep.deleted.len() as f64,
            3.0 * rep.frozen_crossing_witness as f64,
        );
        record(&mut audits, round, it, 8, "deleted demands touching frozen clusters", rep.deleted_touching_frozen as f64, 0.0);

        if active_after >= active_before && rep.deleted.is_empty() && newly_frozen.is_empty() {
            return Err(Error::PhaseStall(format!("iteration {it} changed nothing with {active_after} active clusters")));
        }
    }
    let mut retyped = 0;
    for st in set.states.iter_mut().flatten() {
        if st.status == Status::FrozenExternal && st.is_internal() {
            st.status = Status::FrozenInternal;
            retyped += 1;
        }
    }
    let inside = set.pairs_inside_frozen().len();
    record(&mut audits, round, it, 9, "pairs outside final clusters", remaining.len() as f64, 4.0 * inside as f64);
    record(&mut audits, round, it, 10, "total deletions", deleted.len() as f64, 3.0 * set.alive.len() as f64);
    Ok(PhaseOutcome {
        set,
        deleted,
        iterations: it,
        audits,
        beta_hat: beta,
        forced_freezes: forced,
        retyped,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    Internal,
    External,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub remaining: usize,
    pub phase_iterations: usize,
    pub frozen_clusters: usize,
    pub deleted: usize,
    pub forced_freezes: usize,
    pub retyped: usize,
    pub beta_hat: f64,
    pub sampling_prob: f64,
    pub sampled: usize,
    pub branch: Branch,
    pub lp_cost: Option<f64>,
    pub max_path_count: Option<u32>,
    pub components: usize,
    pub sparsifier_failures: usize,
    pub routed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McncSolution {
    pub nodes: Vec<NodeId>,
    /// One path per pair, in instance order.
    pub routing: Vec<Vec<NodeId>>,
    pub cost: Cost,
    pub loads: Vec<u64>,
    /// Largest node load divided by the capacity.
    pub congestion: f64,
    pub rounds: Vec<RoundRecord>,
    pub audits: Vec<AuditRecord>,
}

impl McncSolution {
    pub fn failed_audits(&self) -> impl Iterator<Item = &AuditRecord> {
        self.audits.iter().filter(|a| !a.holds)
    }
}

/// `ceil(c_outer * log2 max(k, 2))`.
pub fn outer_round_cap(k: usize, c_outer: f64) -> usize {
    (c_outer * (k.max(2) as f64).log2()).ceil() as usize
}

pub fn solve_mcnc(inst: &McncInstance, knobs: &McncKnobs, seed: u64) -> Result<McncSolution> {
    let violations = validate_mcnc(inst);
    if let Some(v) = violations.iter().find(|v| matches!(v, Violation::NoPath { .. })) {
        return Err(Error::Infeasible(v.to_string()));
    }
    if let Some(v) = violations.first() {
        return Err(Error::InvalidInstance(v.to_string()));
    }
    let g = &inst.graph;
    let n = g.node_count();
    let q = inst.capacity;
    let k = inst.pairs.len();
    let cap = outer_round_cap(k, knobs.c_outer);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining: BTreeSet<usize> = (0..k).collect();
    let mut routing: Vec<Option<Vec<NodeId>>> = vec![None; k];
    let mut rounds = Vec::new();
    let mut audits = Vec::new();

    while !remaining.is_empty() {
        if rounds.len() >= cap {
            return Err(Error::OuterStall(format!("{} of {k} pairs still unrouted after {cap} rounds", remaining.len())));
        }
        let round = rounds.len() + 1;
        let phase = clustering_phase(inst, &remaining, knobs, round).map_err(|e| e.in_phase("clustering"))?;
        audits.extend(phase.audits.iter().cloned());
        let set = &phase.set;
        let frozen = set.frozen();
        let local: BTreeMap<usize, usize> = frozen.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let gc_pairs: Vec<usize> = set
            .alive
            .iter()
            .copied()
            .filter(|&i| {
                let (a, b) = set.ends(i);
                a != b
            })
            .collect();
        let plan = hallucinate(&gc_pairs, q, n, knobs.c_h, &mut rng);

        let mut rec = RoundRecord {
            round,
            remaining: remaining.len(),
            phase_iterations: phase.iterations,
            frozen_clusters: frozen.len(),
            deleted: phase.deleted.len(),
            forced_freezes: phase.forced_freezes,
            retyped: phase.retyped,
            beta_hat: phase.beta_hat,
            sampling_prob: plan.prob,
            sampled: plan.sampled.len(),
            branch: Branch::Internal,
            lp_cost: None,
            max_path_count: None,
            components: 0,
            sparsifier_failures: 0,
            routed: 0,
        };
        let mut routed: Vec<RoutedPair> = Vec::new();
        if 8 * pairs_touching_internal(set) >= remaining.len() {
            routed = route_internal(g, set).map_err(|e| e.in_phase("internal routing"))?;
        }
        if routed.is_empty() {
            rec.branch = Branch::External;
            let sampled_pairs: Vec<(NodeId, NodeId)> = plan.sampled.iter().map(|&i| set.pairs[i]).collect();
            let lp = solve_lp_h(g, &sampled_pairs, q, knobs.c_x, knobs.eps).map_err(|e| e.in_phase("hallucination"))?;
            let paths = round_lp_h(&lp, &mut rng);
            rec.lp_cost = Some(lp.cost);
            rec.max_path_count = path_counts(&paths, n).into_iter().max();
            let sampled: Vec<(usize, Vec<NodeId>)> = plan.sampled.iter().copied().zip(paths).collect();

            let edges: Vec<(usize, usize)> = gc_pairs
                .iter()
                .map(|&i| {
                    let (a, b) = set.ends(i);
                    (local[&a], local[&b])
                })
                .collect();
            let gc = ClusterGraph::new(frozen.len(), edges);
            let dec = mincut_decompose(&gc, q);
            let comp_of = dec.component_of(frozen.len());
            let removed: BTreeSet<usize> = dec.removed.iter().copied().collect();
            for (ci, comp) in dec.components.iter().enumerate().filter(|(_, c)| c.len() > 1) {
                let pairs: Vec<usize> = gc_pairs
                    .iter()
                    .enumerate()
                    .filter(|&(e, _)| !removed.contains(&e) && comp_of[gc.edges[e].0] == ci)
                    .map(|(_, &p)| p)
                    .collect();
                if pairs.is_empty() {
                    continue;
                }
                rec.components += 1;
                let ids: Vec<usize> = comp.iter().map(|&v| frozen[v]).collect();
                let here: Vec<(usize, Vec<NodeId>)> = sampled
                    .iter()
                    .filter(|(p, _)| {
                        let (a, b) = set.ends(*p);
                        comp_of[local[&a]] == ci && comp_of[local[&b]] == ci
                    })
                    .cloned()
                    .collect();
                match route_component(g, set, &ids, &pairs, &here, q, knobs.eps) {
                    Ok(r) => routed.extend(r.routed),
                    Err(Error::SparsifierFailure(msg)) => {
                        log::warn!("round {round}: deferring {} pairs ({msg})", pairs.len());
                        rec.sparsifier_failures += 1;
                    }
                    Err(e) => return Err(e.in_phase("sparsifier routing")),
                }
            }
        }
        rec.routed = routed.len();
        log::debug!("{rec:?}");
        for r in routed {
            remaining.remove(&r.pair);
            routing[r.pair] = Some(r.path);
        }
        rounds.push(rec);
    }

    if knobs.strict_audits {
        if let Some(a) = audits.iter().find(|a| !a.holds) {
            return Err(Error::MalformedSolution(format!(
                "audit {} ({}) fails in round {}: {} > {}",
                a.property, a.name, a.round, a.lhs, a.rhs
            )));
        }
    }
    let routing: Vec<Vec<NodeId>> = routing.into_iter().map(|p| p.expect("every pair routed")).collect();
    let mut loads = vec![0u64; n];
    for p in &routing {
        for &v in p {
            loads[v] += 1;
        }
    }
    let nodes: Vec<NodeId> = (0..n).filter(|&v| loads[v] > 0).collect();
    let cost = g.total_cost(nodes.iter());
    let congestion = loads.iter().copied().max().unwrap_or(0) as f64 / q as f64;
    Ok(McncSolution {
        nodes,
        routing,
        cost,
        loads,
        congestion,
        rounds,
        audits,
    })
}

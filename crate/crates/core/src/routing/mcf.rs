//! Minimum-MLU multicommodity flow.
//!
//! Demands are grouped into one commodity per source node. For fractional
//! multicommodity flow this is exact: any per-source flow splits into
//! per-destination flows with the same link loads, which is how the
//! per-demand routing is recovered afterwards.

use std::collections::VecDeque;

use super::decompose::{arc_flow_of, peel_paths, to_ratios};
use super::{RoutedDemand, RoutingDecision, RoutingError, Scheme};
use crate::lp::{Backend, LinearProgram, LpError, LpSolution, Relation, Var};
use crate::netmodel::{ArcId, LinkId, NetworkInstance, Topology, TrafficMatrix};

/// Positive demands sharing one source node.
#[derive(Clone, Debug)]
pub(crate) struct Commodity {
    pub source: usize,
    pub sinks: Vec<(usize, f64)>,
}

pub(crate) fn commodities(tm: &TrafficMatrix) -> Vec<Commodity> {
    let mut out: Vec<Commodity> = Vec::new();
    for d in tm.positive_demands() {
        match out.last_mut() {
            Some(c) if c.source == d.src => c.sinks.push((d.dst, d.volume)),
            _ => out.push(Commodity {
                source: d.src,
                sinks: vec![(d.dst, d.volume)],
            }),
        }
    }
    out
}

/// Flow variables of a set of commodities over the arcs that are alive,
/// with conservation rows already added.
pub(crate) struct CommodityFlows {
    /// `vars[k][arc]` is `None` for dead arcs.
    pub vars: Vec<Vec<Option<Var>>>,
}

impl CommodityFlows {
    pub fn add(
        lp: &mut LinearProgram,
        topology: &Topology,
        commodities: &[Commodity],
        arc_alive: &[bool],
        cost_per_unit: f64,
    ) -> Self {
        let mut vars = Vec::with_capacity(commodities.len());
        for c in commodities {
            let row: Vec<Option<Var>> = (0..topology.num_arcs())
                .map(|a| arc_alive[a].then(|| lp.add_nonneg(cost_per_unit)))
                .collect();
            let mut demand = vec![0.0; topology.num_nodes()];
            for &(t, vol) in &c.sinks {
                demand[t] += vol;
            }
            let mut terms: Vec<Vec<(Var, f64)>> = vec![Vec::new(); topology.num_nodes()];
            for (a, var) in row.iter().enumerate() {
                if let Some(var) = *var {
                    let arc = topology.arc(a);
                    terms[arc.head].push((var, 1.0));
                    terms[arc.tail].push((var, -1.0));
                }
            }
            for (v, t) in terms.into_iter().enumerate() {
                if v != c.source {
                    lp.add_row(t, Relation::Eq, demand[v]);
                }
            }
            vars.push(row);
        }
        Self { vars }
    }

    /// `(var, 1.0)` for every commodity's flow on `arc`.
    pub fn arc_terms(&self, arc: ArcId) -> impl Iterator<Item = (Var, f64)> + '_ {
        self.vars.iter().filter_map(move |row| row[arc].map(|v| (v, 1.0)))
    }
}

pub(crate) fn arc_alive(topology: &Topology, disabled: &[LinkId]) -> Vec<bool> {
    (0..topology.num_arcs())
        .map(|a| !disabled.contains(&(a / 2)))
        .collect()
}

/// Every positive demand must have a path that avoids `disabled`.
pub(crate) fn check_reachable(
    topology: &Topology,
    tm: &TrafficMatrix,
    disabled: &[LinkId],
) -> Result<(), RoutingError> {
    let mut adj = vec![Vec::new(); topology.num_nodes()];
    for (id, l) in topology.links().iter().enumerate() {
        if !disabled.contains(&id) {
            adj[l.u].push(l.v);
            adj[l.v].push(l.u);
        }
    }
    let mut comp = vec![usize::MAX; topology.num_nodes()];
    for start in 0..topology.num_nodes() {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = start;
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if comp[y] == usize::MAX {
                    comp[y] = start;
                    queue.push_back(y);
                }
            }
        }
    }
    match tm.positive_demands().find(|d| comp[d.src] != comp[d.dst]) {
        Some(d) => Err(RoutingError::Disconnected {
            src: d.src,
            dst: d.dst,
        }),
        None => Ok(()),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct McfOptions {
    pub backend: Backend,
    /// Re-solve with the MLU pinned at its optimum while minimizing total
    /// carried flow. Yields shorter, cycle-free routes at the cost of a
    /// second LP.
    pub min_total_flow: bool,
}

impl Default for McfOptions {
    fn default() -> Self {
        Self {
            backend: Backend::Sparse,
            min_total_flow: true,
        }
    }
}

fn mlu_program(
    topology: &Topology,
    commodities: &[Commodity],
    alive: &[bool],
) -> (LinearProgram, Var, CommodityFlows) {
    let mut lp = LinearProgram::new();
    let u = lp.add_nonneg(1.0);
    let flows = CommodityFlows::add(&mut lp, topology, commodities, alive, 0.0);
    for a in 0..topology.num_arcs() {
        if alive[a] {
            let cap = topology.capacity(a / 2);
            lp.add_row(flows.arc_terms(a).chain([(u, -cap)]), Relation::Le, 0.0);
        }
    }
    (lp, u, flows)
}

/// Per-demand path routing recovered from source-aggregated LP flows.
pub(crate) fn decision_from_flows(
    topology: &Topology,
    commodities: &[Commodity],
    flows: &CommodityFlows,
    sol: &LpSolution,
    scheme: Scheme,
) -> Result<RoutingDecision, RoutingError> {
    let out_arcs = topology.out_arcs();
    let mut demands = Vec::new();
    for (c, row) in commodities.iter().zip(&flows.vars) {
        let mut residual: Vec<f64> = row
            .iter()
            .map(|v| v.map_or(0.0, |v| sol[v].max(0.0)))
            .collect();
        for &(dst, volume) in &c.sinks {
            let peeled = peel_paths(topology, &out_arcs, &mut residual, c.source, dst, volume);
            if peeled.is_empty() {
                return Err(RoutingError::Numerical(format!(
                    "LP flow of commodity {} does not reach {dst}",
                    c.source
                )));
            }
            let paths = to_ratios(peeled);
            let arc_flow = arc_flow_of(topology, volume, &paths);
            demands.push(RoutedDemand {
                src: c.source,
                dst,
                volume,
                arc_flow,
                paths,
            });
        }
    }
    Ok(RoutingDecision { scheme, demands })
}

/// Optimal MLU only, for impact sweeps that do not need the routing.
pub fn min_mlu_value(
    instance: &NetworkInstance,
    disabled: &[LinkId],
    backend: Backend,
) -> Result<f64, RoutingError> {
    let topology = &instance.topology;
    check_reachable(topology, &instance.tm, disabled)?;
    let commodities = commodities(&instance.tm);
    if commodities.is_empty() {
        return Ok(0.0);
    }
    let alive = arc_alive(topology, disabled);
    let (lp, u, _) = mlu_program(topology, &commodities, &alive);
    let sol = lp.solve_with(backend)?;
    Ok(sol[u].max(0.0))
}

/// Minimum-MLU routing of `instance` with `disabled` links removed. Returns
/// the path-decomposed routing and the optimal MLU.
pub fn solve_mcf_min_mlu(
    instance: &NetworkInstance,
    disabled: &[LinkId],
) -> Result<(RoutingDecision, f64), RoutingError> {
    solve_mcf_min_mlu_with(instance, disabled, &McfOptions::default())
}

pub fn solve_mcf_min_mlu_with(
    instance: &NetworkInstance,
    disabled: &[LinkId],
    options: &McfOptions,
) -> Result<(RoutingDecision, f64), RoutingError> {
    let topology = &instance.topology;
    check_reachable(topology, &instance.tm, disabled)?;
    let commodities = commodities(&instance.tm);
    if commodities.is_empty() {
        return Ok((RoutingDecision::empty(Scheme::Mcf), 0.0));
    }
    let alive = arc_alive(topology, disabled);
    let (lp, u, mut flows) = mlu_program(topology, &commodities, &alive);
    let mut sol = lp.solve_with(options.backend)?;
    let mlu = sol[u].max(0.0);

    if options.min_total_flow {
        // Pin the MLU at its optimum; relax slightly only if the solver
        // rejects the exact ceiling.
        for slack in [0.0, 1e-9] {
            let mut lp2 = LinearProgram::new();
            let f2 = CommodityFlows::add(&mut lp2, topology, &commodities, &alive, 1.0);
            let ceiling = mlu * (1.0 + slack) + slack * 1e-3;
            for a in 0..topology.num_arcs() {
                if alive[a] {
                    let cap = topology.capacity(a / 2);
                    lp2.add_row(f2.arc_terms(a), Relation::Le, ceiling * cap);
                }
            }
            match lp2.solve_with(options.backend) {
                Ok(s) => {
                    sol = s;
                    flows = f2;
                    break;
                }
                Err(LpError::Infeasible) if slack == 0.0 => continue,
                Err(e) => return Err(e.into()),
            }
        }
    }

    let decision = decision_from_flows(topology, &commodities, &flows, &sol, Scheme::Mcf)?;
    Ok((decision, mlu))
}

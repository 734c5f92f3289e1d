//! Link-protection traffic engineering.
//!
//! Every directed arc `(i, j)` gets a protection flow of volume equal to its
//! capacity from `i` to `j` that avoids the arc's own link. When a link fails
//! the protection flows of both its directions are switched on and added to
//! the base routing; nothing else is rerouted. Post-failure load on arc `e`
//! under scenario `x` is therefore
//! `base(e) + sum over failed links l of protection_l(e)`.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use super::DesignError;
use crate::failure::FailureScenario;
use crate::lp::{Backend, LinearProgram, LpError, Relation, Var};
use crate::netmodel::{ArcId, NetworkInstance, Topology};
use crate::routing::mcf::{
    arc_alive, commodities, decision_from_flows, Commodity, CommodityFlows,
};
use crate::routing::{compute_loads, RoutingDecision, Scheme};

/// Post-failure MLU above `target + CONGESTION_TOL` is a violation.
const CONGESTION_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TeOptions {
    pub backend: Backend,
    /// Re-solves allowed in [`te_certify_and_iterate`].
    pub max_iterations: usize,
    pub target: CertifyTarget,
}

/// Post-failure MLU a certified plan must stay within.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CertifyTarget {
    /// A fixed bound, normally 1 (no congestion).
    Fixed(f64),
    /// The plan's own critical bound `U_C`: every scenario worse than the
    /// critical set joins it, so a certified plan's worst case over all
    /// scenarios is `U_C`. Falls back to 1 while the critical set is empty.
    Critical,
}

impl CertifyTarget {
    fn bound(&self, plan: &TePlan) -> f64 {
        match *self {
            CertifyTarget::Fixed(t) => t,
            CertifyTarget::Critical if plan.critical.is_empty() => 1.0,
            CertifyTarget::Critical => plan.u_critical,
        }
    }
}

impl Default for TeOptions {
    fn default() -> Self {
        Self {
            backend: Backend::Sparse,
            max_iterations: 20,
            target: CertifyTarget::Fixed(1.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Certification {
    Unchecked,
    /// Every scenario stays within the target.
    CertifiedAll,
    /// Iterations ran out; `(scenario id, MLU)` of the remaining violations.
    CertifiedSubset { violations: Vec<(usize, f64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TePlan {
    #[serde(skip)]
    pub base: RoutingDecision,
    /// Base load per arc.
    #[serde(skip)]
    pub base_load: Vec<f64>,
    /// Protection flow per protected arc: `(arc, flow)` pairs.
    #[serde(skip)]
    pub protection: Vec<Vec<(ArcId, f64)>>,
    pub objective: f64,
    /// Worst post-failure MLU allowed on the critical scenarios.
    pub u_critical: f64,
    /// `(scenario id, MLU bound)` for every single-link scenario.
    pub u_single: Vec<(usize, f64)>,
    /// Scenarios constrained through `u_critical`.
    pub critical: Vec<usize>,
    pub certification: Certification,
    /// Largest post-failure MLU over all scenarios, once certified.
    pub worst_mlu: Option<f64>,
    /// Re-solves done during certification.
    pub iterations: usize,
    pub lp_vars: usize,
    pub lp_rows: usize,
    /// Congestion rows of this program and of the unpruned program.
    pub congestion_rows: usize,
    pub full_congestion_rows: usize,
}

impl TePlan {
    /// Post-failure MLU of the plan when the links of `failed` go down.
    pub fn mlu_under(&self, topology: &Topology, failed: &[usize]) -> f64 {
        post_failure_mlu(topology, &self.base_load, &self.protection, failed)
    }
}

/// `max_e (base(e) + sum_{l in failed} protection_l(e)) / C_e` over all arcs.
pub fn post_failure_mlu(
    topology: &Topology,
    base_load: &[f64],
    protection: &[Vec<(ArcId, f64)>],
    failed: &[usize],
) -> f64 {
    let mut load = base_load.to_vec();
    for &l in failed {
        for p in [2 * l, 2 * l + 1] {
            for &(a, f) in &protection[p] {
                load[a] += f;
            }
        }
    }
    load.iter()
        .enumerate()
        .map(|(a, &x)| x / topology.capacity(a / 2))
        .fold(0.0, f64::max)
}

/// Base and protection flow variables shared by both programs.
struct Flows {
    commodities: Vec<Commodity>,
    base: CommodityFlows,
    protection: Vec<CommodityFlows>,
}

impl Flows {
    fn add(lp: &mut LinearProgram, topology: &Topology, instance: &NetworkInstance) -> Self {
        let commodities = commodities(&instance.tm);
        let all = vec![true; topology.num_arcs()];
        let base = CommodityFlows::add(lp, topology, &commodities, &all, 0.0);
        let protection = (0..topology.num_arcs())
            .map(|p| {
                let arc = topology.arc(p);
                let alive = arc_alive(topology, &[arc.link]);
                let c = Commodity {
                    source: arc.tail,
                    sinks: vec![(arc.head, topology.capacity(arc.link))],
                };
                CommodityFlows::add(lp, topology, &[c], &alive, 0.0)
            })
            .collect();
        Self {
            commodities,
            base,
            protection,
        }
    }

    /// `load_x(e) - cap_e * u <= 0`.
    fn congestion_row(&self, lp: &mut LinearProgram, topology: &Topology, failed: &[usize], e: ArcId, u: Var) {
        let mut terms: Vec<(Var, f64)> = self.base.arc_terms(e).collect();
        for &l in failed {
            for p in [2 * l, 2 * l + 1] {
                terms.extend(self.protection[p].arc_terms(e));
            }
        }
        terms.push((u, -topology.capacity(e / 2)));
        lp.add_row(terms, Relation::Le, 0.0);
    }

    fn extract(
        &self,
        topology: &Topology,
        sol: &crate::lp::LpSolution,
    ) -> Result<(RoutingDecision, Vec<f64>, Vec<Vec<(ArcId, f64)>>), DesignError> {
        let base = decision_from_flows(topology, &self.commodities, &self.base, sol, Scheme::Mcf)?;
        let base_load = compute_loads(topology, &base).arc_load;
        let protection = self
            .protection
            .iter()
            .map(|f| {
                f.vars[0]
                    .iter()
                    .enumerate()
                    .filter_map(|(a, v)| v.map(|v| (a, sol[v].max(0.0))))
                    .filter(|&(_, x)| x > 0.0)
                    .collect()
            })
            .collect();
        Ok((base, base_load, protection))
    }
}

fn ids_to_index(scenarios: &[FailureScenario], ids: &[usize]) -> Result<BTreeSet<usize>, DesignError> {
    ids.iter()
        .map(|&id| {
            scenarios
                .iter()
                .position(|s| s.id == id)
                .ok_or(DesignError::UnknownScenario(id))
        })
        .collect()
}

/// Pruned program: minimize `U_C + (1/|E|) * sum of U'_s` with the
/// critical scenarios bounded by `U_C <= 1` and every single-link scenario
/// `s` bounded by its own `U'_s`.
///
/// A scenario that is both single and critical keeps one set of congestion
/// rows under `U'_s` plus the row `U'_s <= U_C`, which is equivalent to
/// writing its rows twice.
pub fn te_solve(
    instance: &NetworkInstance,
    scenarios: &[FailureScenario],
    critical: &[usize],
    options: &TeOptions,
) -> Result<TePlan, DesignError> {
    if scenarios.is_empty() {
        return Err(DesignError::NoScenarios);
    }
    let topology = &instance.topology;
    let crit = ids_to_index(scenarios, critical)?;
    let num_arcs = topology.num_arcs();
    let mut lp = LinearProgram::new();
    let flows = Flows::add(&mut lp, topology, instance);
    let u_c = lp.add_var(1.0, 0.0, 1.0);
    let weight = 1.0 / topology.num_links() as f64;
    let mut singles = Vec::new();
    let mut congestion_rows = 0;
    for (i, s) in scenarios.iter().enumerate() {
        if s.links.len() == 1 {
            let u = lp.add_nonneg(weight);
            for e in 0..num_arcs {
                flows.congestion_row(&mut lp, topology, &s.links, e, u);
            }
            congestion_rows += num_arcs;
            if crit.contains(&i) {
                lp.add_row([(u, 1.0), (u_c, -1.0)], Relation::Le, 0.0);
            }
            singles.push((s.id, u));
        } else if crit.contains(&i) {
            for e in 0..num_arcs {
                flows.congestion_row(&mut lp, topology, &s.links, e, u_c);
            }
            congestion_rows += num_arcs;
        }
    }
    let sol = match lp.solve_with(options.backend) {
        Ok(s) => s,
        Err(LpError::Infeasible) => {
            return Err(DesignError::Unprotectable {
                critical: crit.len(),
            })
        }
        Err(e) => return Err(e.into()),
    };
    let (base, base_load, protection) = flows.extract(topology, &sol)?;
    let mut critical: Vec<usize> = crit.iter().map(|&i| scenarios[i].id).collect();
    critical.sort_unstable();
    Ok(TePlan {
        base,
        base_load,
        protection,
        objective: sol.objective,
        u_critical: sol[u_c],
        u_single: singles.into_iter().map(|(id, u)| (id, sol[u])).collect(),
        critical,
        certification: Certification::Unchecked,
        worst_mlu: None,
        iterations: 0,
        lp_vars: lp.num_vars(),
        lp_rows: lp.num_rows(),
        congestion_rows,
        full_congestion_rows: num_arcs * scenarios.len(),
    })
}

/// Unpruned program: minimize the worst post-failure MLU `U` over every
/// scenario.
pub fn te_solve_full(
    instance: &NetworkInstance,
    scenarios: &[FailureScenario],
    options: &TeOptions,
) -> Result<TePlan, DesignError> {
    if scenarios.is_empty() {
        return Err(DesignError::NoScenarios);
    }
    let topology = &instance.topology;
    let num_arcs = topology.num_arcs();
    let mut lp = LinearProgram::new();
    let flows = Flows::add(&mut lp, topology, instance);
    let u = lp.add_nonneg(1.0);
    for s in scenarios {
        for e in 0..num_arcs {
            flows.congestion_row(&mut lp, topology, &s.links, e, u);
        }
    }
    let sol = lp.solve_with(options.backend)?;
    let (base, base_load, protection) = flows.extract(topology, &sol)?;
    Ok(TePlan {
        base,
        base_load,
        protection,
        objective: sol.objective,
        u_critical: sol[u],
        u_single: Vec::new(),
        critical: scenarios.iter().map(|s| s.id).collect(),
        certification: Certification::Unchecked,
        worst_mlu: None,
        iterations: 0,
        lp_vars: lp.num_vars(),
        lp_rows: lp.num_rows(),
        congestion_rows: num_arcs * scenarios.len(),
        full_congestion_rows: num_arcs * scenarios.len(),
    })
}

/// Checks `plan` on every scenario; scenarios above the target join the
/// critical set and the pruned program is solved again. Stops once nothing
/// violates or after `options.max_iterations` re-solves.
pub fn te_certify_and_iterate(
    instance: &NetworkInstance,
    mut plan: TePlan,
    scenarios: &[FailureScenario],
    options: &TeOptions,
) -> Result<TePlan, DesignError> {
    let topology = &instance.topology;
    let mut iterations = 0;
    loop {
        let mlus: Vec<f64> = scenarios
            .par_iter()
            .map(|s| plan.mlu_under(topology, &s.links))
            .collect();
        plan.worst_mlu = Some(mlus.iter().copied().fold(0.0, f64::max));
        plan.iterations = iterations;
        let bound = options.target.bound(&plan) + CONGESTION_TOL;
        let violations: Vec<(usize, f64)> = scenarios
            .iter()
            .zip(&mlus)
            .filter(|&(_, &u)| u > bound)
            .map(|(s, &u)| (s.id, u))
            .collect();
        if violations.is_empty() {
            plan.certification = Certification::CertifiedAll;
            return Ok(plan);
        }
        let fresh: Vec<usize> = violations
            .iter()
            .map(|v| v.0)
            .filter(|id| plan.critical.binary_search(id).is_err())
            .collect();
        if fresh.is_empty() || iterations >= options.max_iterations {
            plan.certification = Certification::CertifiedSubset { violations };
            return Ok(plan);
        }
        log::info!("te: {} violating scenarios added to the critical set", fresh.len());
        let mut critical = plan.critical.clone();
        critical.extend(fresh);
        critical.sort_unstable();
        plan = te_solve(instance, scenarios, &critical, options)?;
        iterations += 1;
    }
}

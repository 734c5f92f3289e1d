use rayon::prelude::*;

use super::{FailureError, FailureScenario, ImpactRecord, ImpactSource};
use crate::lp::{Backend, LinearProgram, Relation};
use crate::netmodel::{Demand, NetworkInstance, TrafficMatrix};
use crate::routing::mcf::{arc_alive, commodities, CommodityFlows};
use crate::routing::{
    compute_loads, rerouted_mlu, route, LinkLoadProfile, RoutingDecision, RoutingError, Scheme,
};

/// Failure-free routing that impacts are measured against.
#[derive(Clone, Debug)]
pub struct Baseline {
    pub decision: RoutingDecision,
    pub loads: LinkLoadProfile,
    pub mlu_base: f64,
}

impl Baseline {
    /// Routes `instance` with `scheme` on the intact topology. The MLU is the
    /// solver's optimum, so MCF impacts are exact ratios of two LP optima.
    pub fn compute(instance: &NetworkInstance, scheme: Scheme) -> Result<Self, FailureError> {
        let (decision, mlu) = route(instance, scheme, &[])?;
        let mut base = Self::from_decision(instance, decision)?;
        if !(mlu > 0.0) {
            return Err(FailureError::ZeroBaseMlu);
        }
        base.mlu_base = mlu;
        Ok(base)
    }

    /// Baseline of an externally supplied decision; the MLU is read off its
    /// link loads.
    pub fn from_decision(
        instance: &NetworkInstance,
        decision: RoutingDecision,
    ) -> Result<Self, FailureError> {
        if !decision.is_decomposed() {
            return Err(FailureError::NotDecomposed);
        }
        let loads = compute_loads(&instance.topology, &decision);
        if !(loads.mlu > 0.0) {
            return Err(FailureError::ZeroBaseMlu);
        }
        Ok(Self {
            mlu_base: loads.mlu,
            decision,
            loads,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.decision.scheme
    }
}

fn check_connected(instance: &NetworkInstance, scenario: &FailureScenario) -> Result<(), FailureError> {
    if instance.topology.is_connected_without(&scenario.links) {
        Ok(())
    } else {
        Err(FailureError::Disconnecting(scenario.id))
    }
}

/// Exact impact: MCF re-solves the min-MLU LP without the failed links, OSPF
/// recomputes shortest paths on the surviving graph.
pub fn impact_oracle(
    instance: &NetworkInstance,
    baseline: &Baseline,
    scenario: &FailureScenario,
    backend: Backend,
) -> Result<ImpactRecord, FailureError> {
    check_connected(instance, scenario)?;
    let scheme = baseline.scheme();
    let mlu_failed = rerouted_mlu(instance, scheme, &scenario.links, backend)?;
    let source = match scheme {
        Scheme::Mcf => ImpactSource::OracleMcf,
        Scheme::Ospf => ImpactSource::OracleOspf,
    };
    ImpactRecord::new(scenario.id, baseline.mlu_base, mlu_failed, source)
}

/// Heuristic impact: path flows that avoid the failed links stay in place
/// and only the blocked volume is re-optimized on top of them.
pub fn impact_simplified(
    instance: &NetworkInstance,
    baseline: &Baseline,
    scenario: &FailureScenario,
    backend: Backend,
) -> Result<ImpactRecord, FailureError> {
    check_connected(instance, scenario)?;
    let topology = &instance.topology;
    let mut background = vec![0.0; topology.num_arcs()];
    let mut blocked = Vec::new();
    for d in &baseline.decision.demands {
        let mut affected = 0.0;
        for p in &d.paths {
            let arcs = p.arcs(topology);
            if arcs.iter().any(|&a| scenario.contains(a / 2)) {
                affected += p.ratio;
            } else {
                for a in arcs {
                    background[a] += p.ratio * d.volume;
                }
            }
        }
        if affected > 0.0 {
            blocked.push(Demand {
                src: d.src,
                dst: d.dst,
                volume: affected * d.volume,
            });
        }
    }
    if blocked.is_empty() {
        return ImpactRecord::new(
            scenario.id,
            baseline.mlu_base,
            baseline.mlu_base,
            ImpactSource::Simplified,
        );
    }
    let tm = TrafficMatrix::new(topology.num_nodes(), blocked)
        .map_err(|e| RoutingError::InvalidDecision(e.to_string()))?;
    let alive = arc_alive(topology, &scenario.links);
    let mut lp = LinearProgram::new();
    let u = lp.add_nonneg(1.0);
    let flows = CommodityFlows::add(&mut lp, topology, &commodities(&tm), &alive, 0.0);
    for a in 0..topology.num_arcs() {
        if alive[a] {
            let cap = topology.capacity(a / 2);
            lp.add_row(
                flows.arc_terms(a).chain([(u, -cap)]),
                Relation::Le,
                -background[a],
            );
        }
    }
    let sol = lp.solve_with(backend).map_err(RoutingError::from)?;
    ImpactRecord::new(
        scenario.id,
        baseline.mlu_base,
        sol[u].max(0.0),
        ImpactSource::Simplified,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImpactMethod {
    Oracle,
    Simplified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepOptions {
    pub method: ImpactMethod,
    pub backend: Backend,
    pub parallel: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            method: ImpactMethod::Oracle,
            backend: Backend::Sparse,
            parallel: true,
        }
    }
}

/// Impact of every scenario, in scenario order. Parallel and sequential
/// sweeps give identical results.
pub fn sweep_impacts(
    instance: &NetworkInstance,
    baseline: &Baseline,
    scenarios: &[FailureScenario],
    options: &SweepOptions,
) -> Result<Vec<ImpactRecord>, FailureError> {
    let eval = |s: &FailureScenario| match options.method {
        ImpactMethod::Oracle => impact_oracle(instance, baseline, s, options.backend),
        ImpactMethod::Simplified => impact_simplified(instance, baseline, s, options.backend),
    };
    if options.parallel {
        scenarios.par_iter().map(eval).collect()
    } else {
        scenarios.iter().map(eval).collect()
    }
}

use rayon::prelude::*;
use serde::Serialize;

use super::{predict, DesignError, Predictor};
use crate::failure::{
    sweep_impacts, Baseline, FailureError, FailureScenario, ImpactMethod, ImpactRecord,
    SweepOptions,
};
use crate::lp::{Backend, LinearProgram, Relation, Var};
use crate::netmodel::NetworkInstance;
use crate::routing::mcf::{arc_alive, commodities, CommodityFlows};
use crate::routing::{min_mlu_value, Scheme};

/// Post-failure MLU above `1 + CONGESTION_TOL` counts as congested.
const CONGESTION_TOL: f64 = 1e-6;

/// Impact threshold above which a scenario must be constrained in the
/// upgrade problem: the worst scenario's impact over its MLU. Checked
/// against the equivalent `1 / MLU(no failure)`.
pub fn upgrade_threshold(records: &[ImpactRecord]) -> Result<f64, DesignError> {
    let worst = records
        .iter()
        .max_by(|a, b| a.impact.total_cmp(&b.impact))
        .ok_or(DesignError::NoScenarios)?;
    if !(worst.mlu_base > 0.0 && worst.mlu_failed > 0.0) {
        return Err(FailureError::ZeroBaseMlu.into());
    }
    let threshold = worst.impact / worst.mlu_failed;
    let expected = 1.0 / worst.mlu_base;
    if (threshold - expected).abs() > 1e-9 * expected {
        return Err(DesignError::ThresholdMismatch {
            threshold,
            expected,
        });
    }
    Ok(threshold)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UpgradeMode {
    /// Constrain only scenarios whose predicted impact reaches the threshold.
    Pruned,
    /// Constrain every scenario.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpgradeOptions {
    pub mode: UpgradeMode,
    pub backend: Backend,
    /// Re-check the plan on every scenario and re-solve with any congested
    /// scenario added, up to `max_iterations` solves.
    pub certify: bool,
    pub max_iterations: usize,
    /// Round every added capacity up to a multiple of this unit.
    pub rounding: Option<f64>,
}

impl Default for UpgradeOptions {
    fn default() -> Self {
        Self {
            mode: UpgradeMode::Pruned,
            backend: Backend::Sparse,
            certify: true,
            max_iterations: 10,
            rounding: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpgradePlan {
    /// Added capacity per link.
    pub added: Vec<f64>,
    pub cost: f64,
    /// Largest post-failure MLU of the upgraded network over the checked
    /// scenarios.
    pub worst_mlu: f64,
    pub threshold: f64,
    pub mode: UpgradeMode,
    /// Scenarios constrained in the final solve.
    pub constrained: Vec<usize>,
    /// Scenarios the worst-case MLU was checked on.
    pub checked: usize,
    pub total_scenarios: usize,
    pub solves: usize,
    pub certified: bool,
    pub lp_vars: usize,
    pub lp_rows: usize,
}

fn solve_upgrade_lp(
    instance: &NetworkInstance,
    constrained: &[&FailureScenario],
    backend: Backend,
) -> Result<(Vec<f64>, usize, usize), DesignError> {
    let topo = &instance.topology;
    let m = topo.num_links();
    if constrained.is_empty() {
        return Ok((vec![0.0; m], 0, 0));
    }
    let comms = commodities(&instance.tm);
    let mut lp = LinearProgram::new();
    let add: Vec<Var> = (0..m).map(|_| lp.add_nonneg(1.0)).collect();
    for x in constrained {
        let alive = arc_alive(topo, &x.links);
        let flows = CommodityFlows::add(&mut lp, topo, &comms, &alive, 0.0);
        for a in 0..topo.num_arcs() {
            if alive[a] {
                let l = a / 2;
                lp.add_row(
                    flows.arc_terms(a).chain([(add[l], -1.0)]),
                    Relation::Le,
                    topo.capacity(l),
                );
            }
        }
    }
    let sol = lp.solve_with(backend)?;
    let added = add.iter().map(|&v| sol[v].max(0.0)).collect();
    Ok((added, lp.num_vars(), lp.num_rows()))
}

fn upgraded(instance: &NetworkInstance, added: &[f64]) -> Result<NetworkInstance, DesignError> {
    let caps: Vec<f64> = instance
        .topology
        .links()
        .iter()
        .zip(added)
        .map(|(l, a)| l.capacity + a)
        .collect();
    Ok(instance.with_capacities(&caps)?)
}

/// Minimum-cost capacity additions keeping the min-MLU routing congestion
/// free (MLU <= 1) under every scenario.
///
/// In pruned mode only scenarios with predicted impact at or above
/// `1 / MLU(no failure)` enter the program; with the exact oracle this gives
/// the same optimum as constraining all of them. Certification re-checks the
/// plan on the full set and adds congested scenarios until none remain.
pub fn upgrade_optimize(
    instance: &NetworkInstance,
    scenarios: &[FailureScenario],
    predictor: &Predictor,
    options: &UpgradeOptions,
) -> Result<UpgradePlan, DesignError> {
    if scenarios.is_empty() {
        return Err(DesignError::NoScenarios);
    }
    let baseline = Baseline::compute(instance, Scheme::Mcf)?;
    let backend = options.backend;
    let mut threshold = 1.0 / baseline.mlu_base;

    let mut keep: Vec<bool> = match options.mode {
        UpgradeMode::Full => vec![true; scenarios.len()],
        UpgradeMode::Pruned => {
            let impacts: Vec<f64> = if *predictor == Predictor::Oracle(Scheme::Mcf) {
                let opts = SweepOptions {
                    method: ImpactMethod::Oracle,
                    backend,
                    parallel: true,
                };
                let records = sweep_impacts(instance, &baseline, scenarios, &opts)?;
                threshold = upgrade_threshold(&records)?;
                records.iter().map(|r| r.impact).collect()
            } else {
                predict(instance, &baseline, predictor, scenarios, backend)?
                    .iter()
                    .map(|e| e.impact)
                    .collect()
            };
            impacts
                .iter()
                .map(|&i| i >= threshold * (1.0 - 1e-9))
                .collect()
        }
    };

    let mut solves = 0;
    loop {
        let constrained: Vec<&FailureScenario> = scenarios
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(s, _)| s)
            .collect();
        let (mut added, lp_vars, lp_rows) = solve_upgrade_lp(instance, &constrained, backend)?;
        solves += 1;
        if let Some(unit) = options.rounding {
            for a in &mut added {
                *a = (*a / unit - 1e-9).ceil().max(0.0) * unit;
            }
        }
        let up = upgraded(instance, &added)?;
        let check_all = options.certify && options.mode == UpgradeMode::Pruned;
        let checked: Vec<usize> = (0..scenarios.len())
            .filter(|&i| check_all || keep[i])
            .collect();
        let mlus: Vec<f64> = checked
            .par_iter()
            .map(|&i| min_mlu_value(&up, &scenarios[i].links, backend))
            .collect::<Result<_, _>>()?;
        let worst_mlu = mlus.iter().copied().fold(0.0, f64::max);
        let violating: Vec<usize> = checked
            .iter()
            .zip(&mlus)
            .filter(|&(&i, &u)| !keep[i] && u > 1.0 + CONGESTION_TOL)
            .map(|(&i, _)| i)
            .collect();
        let done = violating.is_empty() || solves >= options.max_iterations;
        if done {
            return Ok(UpgradePlan {
                cost: added.iter().sum(),
                added,
                worst_mlu,
                threshold,
                mode: options.mode,
                constrained: constrained.iter().map(|s| s.id).collect(),
                checked: checked.len(),
                total_scenarios: scenarios.len(),
                solves,
                certified: check_all && violating.is_empty(),
                lp_vars,
                lp_rows,
            });
        }
        log::info!("upgrade: {} congested scenarios added", violating.len());
        for i in violating {
            keep[i] = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::failure::enumerate_failures;
    use crate::failure::ImpactSource;
    use crate::routing::tests::triangle_instance;

    #[test]
    fn threshold_examples() {
        let rec = |base, failed| ImpactRecord::new(0, base, failed, ImpactSource::OracleMcf).unwrap();
        let t = upgrade_threshold(&[rec(0.3, 0.6)]).unwrap();
        assert!((t - 10.0 / 3.0).abs() < 1e-12);
        let t = upgrade_threshold(&[rec(0.9, 1.8), rec(0.9, 1.2)]).unwrap();
        assert!((t - 1.0 / 0.9).abs() < 1e-12);
        let w = rec(0.5, 1.25);
        assert!((upgrade_threshold(&[w.clone()]).unwrap() - w.impact / 1.25).abs() < 1e-12);
        let mut bad = rec(0.3, 0.6);
        bad.mlu_base = 0.0;
        assert!(upgrade_threshold(&[bad]).is_err());
    }

    #[test]
    fn uncongested_triangle_needs_nothing() {
        let inst = triangle_instance(0.6);
        let scen = enumerate_failures(&inst.topology, 2);
        let plan =
            upgrade_optimize(&inst, &scen, &Predictor::Oracle(Scheme::Mcf), &Default::default())
                .unwrap();
        assert!(plan.constrained.is_empty());
        assert_eq!(plan.cost, 0.0);
        assert!(plan.certified);
    }

    #[test]
    fn congested_triangle_costs_2_4() {
        let inst = triangle_instance(1.8);
        let scen = enumerate_failures(&inst.topology, 2);
        let plan =
            upgrade_optimize(&inst, &scen, &Predictor::Oracle(Scheme::Mcf), &Default::default())
                .unwrap();
        assert_eq!(plan.constrained, vec![0, 1, 2]);
        assert!((plan.cost - 2.4).abs() < 1e-9, "{}", plan.cost);
        for a in &plan.added {
            assert!((a - 0.8).abs() < 1e-9);
        }
        assert!(plan.worst_mlu <= 1.0 + 1e-9);
        let full = upgrade_optimize(
            &inst,
            &scen,
            &Predictor::Simplified,
            &UpgradeOptions {
                mode: UpgradeMode::Full,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((full.cost - plan.cost).abs() < 1e-9);
    }

    #[test]
    fn rounding_rounds_up() {
        let inst = triangle_instance(1.8);
        let scen = enumerate_failures(&inst.topology, 1);
        let plan = upgrade_optimize(
            &inst,
            &scen,
            &Predictor::Oracle(Scheme::Mcf),
            &UpgradeOptions {
                rounding: Some(0.5),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(plan.added, vec![1.0, 1.0, 1.0]);
        assert_eq!(plan.cost, 3.0);
    }
}

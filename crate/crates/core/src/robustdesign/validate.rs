use serde::Serialize;

use super::{predict, DesignError, Estimate, Predictor};
use crate::failure::{
    sweep_impacts, Baseline, FailureScenario, ImpactMethod, ImpactRecord, SweepOptions,
    SIGNIFICANT_RATIO,
};
use crate::lp::Backend;
use crate::netmodel::NetworkInstance;

/// Outcome of a worst-case search over a failure set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub worst_scenario_id: usize,
    pub worst_links: Vec<usize>,
    pub worst_mlu: f64,
    pub worst_impact: f64,
    pub mlu_base: f64,
    pub predicted_worst_id: usize,
    pub predicted_max_impact: f64,
    /// Scenarios re-evaluated exactly, highest predicted impact first.
    pub verified: Vec<usize>,
    pub total_scenarios: usize,
    /// Exact evaluations needed by the pruned search vs full enumeration.
    pub pruned_evaluations: usize,
    pub full_evaluations: usize,
}

/// Ranks `scenarios` with `predictor`, re-evaluates the top candidates with
/// the exact oracle of the baseline's scheme and reports the worst one.
///
/// Candidates are the top `k` by predicted impact, or when `k` is `None`
/// every scenario whose predicted impact is at least 0.8 of the predicted
/// maximum.
pub fn robust_validate(
    instance: &NetworkInstance,
    baseline: &Baseline,
    scenarios: &[FailureScenario],
    predictor: &Predictor,
    k: Option<usize>,
    backend: Backend,
) -> Result<ValidationReport, DesignError> {
    if scenarios.is_empty() {
        return Err(DesignError::NoScenarios);
    }
    let exact = matches!(predictor, Predictor::Oracle(s) if *s == baseline.scheme());
    let opts = |parallel| SweepOptions {
        method: ImpactMethod::Oracle,
        backend,
        parallel,
    };
    let (estimates, exact_records) = if exact {
        let records = sweep_impacts(instance, baseline, scenarios, &opts(true))?;
        let est = records
            .iter()
            .map(|r| Estimate {
                scenario_id: r.scenario_id,
                impact: r.impact,
                critical_prob: None,
            })
            .collect();
        (est, Some(records))
    } else {
        (predict(instance, baseline, predictor, scenarios, backend)?, None)
    };

    let mut order: Vec<usize> = (0..scenarios.len()).collect();
    order.sort_by(|&a, &b| {
        estimates[b]
            .impact
            .total_cmp(&estimates[a].impact)
            .then(scenarios[a].id.cmp(&scenarios[b].id))
    });
    let predicted_max = estimates[order[0]].impact;
    let take = match k {
        Some(k) => k.clamp(1, order.len()),
        None => order
            .iter()
            .take_while(|&&i| estimates[i].impact >= SIGNIFICANT_RATIO * predicted_max)
            .count()
            .max(1),
    };
    let chosen = &order[..take];

    let verified: Vec<ImpactRecord> = match &exact_records {
        Some(all) => chosen.iter().map(|&i| all[i].clone()).collect(),
        None => {
            let subset: Vec<FailureScenario> =
                chosen.iter().map(|&i| scenarios[i].clone()).collect();
            sweep_impacts(instance, baseline, &subset, &opts(true))?
        }
    };
    let (wi, worst) = verified
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            a.impact
                .total_cmp(&b.impact)
                .then(b.scenario_id.cmp(&a.scenario_id))
        })
        .expect("at least one candidate");
    Ok(ValidationReport {
        worst_scenario_id: worst.scenario_id,
        worst_links: scenarios[chosen[wi]].links.clone(),
        worst_mlu: worst.mlu_failed,
        worst_impact: worst.impact,
        mlu_base: worst.mlu_base,
        predicted_worst_id: estimates[order[0]].scenario_id,
        predicted_max_impact: predicted_max,
        verified: chosen.iter().map(|&i| scenarios[i].id).collect(),
        total_scenarios: scenarios.len(),
        pruned_evaluations: if exact { scenarios.len() } else { take },
        full_evaluations: scenarios.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::failure::{enumerate_failures, Prediction};
    use crate::graphenc::{format_predictions_csv, parse_predictions_csv};
    use crate::routing::tests::triangle_instance;
    use crate::routing::Scheme;

    #[test]
    fn triangle_oracle_validation() {
        let inst = triangle_instance(0.6);
        let base = Baseline::compute(&inst, Scheme::Mcf).unwrap();
        let scen = enumerate_failures(&inst.topology, 2);
        let r = robust_validate(&inst, &base, &scen, &Predictor::Oracle(Scheme::Mcf), None, Backend::Sparse)
            .unwrap();
        assert!((r.worst_mlu - 0.6).abs() < 1e-9);
        assert!((r.worst_impact - 2.0).abs() < 1e-9);
        assert_eq!(r.total_scenarios, 3);
    }

    #[test]
    fn perfect_prediction_file_finds_the_worst() {
        let inst = triangle_instance(0.6);
        let base = Baseline::compute(&inst, Scheme::Ospf).unwrap();
        let scen = enumerate_failures(&inst.topology, 2);
        let exact = robust_validate(&inst, &base, &scen, &Predictor::Oracle(Scheme::Ospf), None, Backend::Sparse)
            .unwrap();
        let preds: Vec<Prediction> = scen
            .iter()
            .map(|s| Prediction {
                scenario_id: s.id,
                impact_pred: if s.id == exact.worst_scenario_id { 5.0 } else { 1.0 },
                critical_prob: 0.5,
            })
            .collect();
        let table = parse_predictions_csv(&format_predictions_csv(&preds)).unwrap();
        let r = robust_validate(&inst, &base, &scen, &Predictor::File(table), Some(1), Backend::Sparse)
            .unwrap();
        assert_eq!(r.worst_mlu, exact.worst_mlu);
        assert_eq!(r.pruned_evaluations, 1);
    }

    #[test]
    fn empty_scenario_set_is_an_error() {
        let inst = triangle_instance(0.6);
        let base = Baseline::compute(&inst, Scheme::Mcf).unwrap();
        assert!(matches!(
            robust_validate(&inst, &base, &[], &Predictor::Simplified, None, Backend::Sparse),
            Err(DesignError::NoScenarios)
        ));
    }
}

//! Robust network design over critical failure sets: worst-case validation,
//! capacity upgrade planning and link-protection traffic engineering.

mod te;
mod upgrade;
mod validate;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use te::{
    post_failure_mlu, te_certify_and_iterate, te_solve, te_solve_full, Certification, CertifyTarget,
    TeOptions, TePlan,
};
pub use upgrade::{
    upgrade_optimize, upgrade_threshold, UpgradeMode, UpgradeOptions, UpgradePlan,
};
pub use validate::{robust_validate, ValidationReport};

use crate::failure::{
    sweep_impacts, Baseline, FailureError, FailureScenario, ImpactMethod, SweepOptions,
};
use crate::graphenc::{GraphEncError, PredictionTable};
use crate::lp::{Backend, LpError};
use crate::netmodel::{NetModelError, NetworkInstance};
use crate::routing::{RoutingError, Scheme};

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("no failure scenarios given")]
    NoScenarios,
    #[error("scenario {0} is not in the scenario set")]
    UnknownScenario(usize),
    #[error("threshold {threshold} differs from 1/MLU(no failure) = {expected}")]
    ThresholdMismatch { threshold: f64, expected: f64 },
    #[error("critical set of {critical} scenarios cannot be protected without congestion")]
    Unprotectable { critical: usize },
    #[error(transparent)]
    Failure(#[from] FailureError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Predictions(#[from] GraphEncError),
    #[error(transparent)]
    NetModel(#[from] NetModelError),
}

/// Source of per-scenario impact estimates.
#[derive(Clone, Debug, PartialEq)]
pub enum Predictor {
    /// Exact impact under the given routing scheme.
    Oracle(Scheme),
    /// Reroute only the blocked traffic on top of the frozen base routing.
    Simplified,
    /// Impacts read from a predictions file.
    File(PredictionTable),
}

impl fmt::Display for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predictor::Oracle(s) => write!(f, "oracle-{s}"),
            Predictor::Simplified => f.write_str("simplified"),
            Predictor::File(_) => f.write_str("file"),
        }
    }
}

/// Predictor kind parsed from `oracle`, `oracle-mcf`, `oracle-ospf`,
/// `simplified` or `file:<path>`; the file is loaded by the caller.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PredictorSpec {
    Oracle(Option<Scheme>),
    Simplified,
    File(String),
}

impl FromStr for PredictorSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(PredictorSpec::Oracle(None)),
            "oracle-mcf" => Ok(PredictorSpec::Oracle(Some(Scheme::Mcf))),
            "oracle-ospf" => Ok(PredictorSpec::Oracle(Some(Scheme::Ospf))),
            "simplified" => Ok(PredictorSpec::Simplified),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(PredictorSpec::File(p.to_string())),
                _ => Err(format!(
                    "unknown predictor `{s}` (expected oracle|oracle-mcf|oracle-ospf|simplified|file:<path>)"
                )),
            },
        }
    }
}

/// Impact estimate of one scenario.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub scenario_id: usize,
    pub impact: f64,
    /// Classifier output, when the predictor provides one.
    pub critical_prob: Option<f64>,
}

/// Runs `predictor` on every scenario, in scenario order. `baseline` is
/// reused when the predictor needs a base routing of the same scheme.
pub fn predict(
    instance: &NetworkInstance,
    baseline: &Baseline,
    predictor: &Predictor,
    scenarios: &[FailureScenario],
    backend: Backend,
) -> Result<Vec<Estimate>, DesignError> {
    let sweep = |base: &Baseline, method| -> Result<Vec<Estimate>, DesignError> {
        let opts = SweepOptions {
            method,
            backend,
            parallel: true,
        };
        Ok(sweep_impacts(instance, base, scenarios, &opts)?
            .into_iter()
            .map(|r| Estimate {
                scenario_id: r.scenario_id,
                impact: r.impact,
                critical_prob: None,
            })
            .collect())
    };
    match predictor {
        Predictor::Oracle(scheme) if *scheme == baseline.scheme() => {
            sweep(baseline, ImpactMethod::Oracle)
        }
        Predictor::Oracle(scheme) => {
            let other = Baseline::compute(instance, *scheme)?;
            sweep(&other, ImpactMethod::Oracle)
        }
        Predictor::Simplified => sweep(baseline, ImpactMethod::Simplified),
        Predictor::File(table) => Ok(table
            .select(scenarios.iter().map(|s| s.id))?
            .into_iter()
            .map(|p| Estimate {
                scenario_id: p.scenario_id,
                impact: p.impact_pred,
                critical_prob: Some(p.critical_prob),
            })
            .collect()),
    }
}

//! Failure scenarios, their impact on a routed network, and criticality
//! classification.

mod impact;
mod table;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use impact::{
    impact_oracle, impact_simplified, sweep_impacts, Baseline, ImpactMethod, SweepOptions,
};
pub use table::{format_impact_csv, parse_impact_csv, ImpactRow};

use crate::netmodel::{LinkId, Topology};
use crate::routing::RoutingError;

#[derive(Debug, Error)]
pub enum FailureError {
    #[error("failure-free MLU is zero; impact is undefined")]
    ZeroBaseMlu,
    #[error("scenario {0} disconnects the network")]
    Disconnecting(usize),
    #[error("base routing decision is not path-decomposed")]
    NotDecomposed,
    #[error("empty impact set")]
    Empty,
    #[error("impact table: {0}")]
    Table(String),
    #[error(transparent)]
    Routing(#[from] RoutingError),
}

/// A set of simultaneously failed links.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FailureScenario {
    pub id: usize,
    /// Sorted, duplicate-free.
    pub links: Vec<LinkId>,
}

impl FailureScenario {
    pub fn new(id: usize, mut links: Vec<LinkId>) -> Self {
        links.sort_unstable();
        links.dedup();
        Self { id, links }
    }

    pub fn contains(&self, link: LinkId) -> bool {
        self.links.binary_search(&link).is_ok()
    }
}

/// All link subsets of size `1..=f` whose removal keeps `topology`
/// connected. Ordered by size, then lexicographically; ids are positions in
/// that order.
pub fn enumerate_failures(topology: &Topology, f: usize) -> Vec<FailureScenario> {
    let m = topology.num_links();
    let mut out = Vec::new();
    for k in 1..=f.min(m) {
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            if topology.is_connected_without(&combo) {
                out.push(FailureScenario {
                    id: out.len(),
                    links: combo.clone(),
                });
            }
            // next combination in lexicographic order
            let Some(i) = (0..k).rev().find(|&i| combo[i] != i + m - k) else {
                break;
            };
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    out
}

/// Where an impact value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImpactSource {
    OracleMcf,
    OracleOspf,
    Simplified,
    Predicted,
}

impl fmt::Display for ImpactSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImpactSource::OracleMcf => "oracle-mcf",
            ImpactSource::OracleOspf => "oracle-ospf",
            ImpactSource::Simplified => "simplified",
            ImpactSource::Predicted => "predicted",
        })
    }
}

impl FromStr for ImpactSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle-mcf" => Ok(ImpactSource::OracleMcf),
            "oracle-ospf" => Ok(ImpactSource::OracleOspf),
            "simplified" => Ok(ImpactSource::Simplified),
            "predicted" => Ok(ImpactSource::Predicted),
            other => Err(format!("unknown impact source `{other}`")),
        }
    }
}

/// Measured or predicted impact of one scenario: post-failure MLU over
/// failure-free MLU.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpactRecord {
    pub scenario_id: usize,
    pub mlu_base: f64,
    pub mlu_failed: f64,
    pub impact: f64,
    pub source: ImpactSource,
}

impl ImpactRecord {
    pub fn new(
        scenario_id: usize,
        mlu_base: f64,
        mlu_failed: f64,
        source: ImpactSource,
    ) -> Result<Self, FailureError> {
        if !(mlu_base > 0.0) {
            return Err(FailureError::ZeroBaseMlu);
        }
        Ok(Self {
            scenario_id,
            mlu_base,
            mlu_failed,
            impact: mlu_failed / mlu_base,
            source,
        })
    }
}

pub const WORST_RATIO: f64 = 0.95;
pub const SIGNIFICANT_RATIO: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criticality {
    Worst,
    Significant,
    Normal,
}

impl Criticality {
    pub fn from_ratio(ratio: f64) -> Self {
        if ratio >= WORST_RATIO {
            Criticality::Worst
        } else if ratio >= SIGNIFICANT_RATIO {
            Criticality::Significant
        } else {
            Criticality::Normal
        }
    }

    pub fn is_critical(self) -> bool {
        self != Criticality::Normal
    }
}

impl fmt::Display for Criticality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criticality::Worst => "Worst",
            Criticality::Significant => "Significant",
            Criticality::Normal => "Normal",
        })
    }
}

impl FromStr for Criticality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "worst" => Ok(Criticality::Worst),
            "significant" => Ok(Criticality::Significant),
            "normal" => Ok(Criticality::Normal),
            other => Err(format!("unknown criticality `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalityLabel {
    pub class: Criticality,
    /// Impact over the largest impact of the set.
    pub ratio: f64,
}

/// Labels each impact by its ratio to the largest impact in the slice.
pub fn classify_impacts(impacts: &[f64]) -> Result<Vec<CriticalityLabel>, FailureError> {
    let max = impacts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if impacts.is_empty() {
        return Err(FailureError::Empty);
    }
    Ok(impacts
        .iter()
        .map(|&i| {
            let ratio = if max > 0.0 { i / max } else { 1.0 };
            CriticalityLabel {
                class: Criticality::from_ratio(ratio),
                ratio,
            }
        })
        .collect())
}

pub fn classify(records: &[ImpactRecord]) -> Result<Vec<CriticalityLabel>, FailureError> {
    let impacts: Vec<f64> = records.iter().map(|r| r.impact).collect();
    classify_impacts(&impacts)
}

/// Predicted impact and criticality probability of one scenario.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub scenario_id: usize,
    pub impact_pred: f64,
    pub critical_prob: f64,
}

/// Probability at or above which a predicted scenario counts as critical.
pub const CRITICAL_PROB_THRESHOLD: f64 = 0.5;

/// Critical scenarios ranked by descending impact.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CriticalSet {
    pub scenario_ids: Vec<usize>,
    /// Size of the population the set was selected from.
    pub population: usize,
}

impl CriticalSet {
    pub fn len(&self) -> usize {
        self.scenario_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenario_ids.is_empty()
    }

    pub fn fraction(&self) -> f64 {
        if self.population == 0 {
            0.0
        } else {
            self.len() as f64 / self.population as f64
        }
    }

    pub fn contains(&self, id: usize) -> bool {
        self.scenario_ids.contains(&id)
    }
}

/// Worst and Significant scenarios, highest impact first (ties by id).
pub fn select_critical(records: &[ImpactRecord], labels: &[CriticalityLabel]) -> CriticalSet {
    assert_eq!(records.len(), labels.len(), "one label per record");
    let mut picked: Vec<(usize, f64)> = records
        .iter()
        .zip(labels)
        .filter(|(_, l)| l.class.is_critical())
        .map(|(r, _)| (r.scenario_id, r.impact))
        .collect();
    picked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    CriticalSet {
        scenario_ids: picked.into_iter().map(|p| p.0).collect(),
        population: records.len(),
    }
}

/// Scenarios the classifier marks critical, ranked by predicted impact.
pub fn select_critical_predicted(predictions: &[Prediction]) -> CriticalSet {
    let mut picked: Vec<&Prediction> = predictions
        .iter()
        .filter(|p| p.critical_prob >= CRITICAL_PROB_THRESHOLD)
        .collect();
    picked.sort_by(|a, b| {
        b.impact_pred
            .total_cmp(&a.impact_pred)
            .then(a.scenario_id.cmp(&b.scenario_id))
    });
    CriticalSet {
        scenario_ids: picked.into_iter().map(|p| p.scenario_id).collect(),
        population: predictions.len(),
    }
}

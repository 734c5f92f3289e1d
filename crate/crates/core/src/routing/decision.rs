use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::RoutingError;
use crate::netmodel::{ArcId, LinkId, Topology};

/// Routing scheme that produced a decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Mcf,
    Ospf,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Mcf => "mcf",
            Scheme::Ospf => "ospf",
        })
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mcf" => Ok(Scheme::Mcf),
            "ospf" => Ok(Scheme::Ospf),
            other => Err(format!("unknown routing scheme `{other}` (expected mcf|ospf)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathFlow {
    pub nodes: Vec<usize>,
    pub ratio: f64,
}

impl PathFlow {
    /// Arcs along the path. Panics if a hop is not a link of `topology`.
    pub fn arcs(&self, topology: &Topology) -> Vec<ArcId> {
        self.nodes
            .windows(2)
            .map(|w| {
                topology
                    .arc_between(w[0], w[1])
                    .expect("path hop is not a topology link")
            })
            .collect()
    }

    pub fn links(&self, topology: &Topology) -> Vec<LinkId> {
        self.arcs(topology).into_iter().map(|a| a / 2).collect()
    }
}

/// Routing of a single origin-destination demand: link-level flow amounts
/// (traffic volume units) and, once decomposed, the path split.
#[derive(Clone, Debug, PartialEq)]
pub struct RoutedDemand {
    pub src: usize,
    pub dst: usize,
    pub volume: f64,
    /// `(arc, flow)` pairs sorted by arc id, zero entries omitted.
    pub arc_flow: Vec<(ArcId, f64)>,
    /// Path decomposition; empty until decomposed.
    pub paths: Vec<PathFlow>,
}

impl RoutedDemand {
    /// Net outflow per node of the link-level flow.
    pub fn net_outflow(&self, topology: &Topology) -> Vec<f64> {
        let mut net = vec![0.0; topology.num_nodes()];
        for &(a, f) in &self.arc_flow {
            let arc = topology.arc(a);
            net[arc.tail] += f;
            net[arc.head] -= f;
        }
        net
    }
}

/// Per-demand routing plus the scheme tag.
#[derive(Clone, Debug, PartialEq)]
pub struct RoutingDecision {
    pub scheme: Scheme,
    pub demands: Vec<RoutedDemand>,
}

impl RoutingDecision {
    pub fn empty(scheme: Scheme) -> Self {
        Self {
            scheme,
            demands: Vec::new(),
        }
    }

    /// True when every demand carries a path split.
    pub fn is_decomposed(&self) -> bool {
        self.demands.iter().all(|d| !d.paths.is_empty())
    }

    pub fn num_paths(&self) -> usize {
        self.demands.iter().map(|d| d.paths.len()).sum()
    }

    /// Builds a decision from path splits, deriving the link-level flows.
    pub fn from_paths(
        topology: &Topology,
        scheme: Scheme,
        demands: Vec<(usize, usize, f64, Vec<PathFlow>)>,
    ) -> Result<Self, RoutingError> {
        let mut out = Vec::with_capacity(demands.len());
        for (src, dst, volume, paths) in demands {
            let mut flow: BTreeMap<ArcId, f64> = BTreeMap::new();
            for p in &paths {
                if p.nodes.first() != Some(&src) || p.nodes.last() != Some(&dst) {
                    return Err(RoutingError::InvalidDecision(format!(
                        "path {:?} does not connect {src} to {dst}",
                        p.nodes
                    )));
                }
                for w in p.nodes.windows(2) {
                    let arc = topology.arc_between(w[0], w[1]).ok_or_else(|| {
                        RoutingError::InvalidDecision(format!("no link {}-{}", w[0], w[1]))
                    })?;
                    *flow.entry(arc).or_insert(0.0) += p.ratio * volume;
                }
            }
            let ratio_sum: f64 = paths.iter().map(|p| p.ratio).sum();
            if volume > 0.0 && (ratio_sum - 1.0).abs() > 1e-6 {
                return Err(RoutingError::InvalidDecision(format!(
                    "split ratios of demand {src}->{dst} sum to {ratio_sum}"
                )));
            }
            out.push(RoutedDemand {
                src,
                dst,
                volume,
                arc_flow: flow.into_iter().filter(|&(_, f)| f != 0.0).collect(),
                paths,
            });
        }
        Ok(Self {
            scheme,
            demands: out,
        })
    }

    pub fn to_json(&self) -> String {
        let doc = DecisionJson {
            scheme: self.scheme,
            demands: self
                .demands
                .iter()
                .map(|d| DemandJson {
                    src: d.src,
                    dst: d.dst,
                    volume: d.volume,
                    paths: d.paths.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("decision serializes")
    }

    /// Parses the JSON interchange format; link-level flows are rebuilt from
    /// the paths on `topology`.
    pub fn from_json(topology: &Topology, text: &str) -> Result<Self, RoutingError> {
        let doc: DecisionJson = serde_json::from_str(text)
            .map_err(|e| RoutingError::InvalidDecision(format!("routing JSON: {e}")))?;
        Self::from_paths(
            topology,
            doc.scheme,
            doc.demands
                .into_iter()
                .map(|d| (d.src, d.dst, d.volume, d.paths))
                .collect(),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct DecisionJson {
    scheme: Scheme,
    demands: Vec<DemandJson>,
}

#[derive(Serialize, Deserialize)]
struct DemandJson {
    src: usize,
    dst: usize,
    volume: f64,
    paths: Vec<PathFlow>,
}

/// Loads and utilizations induced by a decision.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinkLoadProfile {
    /// Load per directed arc.
    pub arc_load: Vec<f64>,
    /// Arc load divided by link capacity.
    pub arc_utilization: Vec<f64>,
    /// Per link: the larger utilization of its two directions.
    pub link_utilization: Vec<f64>,
    /// Per link: traffic crossing it in either direction.
    pub link_volume: Vec<f64>,
    pub mlu: f64,
}

pub fn compute_loads(topology: &Topology, decision: &RoutingDecision) -> LinkLoadProfile {
    let mut arc_load = vec![0.0; topology.num_arcs()];
    for d in &decision.demands {
        for &(a, f) in &d.arc_flow {
            arc_load[a] += f;
        }
    }
    loads_from_arc_load(topology, arc_load)
}

pub(crate) fn loads_from_arc_load(topology: &Topology, arc_load: Vec<f64>) -> LinkLoadProfile {
    let arc_utilization: Vec<f64> = arc_load
        .iter()
        .enumerate()
        .map(|(a, &l)| l / topology.capacity(a / 2))
        .collect();
    let link_utilization: Vec<f64> = arc_utilization
        .chunks(2)
        .map(|c| c[0].max(c[1]))
        .collect();
    let link_volume: Vec<f64> = arc_load.chunks(2).map(|c| c[0] + c[1]).collect();
    let mlu = link_utilization.iter().copied().fold(0.0, f64::max);
    LinkLoadProfile {
        arc_load,
        arc_utilization,
        link_utilization,
        link_volume,
        mlu,
    }
}

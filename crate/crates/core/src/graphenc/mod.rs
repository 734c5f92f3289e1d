//! Heterogeneous input graph for the learned impact predictor, plus the
//! file formats exchanged with it (graph JSON, label CSV, predictions CSV).
//!
//! Node ids are dense: links first, then flows, paths and failures, each in
//! canonical order. Every feature vector has [`FEATURE_DIM`] slots with the
//! node-type one-hot in the last four.

mod files;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use files::{
    format_label_csv, format_predictions_csv, parse_predictions_csv, PredictionTable,
};

use crate::failure::FailureScenario;
use crate::netmodel::NetworkInstance;
use crate::routing::{compute_loads, RoutingDecision};

pub const FEATURE_DIM: usize = 16;
/// First slot of the node-type one-hot.
pub const TYPE_SLOT: usize = 12;

#[derive(Debug, Error)]
pub enum GraphEncError {
    #[error("routing decision is not path-decomposed")]
    NotDecomposed,
    #[error("scenario {0} references a link outside the topology")]
    BadScenario(usize),
    #[error("graph schema: {0}")]
    Schema(String),
    #[error("predictions line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate prediction for scenario {0}")]
    DuplicatePrediction(usize),
    #[error("no prediction for scenario {0}")]
    MissingPrediction(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeType {
    Link,
    Flow,
    Path,
    Failure,
}

impl NodeType {
    pub fn slot(self) -> usize {
        TYPE_SLOT
            + match self {
                NodeType::Link => 0,
                NodeType::Flow => 1,
                NodeType::Path => 2,
                NodeType::Failure => 3,
            }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeType {
    /// Between links sharing an endpoint; stored once per pair, lower id first.
    LinkLink,
    FlowPath,
    PathLink,
    LinkFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: usize,
    #[serde(rename = "type")]
    pub node_type: NodeType,
    pub feat: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GraphEdge {
    pub s: usize,
    pub d: usize,
    pub etype: EdgeType,
}

/// Maps a failure node back to its scenario.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioRef {
    pub fid: usize,
    pub scenario_id: usize,
    pub links: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    pub scenarios: Vec<ScenarioRef>,
}

fn one_hot(t: NodeType) -> Vec<f64> {
    let mut f = vec![0.0; FEATURE_DIM];
    f[t.slot()] = 1.0;
    f
}

/// Node and edge structure; features hold only the type one-hot until
/// [`encode_features`] runs.
pub fn build_input_graph(
    instance: &NetworkInstance,
    decision: &RoutingDecision,
    scenarios: &[FailureScenario],
) -> Result<InputGraph, GraphEncError> {
    if !decision.is_decomposed() {
        return Err(GraphEncError::NotDecomposed);
    }
    let topo = &instance.topology;
    let m = topo.num_links();
    let mut nodes = Vec::new();
    let push = |nodes: &mut Vec<GraphNode>, t| {
        let id = nodes.len();
        nodes.push(GraphNode {
            id,
            node_type: t,
            feat: one_hot(t),
        });
        id
    };
    for _ in 0..m {
        push(&mut nodes, NodeType::Link);
    }

    let mut edges = Vec::new();
    let mut incident = vec![Vec::new(); topo.num_nodes()];
    for (l, link) in topo.links().iter().enumerate() {
        incident[link.u].push(l);
        incident[link.v].push(l);
    }
    let mut pairs = Vec::new();
    for ls in &incident {
        for (i, &a) in ls.iter().enumerate() {
            for &b in &ls[i + 1..] {
                pairs.push((a.min(b), a.max(b)));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    edges.extend(pairs.into_iter().map(|(s, d)| GraphEdge {
        s,
        d,
        etype: EdgeType::LinkLink,
    }));

    let flow_ids: Vec<usize> = decision
        .demands
        .iter()
        .map(|_| push(&mut nodes, NodeType::Flow))
        .collect();
    for (d, &fid) in decision.demands.iter().zip(&flow_ids) {
        for p in &d.paths {
            let pid = push(&mut nodes, NodeType::Path);
            edges.push(GraphEdge {
                s: fid,
                d: pid,
                etype: EdgeType::FlowPath,
            });
            for l in p.links(topo) {
                edges.push(GraphEdge {
                    s: pid,
                    d: l,
                    etype: EdgeType::PathLink,
                });
            }
        }
    }

    let mut refs = Vec::with_capacity(scenarios.len());
    for s in scenarios {
        if s.links.iter().any(|&l| l >= m) {
            return Err(GraphEncError::BadScenario(s.id));
        }
        let fid = push(&mut nodes, NodeType::Failure);
        for &l in &s.links {
            edges.push(GraphEdge {
                s: l,
                d: fid,
                etype: EdgeType::LinkFailure,
            });
        }
        refs.push(ScenarioRef {
            fid,
            scenario_id: s.id,
            links: s.links.clone(),
        });
    }
    Ok(InputGraph {
        nodes,
        edges,
        scenarios: refs,
    })
}

fn normalized(x: f64, max: f64) -> f64 {
    if max > 0.0 {
        x / max
    } else {
        0.0
    }
}

/// Fills the populated feature slots of a graph built from the same
/// instance and decision:
///
/// * Link: utilization, capacity and traversed volume, each over its maximum
/// * Flow: demand over the largest demand
/// * Path: split ratio
/// * Failure: nothing beyond the one-hot
pub fn encode_features(
    instance: &NetworkInstance,
    decision: &RoutingDecision,
    mut graph: InputGraph,
) -> InputGraph {
    let topo = &instance.topology;
    let loads = compute_loads(topo, decision);
    let fmax = |xs: &mut dyn Iterator<Item = f64>| xs.fold(0.0, f64::max);
    let max_util = fmax(&mut loads.link_utilization.iter().copied());
    let max_cap = fmax(&mut topo.links().iter().map(|l| l.capacity));
    let max_vol = fmax(&mut loads.link_volume.iter().copied());
    let max_dem = fmax(&mut decision.demands.iter().map(|d| d.volume));

    let m = topo.num_links();
    for l in 0..m {
        let f = &mut graph.nodes[l].feat;
        f[0] = normalized(loads.link_utilization[l], max_util);
        f[1] = normalized(topo.capacity(l), max_cap);
        f[2] = normalized(loads.link_volume[l], max_vol);
    }
    let mut next = m;
    for d in &decision.demands {
        graph.nodes[next].feat[0] = normalized(d.volume, max_dem);
        next += 1;
    }
    for d in &decision.demands {
        for p in &d.paths {
            graph.nodes[next].feat[0] = p.ratio;
            next += 1;
        }
    }
    graph
}

/// [`build_input_graph`] followed by [`encode_features`].
pub fn encode(
    instance: &NetworkInstance,
    decision: &RoutingDecision,
    scenarios: &[FailureScenario],
) -> Result<InputGraph, GraphEncError> {
    let g = build_input_graph(instance, decision, scenarios)?;
    Ok(encode_features(instance, decision, g))
}

impl InputGraph {
    pub fn count_nodes(&self, t: NodeType) -> usize {
        self.nodes.iter().filter(|n| n.node_type == t).count()
    }

    pub fn count_edges(&self, t: EdgeType) -> usize {
        self.edges.iter().filter(|e| e.etype == t).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serializes")
    }

    /// Parses and validates the graph JSON.
    pub fn from_json(text: &str) -> Result<Self, GraphEncError> {
        let g: InputGraph =
            serde_json::from_str(text).map_err(|e| GraphEncError::Schema(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GraphEncError> {
        let bad = |m: String| Err(GraphEncError::Schema(m));
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return bad(format!("node at position {i} has id {}", n.id));
            }
            if n.feat.len() != FEATURE_DIM {
                return bad(format!("node {i} has {} features", n.feat.len()));
            }
            if n.feat.iter().any(|x| !x.is_finite()) {
                return bad(format!("node {i} has a non-finite feature"));
            }
            let hot: Vec<usize> = (TYPE_SLOT..FEATURE_DIM).filter(|&k| n.feat[k] != 0.0).collect();
            if hot != [n.node_type.slot()] || n.feat[n.node_type.slot()] != 1.0 {
                return bad(format!("node {i} type one-hot does not match {:?}", n.node_type));
            }
        }
        let ty = |id: usize| self.nodes.get(id).map(|n| n.node_type);
        for e in &self.edges {
            let want = match e.etype {
                EdgeType::LinkLink => (NodeType::Link, NodeType::Link),
                EdgeType::FlowPath => (NodeType::Flow, NodeType::Path),
                EdgeType::PathLink => (NodeType::Path, NodeType::Link),
                EdgeType::LinkFailure => (NodeType::Link, NodeType::Failure),
            };
            if (ty(e.s), ty(e.d)) != (Some(want.0), Some(want.1)) {
                return bad(format!("edge {}->{} is not a valid {:?} edge", e.s, e.d, e.etype));
            }
        }
        for s in &self.scenarios {
            if ty(s.fid) != Some(NodeType::Failure) {
                return bad(format!("scenario {} maps to non-failure node {}", s.scenario_id, s.fid));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::failure::enumerate_failures;
    use crate::routing::tests::triangle_instance;
    use crate::routing::{solve_mcf_min_mlu, solve_ospf};

    #[test]
    fn triangle_graph_counts() {
        let inst = triangle_instance(0.6);
        let (dec, _) = solve_mcf_min_mlu(&inst, &[]).unwrap();
        let scen = enumerate_failures(&inst.topology, 1);
        let g = encode(&inst, &dec, &scen).unwrap();
        assert_eq!(g.nodes.len(), 9);
        assert_eq!(g.count_nodes(NodeType::Link), 3);
        assert_eq!(g.count_nodes(NodeType::Flow), 1);
        assert_eq!(g.count_nodes(NodeType::Path), 2);
        assert_eq!(g.count_nodes(NodeType::Failure), 3);
        assert_eq!(g.count_edges(EdgeType::LinkLink), 3);
        assert_eq!(g.count_edges(EdgeType::FlowPath), 2);
        assert_eq!(g.count_edges(EdgeType::PathLink), 3);
        assert_eq!(g.count_edges(EdgeType::LinkFailure), 3);
        for l in 0..3 {
            assert!((g.nodes[l].feat[0] - 1.0).abs() < 1e-9, "{:?}", g.nodes[l]);
            assert_eq!(g.nodes[l].feat[1], 1.0);
        }
        assert_eq!(g.nodes[3].feat[0], 1.0);
        g.validate().unwrap();
    }

    #[test]
    fn no_scenarios_and_single_paths() {
        let inst = triangle_instance(0.6);
        let (dec, _) = solve_ospf(&inst, &[]).unwrap();
        let g = encode(&inst, &dec, &[]).unwrap();
        assert_eq!(g.count_nodes(NodeType::Failure), 0);
        assert_eq!(g.count_nodes(NodeType::Path), 1);
        // only the direct link carries traffic
        assert_eq!(g.nodes[0].feat[0], 1.0);
        assert_eq!(g.nodes[1].feat[0], 0.0);
        assert_eq!(g.nodes[1].feat[2], 0.0);
        for n in &g.nodes {
            assert_eq!(n.feat.len(), FEATURE_DIM);
            assert_eq!(n.feat[TYPE_SLOT..].iter().sum::<f64>(), 1.0);
            assert!(n.feat.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn undecomposed_decision_is_rejected() {
        let inst = triangle_instance(0.6);
        let (mut dec, _) = solve_ospf(&inst, &[]).unwrap();
        dec.demands[0].paths.clear();
        assert!(matches!(
            build_input_graph(&inst, &dec, &[]),
            Err(GraphEncError::NotDecomposed)
        ));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let inst = triangle_instance(0.6);
        let (dec, _) = solve_mcf_min_mlu(&inst, &[]).unwrap();
        let g = encode(&inst, &dec, &enumerate_failures(&inst.topology, 2)).unwrap();
        let text = g.to_json();
        assert!(text.contains("\"type\":\"Link\""));
        assert!(text.contains("\"etype\":\"LinkFailure\""));
        assert_eq!(InputGraph::from_json(&text).unwrap(), g);

        let mut broken = g.clone();
        broken.nodes[0].feat.pop();
        assert!(InputGraph::from_json(&broken.to_json()).is_err());
        let mut broken = g;
        broken.edges[0].etype = EdgeType::FlowPath;
        assert!(matches!(
            InputGraph::from_json(&broken.to_json()),
            Err(GraphEncError::Schema(_))
        ));
    }
}

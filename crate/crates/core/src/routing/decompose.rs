//! Flow decomposition into simple paths.
//!
//! Paths are peeled greedily: the path with the largest bottleneck goes
//! first, and among paths reaching that bottleneck the one found by a
//! smallest-next-hop-first search wins. Flow that remains once the demand is
//! exhausted consists of cycles and is dropped.

use std::collections::BTreeMap;

use super::{PathFlow, RoutedDemand, RoutingDecision, RoutingError};
use crate::netmodel::{ArcId, Topology};

/// Residual amounts below this are treated as zero while peeling.
const FLOW_EPS: f64 = 1e-12;

/// Largest bottleneck over all `src -> dst` paths in the positive part of
/// `residual`, or `None` when `dst` is unreachable.
fn max_bottleneck(
    topology: &Topology,
    out_arcs: &[Vec<ArcId>],
    residual: &[f64],
    src: usize,
    dst: usize,
) -> Option<f64> {
    let n = topology.num_nodes();
    let mut best = vec![0.0f64; n];
    let mut done = vec![false; n];
    best[src] = f64::INFINITY;
    loop {
        let v = (0..n)
            .filter(|&v| !done[v] && best[v] > FLOW_EPS)
            .max_by(|&a, &b| best[a].total_cmp(&best[b]).then(b.cmp(&a)))?;
        if v == dst {
            return Some(best[v]);
        }
        done[v] = true;
        for &a in &out_arcs[v] {
            let w = topology.arc(a).head;
            let cand = best[v].min(residual[a]);
            if !done[w] && cand > best[w] {
                best[w] = cand;
            }
        }
    }
}

/// Smallest-next-hop-first DFS over arcs with residual at least `floor`.
fn find_path(
    topology: &Topology,
    out_arcs: &[Vec<ArcId>],
    residual: &[f64],
    floor: f64,
    src: usize,
    dst: usize,
) -> Option<Vec<ArcId>> {
    let mut visited = vec![false; topology.num_nodes()];
    let mut stack: Vec<(usize, usize)> = vec![(src, 0)];
    let mut arcs: Vec<ArcId> = Vec::new();
    visited[src] = true;
    loop {
        let top = stack.last_mut()?;
        let v = top.0;
        if v == dst {
            return Some(arcs);
        }
        let mut chosen = None;
        while top.1 < out_arcs[v].len() {
            let a = out_arcs[v][top.1];
            top.1 += 1;
            let w = topology.arc(a).head;
            if !visited[w] && residual[a] >= floor {
                chosen = Some((a, w));
                break;
            }
        }
        match chosen {
            Some((a, w)) => {
                visited[w] = true;
                arcs.push(a);
                stack.push((w, 0));
            }
            None => {
                stack.pop();
                arcs.pop();
            }
        }
    }
}

fn arcs_to_nodes(topology: &Topology, src: usize, arcs: &[ArcId]) -> Vec<usize> {
    let mut nodes = Vec::with_capacity(arcs.len() + 1);
    nodes.push(src);
    nodes.extend(arcs.iter().map(|&a| topology.arc(a).head));
    nodes
}

/// Peels `src -> dst` paths off `residual` until `amount` is routed or no
/// path remains. Returns `(node sequence, flow)` pairs.
pub(crate) fn peel_paths(
    topology: &Topology,
    out_arcs: &[Vec<ArcId>],
    residual: &mut [f64],
    src: usize,
    dst: usize,
    amount: f64,
) -> Vec<(Vec<usize>, f64)> {
    let mut remaining = amount;
    let mut paths = Vec::new();
    let stop = amount * 1e-9;
    while remaining > stop {
        let Some(bottleneck) = max_bottleneck(topology, out_arcs, residual, src, dst) else {
            break;
        };
        let floor = bottleneck * (1.0 - 1e-12);
        let arcs = find_path(topology, out_arcs, residual, floor, src, dst)
            .expect("a path achieving the max bottleneck exists");
        let push = bottleneck.min(remaining);
        for &a in &arcs {
            residual[a] -= push;
        }
        remaining -= push;
        paths.push((arcs_to_nodes(topology, src, &arcs), push));
    }
    paths
}

/// Normalizes peeled path flows into split ratios summing to one.
pub(crate) fn to_ratios(paths: Vec<(Vec<usize>, f64)>) -> Vec<PathFlow> {
    let total: f64 = paths.iter().map(|p| p.1).sum();
    paths
        .into_iter()
        .map(|(nodes, f)| PathFlow {
            nodes,
            ratio: f / total,
        })
        .collect()
}

/// Link-level flow of a path split.
pub(crate) fn arc_flow_of(topology: &Topology, volume: f64, paths: &[PathFlow]) -> Vec<(ArcId, f64)> {
    let mut flow: BTreeMap<ArcId, f64> = BTreeMap::new();
    for p in paths {
        for a in p.arcs(topology) {
            *flow.entry(a).or_insert(0.0) += p.ratio * volume;
        }
    }
    flow.into_iter().filter(|&(_, f)| f != 0.0).collect()
}

fn check_conservation(topology: &Topology, d: &RoutedDemand) -> Result<(), RoutingError> {
    let net = d.net_outflow(topology);
    let tol = 1e-6 * d.volume.max(1.0);
    for (v, &x) in net.iter().enumerate() {
        let expected = if v == d.src {
            d.volume
        } else if v == d.dst {
            -d.volume
        } else {
            0.0
        };
        if (x - expected).abs() > tol {
            return Err(RoutingError::ConservationViolated {
                src: d.src,
                dst: d.dst,
                node: v,
                imbalance: x - expected,
            });
        }
    }
    Ok(())
}

/// Decomposes every demand's link-level flow into at most one simple path
/// per arc, discarding cycle flow. Link flows are rebuilt from the paths.
pub fn decompose_to_paths(
    topology: &Topology,
    decision: &RoutingDecision,
) -> Result<RoutingDecision, RoutingError> {
    let out_arcs = topology.out_arcs();
    let mut demands = Vec::with_capacity(decision.demands.len());
    for d in &decision.demands {
        check_conservation(topology, d)?;
        let mut residual = vec![0.0; topology.num_arcs()];
        for &(a, f) in &d.arc_flow {
            residual[a] = f.max(0.0);
        }
        let peeled = peel_paths(topology, &out_arcs, &mut residual, d.src, d.dst, d.volume);
        let paths = if peeled.is_empty() { Vec::new() } else { to_ratios(peeled) };
        let arc_flow = arc_flow_of(topology, d.volume, &paths);
        demands.push(RoutedDemand {
            src: d.src,
            dst: d.dst,
            volume: d.volume,
            arc_flow,
            paths,
        });
    }
    Ok(RoutingDecision {
        scheme: decision.scheme,
        demands,
    })
}

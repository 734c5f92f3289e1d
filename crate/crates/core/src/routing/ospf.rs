//! Shortest-path routing with inverse-capacity link weights and per-hop
//! equal-cost multipath splitting.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::decompose::arc_flow_of;
use super::mcf::{arc_alive, check_reachable};
use super::{PathFlow, RoutedDemand, RoutingDecision, RoutingError, Scheme};
use crate::netmodel::{ArcId, LinkId, NetworkInstance, Topology};

const TIE_TOL: f64 = 1e-9;

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

pub fn ospf_weight(capacity: f64) -> f64 {
    1.0 / capacity
}

/// Distance from every node to `dst` over alive arcs.
fn distances_to(topology: &Topology, alive: &[bool], dst: usize) -> Vec<f64> {
    let mut into: Vec<Vec<ArcId>> = vec![Vec::new(); topology.num_nodes()];
    for a in 0..topology.num_arcs() {
        if alive[a] {
            into[topology.arc(a).head].push(a);
        }
    }
    let mut dist = vec![f64::INFINITY; topology.num_nodes()];
    dist[dst] = 0.0;
    let mut heap = BinaryHeap::from([Entry(0.0, dst)]);
    while let Some(Entry(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &a in &into[v] {
            let arc = topology.arc(a);
            let nd = d + ospf_weight(topology.capacity(arc.link));
            if nd < dist[arc.tail] {
                dist[arc.tail] = nd;
                heap.push(Entry(nd, arc.tail));
            }
        }
    }
    dist
}

fn is_tight(dist_v: f64, dist_w: f64, weight: f64) -> bool {
    (dist_v - (dist_w + weight)).abs() <= TIE_TOL * dist_v.max(1.0)
}

/// Equal-cost next-hop arcs toward `dst` for every node, sorted by next hop.
fn next_hops(topology: &Topology, alive: &[bool], dist: &[f64]) -> Vec<Vec<ArcId>> {
    let mut hops = vec![Vec::new(); topology.num_nodes()];
    for (v, out) in topology.out_arcs().into_iter().enumerate() {
        if !dist[v].is_finite() || dist[v] == 0.0 {
            continue;
        }
        for a in out {
            if !alive[a] {
                continue;
            }
            let arc = topology.arc(a);
            if is_tight(dist[v], dist[arc.head], ospf_weight(topology.capacity(arc.link))) {
                hops[v].push(a);
            }
        }
    }
    hops
}

/// ECMP paths from `src`, next hops in ascending node order; each path's
/// ratio is the product of the even per-hop splits.
fn enumerate_paths(topology: &Topology, hops: &[Vec<ArcId>], src: usize, dst: usize) -> Vec<PathFlow> {
    let mut out = Vec::new();
    let mut stack = vec![(vec![src], 1.0)];
    while let Some((nodes, ratio)) = stack.pop() {
        let v = *nodes.last().unwrap();
        if v == dst {
            out.push(PathFlow { nodes, ratio });
            continue;
        }
        let share = ratio / hops[v].len() as f64;
        for &a in hops[v].iter().rev() {
            let mut next = nodes.clone();
            next.push(topology.arc(a).head);
            stack.push((next, share));
        }
    }
    out
}

/// Shortest-path routing with weight `1 / capacity` per link and even
/// splitting over equal-cost next hops, on the topology minus `disabled`.
pub fn solve_ospf(
    instance: &NetworkInstance,
    disabled: &[LinkId],
) -> Result<(RoutingDecision, f64), RoutingError> {
    let topology = &instance.topology;
    check_reachable(topology, &instance.tm, disabled)?;
    let alive = arc_alive(topology, disabled);
    let mut demands = Vec::new();
    let mut by_dst: Vec<Vec<(usize, f64)>> = vec![Vec::new(); topology.num_nodes()];
    for d in instance.tm.positive_demands() {
        by_dst[d.dst].push((d.src, d.volume));
    }
    for (dst, sources) in by_dst.iter().enumerate() {
        if sources.is_empty() {
            continue;
        }
        let dist = distances_to(topology, &alive, dst);
        let hops = next_hops(topology, &alive, &dist);
        for &(src, volume) in sources {
            let paths = enumerate_paths(topology, &hops, src, dst);
            let arc_flow = arc_flow_of(topology, volume, &paths);
            demands.push(RoutedDemand {
                src,
                dst,
                volume,
                arc_flow,
                paths,
            });
        }
    }
    demands.sort_by_key(|d| (d.src, d.dst));
    let decision = RoutingDecision {
        scheme: Scheme::Ospf,
        demands,
    };
    let mlu = super::compute_loads(topology, &decision).mlu;
    Ok((decision, mlu))
}

//! Seeded instance generators: Waxman-style random topologies, gravity-model
//! traffic matrices and discrete random capacities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Demand, Link, NetModelError, Topology, TrafficMatrix};

/// The four capacity fractions links are drawn from.
pub const CAPACITY_FRACTIONS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Removes degree-one nodes until none remain. Returns the pruned topology
/// and `kept[new_id] = old_id`.
pub fn prune_degree_one(topology: &Topology) -> Result<(Topology, Vec<usize>), NetModelError> {
    let n = topology.num_nodes();
    let mut alive = vec![true; n];
    let mut link_alive = vec![true; topology.num_links()];
    let mut degree = topology.degrees();
    loop {
        let leaves: Vec<usize> = (0..n).filter(|&v| alive[v] && degree[v] <= 1).collect();
        if leaves.is_empty() {
            break;
        }
        for v in leaves {
            alive[v] = false;
            for (id, l) in topology.links().iter().enumerate() {
                if link_alive[id] && (l.u == v || l.v == v) {
                    link_alive[id] = false;
                    degree[l.u] -= 1;
                    degree[l.v] -= 1;
                }
            }
        }
    }
    let kept: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
    if kept.is_empty() {
        return Err(NetModelError::PrunedToNothing);
    }
    let mut new_id = vec![usize::MAX; n];
    for (i, &old) in kept.iter().enumerate() {
        new_id[old] = i;
    }
    let links = topology
        .links()
        .iter()
        .zip(&link_alive)
        .filter(|(_, &a)| a)
        .map(|(l, _)| Link {
            u: new_id[l.u],
            v: new_id[l.v],
            capacity: l.capacity,
        })
        .collect();
    Ok((Topology::new(kept.len(), links)?, kept))
}

/// Links whose single removal disconnects the topology.
pub fn bridges(topology: &Topology) -> Vec<usize> {
    (0..topology.num_links())
        .filter(|&l| !topology.is_connected_without(&[l]))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaxmanParams {
    /// Expected node degree; sets the Waxman `alpha` so the expected edge
    /// count is `n * mean_degree / 2`.
    pub mean_degree: f64,
    /// Distance decay relative to the unit-square diagonal.
    pub beta: f64,
    /// Rejection-sampling budget.
    pub max_attempts: usize,
    /// Capacity given to every generated link.
    pub capacity: f64,
}

impl Default for WaxmanParams {
    fn default() -> Self {
        Self {
            mean_degree: 3.5,
            beta: 0.4,
            max_attempts: 10_000,
            capacity: 1.0,
        }
    }
}

/// Waxman random graph on `n` nodes in the unit square, resampled until it is
/// connected and free of bridges (so every node keeps degree >= 2).
pub fn generate_random_topology(
    n: usize,
    params: &WaxmanParams,
    seed: u64,
) -> Result<Topology, NetModelError> {
    if n < 3 {
        return Err(NetModelError::InvalidParameter(format!(
            "random topologies need at least 3 nodes, got {n}"
        )));
    }
    if !(params.mean_degree >= 2.0 && params.mean_degree <= (n - 1) as f64) {
        return Err(NetModelError::InvalidParameter(format!(
            "mean degree {} outside [2, {}]",
            params.mean_degree,
            n - 1
        )));
    }
    if !(params.beta > 0.0 && params.capacity > 0.0) {
        return Err(NetModelError::InvalidParameter(
            "beta and capacity must be positive".into(),
        ));
    }
    let mut rng = rng_for(seed);
    let diagonal = std::f64::consts::SQRT_2;
    let target_edges = n as f64 * params.mean_degree / 2.0;
    for _ in 0..params.max_attempts {
        let pos: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
        let mut weights = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = ((pos[i].0 - pos[j].0).powi(2) + (pos[i].1 - pos[j].1).powi(2)).sqrt();
                weights.push((i, j, (-d / (params.beta * diagonal)).exp()));
            }
        }
        let total: f64 = weights.iter().map(|w| w.2).sum();
        let alpha = (target_edges / total).min(1.0);
        let links: Vec<Link> = weights
            .into_iter()
            .filter(|&(_, _, w)| rng.gen::<f64>() < alpha * w)
            .map(|(u, v, _)| Link {
                u,
                v,
                capacity: params.capacity,
            })
            .collect();
        let Ok(topo) = Topology::new(n, links) else {
            continue;
        };
        if bridges(&topo).is_empty() {
            return Ok(topo);
        }
    }
    Err(NetModelError::NoConnectedTopology {
        n,
        attempts: params.max_attempts,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum MassDistribution {
    /// Node masses drawn log-uniformly from `[0.1, 1]`.
    #[default]
    LogUniform,
    /// Every node has the same mass; all off-diagonal demands are equal.
    Uniform,
}

/// Gravity-model traffic: `demand(i, j)` proportional to `m_i * m_j`, scaled
/// so all demands sum to `total_volume`.
pub fn generate_gravity_tm(
    topology: &Topology,
    total_volume: f64,
    masses: MassDistribution,
    seed: u64,
) -> Result<TrafficMatrix, NetModelError> {
    if !(total_volume.is_finite() && total_volume > 0.0) {
        return Err(NetModelError::InvalidParameter(format!(
            "total volume must be positive, got {total_volume}"
        )));
    }
    let n = topology.num_nodes();
    let mut rng = rng_for(seed);
    let m: Vec<f64> = match masses {
        MassDistribution::LogUniform => (0..n).map(|_| 10f64.powf(rng.gen_range(-1.0..=0.0))).collect(),
        MassDistribution::Uniform => vec![1.0; n],
    };
    let mut norm = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                norm += m[i] * m[j];
            }
        }
    }
    let mut demands = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                demands.push(Demand {
                    src: i,
                    dst: j,
                    volume: total_volume * m[i] * m[j] / norm,
                });
            }
        }
    }
    TrafficMatrix::new(n, demands)
}

/// Redraws every capacity i.i.d. uniformly from `base * {1/4, 1/2, 3/4, 1}`.
pub fn assign_random_capacities(
    topology: &Topology,
    base: f64,
    seed: u64,
) -> Result<Topology, NetModelError> {
    if !(base.is_finite() && base > 0.0) {
        return Err(NetModelError::InvalidParameter(format!(
            "base capacity must be positive, got {base}"
        )));
    }
    let mut rng = rng_for(seed);
    let caps: Vec<f64> = (0..topology.num_links())
        .map(|_| base * CAPACITY_FRACTIONS[rng.gen_range(0..CAPACITY_FRACTIONS.len())])
        .collect();
    topology.with_capacities(&caps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link(u: usize, v: usize) -> Link {
        Link { u, v, capacity: 1.0 }
    }

    #[test]
    fn prune_keeps_triangle_and_strips_pendant() {
        let tri = Topology::new(3, vec![link(0, 1), link(1, 2), link(0, 2)]).unwrap();
        let (p, kept) = prune_degree_one(&tri).unwrap();
        assert_eq!(p, tri);
        assert_eq!(kept, vec![0, 1, 2]);

        let pendant =
            Topology::new(4, vec![link(0, 1), link(1, 2), link(0, 2), link(0, 3)]).unwrap();
        let (p, kept) = prune_degree_one(&pendant).unwrap();
        assert_eq!(p, tri);
        assert_eq!(kept, vec![0, 1, 2]);
    }

    #[test]
    fn prune_tree_is_an_error() {
        let path = Topology::new(3, vec![link(0, 1), link(1, 2)]).unwrap();
        assert!(matches!(prune_degree_one(&path), Err(NetModelError::PrunedToNothing)));
    }

    #[test]
    fn prune_relabels_densely() {
        // node 0 is a pendant on the 1-2-3 triangle; 4 hangs off 3 via a chain 4-5
        let t = Topology::new(
            6,
            vec![link(0, 1), link(1, 2), link(2, 3), link(1, 3), link(3, 4), link(4, 5)],
        )
        .unwrap();
        let (p, kept) = prune_degree_one(&t).unwrap();
        assert_eq!(kept, vec![1, 2, 3]);
        assert_eq!(p.num_links(), 3);
        assert_eq!(prune_degree_one(&p).unwrap().0, p);
    }

    #[test]
    fn random_topology_is_deterministic_and_two_connected() {
        let params = WaxmanParams::default();
        let a = generate_random_topology(6, &params, 1).unwrap();
        let b = generate_random_topology(6, &params, 1).unwrap();
        assert_eq!(a, b);
        let t = generate_random_topology(10, &params, 7).unwrap();
        assert!(t.is_connected());
        let (pruned, _) = prune_degree_one(&t).unwrap();
        assert!(pruned.degrees().iter().all(|&d| d >= 2));
        assert_eq!(pruned.num_nodes(), 10);
    }

    #[test]
    fn random_topology_rejects_tiny_n() {
        assert!(matches!(
            generate_random_topology(2, &WaxmanParams::default(), 0),
            Err(NetModelError::InvalidParameter(_))
        ));
    }

    #[test]
    fn exhausted_attempts_is_an_error() {
        let params = WaxmanParams {
            mean_degree: 2.0,
            beta: 0.01,
            max_attempts: 3,
            capacity: 1.0,
        };
        assert!(matches!(
            generate_random_topology(40, &params, 0),
            Err(NetModelError::NoConnectedTopology { .. })
        ));
    }

    #[test]
    fn gravity_sums_to_total_and_is_deterministic() {
        let t = generate_random_topology(8, &WaxmanParams::default(), 3).unwrap();
        let a = generate_gravity_tm(&t, 5.0, MassDistribution::LogUniform, 11).unwrap();
        let b = generate_gravity_tm(&t, 5.0, MassDistribution::LogUniform, 11).unwrap();
        assert_eq!(a, b);
        assert!((a.total() - 5.0).abs() <= 1e-9 * 5.0);
        assert_eq!(a.demands().len(), 8 * 7);
        for i in 0..8 {
            assert_eq!(a.volume(i, i), 0.0);
        }
    }

    #[test]
    fn uniform_masses_give_equal_demands() {
        let t = generate_random_topology(5, &WaxmanParams::default(), 3).unwrap();
        let tm = generate_gravity_tm(&t, 2.0, MassDistribution::Uniform, 0).unwrap();
        let first = tm.demands()[0].volume;
        assert!(tm.demands().iter().all(|d| (d.volume - first).abs() < 1e-15));
        assert!((first - 2.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn capacities_come_from_the_four_fractions() {
        let t = generate_random_topology(10, &WaxmanParams::default(), 5).unwrap();
        let c = assign_random_capacities(&t, 1.0, 9).unwrap();
        assert!(c
            .links()
            .iter()
            .all(|l| [0.25, 0.5, 0.75, 1.0].contains(&l.capacity)));
        assert_eq!(c, assign_random_capacities(&t, 1.0, 9).unwrap());
        let c4 = assign_random_capacities(&t, 4.0, 9).unwrap();
        assert!(c4.links().iter().all(|l| [1.0, 2.0, 3.0, 4.0].contains(&l.capacity)));
    }
}

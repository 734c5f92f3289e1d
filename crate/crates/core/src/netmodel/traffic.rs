use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::NetModelError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub src: usize,
    pub dst: usize,
    pub volume: f64,
}

/// Origin-destination demands. Entries with the same `(src, dst)` are merged
/// and the list is kept sorted by `(src, dst)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficMatrix {
    num_nodes: usize,
    demands: Vec<Demand>,
}

impl TrafficMatrix {
    pub fn new(num_nodes: usize, demands: Vec<Demand>) -> Result<Self, NetModelError> {
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for d in demands {
            if d.src == d.dst {
                return Err(NetModelError::SelfDemand(d.src));
            }
            for node in [d.src, d.dst] {
                if node >= num_nodes {
                    return Err(NetModelError::NodeOutOfRange { node, num_nodes });
                }
            }
            if !(d.volume.is_finite() && d.volume >= 0.0) {
                return Err(NetModelError::BadVolume {
                    src: d.src,
                    dst: d.dst,
                    volume: d.volume,
                });
            }
            *merged.entry((d.src, d.dst)).or_insert(0.0) += d.volume;
        }
        let demands = merged
            .into_iter()
            .map(|((src, dst), volume)| Demand { src, dst, volume })
            .collect();
        Ok(Self { num_nodes, demands })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn demands(&self) -> &[Demand] {
        &self.demands
    }

    /// Demands with strictly positive volume.
    pub fn positive_demands(&self) -> impl Iterator<Item = &Demand> {
        self.demands.iter().filter(|d| d.volume > 0.0)
    }

    pub fn total(&self) -> f64 {
        self.demands.iter().map(|d| d.volume).sum()
    }

    pub fn volume(&self, src: usize, dst: usize) -> f64 {
        self.demands
            .binary_search_by_key(&(src, dst), |d| (d.src, d.dst))
            .map(|i| self.demands[i].volume)
            .unwrap_or(0.0)
    }

    /// Row-major `n x n` matrix with a zero diagonal.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.num_nodes]; self.num_nodes];
        for d in &self.demands {
            m[d.src][d.dst] = d.volume;
        }
        m
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, NetModelError> {
        let demands = self
            .demands
            .iter()
            .map(|d| Demand {
                volume: d.volume * factor,
                ..*d
            })
            .collect();
        Self::new(self.num_nodes, demands)
    }

    /// Relabels nodes by `perm[old] = new`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self, NetModelError> {
        let demands = self
            .demands
            .iter()
            .map(|d| Demand {
                src: perm[d.src],
                dst: perm[d.dst],
                volume: d.volume,
            })
            .collect();
        Self::new(self.num_nodes, demands)
    }
}

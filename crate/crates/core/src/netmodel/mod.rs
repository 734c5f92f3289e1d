//! Topologies, capacities and traffic demands.

mod generate;
pub mod io;
mod topology;
mod traffic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{
    assign_random_capacities, bridges, generate_gravity_tm, generate_random_topology,
    prune_degree_one, MassDistribution, WaxmanParams, CAPACITY_FRACTIONS,
};
pub use io::{load_topology, LoadOptions, TopologyFormat};
pub use topology::{Arc, ArcId, Link, LinkId, Topology};
pub use traffic::{Demand, TrafficMatrix};

#[derive(Debug, Error)]
pub enum NetModelError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate link {0}-{1}")]
    DuplicateLink(usize, usize),
    #[error("node {node} out of range for {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },
    #[error("link {u}-{v} has invalid capacity {capacity}")]
    BadCapacity { u: usize, v: usize, capacity: f64 },
    #[error("demand from node {0} to itself")]
    SelfDemand(usize),
    #[error("demand {src}->{dst} has invalid volume {volume}")]
    BadVolume { src: usize, dst: usize, volume: f64 },
    #[error("topology is not connected")]
    Disconnected,
    #[error("pruning degree-one nodes leaves an empty topology")]
    PrunedToNothing,
    #[error("no connected bridgeless topology on {n} nodes after {attempts} attempts")]
    NoConnectedTopology { n: usize, attempts: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("topology has {topology} nodes but traffic matrix has {tm}")]
    NodeCountMismatch { topology: usize, tm: usize },
}

/// A topology together with the demands routed over it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkInstance {
    pub topology: Topology,
    pub tm: TrafficMatrix,
    /// Seed the instance was generated from, if any.
    pub seed: Option<u64>,
}

impl NetworkInstance {
    pub fn new(topology: Topology, tm: TrafficMatrix) -> Result<Self, NetModelError> {
        if topology.num_nodes() != tm.num_nodes() {
            return Err(NetModelError::NodeCountMismatch {
                topology: topology.num_nodes(),
                tm: tm.num_nodes(),
            });
        }
        Ok(Self {
            topology,
            tm,
            seed: None,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Same demands on a topology with replaced capacities.
    pub fn with_capacities(&self, capacities: &[f64]) -> Result<Self, NetModelError> {
        Ok(Self {
            topology: self.topology.with_capacities(capacities)?,
            tm: self.tm.clone(),
            seed: self.seed,
        })
    }

    pub fn with_tm(&self, tm: TrafficMatrix) -> Result<Self, NetModelError> {
        let mut out = Self::new(self.topology.clone(), tm)?;
        out.seed = self.seed;
        Ok(out)
    }
}

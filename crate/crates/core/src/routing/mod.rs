//! Min-MLU multicommodity and OSPF/ECMP routing, path decomposition and
//! link-load accounting.

mod decision;
mod decompose;
pub(crate) mod mcf;
mod ospf;

use thiserror::Error;

pub use decision::{
    compute_loads, LinkLoadProfile, PathFlow, RoutedDemand, RoutingDecision, Scheme,
};
pub use decompose::decompose_to_paths;
pub use mcf::{min_mlu_value, solve_mcf_min_mlu, solve_mcf_min_mlu_with, McfOptions};
pub use ospf::{ospf_weight, solve_ospf};

use crate::lp::{Backend, LpError};
use crate::netmodel::{LinkId, NetworkInstance};

#[derive(Debug, Error)]
pub enum RoutingError {
    #[error("demand {src}->{dst} has no path in the surviving topology")]
    Disconnected { src: usize, dst: usize },
    #[error("flow of demand {src}->{dst} violates conservation at node {node} by {imbalance}")]
    ConservationViolated {
        src: usize,
        dst: usize,
        node: usize,
        imbalance: f64,
    },
    #[error("invalid routing decision: {0}")]
    InvalidDecision(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Routes `instance` with `scheme` after removing `disabled` links.
pub fn route(
    instance: &NetworkInstance,
    scheme: Scheme,
    disabled: &[LinkId],
) -> Result<(RoutingDecision, f64), RoutingError> {
    match scheme {
        Scheme::Mcf => solve_mcf_min_mlu(instance, disabled),
        Scheme::Ospf => solve_ospf(instance, disabled),
    }
}

/// Post-failure MLU under `scheme`'s own rerouting: a fresh min-MLU LP for
/// MCF, full shortest-path reconvergence for OSPF.
pub fn rerouted_mlu(
    instance: &NetworkInstance,
    scheme: Scheme,
    disabled: &[LinkId],
    backend: Backend,
) -> Result<f64, RoutingError> {
    match scheme {
        Scheme::Mcf => min_mlu_value(instance, disabled, backend),
        Scheme::Ospf => solve_ospf(instance, disabled).map(|(_, mlu)| mlu),
    }
}

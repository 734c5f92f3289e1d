//! Failure-impact evaluation for routed networks and critical-failure
//! pruning for robust network design.

pub mod lp;
pub mod netmodel;
pub mod failure;
pub mod graphenc;
pub mod robustdesign;
pub mod routing;

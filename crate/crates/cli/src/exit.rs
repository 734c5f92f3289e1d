use std::fmt;

use clap::Parser;
use critfail::failure::FailureError;
use critfail::graphenc::GraphEncError;
use critfail::lp::LpError;
use critfail::netmodel::NetModelError;
use critfail::robustdesign::DesignError;
use critfail::routing::RoutingError;

use crate::{commands, config, Cli};

pub const SUCCESS: u8 = 0;
pub const USAGE: u8 = 1;
pub const INFEASIBLE: u8 = 2;
pub const INTERNAL: u8 = 3;

/// Bad invocation detected after argument parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

/// A result that was computed and written but failed its own check.
#[derive(Debug)]
pub struct CheckFailed(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}
impl std::error::Error for CheckFailed {}

pub fn run(args: Vec<String>) -> u8 {
    let args = match config::merge(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return USAGE;
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { USAGE } else { SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return USAGE;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    match commands::dispatch(&cli) {
        Ok(()) => SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            code_for(&e)
        }
    }
}

fn lp_code(e: &LpError) -> u8 {
    match e {
        LpError::Infeasible | LpError::Unbounded => INFEASIBLE,
        LpError::Numerical(_) => INTERNAL,
    }
}

fn routing_code(e: &RoutingError) -> u8 {
    match e {
        RoutingError::Disconnected { .. } | RoutingError::InvalidDecision(_) => INFEASIBLE,
        RoutingError::Lp(e) => lp_code(e),
        RoutingError::ConservationViolated { .. } | RoutingError::Numerical(_) => INTERNAL,
    }
}

fn netmodel_code(e: &NetModelError) -> u8 {
    match e {
        NetModelError::Io { .. } => USAGE,
        _ => INFEASIBLE,
    }
}

fn failure_code(e: &FailureError) -> u8 {
    match e {
        FailureError::NotDecomposed => INTERNAL,
        FailureError::Routing(e) => routing_code(e),
        _ => INFEASIBLE,
    }
}

fn design_code(e: &DesignError) -> u8 {
    match e {
        DesignError::Failure(e) => failure_code(e),
        DesignError::Routing(e) => routing_code(e),
        DesignError::Lp(e) => lp_code(e),
        DesignError::NetModel(e) => netmodel_code(e),
        _ => INFEASIBLE,
    }
}

/// Exit code of the first recognized error in the chain.
pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return USAGE;
        }
        if cause.is::<CheckFailed>() || cause.is::<GraphEncError>() {
            return INFEASIBLE;
        }
        if let Some(e) = cause.downcast_ref::<DesignError>() {
            return design_code(e);
        }
        if let Some(e) = cause.downcast_ref::<FailureError>() {
            return failure_code(e);
        }
        if let Some(e) = cause.downcast_ref::<RoutingError>() {
            return routing_code(e);
        }
        if let Some(e) = cause.downcast_ref::<LpError>() {
            return lp_code(e);
        }
        if let Some(e) = cause.downcast_ref::<NetModelError>() {
            return netmodel_code(e);
        }
        if cause.is::<std::io::Error>() {
            return USAGE;
        }
        if cause.is::<csv::Error>() || cause.is::<serde_json::Error>() {
            return INFEASIBLE;
        }
    }
    INTERNAL
}

use thiserror::Error;

use crate::model::{DriverId, RouteId};

/// Errors raised by the model, matcher, simulator and verification suites.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("occupancy must be nonnegative, got {0}")]
    NegativeOccupancy(f64),

    #[error("travel time {travel} is below free-flow time {free_flow}")]
    BelowFreeFlow { travel: f64, free_flow: f64 },

    #[error("invalid route {route}: {reason}")]
    InvalidRoute { route: RouteId, reason: String },

    #[error("invalid driver {driver}: {reason}")]
    InvalidDriver { driver: DriverId, reason: String },

    #[error("invalid toll configuration: {0}")]
    InvalidToll(String),

    #[error("flow history is empty")]
    EmptyHistory,

    #[error("forecast horizon must be at least 1")]
    ZeroHorizon,

    #[error("assignment for driver {driver} is {status}, expected {expected}")]
    InvalidTransition {
        driver: DriverId,
        status: &'static str,
        expected: &'static str,
    },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid bipartite instance: {0}")]
    InvalidInstance(String),

    #[error("instance too large for exhaustive enumeration: {drivers} drivers, {slots} slots (limit {limit})")]
    InstanceTooLarge { drivers: usize, slots: usize, limit: usize },

    #[error("degenerate comparison: auction utility is zero, ratio undefined")]
    DegenerateComparison,

    #[error("invalid auction scenario: {0}")]
    InvalidAuction(String),

    #[error("invalid scenario: {0}")]
    InvalidConfig(String),

    #[error("trials must be at least 1")]
    NoTrials,

    #[error("unknown driver {0}")]
    UnknownDriver(DriverId),

    #[error("malformed event log at line {line}: {reason}")]
    MalformedLog { line: u64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

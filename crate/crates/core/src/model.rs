//! Route and driver primitives: BPR travel time, route cost, driver utility
//! and matching welfare.
//!
//! Utility is implemented with the sign exactly as the formula gives it,
//! `U = (E_f - E_t) * C_d`, so any congested trip with a positive charge has
//! negative utility and an unmatched driver (utility 0) is never worse off
//! than a tolled one.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::FlowHistory;

/// Absolute tolerance used for every currency/time comparison.
pub const EPS: f64 = 1e-9;

/// Default BPR scale factor.
pub const DEFAULT_CONGESTION_A: f64 = 0.15;
/// Default BPR exponent.
pub const DEFAULT_CONGESTION_B: f64 = 4.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RouteId(pub u32);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DriverId(pub u32);

impl fmt::Display for RouteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

impl fmt::Display for DriverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}", self.0)
    }
}

fn default_a() -> f64 {
    DEFAULT_CONGESTION_A
}

fn default_b() -> f64 {
    DEFAULT_CONGESTION_B
}

/// Static route parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteSpec {
    pub id: RouteId,
    /// Free-flow travel time `E_f`, minutes.
    pub free_flow_time: f64,
    /// Occupancy `k_f` up to which traffic flows freely.
    pub threshold_capacity: f64,
    #[serde(default = "default_a")]
    pub congestion_a: f64,
    #[serde(default = "default_b")]
    pub congestion_b: f64,
    /// Maximum number of simultaneous assignments (pending or travelling).
    pub slot_capacity: u32,
}

impl RouteSpec {
    /// A route with the default BPR constants.
    pub fn new(id: u32, free_flow_time: f64, threshold_capacity: f64, slot_capacity: u32) -> Self {
        RouteSpec {
            id: RouteId(id),
            free_flow_time,
            threshold_capacity,
            congestion_a: DEFAULT_CONGESTION_A,
            congestion_b: DEFAULT_CONGESTION_B,
            slot_capacity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidRoute {
                route: self.id,
                reason: reason.to_string(),
            })
        };
        if !(self.free_flow_time.is_finite() && self.free_flow_time > 0.0) {
            return fail("free-flow time must be > 0");
        }
        if !(self.threshold_capacity.is_finite() && self.threshold_capacity > 0.0) {
            return fail("threshold capacity must be > 0");
        }
        if !(self.congestion_a.is_finite() && self.congestion_a >= 0.0) {
            return fail("congestion constant A must be >= 0");
        }
        if !(self.congestion_b.is_finite() && self.congestion_b >= 1.0) {
            return fail("congestion constant B must be >= 1");
        }
        if self.slot_capacity < 1 {
            return fail("slot capacity must be >= 1");
        }
        Ok(())
    }
}

/// Evolving per-route state owned by the simulator.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RouteState {
    /// Drivers currently travelling on the route (`k_t`).
    pub occupancy: u32,
    /// Issued assignments still waiting for acceptance. They hold a slot but
    /// do not count toward `k_t`.
    pub pending: u32,
    /// `X_0..X_t`, one sample appended per timestep.
    pub flow_history: FlowHistory,
    /// Current route toll `C_r`.
    pub toll: f64,
}

impl RouteState {
    pub fn with_toll(toll: f64) -> Self {
        RouteState {
            toll,
            ..RouteState::default()
        }
    }

    /// Slots held by pending or travelling drivers.
    pub fn reserved(&self) -> u32 {
        self.occupancy + self.pending
    }
}

/// A driver's reported parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverSpec {
    pub id: DriverId,
    pub arrival_time: u64,
    /// Maximum per-driver charge the driver accepts (`α_d`).
    pub willingness_to_pay: f64,
    /// Timesteps the driver has to accept an issued assignment.
    pub deadline_window: u64,
}

impl DriverSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.willingness_to_pay.is_finite() && self.willingness_to_pay >= 0.0) {
            return Err(Error::InvalidDriver {
                driver: self.id,
                reason: "willingness to pay must be >= 0".into(),
            });
        }
        if self.deadline_window < 1 {
            return Err(Error::InvalidDriver {
                driver: self.id,
                reason: "deadline window must be >= 1".into(),
            });
        }
        Ok(())
    }
}

/// BPR volume-delay function: `E_f * (1 + A * (k_t / k_f)^B)`.
pub fn travel_time(route: &RouteSpec, occupancy: f64) -> Result<f64> {
    if occupancy.is_nan() || occupancy < 0.0 {
        return Err(Error::NegativeOccupancy(occupancy));
    }
    let ratio = occupancy / route.threshold_capacity;
    Ok(route.free_flow_time * (1.0 + route.congestion_a * ratio.powf(route.congestion_b)))
}

/// Route cost `(E_t - E_f) * C_r`.
pub fn route_cost(travel: f64, free_flow: f64, toll: f64) -> Result<f64> {
    if travel < free_flow - EPS {
        return Err(Error::BelowFreeFlow { travel, free_flow });
    }
    // Within tolerance of free flow the delay is treated as exactly zero.
    let delay = (travel - free_flow).max(0.0);
    Ok(delay * toll)
}

/// Driver utility `(E_f - E_t) * C_d`, sign as written.
pub fn driver_utility(free_flow: f64, travel: f64, charge: f64) -> f64 {
    (free_flow - travel) * charge
}

/// One driver-route pairing with the quote it was issued at.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPair {
    pub driver: DriverId,
    pub route: RouteId,
    pub charge: f64,
    pub travel_time: f64,
    pub free_flow_time: f64,
}

impl MatchedPair {
    pub fn utility(&self) -> f64 {
        driver_utility(self.free_flow_time, self.travel_time, self.charge)
    }
}

/// A set of driver-route pairings plus the drivers left unmatched.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Matching {
    assignments: Vec<MatchedPair>,
    unmatched: Vec<DriverId>,
    seen: BTreeSet<DriverId>,
}

impl Matching {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(&mut self, pair: MatchedPair) -> Result<()> {
        self.claim(pair.driver)?;
        self.assignments.push(pair);
        Ok(())
    }

    pub fn leave_unmatched(&mut self, driver: DriverId) -> Result<()> {
        self.claim(driver)?;
        self.unmatched.push(driver);
        Ok(())
    }

    fn claim(&mut self, driver: DriverId) -> Result<()> {
        if !self.seen.insert(driver) {
            return Err(Error::InvalidDriver {
                driver,
                reason: "driver already appears in the matching".into(),
            });
        }
        Ok(())
    }

    pub fn assignments(&self) -> &[MatchedPair] {
        &self.assignments
    }

    pub fn unmatched(&self) -> &[DriverId] {
        &self.unmatched
    }

    pub fn route_load(&self, route: RouteId) -> usize {
        self.assignments.iter().filter(|p| p.route == route).count()
    }

    /// Union of two matchings over disjoint driver sets.
    pub fn merge(mut self, other: Matching) -> Result<Matching> {
        for pair in other.assignments {
            self.assign(pair)?;
        }
        for driver in other.unmatched {
            self.leave_unmatched(driver)?;
        }
        Ok(self)
    }
}

/// Sum of driver utilities; unmatched drivers contribute 0.
pub fn welfare(matching: &Matching) -> f64 {
    matching.assignments.iter().map(MatchedPair::utility).sum()
}

//! Anticipatory route tolls, per-driver charges and switching penalties.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Toll parameters shared by every route in a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TollConfig {
    /// Toll sensitivity `β` to the predicted change in flow.
    #[serde(default)]
    pub beta: f64,
    /// Forecast horizon `q`, timesteps.
    #[serde(default = "default_horizon")]
    pub horizon: u32,
    /// Fixed part `F` of the switching penalty.
    #[serde(default)]
    pub fixed_penalty: f64,
    /// Toll every route starts with, `C_r^0`.
    #[serde(default)]
    pub initial_toll: f64,
}

fn default_horizon() -> u32 {
    1
}

impl Default for TollConfig {
    fn default() -> Self {
        TollConfig {
            beta: 0.0,
            horizon: 1,
            fixed_penalty: 0.0,
            initial_toll: 0.0,
        }
    }
}

impl TollConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !nonneg(self.beta) {
            return Err(Error::InvalidToll("beta must be >= 0".into()));
        }
        if !nonneg(self.fixed_penalty) {
            return Err(Error::InvalidToll("fixed penalty must be >= 0".into()));
        }
        if !nonneg(self.initial_toll) {
            return Err(Error::InvalidToll("initial toll must be >= 0".into()));
        }
        if self.horizon < 1 {
            return Err(Error::InvalidToll("horizon must be >= 1".into()));
        }
        Ok(())
    }
}

/// `max(0, C_prev + β (X_future - X_now))`.
pub fn update_toll(previous: f64, cfg: &TollConfig, future_flow: f64, current_flow: f64) -> f64 {
    (previous + cfg.beta * (future_flow - current_flow)).max(0.0)
}

/// Share of the route toll charged to one driver.
///
/// The toll is split evenly over the `occupancy` drivers currently on the
/// route once it is above its free-flow threshold; below or at the threshold
/// travel is untolled.
pub fn per_driver_charge(route_toll: f64, occupancy: u32, threshold: f64) -> f64 {
    if f64::from(occupancy) - threshold > 0.0 {
        route_toll / f64::from(occupancy)
    } else {
        0.0
    }
}

/// Penalty `C_r^t + F` for travelling on a route other than the assigned one.
pub fn penalty(route_toll: f64, cfg: &TollConfig) -> f64 {
    route_toll + cfg.fixed_penalty
}

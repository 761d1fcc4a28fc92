use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::MatchMode;
use crate::model::{DriverId, DriverSpec, RouteId, RouteSpec};
use crate::predictor::Predictor;
use crate::sim::rng::{stream, Concern};
use crate::toll::TollConfig;

/// Everything a simulation run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub horizon: u64,
    pub routes: Vec<RouteSpec>,
    #[serde(default)]
    pub toll: TollConfig,
    #[serde(default)]
    pub predictor: Predictor,
    #[serde(default)]
    pub arrivals: ArrivalProcess,
    #[serde(default)]
    pub matching_mode: MatchMode,
    #[serde(default)]
    pub compliance: Compliance,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "process", rename_all = "snake_case")]
pub enum ArrivalProcess {
    Scripted {
        #[serde(default)]
        drivers: Vec<ScriptedDriver>,
    },
    Random(RandomArrivals),
}

impl Default for ArrivalProcess {
    fn default() -> Self {
        ArrivalProcess::Scripted { drivers: Vec::new() }
    }
}

/// Poisson arrivals per timestep with uniform willingness to pay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomArrivals {
    /// Mean arrivals per timestep.
    pub rate: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub deadline_window: u64,
}

/// A driver with optional scripted behaviour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedDriver {
    pub id: DriverId,
    /// Timestep the driver comes online and requests a route.
    pub arrival_time: u64,
    pub willingness_to_pay: f64,
    pub deadline_window: u64,
    /// Earliest timestep the driver can start travelling; defaults to the
    /// arrival time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ready_at: Option<u64>,
    /// When false the driver never takes up an offer.
    #[serde(default = "yes")]
    pub accepts: bool,
    /// Route the driver actually travels on, overriding the compliance draw.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub travels_on: Option<RouteId>,
}

fn yes() -> bool {
    true
}

impl ScriptedDriver {
    pub fn new(id: u32, arrival_time: u64, willingness_to_pay: f64, deadline_window: u64) -> Self {
        ScriptedDriver {
            id: DriverId(id),
            arrival_time,
            willingness_to_pay,
            deadline_window,
            ready_at: None,
            accepts: true,
            travels_on: None,
        }
    }

    /// The parameters the driver reports to the matcher.
    pub fn spec(&self) -> DriverSpec {
        DriverSpec {
            id: self.id,
            arrival_time: self.arrival_time,
            willingness_to_pay: self.willingness_to_pay,
            deadline_window: self.deadline_window,
        }
    }

    /// Timestep at which the driver would take up an offer issued at
    /// `issued_at`, or `None` if never.
    pub fn acceptance_time(&self, issued_at: u64) -> Option<u64> {
        self.accepts
            .then(|| issued_at.max(self.ready_at.unwrap_or(self.arrival_time)))
    }
}

/// Chance that an accepting driver travels on a different route than the
/// one assigned.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Compliance {
    #[serde(default)]
    pub deviate_probability: f64,
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads JSON when the extension is `.json`, TOML otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::InvalidConfig("horizon must be >= 1".into()));
        }
        if self.routes.is_empty() {
            return Err(Error::InvalidConfig("at least one route is required".into()));
        }
        let mut ids = BTreeSet::new();
        for r in &self.routes {
            r.validate()?;
            if !ids.insert(r.id) {
                return Err(Error::InvalidConfig(format!("duplicate route id {}", r.id)));
            }
        }
        self.toll.validate()?;
        self.predictor.validate()?;
        let p = self.compliance.deviate_probability;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig("deviate_probability must lie in [0, 1]".into()));
        }
        match &self.arrivals {
            ArrivalProcess::Scripted { drivers } => {
                let mut seen = BTreeSet::new();
                for d in drivers {
                    d.spec().validate()?;
                    if !seen.insert(d.id) {
                        return Err(Error::InvalidConfig(format!("duplicate driver id {}", d.id)));
                    }
                    if d.arrival_time >= self.horizon {
                        return Err(Error::InvalidConfig(format!(
                            "driver {} arrives at {} beyond horizon {}",
                            d.id, d.arrival_time, self.horizon
                        )));
                    }
                    if let Some(r) = d.travels_on {
                        if !ids.contains(&r) {
                            return Err(Error::InvalidConfig(format!(
                                "driver {} travels on unknown route {r}",
                                d.id
                            )));
                        }
                    }
                }
            }
            ArrivalProcess::Random(r) => {
                if !(r.rate.is_finite() && r.rate >= 0.0) {
                    return Err(Error::InvalidConfig("arrival rate must be >= 0".into()));
                }
                if !(r.alpha_min >= 0.0 && r.alpha_min <= r.alpha_max && r.alpha_max.is_finite()) {
                    return Err(Error::InvalidConfig("need 0 <= alpha_min <= alpha_max".into()));
                }
                if r.deadline_window < 1 {
                    return Err(Error::InvalidConfig("deadline_window must be >= 1".into()));
                }
            }
        }
        Ok(())
    }

    /// The driver population in id order. Random arrivals are drawn from
    /// the arrivals and willingness substreams of the scenario seed.
    pub fn drivers(&self) -> Vec<ScriptedDriver> {
        match &self.arrivals {
            ArrivalProcess::Scripted { drivers } => {
                let mut drivers = drivers.clone();
                drivers.sort_by_key(|d| d.id);
                drivers
            }
            ArrivalProcess::Random(r) => {
                let mut counts = stream(self.seed, Concern::Arrivals);
                let mut alphas = stream(self.seed, Concern::Willingness);
                let poisson = (r.rate > 0.0).then(|| Poisson::new(r.rate).expect("rate > 0"));
                let mut out = Vec::new();
                for t in 0..self.horizon {
                    let n = poisson.as_ref().map_or(0, |p| p.sample(&mut counts) as u64);
                    for _ in 0..n {
                        let alpha = if r.alpha_max > r.alpha_min {
                            alphas.random_range(r.alpha_min..r.alpha_max)
                        } else {
                            r.alpha_min
                        };
                        out.push(ScriptedDriver::new(out.len() as u32, t, alpha, r.deadline_window));
                    }
                }
                out
            }
        }
    }

    /// This scenario with the random population frozen into a script.
    pub fn scripted(&self) -> ScenarioConfig {
        ScenarioConfig {
            arrivals: ArrivalProcess::Scripted {
                drivers: self.drivers(),
            },
            ..self.clone()
        }
    }
}

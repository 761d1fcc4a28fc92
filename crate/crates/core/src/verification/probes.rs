//! Unilateral deviation probes for strategy-proofness.
//!
//! Each probe runs a scenario twice: once with every driver truthful and
//! once with a single driver misreporting. Everyone else, the seed and the
//! route setup stay fixed, so any utility difference is due to the
//! deviation.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matching::MatchMode;
use crate::model::{DriverId, RouteSpec, EPS};
use crate::predictor::Predictor;
use crate::sim::rng::{stream, Concern};
use crate::sim::{run, ArrivalProcess, Compliance, ScenarioConfig, ScriptedDriver};
use crate::toll::TollConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationKind {
    /// Report an arrival earlier than the true readiness time.
    EarlyArrival,
    /// Report a willingness to pay below the true one.
    UnderReport,
}

impl DeviationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DeviationKind::EarlyArrival => "early_arrival",
            DeviationKind::UnderReport => "under_report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationOutcome {
    pub kind: DeviationKind,
    pub driver: DriverId,
    /// Size of the misreport: timesteps for early arrival, willingness
    /// withheld for under-reporting.
    pub amount: f64,
    pub truthful: f64,
    pub deviating: f64,
    /// `deviating <= truthful` up to tolerance.
    pub holds: bool,
}

fn scripted_drivers(cfg: &ScenarioConfig) -> Vec<ScriptedDriver> {
    match cfg.scripted().arrivals {
        ArrivalProcess::Scripted { drivers } => drivers,
        ArrivalProcess::Random(_) => unreachable!("scripted() freezes the population"),
    }
}

fn with_drivers(cfg: &ScenarioConfig, drivers: Vec<ScriptedDriver>) -> ScenarioConfig {
    ScenarioConfig {
        arrivals: ArrivalProcess::Scripted { drivers },
        ..cfg.clone()
    }
}

fn compare(
    kind: DeviationKind,
    cfg: &ScenarioConfig,
    driver: DriverId,
    amount: f64,
    alter: impl FnOnce(&mut ScriptedDriver),
) -> Result<DeviationOutcome> {
    let truthful_drivers = scripted_drivers(cfg);
    let idx = truthful_drivers
        .iter()
        .position(|d| d.id == driver)
        .ok_or(Error::UnknownDriver(driver))?;
    let mut deviating_drivers = truthful_drivers.clone();
    alter(&mut deviating_drivers[idx]);
    let truthful = run(&with_drivers(cfg, truthful_drivers))?.outcome(driver)?.utility;
    let deviating = run(&with_drivers(cfg, deviating_drivers))?.outcome(driver)?.utility;
    Ok(DeviationOutcome {
        kind,
        driver,
        amount,
        truthful,
        deviating,
        holds: deviating <= truthful + EPS,
    })
}

/// The driver reports arriving `shift` steps early but cannot travel
/// before its true arrival time.
pub fn probe_early_arrival(cfg: &ScenarioConfig, driver: DriverId, shift: u64) -> Result<DeviationOutcome> {
    compare(DeviationKind::EarlyArrival, cfg, driver, shift as f64, |d| {
        let ready = d.ready_at.unwrap_or(d.arrival_time);
        d.ready_at = Some(ready);
        d.arrival_time = d.arrival_time.saturating_sub(shift);
    })
}

/// The driver reports a willingness to pay of `reported` instead of its
/// true value.
pub fn probe_under_report(cfg: &ScenarioConfig, driver: DriverId, reported: f64) -> Result<DeviationOutcome> {
    let truth = scripted_drivers(cfg)
        .iter()
        .find(|d| d.id == driver)
        .map(|d| d.willingness_to_pay)
        .ok_or(Error::UnknownDriver(driver))?;
    if !(reported.is_finite() && (0.0..=truth).contains(&reported)) {
        return Err(Error::InvalidDriver {
            driver,
            reason: format!("reported willingness {reported} must lie in [0, {truth}]"),
        });
    }
    compare(DeviationKind::UnderReport, cfg, driver, truth - reported, |d| {
        d.willingness_to_pay = reported;
    })
}

/// A small congested scenario with tolls already on every route, so that
/// charges bind and travel times exceed free flow.
pub fn random_probe_scenario<R: Rng>(rng: &mut R) -> ScenarioConfig {
    let route_count = rng.random_range(1..=3u32);
    let routes = (1..=route_count)
        .map(|id| {
            let threshold = rng.random_range(1..=3) as f64;
            RouteSpec::new(id, rng.random_range(5.0..15.0), threshold, rng.random_range(3..=8))
        })
        .collect();
    let horizon = 12;
    let driver_count = rng.random_range(3..=10u32);
    let alpha_max = rng.random_range(2.0..10.0);
    let drivers = (0..driver_count)
        .map(|id| {
            ScriptedDriver::new(
                id,
                rng.random_range(0..horizon / 2),
                rng.random_range(0.0..alpha_max),
                rng.random_range(1..=3),
            )
        })
        .collect();
    ScenarioConfig {
        horizon,
        routes,
        toll: TollConfig {
            beta: rng.random_range(0.0..0.5),
            horizon: 1,
            fixed_penalty: 1.0,
            initial_toll: rng.random_range(1.0..6.0),
        },
        predictor: Predictor::Persistence,
        arrivals: ArrivalProcess::Scripted { drivers },
        matching_mode: MatchMode::Utility,
        compliance: Compliance::default(),
        seed: rng.random(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeSweep {
    pub kind: DeviationKind,
    pub outcomes: Vec<DeviationOutcome>,
}

impl ProbeSweep {
    pub fn violations(&self) -> impl Iterator<Item = &DeviationOutcome> {
        self.outcomes.iter().filter(|o| !o.holds)
    }

    pub fn violation_count(&self) -> usize {
        self.violations().count()
    }

    pub fn max_gain(&self) -> f64 {
        self.outcomes
            .iter()
            .map(|o| o.deviating - o.truthful)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Runs `count` seeded probes of one kind on random congested scenarios.
pub fn probe_sweep(kind: DeviationKind, count: usize, seed: u64) -> Result<ProbeSweep> {
    if count == 0 {
        return Err(Error::NoTrials);
    }
    let mut rng = stream(seed, Concern::Probes);
    let mut outcomes = Vec::with_capacity(count);
    for _ in 0..count {
        let cfg = random_probe_scenario(&mut rng);
        let drivers = scripted_drivers(&cfg);
        let target = &drivers[rng.random_range(0..drivers.len())];
        let outcome = match kind {
            DeviationKind::EarlyArrival => {
                let shift = rng.random_range(1..=2 * target.deadline_window + 1);
                probe_early_arrival(&cfg, target.id, shift)?
            }
            DeviationKind::UnderReport => {
                let reported = rng.random_range(0.0..=target.willingness_to_pay);
                probe_under_report(&cfg, target.id, reported)?
            }
        };
        outcomes.push(outcome);
    }
    Ok(ProbeSweep { kind, outcomes })
}

//! Deterministic discrete-time simulator.
//!
//! Each timestep runs, in this order:
//!
//! 1. record `X_t` per route: departures since the previous record;
//! 2. forecast `X_{t+q}` with the configured predictor;
//! 3. update route tolls;
//! 4. match arrivals in driver-id order;
//! 5. resolve pending offers (accept on the driver's acceptance step, expire
//!    on `deadline + 1`);
//! 6. charge switching penalties for this step's departures, advance trips
//!    and complete finished ones, then snapshot every route.
//!
//! A trip lasts `ceil(E_t)` timesteps, with `E_t` evaluated on the route
//! actually used just before the driver joins it. The run is event-sourced:
//! the metrics are folded from the same events that make up the log, so
//! [`replay`] of a written log reproduces the report exactly.

mod config;
mod events;
mod metrics;
pub mod rng;

use std::collections::BTreeMap;

use rand::Rng;

pub use config::{ArrivalProcess, Compliance, RandomArrivals, ScenarioConfig, ScriptedDriver};
pub use events::{Event, EventKind, EventLog, HEADER as EVENT_LOG_HEADER};
pub use metrics::{MetricsReport, MetricsSummary, TraceRow};

use crate::error::{Error, Result};
use crate::matching::{assign_online, Assignment, AssignmentStatus};
use crate::model::{route_cost, travel_time, DriverId, RouteId, RouteState};
use crate::predictor::FlowPredictor;
use crate::sim::rng::{driver_stream, Concern};
use crate::toll::{per_driver_charge, update_toll};
use metrics::MetricsBuilder;

/// What one driver ended up with.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverOutcome {
    pub driver: DriverId,
    /// `None` when no route was eligible at arrival.
    pub status: Option<AssignmentStatus>,
    pub assigned_route: Option<RouteId>,
    pub actual_route: Option<RouteId>,
    pub charge: f64,
    pub penalty: f64,
    /// Realized utility; 0 when unmatched, expired or still pending.
    pub utility: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub log: EventLog,
    pub horizon: u64,
    pub assignments: Vec<Assignment>,
    pub outcomes: BTreeMap<DriverId, DriverOutcome>,
}

impl RunOutput {
    pub fn event_log_csv(&self) -> String {
        self.log.to_csv(self.horizon)
    }

    pub fn outcome(&self, driver: DriverId) -> Result<&DriverOutcome> {
        self.outcomes.get(&driver).ok_or(Error::UnknownDriver(driver))
    }
}

/// Runs a scenario to its horizon.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mut engine = Engine::new(cfg);
    for t in 0..cfg.horizon {
        engine.step(t)?;
    }
    Ok(engine.finish())
}

/// Rebuilds the metrics report from a written event log.
pub fn replay(log_text: &str) -> Result<MetricsReport> {
    MetricsReport::from_log(&EventLog::parse(log_text)?)
}

struct Trip {
    assignment: usize,
    route: usize,
    departed_at: u64,
    remaining: u64,
}

struct Engine<'c> {
    cfg: &'c ScenarioConfig,
    drivers: Vec<ScriptedDriver>,
    arrivals: BTreeMap<u64, Vec<usize>>,
    route_index: BTreeMap<RouteId, usize>,
    states: Vec<RouteState>,
    departures: Vec<u32>,
    assignments: Vec<Assignment>,
    assignment_driver: Vec<usize>,
    actual_route: Vec<Option<usize>>,
    penalties: Vec<f64>,
    pending: Vec<usize>,
    trips: Vec<Trip>,
    log: EventLog,
    metrics: MetricsBuilder,
}

impl<'c> Engine<'c> {
    fn new(cfg: &'c ScenarioConfig) -> Self {
        let drivers = cfg.drivers();
        let mut arrivals: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, d) in drivers.iter().enumerate() {
            arrivals.entry(d.arrival_time).or_default().push(i);
        }
        let route_index = cfg.routes.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
        Engine {
            cfg,
            drivers,
            arrivals,
            route_index,
            states: vec![RouteState::with_toll(cfg.toll.initial_toll); cfg.routes.len()],
            departures: vec![0; cfg.routes.len()],
            assignments: Vec::new(),
            assignment_driver: Vec::new(),
            actual_route: Vec::new(),
            penalties: Vec::new(),
            pending: Vec::new(),
            trips: Vec::new(),
            log: EventLog::new(),
            metrics: MetricsBuilder::default(),
        }
    }

    fn emit(&mut self, event: Event) {
        self.metrics
            .apply(&event)
            .expect("engine emits only well-formed events");
        self.log.push(event);
    }

    fn step(&mut self, t: u64) -> Result<()> {
        self.update_tolls(t)?;
        self.match_arrivals(t)?;
        self.resolve_offers(t)?;
        self.advance_trips(t)?;
        self.snapshot(t)
    }

    fn update_tolls(&mut self, t: u64) -> Result<()> {
        let cfg = self.cfg;
        let toll_cfg = &cfg.toll;
        for r in 0..self.states.len() {
            let id = cfg.routes[r].id;
            let flow = f64::from(std::mem::take(&mut self.departures[r]));
            let state = &mut self.states[r];
            state.flow_history.push(flow);
            let forecast = cfg.predictor.predict(&state.flow_history, toll_cfg.horizon)?;
            state.toll = update_toll(state.toll, toll_cfg, forecast, flow);
            let toll = state.toll;
            self.emit(Event::route(t, EventKind::Flow, id, flow));
            self.emit(Event::route(t, EventKind::Forecast, id, forecast));
            self.emit(Event::route(t, EventKind::Toll, id, toll));
        }
        Ok(())
    }

    fn match_arrivals(&mut self, t: u64) -> Result<()> {
        let Some(arriving) = self.arrivals.remove(&t) else {
            return Ok(());
        };
        for idx in arriving {
            let spec = self.drivers[idx].spec();
            let routes = self.cfg.routes.iter().zip(self.states.iter());
            match assign_online(&spec, routes, self.cfg.matching_mode, t)? {
                Some(a) => {
                    let r = self.route_index[&a.route];
                    self.states[r].pending += 1;
                    self.emit(Event::driver(t, EventKind::Assign, spec.id, Some(a.route), a.charge));
                    self.emit(Event::driver(
                        t,
                        EventKind::Quote,
                        spec.id,
                        Some(a.route),
                        a.quoted_utility(),
                    ));
                    self.pending.push(self.assignments.len());
                    self.assignments.push(a);
                    self.assignment_driver.push(idx);
                    self.actual_route.push(None);
                    self.penalties.push(0.0);
                }
                None => self.emit(Event::driver(t, EventKind::Unmatched, spec.id, None, 0.0)),
            }
        }
        Ok(())
    }

    fn resolve_offers(&mut self, t: u64) -> Result<()> {
        let pending = std::mem::take(&mut self.pending);
        for a in pending {
            let driver = &self.drivers[self.assignment_driver[a]];
            let accept_at = driver.acceptance_time(self.assignments[a].issued_at);
            let deadline = self.assignments[a].deadline;
            if accept_at == Some(t) && t <= deadline {
                self.accept(a, t)?;
            } else if t > deadline {
                self.assignments[a].resolve_deadline(None)?;
                let r = self.route_index[&self.assignments[a].route];
                self.states[r].pending -= 1;
                let (id, route) = (self.assignments[a].driver, self.assignments[a].route);
                self.emit(Event::driver(t, EventKind::Expire, id, Some(route), 0.0));
            } else {
                self.pending.push(a);
            }
        }
        Ok(())
    }

    fn accept(&mut self, a: usize, t: u64) -> Result<()> {
        self.assignments[a].resolve_deadline(Some(t))?;
        let assigned = self.route_index[&self.assignments[a].route];
        self.states[assigned].pending -= 1;
        let actual = self.choose_route(a, assigned);
        let cfg = self.cfg;
        let spec = &cfg.routes[actual];
        let state = &mut self.states[actual];
        let duration = travel_time(spec, f64::from(state.occupancy))?.ceil().max(1.0) as u64;
        state.occupancy += 1;
        self.departures[actual] += 1;
        self.actual_route[a] = Some(actual);
        self.trips.push(Trip {
            assignment: a,
            route: actual,
            departed_at: t,
            remaining: duration,
        });
        let (id, charge) = (self.assignments[a].driver, self.assignments[a].charge);
        let assigned_id = self.assignments[a].route;
        self.emit(Event::driver(t, EventKind::Accept, id, Some(assigned_id), charge));
        self.emit(Event::driver(t, EventKind::Depart, id, Some(spec.id), duration as f64));
        Ok(())
    }

    /// Route the accepting driver actually takes. Deviations only go to
    /// routes with a free slot; with none available the driver complies.
    fn choose_route(&self, a: usize, assigned: usize) -> usize {
        let driver = &self.drivers[self.assignment_driver[a]];
        let has_room = |r: usize| self.states[r].reserved() < self.cfg.routes[r].slot_capacity;
        if let Some(target) = driver.travels_on {
            let r = self.route_index[&target];
            return if r == assigned || has_room(r) { r } else { assigned };
        }
        let p = self.cfg.compliance.deviate_probability;
        if p <= 0.0 {
            return assigned;
        }
        let mut rng = driver_stream(self.cfg.seed, Concern::Compliance, driver.id);
        if rng.random::<f64>() >= p {
            return assigned;
        }
        let others: Vec<usize> = (0..self.states.len())
            .filter(|&r| r != assigned && has_room(r))
            .collect();
        if others.is_empty() {
            assigned
        } else {
            others[rng.random_range(0..others.len())]
        }
    }

    fn advance_trips(&mut self, t: u64) -> Result<()> {
        for i in 0..self.trips.len() {
            if self.trips[i].departed_at != t {
                continue;
            }
            let (a, r) = (self.trips[i].assignment, self.trips[i].route);
            let route_id = self.cfg.routes[r].id;
            let toll = self.states[r].toll;
            let charged = self.assignments[a].enforce_penalty(route_id, toll, &self.cfg.toll)?;
            if self.assignments[a].status() == AssignmentStatus::Penalized {
                self.penalties[a] = charged;
                let id = self.assignments[a].driver;
                self.emit(Event::driver(t, EventKind::Penalty, id, Some(route_id), charged));
            }
        }
        let mut finished = Vec::new();
        self.trips.retain_mut(|trip| {
            if trip.departed_at == t {
                return true;
            }
            trip.remaining -= 1;
            if trip.remaining == 0 {
                finished.push((trip.assignment, trip.route));
                false
            } else {
                true
            }
        });
        for (a, r) in finished {
            self.states[r].occupancy -= 1;
            if self.assignments[a].status() == AssignmentStatus::Accepted {
                self.assignments[a].complete()?;
            }
            let id = self.assignments[a].driver;
            self.emit(Event::driver(
                t,
                EventKind::Complete,
                id,
                Some(self.cfg.routes[r].id),
                0.0,
            ));
        }
        Ok(())
    }

    fn snapshot(&mut self, t: u64) -> Result<()> {
        let cfg = self.cfg;
        for r in 0..self.states.len() {
            let spec = &cfg.routes[r];
            let state = &self.states[r];
            let charge = per_driver_charge(state.toll, state.occupancy, spec.threshold_capacity);
            let distributed: f64 = self.trips.iter().filter(|trip| trip.route == r).map(|_| charge).sum();
            let travel = travel_time(spec, f64::from(state.occupancy))?;
            let cost = route_cost(travel, spec.free_flow_time, state.toll)?;
            let (id, occupancy) = (spec.id, f64::from(state.occupancy));
            self.emit(Event::route(t, EventKind::Occupancy, id, occupancy));
            self.emit(Event::route(t, EventKind::Charge, id, charge));
            self.emit(Event::route(t, EventKind::Distributed, id, distributed));
            self.emit(Event::route(t, EventKind::RouteCost, id, cost));
        }
        Ok(())
    }

    fn finish(self) -> RunOutput {
        let mut outcomes: BTreeMap<DriverId, DriverOutcome> = self
            .drivers
            .iter()
            .map(|d| {
                let outcome = DriverOutcome {
                    driver: d.id,
                    status: None,
                    assigned_route: None,
                    actual_route: None,
                    charge: 0.0,
                    penalty: 0.0,
                    utility: 0.0,
                };
                (d.id, outcome)
            })
            .collect();
        for (i, a) in self.assignments.iter().enumerate() {
            let o = outcomes.get_mut(&a.driver).expect("assigned driver is known");
            o.status = Some(a.status());
            o.assigned_route = Some(a.route);
            o.actual_route = self.actual_route[i].map(|r| self.cfg.routes[r].id);
            o.charge = a.charge;
            o.penalty = self.penalties[i];
            o.utility = a.realized_utility();
        }
        RunOutput {
            report: self.metrics.finish(),
            log: self.log,
            horizon: self.cfg.horizon,
            assignments: self.assignments,
            outcomes,
        }
    }
}

//! Online driver-to-route assignment and the assignment lifecycle.
//!
//! Each arriving driver is quoted every route that still has a free slot and
//! whose per-driver charge does not exceed the driver's willingness to pay.
//! Utility mode ranks quotes by descending projected utility, cost mode by
//! ascending projected route cost. Either way ties go to the route with more
//! residual free-flow capacity `k_f - k_t`, then to the lower route id, so
//! the ranking is a total order. The charge and travel time are frozen into
//! the assignment when it is issued.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{driver_utility, route_cost, travel_time, DriverId, DriverSpec, RouteId, RouteSpec, RouteState};
use crate::toll::{penalty, per_driver_charge, TollConfig};

/// What a driver would face on a route right now.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteQuote {
    pub route: RouteId,
    pub charge: f64,
    pub travel_time: f64,
    pub free_flow_time: f64,
    /// Projected driver utility `U(E, C)_d`.
    pub utility: f64,
    /// Projected route cost `R(E, C)_r`.
    pub cost: f64,
    /// `k_f - k_t`; may be negative on a congested route.
    pub residual: f64,
}

impl RouteQuote {
    pub fn for_route(spec: &RouteSpec, state: &RouteState) -> Result<Self> {
        let occupancy = f64::from(state.occupancy);
        let travel = travel_time(spec, occupancy)?;
        let charge = per_driver_charge(state.toll, state.occupancy, spec.threshold_capacity);
        Ok(RouteQuote {
            route: spec.id,
            charge,
            travel_time: travel,
            free_flow_time: spec.free_flow_time,
            utility: driver_utility(spec.free_flow_time, travel, charge),
            cost: route_cost(travel, spec.free_flow_time, state.toll)?,
            residual: spec.threshold_capacity - occupancy,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Rank by descending projected utility.
    #[default]
    Utility,
    /// Rank by ascending projected route cost.
    Cost,
}

/// Routes the driver can afford that still have a free slot.
pub fn eligible_routes<'a, I>(driver: &DriverSpec, routes: I) -> Result<Vec<RouteQuote>>
where
    I: IntoIterator<Item = (&'a RouteSpec, &'a RouteState)>,
{
    let mut out = Vec::new();
    for (spec, state) in routes {
        if state.reserved() >= spec.slot_capacity {
            continue;
        }
        let quote = RouteQuote::for_route(spec, state)?;
        if quote.charge <= driver.willingness_to_pay {
            out.push(quote);
        }
    }
    Ok(out)
}

fn tie_break(a: &RouteQuote, b: &RouteQuote) -> Ordering {
    b.residual.total_cmp(&a.residual).then_with(|| a.route.cmp(&b.route))
}

pub fn rank_routes_by_utility(mut candidates: Vec<RouteQuote>) -> Vec<RouteQuote> {
    candidates.sort_by(|a, b| b.utility.total_cmp(&a.utility).then_with(|| tie_break(a, b)));
    candidates
}

pub fn rank_routes_by_cost(mut candidates: Vec<RouteQuote>) -> Vec<RouteQuote> {
    candidates.sort_by(|a, b| a.cost.total_cmp(&b.cost).then_with(|| tie_break(a, b)));
    candidates
}

pub fn rank_routes(mode: MatchMode, candidates: Vec<RouteQuote>) -> Vec<RouteQuote> {
    match mode {
        MatchMode::Utility => rank_routes_by_utility(candidates),
        MatchMode::Cost => rank_routes_by_cost(candidates),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentStatus {
    Pending,
    Accepted,
    Expired,
    Penalized,
    Completed,
}

impl AssignmentStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            AssignmentStatus::Pending => "pending",
            AssignmentStatus::Accepted => "accepted",
            AssignmentStatus::Expired => "expired",
            AssignmentStatus::Penalized => "penalized",
            AssignmentStatus::Completed => "completed",
        }
    }
}

/// A route offer issued to one driver.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub driver: DriverId,
    pub route: RouteId,
    pub issued_at: u64,
    /// Last timestep at which the driver may still accept.
    pub deadline: u64,
    pub charge: f64,
    pub travel_time: f64,
    pub free_flow_time: f64,
    status: AssignmentStatus,
}

impl Assignment {
    pub fn issue(driver: &DriverSpec, quote: &RouteQuote, now: u64) -> Self {
        Assignment {
            driver: driver.id,
            route: quote.route,
            issued_at: now,
            deadline: now + driver.deadline_window,
            charge: quote.charge,
            travel_time: quote.travel_time,
            free_flow_time: quote.free_flow_time,
            status: AssignmentStatus::Pending,
        }
    }

    pub fn status(&self) -> AssignmentStatus {
        self.status
    }

    fn expect(&self, expected: AssignmentStatus) -> Result<()> {
        if self.status != expected {
            return Err(Error::InvalidTransition {
                driver: self.driver,
                status: self.status.as_str(),
                expected: expected.as_str(),
            });
        }
        Ok(())
    }

    /// Accepts when `accepted_at` is within the closed deadline window,
    /// otherwise expires the offer.
    pub fn resolve_deadline(&mut self, accepted_at: Option<u64>) -> Result<AssignmentStatus> {
        self.expect(AssignmentStatus::Pending)?;
        self.status = match accepted_at {
            Some(t) if t <= self.deadline => AssignmentStatus::Accepted,
            _ => AssignmentStatus::Expired,
        };
        Ok(self.status)
    }

    /// Charges the switching penalty if the driver travelled on a route other
    /// than the assigned one. `actual_toll` is that route's toll at departure.
    pub fn enforce_penalty(&mut self, actual_route: RouteId, actual_toll: f64, cfg: &TollConfig) -> Result<f64> {
        self.expect(AssignmentStatus::Accepted)?;
        if actual_route == self.route {
            return Ok(0.0);
        }
        self.status = AssignmentStatus::Penalized;
        Ok(penalty(actual_toll, cfg))
    }

    pub fn complete(&mut self) -> Result<()> {
        self.expect(AssignmentStatus::Accepted)?;
        self.status = AssignmentStatus::Completed;
        Ok(())
    }

    pub fn quoted_utility(&self) -> f64 {
        driver_utility(self.free_flow_time, self.travel_time, self.charge)
    }

    /// Utility the driver actually realizes: the quoted utility once the
    /// offer was taken up, 0 while pending or after expiry.
    pub fn realized_utility(&self) -> f64 {
        match self.status {
            AssignmentStatus::Pending | AssignmentStatus::Expired => 0.0,
            _ => self.quoted_utility(),
        }
    }
}

/// Matches one arriving driver: best utility in utility mode, lowest route
/// cost in cost mode.
/// Returns `None` when no route is eligible.
pub fn assign_online<'a, I>(driver: &DriverSpec, routes: I, mode: MatchMode, now: u64) -> Result<Option<Assignment>>
where
    I: IntoIterator<Item = (&'a RouteSpec, &'a RouteState)>,
{
    let ranked = rank_routes(mode, eligible_routes(driver, routes)?);
    Ok(ranked.first().map(|top| Assignment::issue(driver, top, now)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EPS;

    fn driver(alpha: f64, window: u64) -> DriverSpec {
        DriverSpec {
            id: DriverId(7),
            arrival_time: 3,
            willingness_to_pay: alpha,
            deadline_window: window,
        }
    }

    fn quote(route: u32, utility: f64, cost: f64, residual: f64, charge: f64) -> RouteQuote {
        RouteQuote {
            route: RouteId(route),
            charge,
            travel_time: 10.0,
            free_flow_time: 10.0,
            utility,
            cost,
            residual,
        }
    }

    /// r1 is uncongested; r2 sits at twice its threshold with toll 12, so the
    /// per-driver charge is 12 / 200 = 0.06 against a 24-minute delay.
    fn two_routes() -> Vec<(RouteSpec, RouteState)> {
        let r1 = RouteSpec::new(1, 10.0, 100.0, 500);
        let r2 = RouteSpec::new(2, 10.0, 100.0, 500);
        let s1 = RouteState::with_toll(2.0);
        let s2 = RouteState {
            occupancy: 200,
            toll: 12.0,
            ..RouteState::default()
        };
        vec![(r1, s1), (r2, s2)]
    }

    fn view(v: &[(RouteSpec, RouteState)]) -> impl Iterator<Item = (&RouteSpec, &RouteState)> {
        v.iter().map(|(a, b)| (a, b))
    }

    #[test]
    fn quote_uses_current_occupancy() {
        let routes = two_routes();
        let q = RouteQuote::for_route(&routes[1].0, &routes[1].1).unwrap();
        assert!((q.travel_time - 34.0).abs() < EPS);
        assert!((q.charge - 0.06).abs() < EPS);
        assert!((q.utility + 24.0 * 0.06).abs() < EPS);
        assert!((q.cost - 24.0 * 12.0).abs() < EPS);
        assert_eq!(q.residual, -100.0);
    }

    #[test]
    fn eligibility_filters_by_charge() {
        let mk = |charges: &[f64], alpha: f64| {
            let routes: Vec<_> = charges
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    // occupancy 2 > threshold 1 gives charge = toll / 2
                    let spec = RouteSpec::new(i as u32 + 1, 10.0, 1.0, 10);
                    let state = RouteState {
                        occupancy: 2,
                        toll: 2.0 * c,
                        ..RouteState::default()
                    };
                    (spec, state)
                })
                .collect();
            eligible_routes(&driver(alpha, 1), view(&routes))
                .unwrap()
                .into_iter()
                .map(|q| q.route.0)
                .collect::<Vec<_>>()
        };
        assert_eq!(mk(&[0.0, 3.0], 5.0), vec![1, 2]);
        assert_eq!(mk(&[0.0, 3.0], 1.0), vec![1]);
        assert!(mk(&[0.5, 3.0], 0.0).is_empty());
    }

    #[test]
    fn eligibility_respects_slots() {
        let spec = RouteSpec::new(1, 10.0, 5.0, 2);
        let full = RouteState {
            occupancy: 1,
            pending: 1,
            ..RouteState::default()
        };
        let d = driver(100.0, 1);
        assert!(eligible_routes(&d, [(&spec, &full)]).unwrap().is_empty());
    }

    #[test]
    fn utility_ranking_examples() {
        let ids = |v: Vec<RouteQuote>| v.into_iter().map(|q| q.route.0).collect::<Vec<_>>();
        let ranked = rank_routes_by_utility(vec![quote(2, -12.0, 0.0, 0.0, 0.0), quote(1, 0.0, 0.0, 0.0, 0.0)]);
        assert_eq!(ids(ranked), vec![1, 2]);
        let ranked = rank_routes_by_utility(vec![quote(1, 0.0, 0.0, 20.0, 0.0), quote(2, 0.0, 0.0, 80.0, 0.0)]);
        assert_eq!(ids(ranked), vec![2, 1]);
        let ranked = rank_routes_by_utility(vec![quote(1, -3.0, 0.0, 0.0, 0.0)]);
        assert_eq!(ids(ranked), vec![1]);
        // full tie falls back to route id
        let ranked = rank_routes_by_utility(vec![quote(5, 0.0, 0.0, 1.0, 0.0), quote(3, 0.0, 0.0, 1.0, 0.0)]);
        assert_eq!(ids(ranked), vec![3, 5]);
    }

    #[test]
    fn cost_ranking_is_ascending() {
        let ranked = rank_routes_by_cost(vec![quote(1, 0.0, 48.0, 0.0, 0.0), quote(2, 0.0, 0.0, 0.0, 0.0)]);
        assert_eq!(ranked[0].route, RouteId(2));
    }

    #[test]
    fn assign_online_modes() {
        let routes = two_routes();
        let d = driver(10.0, 2);
        let a = assign_online(&d, view(&routes), MatchMode::Utility, 3)
            .unwrap()
            .unwrap();
        assert_eq!(a.route, RouteId(1));
        assert_eq!(a.status(), AssignmentStatus::Pending);
        assert_eq!(a.deadline, 5);

        // r1 uncongested but tolled has cost 0; make r1 the costly one
        let r1 = RouteSpec::new(1, 10.0, 100.0, 500);
        let s1 = RouteState {
            occupancy: 200,
            toll: 2.0,
            ..RouteState::default()
        };
        let r2 = RouteSpec::new(2, 10.0, 100.0, 500);
        let s2 = RouteState::default();
        let a = assign_online(&d, [(&r1, &s1), (&r2, &s2)], MatchMode::Cost, 0)
            .unwrap()
            .unwrap();
        assert_eq!(a.route, RouteId(2));

        let none = assign_online(&driver(0.0, 1), [(&r1, &s1)], MatchMode::Utility, 0).unwrap();
        assert!(none.is_none());
    }

    #[test]
    fn issued_charge_never_exceeds_willingness() {
        let routes = two_routes();
        for alpha in [0.0, 0.01, 0.06, 0.5] {
            if let Some(a) = assign_online(&driver(alpha, 1), view(&routes), MatchMode::Cost, 0).unwrap() {
                assert!(a.charge <= alpha);
            }
        }
    }

    fn pending() -> Assignment {
        Assignment::issue(&driver(1.0, 2), &quote(1, -1.0, 0.0, 0.0, 0.5), 3)
    }

    #[test]
    fn deadline_resolution() {
        let mut a = pending();
        assert_eq!(a.resolve_deadline(Some(5)).unwrap(), AssignmentStatus::Accepted);
        assert!(a.resolve_deadline(Some(5)).is_err());

        let mut a = pending();
        assert_eq!(a.resolve_deadline(Some(6)).unwrap(), AssignmentStatus::Expired);
        assert_eq!(a.realized_utility(), 0.0);

        let mut a = pending();
        assert_eq!(a.resolve_deadline(None).unwrap(), AssignmentStatus::Expired);
        assert_eq!(a.realized_utility(), 0.0);
    }

    #[test]
    fn penalty_enforcement() {
        let cfg = TollConfig {
            fixed_penalty: 5.0,
            ..TollConfig::default()
        };
        let mut a = pending();
        a.resolve_deadline(Some(3)).unwrap();
        assert_eq!(a.enforce_penalty(RouteId(1), 3.0, &cfg).unwrap(), 0.0);
        a.complete().unwrap();
        assert_eq!(a.status(), AssignmentStatus::Completed);

        let mut a = pending();
        a.resolve_deadline(Some(3)).unwrap();
        assert_eq!(a.enforce_penalty(RouteId(2), 3.0, &cfg).unwrap(), 8.0);
        assert_eq!(a.status(), AssignmentStatus::Penalized);
        assert!(a.complete().is_err());

        let mut a = pending();
        a.resolve_deadline(Some(3)).unwrap();
        assert_eq!(a.enforce_penalty(RouteId(2), 0.0, &TollConfig::default()).unwrap(), 0.0);

        let mut a = pending();
        assert!(a.enforce_penalty(RouteId(2), 0.0, &cfg).is_err());
    }
}

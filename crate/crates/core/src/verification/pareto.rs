//! Pareto-dominance checking on frozen instances.
//!
//! A frozen instance fixes each driver's utility for every route it is
//! eligible for, with no congestion feedback. An alternative matching
//! dominates a candidate when every driver is at least as well off and one
//! driver strictly better; an unmatched driver has utility 0.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matching::{rank_routes_by_utility, RouteQuote};
use crate::model::{DriverSpec, RouteId, RouteSpec, RouteState, EPS};

/// Enumeration guard on both drivers and total slots.
pub const MAX_ENUMERATION: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct FrozenRoute {
    pub id: RouteId,
    pub slots: u32,
    /// `k_f - k_t` used for tie-breaking, fixed for the instance.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrozenInstance {
    pub routes: Vec<FrozenRoute>,
    /// `utilities[d][r]` for drivers in arrival order; `None` when driver `d`
    /// is not eligible for route `r`.
    pub utilities: Vec<Vec<Option<f64>>>,
}

/// Route index per driver, `None` when unmatched.
pub type FrozenAssignment = Vec<Option<usize>>;

#[derive(Debug, Clone, PartialEq)]
pub enum ParetoVerdict {
    Undominated,
    Dominated { witness: FrozenAssignment },
}

impl ParetoVerdict {
    pub fn is_undominated(&self) -> bool {
        matches!(self, ParetoVerdict::Undominated)
    }
}

impl FrozenInstance {
    /// Freezes the quotes each driver would see against the given route
    /// states; eligibility is the usual charge-within-willingness filter.
    pub fn from_quotes(routes: &[(RouteSpec, RouteState)], drivers: &[DriverSpec]) -> Result<Self> {
        let quotes = routes
            .iter()
            .map(|(spec, state)| RouteQuote::for_route(spec, state))
            .collect::<Result<Vec<_>>>()?;
        let frozen_routes = routes
            .iter()
            .zip(&quotes)
            .map(|((spec, state), q)| FrozenRoute {
                id: spec.id,
                slots: spec.slot_capacity.saturating_sub(state.reserved()),
                residual: q.residual,
            })
            .collect();
        let utilities = drivers
            .iter()
            .map(|d| {
                quotes
                    .iter()
                    .map(|q| (q.charge <= d.willingness_to_pay).then_some(q.utility))
                    .collect()
            })
            .collect();
        Ok(FrozenInstance {
            routes: frozen_routes,
            utilities,
        })
    }

    pub fn drivers(&self) -> usize {
        self.utilities.len()
    }

    pub fn total_slots(&self) -> usize {
        self.routes.iter().map(|r| r.slots as usize).sum()
    }

    fn guard(&self) -> Result<()> {
        if self.drivers() > MAX_ENUMERATION || self.total_slots() > MAX_ENUMERATION {
            return Err(Error::InstanceTooLarge {
                drivers: self.drivers(),
                slots: self.total_slots(),
                limit: MAX_ENUMERATION,
            });
        }
        if self.utilities.iter().any(|u| u.len() != self.routes.len()) {
            return Err(Error::InvalidInstance("utility rows must cover every route".into()));
        }
        Ok(())
    }

    pub fn utility(&self, driver: usize, route: Option<usize>) -> f64 {
        route.and_then(|r| self.utilities[driver][r]).unwrap_or(0.0)
    }

    pub fn welfare(&self, assignment: &FrozenAssignment) -> f64 {
        assignment.iter().enumerate().map(|(d, &r)| self.utility(d, r)).sum()
    }

    /// True when every match is eligible and no route is over capacity.
    pub fn is_feasible(&self, assignment: &FrozenAssignment) -> bool {
        if assignment.len() != self.drivers() {
            return false;
        }
        let mut load = vec![0u32; self.routes.len()];
        for (d, &r) in assignment.iter().enumerate() {
            if let Some(r) = r {
                if r >= self.routes.len() || self.utilities[d][r].is_none() {
                    return false;
                }
                load[r] += 1;
            }
        }
        load.iter().zip(&self.routes).all(|(&l, route)| l <= route.slots)
    }
}

/// Online utility-ranked assignment over the frozen utilities: each driver
/// in turn takes the top-ranked eligible route that still has a slot.
pub fn serial_assign(instance: &FrozenInstance) -> FrozenAssignment {
    let mut remaining: Vec<u32> = instance.routes.iter().map(|r| r.slots).collect();
    instance
        .utilities
        .iter()
        .map(|row| {
            let candidates = instance
                .routes
                .iter()
                .enumerate()
                .filter(|&(r, _)| remaining[r] > 0)
                .filter_map(|(r, route)| {
                    row[r].map(|utility| RouteQuote {
                        route: route.id,
                        charge: 0.0,
                        travel_time: 0.0,
                        free_flow_time: 0.0,
                        utility,
                        cost: 0.0,
                        residual: route.residual,
                    })
                })
                .collect();
            let top = rank_routes_by_utility(candidates).into_iter().next()?;
            let r = instance
                .routes
                .iter()
                .position(|route| route.id == top.route)
                .expect("quote came from this instance");
            remaining[r] -= 1;
            Some(r)
        })
        .collect()
}

/// Searches every feasible matching for one that Pareto-dominates
/// `candidate`.
pub fn pareto_check(instance: &FrozenInstance, candidate: &FrozenAssignment) -> Result<ParetoVerdict> {
    instance.guard()?;
    if !instance.is_feasible(candidate) {
        return Err(Error::InvalidInstance("candidate matching is infeasible".into()));
    }
    let floor: Vec<f64> = (0..instance.drivers())
        .map(|d| instance.utility(d, candidate[d]))
        .collect();
    let mut search = DominanceSearch {
        instance,
        floor: &floor,
        remaining: instance.routes.iter().map(|r| r.slots).collect(),
        current: Vec::with_capacity(instance.drivers()),
    };
    Ok(match search.run(false) {
        Some(witness) => ParetoVerdict::Dominated { witness },
        None => ParetoVerdict::Undominated,
    })
}

struct DominanceSearch<'a> {
    instance: &'a FrozenInstance,
    floor: &'a [f64],
    remaining: Vec<u32>,
    current: FrozenAssignment,
}

impl DominanceSearch<'_> {
    fn run(&mut self, strict: bool) -> Option<FrozenAssignment> {
        let d = self.current.len();
        if d == self.instance.drivers() {
            return strict.then(|| self.current.clone());
        }
        let options = std::iter::once(None).chain((0..self.instance.routes.len()).map(Some));
        for option in options {
            if let Some(r) = option {
                if self.remaining[r] == 0 || self.instance.utilities[d][r].is_none() {
                    continue;
                }
            }
            let u = self.instance.utility(d, option);
            if u < self.floor[d] - EPS {
                continue;
            }
            let better = u > self.floor[d] + EPS;
            if let Some(r) = option {
                self.remaining[r] -= 1;
            }
            self.current.push(option);
            let found = self.run(strict || better);
            self.current.pop();
            if let Some(r) = option {
                self.remaining[r] += 1;
            }
            if found.is_some() {
                return found;
            }
        }
        None
    }
}

/// Welfare-maximizing matching by exhaustive enumeration.
pub fn max_welfare_assignment(instance: &FrozenInstance) -> Result<(FrozenAssignment, f64)> {
    instance.guard()?;
    fn go(
        inst: &FrozenInstance,
        remaining: &mut [u32],
        current: &mut FrozenAssignment,
        best: &mut (FrozenAssignment, f64),
    ) {
        let d = current.len();
        if d == inst.drivers() {
            let w = inst.welfare(current);
            if w > best.1 + EPS {
                *best = (current.clone(), w);
            }
            return;
        }
        current.push(None);
        go(inst, remaining, current, best);
        current.pop();
        for r in 0..inst.routes.len() {
            if remaining[r] > 0 && inst.utilities[d][r].is_some() {
                remaining[r] -= 1;
                current.push(Some(r));
                go(inst, remaining, current, best);
                current.pop();
                remaining[r] += 1;
            }
        }
    }
    let mut remaining: Vec<u32> = instance.routes.iter().map(|r| r.slots).collect();
    let mut best = (vec![None; instance.drivers()], 0.0);
    go(instance, &mut remaining, &mut Vec::new(), &mut best);
    Ok(best)
}

/// Random frozen instance with strictly ordered, strictly positive
/// utilities: each driver's eligible routes get distinct values, none equal
/// to the unmatched utility 0.
pub fn random_frozen_instance<R: Rng>(rng: &mut R, max_drivers: usize, max_slots: usize) -> FrozenInstance {
    let drivers = rng.random_range(1..=max_drivers);
    let slots = rng.random_range(1..=max_slots);
    let route_count = rng.random_range(1..=slots.min(4));
    let mut capacities = vec![1u32; route_count];
    for _ in route_count..slots {
        capacities[rng.random_range(0..route_count)] += 1;
    }
    let routes = capacities
        .iter()
        .enumerate()
        .map(|(i, &slots)| FrozenRoute {
            id: RouteId(i as u32 + 1),
            slots,
            residual: rng.random_range(-5.0..5.0),
        })
        .collect();
    let utilities = (0..drivers)
        .map(|_| {
            let mut levels: Vec<u32> = (1..=route_count as u32).collect();
            levels.shuffle(rng);
            levels
                .into_iter()
                .map(|level| {
                    rng.random_bool(0.8)
                        .then(|| f64::from(level) + rng.random_range(0.0..0.5))
                })
                .collect()
        })
        .collect();
    FrozenInstance { routes, utilities }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DriverId;
    use crate::sim::rng::{stream, Concern};

    fn single(utility: f64) -> FrozenInstance {
        FrozenInstance {
            routes: vec![FrozenRoute {
                id: RouteId(1),
                slots: 1,
                residual: 0.0,
            }],
            utilities: vec![vec![Some(utility)]],
        }
    }

    #[test]
    fn single_assignment_is_undominated() {
        let inst = single(2.0);
        assert!(pareto_check(&inst, &vec![Some(0)]).unwrap().is_undominated());
    }

    #[test]
    fn empty_candidate_is_dominated() {
        let inst = single(2.0);
        let verdict = pareto_check(&inst, &vec![None]).unwrap();
        assert_eq!(verdict, ParetoVerdict::Dominated { witness: vec![Some(0)] });
    }

    #[test]
    fn serial_assignment_on_random_instances() {
        let mut rng = stream(17, Concern::Instances);
        for _ in 0..100 {
            let inst = random_frozen_instance(&mut rng, 5, 5);
            let cand = serial_assign(&inst);
            assert!(inst.is_feasible(&cand));
            assert!(pareto_check(&inst, &cand).unwrap().is_undominated(), "{inst:?}");
        }
    }

    #[test]
    fn welfare_optimum_is_undominated() {
        let mut rng = stream(23, Concern::Instances);
        for _ in 0..50 {
            let inst = random_frozen_instance(&mut rng, 5, 5);
            let (best, w) = max_welfare_assignment(&inst).unwrap();
            assert!(w + EPS >= inst.welfare(&serial_assign(&inst)));
            assert!(pareto_check(&inst, &best).unwrap().is_undominated());
        }
    }

    #[test]
    fn serial_tie_break_prefers_residual() {
        let inst = FrozenInstance {
            routes: vec![
                FrozenRoute {
                    id: RouteId(1),
                    slots: 1,
                    residual: 20.0,
                },
                FrozenRoute {
                    id: RouteId(2),
                    slots: 1,
                    residual: 80.0,
                },
            ],
            utilities: vec![vec![Some(0.0), Some(0.0)]],
        };
        assert_eq!(serial_assign(&inst), vec![Some(1)]);
    }

    #[test]
    fn negative_quotes_are_dominated_by_opting_out() {
        let free = RouteSpec::new(1, 10.0, 100.0, 1);
        let congested = RouteSpec::new(2, 10.0, 2.0, 5);
        let congested_state = RouteState {
            occupancy: 3,
            toll: 3.0,
            ..RouteState::default()
        };
        let drivers: Vec<DriverSpec> = (0..2)
            .map(|i| DriverSpec {
                id: DriverId(i),
                arrival_time: 0,
                willingness_to_pay: 2.0,
                deadline_window: 1,
            })
            .collect();
        let inst =
            FrozenInstance::from_quotes(&[(free, RouteState::default()), (congested, congested_state)], &drivers)
                .unwrap();
        assert_eq!(inst.total_slots(), 3);
        let serial = serial_assign(&inst);
        assert_eq!(serial, vec![Some(0), Some(1)]);
        assert!(inst.utility(1, Some(1)) < 0.0);
        match pareto_check(&inst, &serial).unwrap() {
            ParetoVerdict::Dominated { witness } => assert_eq!(witness[1], None),
            ParetoVerdict::Undominated => panic!("negative utility should be dominated"),
        }
    }

    #[test]
    fn guards_and_feasibility() {
        let big = FrozenInstance {
            routes: vec![FrozenRoute {
                id: RouteId(1),
                slots: 9,
                residual: 0.0,
            }],
            utilities: vec![vec![Some(1.0)]],
        };
        assert!(matches!(
            pareto_check(&big, &vec![None]),
            Err(Error::InstanceTooLarge { .. })
        ));
        let inst = single(1.0);
        assert!(pareto_check(&inst, &vec![Some(3)]).is_err());
        assert!(pareto_check(&inst, &vec![]).is_err());
    }
}

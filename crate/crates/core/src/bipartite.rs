//! Drivers-versus-route-slots bipartite graphs and the RANKING online matcher.

use crate::error::{Error, Result};
use crate::model::{DriverSpec, RouteId, RouteSpec};

/// Drivers (left, in arrival order) against unit-capacity route slots (right).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteInstance {
    slots: usize,
    adjacency: Vec<Vec<usize>>,
    slot_routes: Vec<Option<RouteId>>,
}

impl BipartiteInstance {
    /// `adjacency[d]` lists the slots driver `d` may take.
    pub fn new(slots: usize, adjacency: Vec<Vec<usize>>) -> Result<Self> {
        for (d, edges) in adjacency.iter().enumerate() {
            if let Some(&bad) = edges.iter().find(|&&s| s >= slots) {
                return Err(Error::InvalidInstance(format!(
                    "driver {d} references slot {bad}, only {slots} slots exist"
                )));
            }
        }
        let mut adjacency = adjacency;
        for edges in &mut adjacency {
            edges.sort_unstable();
            edges.dedup();
        }
        Ok(BipartiteInstance {
            slots,
            adjacency,
            slot_routes: vec![None; slots],
        })
    }

    /// Expands every route into `slot_capacity` slots and links each driver to
    /// all slots of the routes `eligible` admits.
    pub fn from_routes<F>(drivers: &[DriverSpec], routes: &[RouteSpec], mut eligible: F) -> Result<Self>
    where
        F: FnMut(&DriverSpec, &RouteSpec) -> bool,
    {
        let mut slot_routes = Vec::new();
        let mut route_slots = Vec::with_capacity(routes.len());
        for route in routes {
            let start = slot_routes.len();
            slot_routes.extend(std::iter::repeat_n(Some(route.id), route.slot_capacity as usize));
            route_slots.push(start..slot_routes.len());
        }
        let adjacency = drivers
            .iter()
            .map(|d| {
                routes
                    .iter()
                    .zip(&route_slots)
                    .filter(|(r, _)| eligible(d, r))
                    .flat_map(|(_, range)| range.clone())
                    .collect()
            })
            .collect();
        let mut g = Self::new(slot_routes.len(), adjacency)?;
        g.slot_routes = slot_routes;
        Ok(g)
    }

    /// Every driver adjacent to every slot.
    pub fn complete(drivers: usize, slots: usize) -> Self {
        Self::new(slots, vec![(0..slots).collect(); drivers]).expect("complete graph is valid")
    }

    /// Driver `i` adjacent to slots `i..n`.
    pub fn upper_triangular(n: usize) -> Self {
        Self::new(n, (0..n).map(|i| (i..n).collect()).collect()).expect("triangular graph is valid")
    }

    pub fn drivers(&self) -> usize {
        self.adjacency.len()
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn neighbors(&self, driver: usize) -> &[usize] {
        &self.adjacency[driver]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    /// Route a slot was expanded from, when built by [`Self::from_routes`].
    pub fn slot_route(&self, slot: usize) -> Option<RouteId> {
        self.slot_routes.get(slot).copied().flatten()
    }
}

/// Cardinality matching between drivers and slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteMatching {
    driver_slot: Vec<Option<usize>>,
    slot_driver: Vec<Option<usize>>,
}

impl BipartiteMatching {
    pub fn empty(drivers: usize, slots: usize) -> Self {
        BipartiteMatching {
            driver_slot: vec![None; drivers],
            slot_driver: vec![None; slots],
        }
    }

    pub(crate) fn from_parts(driver_slot: Vec<Option<usize>>, slot_driver: Vec<Option<usize>>) -> Self {
        BipartiteMatching {
            driver_slot,
            slot_driver,
        }
    }

    pub fn cardinality(&self) -> usize {
        self.driver_slot.iter().flatten().count()
    }

    pub fn slot_of(&self, driver: usize) -> Option<usize> {
        self.driver_slot[driver]
    }

    pub fn driver_of(&self, slot: usize) -> Option<usize> {
        self.slot_driver[slot]
    }

    /// Matched `(driver, slot)` pairs in driver order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.driver_slot
            .iter()
            .enumerate()
            .filter_map(|(d, s)| s.map(|s| (d, s)))
            .collect()
    }

    /// True when every pair is an edge of `g` and no slot is used twice.
    pub fn is_valid_for(&self, g: &BipartiteInstance) -> bool {
        if self.driver_slot.len() != g.drivers() || self.slot_driver.len() != g.slots() {
            return false;
        }
        self.pairs()
            .iter()
            .all(|&(d, s)| g.neighbors(d).binary_search(&s).is_ok() && self.slot_driver[s] == Some(d))
            && self.slot_driver.iter().flatten().count() == self.cardinality()
    }
}

/// RANKING: `permutation[i]` is the slot ranked `i`-th. Drivers arrive in
/// order and each takes its best-ranked unmatched neighbour.
pub fn ranking_match(g: &BipartiteInstance, permutation: &[usize]) -> Result<BipartiteMatching> {
    let rank = rank_of(g.slots(), permutation)?;
    let mut m = BipartiteMatching::empty(g.drivers(), g.slots());
    for d in 0..g.drivers() {
        let best = g
            .neighbors(d)
            .iter()
            .copied()
            .filter(|&s| m.slot_driver[s].is_none())
            .min_by_key(|&s| rank[s]);
        if let Some(s) = best {
            m.driver_slot[d] = Some(s);
            m.slot_driver[s] = Some(d);
        }
    }
    Ok(m)
}

fn rank_of(slots: usize, permutation: &[usize]) -> Result<Vec<usize>> {
    if permutation.len() != slots {
        return Err(Error::InvalidPermutation(format!(
            "expected {slots} entries, got {}",
            permutation.len()
        )));
    }
    let mut rank = vec![usize::MAX; slots];
    for (i, &s) in permutation.iter().enumerate() {
        if s >= slots {
            return Err(Error::InvalidPermutation(format!("slot {s} out of range")));
        }
        if rank[s] != usize::MAX {
            return Err(Error::InvalidPermutation(format!("slot {s} listed twice")));
        }
        rank[s] = i;
    }
    Ok(rank)
}

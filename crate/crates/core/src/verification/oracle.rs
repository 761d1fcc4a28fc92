use crate::bipartite::{BipartiteInstance, BipartiteMatching};

/// Maximum-cardinality matching by repeated augmenting-path search (Kuhn).
pub fn offline_max_matching(g: &BipartiteInstance) -> BipartiteMatching {
    let mut driver_slot = vec![None; g.drivers()];
    let mut slot_driver = vec![None; g.slots()];
    for d in 0..g.drivers() {
        let mut visited = vec![false; g.slots()];
        augment(g, d, &mut visited, &mut driver_slot, &mut slot_driver);
    }
    BipartiteMatching::from_parts(driver_slot, slot_driver)
}

fn augment(
    g: &BipartiteInstance,
    d: usize,
    visited: &mut [bool],
    driver_slot: &mut [Option<usize>],
    slot_driver: &mut [Option<usize>],
) -> bool {
    for &s in g.neighbors(d) {
        if visited[s] {
            continue;
        }
        visited[s] = true;
        let free = match slot_driver[s] {
            None => true,
            Some(other) => augment(g, other, visited, driver_slot, slot_driver),
        };
        if free {
            driver_slot[d] = Some(s);
            slot_driver[s] = Some(d);
            return true;
        }
    }
    false
}

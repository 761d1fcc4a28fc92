use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::bipartite::{ranking_match, BipartiteInstance};
use crate::error::{Error, Result};
use crate::sim::rng::{stream, Concern};
use crate::verification::offline_max_matching;

/// Exhaustive permutation enumeration is limited to this many slots.
pub const MAX_EXHAUSTIVE_SLOTS: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceGenerator {
    Complete {
        drivers: usize,
        slots: usize,
    },
    /// Driver `i` always reaches slot `i` and each slot `j > i` with
    /// probability `density`; slot labels are shuffled per instance.
    /// `density = 1` is the classic worst case for RANKING.
    UpperTriangular {
        n: usize,
        density: f64,
    },
    /// Every edge present independently with probability `density`.
    Random {
        drivers: usize,
        slots: usize,
        density: f64,
    },
    Fixed(BipartiteInstance),
}

impl InstanceGenerator {
    pub fn generate<R: Rng>(&self, rng: &mut R) -> BipartiteInstance {
        match self {
            InstanceGenerator::Complete { drivers, slots } => BipartiteInstance::complete(*drivers, *slots),
            InstanceGenerator::UpperTriangular { n, density } => {
                let mut labels: Vec<usize> = (0..*n).collect();
                labels.shuffle(rng);
                let adjacency = (0..*n)
                    .map(|i| {
                        (i..*n)
                            .filter(|&j| j == i || rng.random_bool(*density))
                            .map(|j| labels[j])
                            .collect()
                    })
                    .collect();
                BipartiteInstance::new(*n, adjacency).expect("labels are in range")
            }
            InstanceGenerator::Random {
                drivers,
                slots,
                density,
            } => {
                let adjacency = (0..*drivers)
                    .map(|_| (0..*slots).filter(|_| rng.random_bool(*density)).collect())
                    .collect();
                BipartiteInstance::new(*slots, adjacency).expect("slots are in range")
            }
            InstanceGenerator::Fixed(g) => g.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PermutationStrategy {
    /// One uniformly random slot permutation per instance (RANKING).
    Random,
    /// Average over every permutation of the slots.
    Exhaustive,
    /// Slots ranked in index order: deterministic greedy.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioReport {
    pub strategy: PermutationStrategy,
    pub instances: usize,
    /// Online cardinality over offline optimum, per instance.
    pub ratios: Vec<f64>,
    pub mean: f64,
    pub min: f64,
}

impl RatioReport {
    fn from_ratios(strategy: PermutationStrategy, ratios: Vec<f64>) -> Self {
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        RatioReport {
            strategy,
            instances: ratios.len(),
            ratios,
            mean,
            min,
        }
    }
}

fn ratio(online: usize, optimum: usize) -> f64 {
    if optimum == 0 {
        1.0
    } else {
        online as f64 / optimum as f64
    }
}

/// RANKING with a seeded random permutation on each generated instance.
pub fn measure_ratio(generator: &InstanceGenerator, trials: usize, seed: u64) -> Result<RatioReport> {
    measure_ratio_with(generator, trials, seed, PermutationStrategy::Random)
}

pub fn measure_ratio_with(
    generator: &InstanceGenerator,
    trials: usize,
    seed: u64,
    strategy: PermutationStrategy,
) -> Result<RatioReport> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    let mut instances = stream(seed, Concern::Instances);
    let mut permutations = stream(seed, Concern::Permutations);
    let mut ratios = Vec::with_capacity(trials);
    for _ in 0..trials {
        let g = generator.generate(&mut instances);
        let r = match strategy {
            PermutationStrategy::Exhaustive => exhaustive_ratio(&g)?,
            PermutationStrategy::Random | PermutationStrategy::Identity => {
                let mut perm: Vec<usize> = (0..g.slots()).collect();
                if strategy == PermutationStrategy::Random {
                    perm.shuffle(&mut permutations);
                }
                let online = ranking_match(&g, &perm)?.cardinality();
                ratio(online, offline_max_matching(&g).cardinality())
            }
        };
        ratios.push(r);
    }
    Ok(RatioReport::from_ratios(strategy, ratios))
}

/// Expected RANKING ratio on `g` over every slot permutation.
pub fn exhaustive_ratio(g: &BipartiteInstance) -> Result<f64> {
    if g.slots() > MAX_EXHAUSTIVE_SLOTS {
        return Err(Error::InstanceTooLarge {
            drivers: g.drivers(),
            slots: g.slots(),
            limit: MAX_EXHAUSTIVE_SLOTS,
        });
    }
    let optimum = offline_max_matching(g).cardinality();
    let mut perm: Vec<usize> = (0..g.slots()).collect();
    let (mut total, mut count) = (0usize, 0usize);
    loop {
        total += ranking_match(g, &perm)?.cardinality();
        count += 1;
        if !next_permutation(&mut perm) {
            break;
        }
    }
    if optimum == 0 {
        return Ok(1.0);
    }
    Ok(total as f64 / (count * optimum) as f64)
}

/// Advances to the next lexicographic permutation; false after the last.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len())
        .rev()
        .find(|&j| v[j] > v[i - 1])
        .expect("pivot has a successor");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

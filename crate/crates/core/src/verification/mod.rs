//! Mechanized checks of the mechanism's claimed properties.
//!
//! * [`offline_max_matching`]: exact maximum-cardinality oracle.
//! * [`measure_ratio`]: empirical RANKING competitive ratio against it.
//! * [`pareto_check`]: exhaustive Pareto-dominance search on frozen instances.
//! * [`probe_early_arrival`] / [`probe_under_report`]: strategy-proofness
//!   deviation probes run through the simulator.

mod oracle;
mod pareto;
mod probes;
mod ratio;

pub use oracle::offline_max_matching;
pub use pareto::{
    max_welfare_assignment, pareto_check, random_frozen_instance, serial_assign, FrozenAssignment, FrozenInstance,
    FrozenRoute, ParetoVerdict, MAX_ENUMERATION,
};
pub use probes::{
    probe_early_arrival, probe_sweep, probe_under_report, random_probe_scenario, DeviationKind, DeviationOutcome,
    ProbeSweep,
};
pub use ratio::{
    exhaustive_ratio, measure_ratio, measure_ratio_with, InstanceGenerator, PermutationStrategy, RatioReport,
};

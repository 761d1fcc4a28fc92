use std::collections::BTreeMap;
use std::path::PathBuf;

use proptest::prelude::*;

use tollmatch::matching::AssignmentStatus;
use tollmatch::model::{DriverId, RouteId, RouteSpec};
use tollmatch::predictor::Predictor;
use tollmatch::sim::{
    replay, run, ArrivalProcess, Compliance, EventKind, MetricsSummary, RandomArrivals, ScenarioConfig, ScriptedDriver,
};
use tollmatch::toll::TollConfig;
use tollmatch::Error;

fn scenario(name: &str) -> ScenarioConfig {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios", name]
        .iter()
        .collect();
    ScenarioConfig::load(&path).unwrap()
}

fn random_scenario(seed: u64, beta: f64, initial_toll: f64, deviate: f64) -> ScenarioConfig {
    ScenarioConfig {
        horizon: 80,
        routes: vec![
            RouteSpec::new(1, 4.0, 2.0, 6),
            RouteSpec::new(2, 6.0, 3.0, 8),
            RouteSpec::new(3, 9.0, 5.0, 10),
        ],
        toll: TollConfig {
            beta,
            horizon: 2,
            fixed_penalty: 1.25,
            initial_toll,
        },
        predictor: Predictor::Linear { window: 3 },
        arrivals: ArrivalProcess::Random(RandomArrivals {
            rate: 1.2,
            alpha_min: 0.0,
            alpha_max: 5.0,
            deadline_window: 2,
        }),
        matching_mode: Default::default(),
        compliance: Compliance {
            deviate_probability: deviate,
        },
        seed,
    }
}

#[test]
fn zero_arrivals_give_a_zeroed_report() {
    let out = run(&scenario("empty.toml")).unwrap();
    assert_eq!(out.report.summary, MetricsSummary::default());
    assert_eq!(out.report.traces.len(), 20);
    let replayed = replay(&out.event_log_csv()).unwrap();
    assert_eq!(replayed, out.report);
}

#[test]
fn single_driver_on_a_free_route() {
    let mut cfg = scenario("empty.toml");
    cfg.arrivals = ArrivalProcess::Scripted {
        drivers: vec![ScriptedDriver::new(0, 0, 1.0, 1)],
    };
    let out = run(&cfg).unwrap();
    let s = &out.report.summary;
    assert_eq!((s.drivers, s.matched, s.trips_completed), (1, 1, 1));
    assert_eq!(s.tolls_collected, 0.0);
    assert_eq!(s.welfare, 0.0);
    let o = out.outcome(DriverId(0)).unwrap();
    assert_eq!(o.status, Some(AssignmentStatus::Completed));
    assert_eq!(o.utility, 0.0);
    assert!(matches!(out.outcome(DriverId(5)), Err(Error::UnknownDriver(_))));
}

#[test]
fn ten_driver_scenario_replays_exactly() {
    let cfg = scenario("ten_drivers.toml");
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a.event_log_csv(), b.event_log_csv());
    assert_eq!(replay(&a.event_log_csv()).unwrap(), a.report);

    let s = &a.report.summary;
    assert_eq!(s.drivers, 10);
    // driver 4 never accepts, driver 8 travels off its assignment
    assert_eq!(a.outcome(DriverId(4)).unwrap().status, Some(AssignmentStatus::Expired));
    assert_eq!(a.outcome(DriverId(4)).unwrap().utility, 0.0);
    let deviator = a.outcome(DriverId(8)).unwrap();
    assert_eq!(deviator.actual_route, Some(RouteId(2)));
    if deviator.assigned_route != Some(RouteId(2)) {
        assert_eq!(deviator.status, Some(AssignmentStatus::Penalized));
        assert!(deviator.penalty >= cfg.toll.fixed_penalty);
    }
    let late = a.assignments.iter().find(|x| x.driver == DriverId(6)).unwrap();
    let accept = a
        .log
        .events()
        .iter()
        .find(|e| e.kind == EventKind::Accept && e.driver == Some(DriverId(6)))
        .unwrap();
    assert_eq!(accept.timestep, 5);
    assert!(accept.timestep <= late.deadline);
}

#[test]
fn seed_changes_random_runs() {
    let a = run(&random_scenario(1, 0.1, 1.0, 0.2)).unwrap();
    let b = run(&random_scenario(2, 0.1, 1.0, 0.2)).unwrap();
    assert_ne!(a.event_log_csv(), b.event_log_csv());
}

#[test]
fn truncated_log_is_rejected_with_a_line_number() {
    let log = run(&scenario("ten_drivers.toml")).unwrap().event_log_csv();
    let lines: Vec<&str> = log.lines().collect();
    let cut = lines[..lines.len() / 2].join("\n") + "\n";
    match replay(&cut) {
        Err(Error::MalformedLog { line, reason }) => {
            assert_eq!(line as usize, lines.len() / 2 + 1);
            assert!(reason.contains("end"), "{reason}");
        }
        other => panic!("expected a malformed-log error, got {other:?}"),
    }

    let mut garbled: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
    garbled[3] = "x,flow,,r1,1".into();
    match replay(&(garbled.join("\n") + "\n")) {
        Err(Error::MalformedLog { line, .. }) => assert_eq!(line, 4),
        other => panic!("expected a malformed-log error, got {other:?}"),
    }
}

#[test]
fn invalid_configs_are_rejected_before_running() {
    let mut cfg = scenario("ten_drivers.toml");
    cfg.horizon = 3;
    assert!(matches!(run(&cfg), Err(Error::InvalidConfig(_))));
    let mut cfg = scenario("ten_drivers.toml");
    cfg.routes.clear();
    assert!(run(&cfg).is_err());
    let mut cfg = random_scenario(0, 0.1, 0.0, 0.0);
    cfg.compliance.deviate_probability = 1.5;
    assert!(run(&cfg).is_err());
}

#[test]
fn zero_beta_and_zero_toll_leave_only_fixed_penalties() {
    let cfg = random_scenario(5, 0.0, 0.0, 0.5);
    let out = run(&cfg).unwrap();
    assert!(out.report.traces.iter().all(|r| r.toll == 0.0 && r.charge == 0.0));
    let penalties: Vec<f64> = out
        .log
        .events()
        .iter()
        .filter(|e| e.kind == EventKind::Penalty)
        .map(|e| e.value)
        .collect();
    assert!(!penalties.is_empty());
    assert!(penalties.iter().all(|&p| p == cfg.toll.fixed_penalty));
    assert_eq!(out.report.summary.tolls_collected, 0.0);
    for o in out.outcomes.values() {
        if o.status.is_some() {
            assert_eq!(o.charge, 0.0);
            assert!(o.utility <= 0.0);
        }
    }
}

fn check_invariants(cfg: &ScenarioConfig) {
    let out = run(cfg).unwrap();
    let s = &out.report.summary;

    let taken: Vec<_> = out
        .assignments
        .iter()
        .filter(|a| {
            matches!(
                a.status(),
                AssignmentStatus::Accepted | AssignmentStatus::Completed | AssignmentStatus::Penalized
            )
        })
        .collect();
    let tolls: f64 = taken.iter().map(|a| a.charge).sum();
    assert!((s.tolls_collected - tolls).abs() <= 1e-9);
    let welfare: f64 = taken.iter().map(|a| a.quoted_utility()).sum();
    assert!((s.welfare - welfare).abs() <= 1e-9);
    assert_eq!(s.matched as usize, taken.len());
    assert_eq!(s.drivers, s.matched + s.unmatched + s.expired + s.unresolved);

    let tolls_at: BTreeMap<(u64, RouteId), f64> = out
        .report
        .traces
        .iter()
        .map(|r| ((r.timestep, r.route), r.toll))
        .collect();
    let mut penalties = 0.0;
    for e in out.log.events().iter().filter(|e| e.kind == EventKind::Penalty) {
        let expected = tolls_at[&(e.timestep, e.route.unwrap())] + cfg.toll.fixed_penalty;
        assert!((e.value - expected).abs() <= 1e-12);
        penalties += e.value;
    }
    assert!((s.penalties_collected - penalties).abs() <= 1e-9);

    let mut active: BTreeMap<RouteId, i64> = BTreeMap::new();
    for e in out.log.events() {
        match e.kind {
            EventKind::Depart => *active.entry(e.route.unwrap()).or_default() += 1,
            EventKind::Complete => *active.entry(e.route.unwrap()).or_default() -= 1,
            EventKind::Occupancy => {
                let route = e.route.unwrap();
                let k = active.get(&route).copied().unwrap_or(0);
                let spec = cfg.routes.iter().find(|r| r.id == route).unwrap();
                assert!(k >= 0);
                assert_eq!(e.value, k as f64);
                assert!(e.value <= f64::from(spec.slot_capacity));
            }
            _ => {}
        }
    }
    assert_eq!(replay(&out.event_log_csv()).unwrap(), out.report);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn accounting_and_occupancy_hold(
        seed in any::<u64>(),
        beta in 0.0..1.0f64,
        initial_toll in 0.0..5.0f64,
        deviate in 0.0..1.0f64,
    ) {
        check_invariants(&random_scenario(seed, beta, initial_toll, deviate));
    }
}

#[test]
fn example_scenarios_satisfy_invariants() {
    for name in ["empty.toml", "ten_drivers.toml", "random.toml"] {
        check_invariants(&scenario(name));
    }
}

#[test]
fn config_round_trips_through_toml_and_json() {
    let cfg = scenario("ten_drivers.toml");
    assert_eq!(ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    let random = scenario("random.toml");
    let scripted = random.scripted();
    assert_eq!(
        run(&random).unwrap().event_log_csv(),
        run(&scripted).unwrap().event_log_csv()
    );
}

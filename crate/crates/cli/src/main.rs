use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use tollmatch::auction::{comparison_row, AuctionScenario};
use tollmatch::sim::rng::{stream, Concern};
use tollmatch::sim::{run, ScenarioConfig};
use tollmatch::verification::{
    measure_ratio_with, pareto_check, probe_sweep, random_frozen_instance, serial_assign, DeviationKind,
    InstanceGenerator, ParetoVerdict, PermutationStrategy, ProbeSweep, RatioReport,
};

const RATIO_BOUND: f64 = 0.632;

#[derive(Parser)]
#[command(name = "tollmatch", version, about = "Online route matching with anticipatory tolls")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write events.csv, trace.csv and summary.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "TOLLMATCH_OUT", default_value = "tollmatch-out")]
        out: PathBuf,
    },
    /// Check a mechanism property on seeded random instances.
    Verify {
        #[arg(long, value_enum)]
        property: Property,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "TOLLMATCH_OUT", default_value = "tollmatch-out")]
        out: PathBuf,
    },
    /// Two-driver auction table against the matching utilities.
    CompareAuction {
        /// A value or `start:end:count`.
        #[arg(long)]
        theta1: Sweep,
        /// A value or `start:end:count`.
        #[arg(long)]
        theta2: Sweep,
        #[arg(long, default_value_t = 0.5)]
        phi: f64,
        #[arg(long, env = "TOLLMATCH_OUT", default_value = "tollmatch-out")]
        out: PathBuf,
    },
    /// Measure RANKING against the offline optimum.
    RatioExperiment {
        #[arg(long, value_enum, default_value_t = Generator::UpperTriangular)]
        generator: Generator,
        /// Drivers (and slots) per instance.
        #[arg(long, default_value_t = 20)]
        n: usize,
        /// Edge probability for the random generators.
        #[arg(long, default_value_t = 1.0)]
        density: f64,
        #[arg(long, value_enum, default_value_t = Strategy::Random)]
        strategy: Strategy,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "TOLLMATCH_OUT", default_value = "tollmatch-out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Property {
    Pareto,
    Strategyproof,
    Ratio,
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    UpperTriangular,
    Random,
    Complete,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Random,
    Exhaustive,
    Identity,
}

impl From<Strategy> for PermutationStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Random => PermutationStrategy::Random,
            Strategy::Exhaustive => PermutationStrategy::Exhaustive,
            Strategy::Identity => PermutationStrategy::Identity,
        }
    }
}

/// Evenly spaced values, endpoints included.
#[derive(Clone, Debug, PartialEq)]
struct Sweep(Vec<f64>);

impl FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let number = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [v] => Ok(Sweep(vec![number(v)?])),
            [a, b, n] => {
                let (a, b) = (number(a)?, number(b)?);
                let n: usize = n.trim().parse().map_err(|_| format!("bad count: {n:?}"))?;
                match n {
                    0 => Err("count must be >= 1".into()),
                    1 => Ok(Sweep(vec![a])),
                    _ => Ok(Sweep((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())),
                }
            }
            _ => Err(format!("expected a value or start:end:count, got {s:?}")),
        }
    }
}

enum Verdict {
    Holds,
    Violated,
}

/// Writes every file to a temporary sibling first and renames only after
/// all of them were written.
fn write_outputs(dir: &Path, files: &[(&str, String)]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let mut staged = Vec::new();
    for (name, contents) in files {
        let tmp = dir.join(format!(".{name}.tmp"));
        if let Err(e) = fs::write(&tmp, contents) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            return Err(e).with_context(|| format!("cannot write {}", tmp.display()));
        }
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, target) in &staged {
        fs::rename(tmp, target).with_context(|| format!("cannot write {}", target.display()))?;
    }
    Ok(())
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn simulate(config: &Path, seed: Option<u64>, out: &Path) -> Result<Verdict> {
    let mut cfg = ScenarioConfig::load(config).with_context(|| format!("invalid config {}", config.display()))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let output = run(&cfg)?;
    write_outputs(
        out,
        &[
            ("events.csv", output.event_log_csv()),
            ("trace.csv", output.report.traces_csv()),
            ("summary.json", output.report.summary_json()),
        ],
    )?;
    let s = &output.report.summary;
    println!(
        "drivers {} matched {} unmatched {} expired {} welfare {} tolls {} penalties {}",
        s.drivers, s.matched, s.unmatched, s.expired, s.welfare, s.tolls_collected, s.penalties_collected
    );
    Ok(Verdict::Holds)
}

fn ratio_csv(report: &RatioReport) -> Result<String> {
    csv_text(
        &["trial", "ratio"],
        report
            .ratios
            .iter()
            .enumerate()
            .map(|(i, r)| vec![i.to_string(), r.to_string()]),
    )
}

fn ratio_summary(report: &RatioReport) -> String {
    let summary = serde_json::json!({
        "strategy": report.strategy,
        "instances": report.instances,
        "mean": report.mean,
        "min": report.min,
    });
    serde_json::to_string_pretty(&summary).expect("json value serializes") + "\n"
}

fn probe_rows(sweep: &ProbeSweep) -> Vec<Vec<String>> {
    sweep
        .outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| {
            vec![
                i.to_string(),
                o.kind.as_str().to_string(),
                o.driver.0.to_string(),
                o.amount.to_string(),
                o.truthful.to_string(),
                o.deviating.to_string(),
                o.holds.to_string(),
            ]
        })
        .collect()
}

fn verify(property: Property, trials: usize, seed: u64, out: &Path) -> Result<Verdict> {
    if trials == 0 {
        bail!("--trials must be >= 1");
    }
    let (name, csv, failures) = match property {
        Property::Pareto => {
            let mut rng = stream(seed, Concern::Instances);
            let mut rows = Vec::with_capacity(trials);
            let mut failures = 0;
            for i in 0..trials {
                let inst = random_frozen_instance(&mut rng, 6, 6);
                let candidate = serial_assign(&inst);
                let (verdict, witness) = match pareto_check(&inst, &candidate)? {
                    ParetoVerdict::Undominated => ("undominated", String::new()),
                    ParetoVerdict::Dominated { witness } => {
                        failures += 1;
                        ("dominated", format!("{witness:?}"))
                    }
                };
                rows.push(vec![
                    i.to_string(),
                    inst.drivers().to_string(),
                    inst.total_slots().to_string(),
                    inst.welfare(&candidate).to_string(),
                    verdict.to_string(),
                    witness,
                ]);
            }
            let header = ["trial", "drivers", "slots", "welfare", "verdict", "witness"];
            ("verify_pareto.csv", csv_text(&header, rows)?, failures)
        }
        Property::Strategyproof => {
            let early = probe_sweep(DeviationKind::EarlyArrival, trials, seed)?;
            let under = probe_sweep(DeviationKind::UnderReport, trials, seed.wrapping_add(1))?;
            let failures = early.violation_count() + under.violation_count();
            let rows = probe_rows(&early).into_iter().chain(probe_rows(&under));
            let header = ["trial", "kind", "driver", "amount", "truthful", "deviating", "holds"];
            ("verify_strategyproof.csv", csv_text(&header, rows)?, failures)
        }
        Property::Ratio => {
            let generator = InstanceGenerator::UpperTriangular { n: 20, density: 1.0 };
            let report = measure_ratio_with(&generator, trials, seed, PermutationStrategy::Random)?;
            println!("mean ratio {:.6} min {:.6}", report.mean, report.min);
            let failures = usize::from(report.mean < RATIO_BOUND);
            ("verify_ratio.csv", ratio_csv(&report)?, failures)
        }
    };
    write_outputs(out, &[(name, csv)])?;
    if failures == 0 {
        println!("property holds on {trials} trials");
        Ok(Verdict::Holds)
    } else {
        println!(
            "property violated in {failures} checks, see {}",
            out.join(name).display()
        );
        Ok(Verdict::Violated)
    }
}

fn compare_auction(theta1: &Sweep, theta2: &Sweep, phi: f64, out: &Path) -> Result<Verdict> {
    let scenario = AuctionScenario {
        phi,
        ..AuctionScenario::default()
    };
    let mut rows = Vec::new();
    for &t1 in &theta1.0 {
        for &t2 in &theta2.0 {
            let r = comparison_row(t1, t2, &scenario)?;
            rows.push(vec![
                r.theta1.to_string(),
                r.theta2.to_string(),
                r.case.as_str().to_string(),
                r.x1.to_string(),
                r.x2.to_string(),
                r.payment1.to_string(),
                r.travel_time1.map_or_else(|| "none".to_string(), |t| t.to_string()),
                r.auction_utility_paid.to_string(),
                r.auction_utility.to_string(),
                r.matching_utility.to_string(),
                r.ratio.map_or_else(String::new, |x| x.to_string()),
                r.matching_minus_auction_sign.to_string(),
            ]);
        }
    }
    let header = [
        "theta1",
        "theta2",
        "case",
        "x1",
        "x2",
        "payment1",
        "travel_time1",
        "auction_utility_paid",
        "auction_utility",
        "matching_utility",
        "ratio",
        "matching_minus_auction_sign",
    ];
    let text = csv_text(&header, rows)?;
    write_outputs(out, &[("compare_auction.csv", text.clone())])?;
    print!("{text}");
    Ok(Verdict::Holds)
}

fn ratio_experiment(
    generator: Generator,
    n: usize,
    density: f64,
    strategy: Strategy,
    trials: usize,
    seed: u64,
    out: &Path,
) -> Result<Verdict> {
    if !(0.0..=1.0).contains(&density) {
        bail!("--density must lie in [0, 1]");
    }
    let generator = match generator {
        Generator::UpperTriangular => InstanceGenerator::UpperTriangular { n, density },
        Generator::Random => InstanceGenerator::Random {
            drivers: n,
            slots: n,
            density,
        },
        Generator::Complete => InstanceGenerator::Complete { drivers: n, slots: n },
    };
    let report = measure_ratio_with(&generator, trials, seed, strategy.into())?;
    write_outputs(
        out,
        &[
            ("ratio.csv", ratio_csv(&report)?),
            ("ratio_summary.json", ratio_summary(&report)),
        ],
    )?;
    println!(
        "instances {} mean {:.6} min {:.6}",
        report.instances, report.mean, report.min
    );
    Ok(Verdict::Holds)
}

fn dispatch(cli: Cli) -> Result<Verdict> {
    match cli.command {
        Command::Simulate { config, seed, out } => simulate(&config, seed, &out),
        Command::Verify {
            property,
            trials,
            seed,
            out,
        } => verify(property, trials, seed, &out),
        Command::CompareAuction {
            theta1,
            theta2,
            phi,
            out,
        } => compare_auction(&theta1, &theta2, phi, &out),
        Command::RatioExperiment {
            generator,
            n,
            density,
            strategy,
            trials,
            seed,
            out,
        } => ratio_experiment(generator, n, density, strategy, trials, seed, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(Verdict::Holds) => ExitCode::SUCCESS,
        Ok(Verdict::Violated) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

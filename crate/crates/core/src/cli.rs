//! Command-line entry points.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::report::{emit_report, ReportOptions};
use crate::calib::scenario::{align_cases, read_cases_csv};
use crate::calib::{
    calibrate, simulate_g, write_calibration_jsonl, write_theta_star, CalibConfig, CalibScenario, ThetaDomain,
};
use crate::config::ScenarioConfig;
use crate::error::Error;
use crate::interventions::PolicySet;
use crate::rng::mix;
use crate::simcore::{run_simulation, EventLog, RealizedPresence};
use crate::synthpop::io::write_sites;
use crate::testtrace::{narrowcast_all, write_site_risk_csv, write_tests_csv};

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "hotspot",
    version,
    about = "Site-explicit epidemic simulation and calibration"
)]
pub struct Cli {
    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run independent rollouts of a scenario.
    Simulate(SimulateArgs),
    /// Fit beta, xi and rho to observed cumulative positives.
    Calibrate(CalibrateArgs),
    /// Secondary-case statistics and R_t/k_t series from saved event logs.
    Analyze(AnalyzeArgs),
    /// Per-site exposure risk from the visits of positively tested individuals.
    Narrowcast(NarrowcastArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON file.
    pub config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of rollouts; overrides the config.
    #[arg(long)]
    pub rollouts: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Scenario JSON file.
    pub config: PathBuf,
    /// Observed cumulative positives (`date,cumulative_positive`).
    #[arg(long)]
    pub cases: PathBuf,
    /// Total number of evaluations.
    #[arg(long, default_value_t = 40)]
    pub steps: usize,
    /// Quasi-random evaluations before the acquisition takes over.
    #[arg(long, default_value_t = 20)]
    pub init: usize,
    /// Rollouts averaged per evaluation.
    #[arg(long, default_value_t = 96)]
    pub rollouts: usize,
    /// Population and site reduction during calibration.
    #[arg(long)]
    pub downscale: Option<u32>,
    /// Master seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Output directory of `simulate`, or a directory of `events.jsonl` files.
    #[arg(long)]
    pub events: PathBuf,
    /// Days of infectious onsets pooled for each R_t/k_t estimate.
    #[arg(long, default_value_t = 7)]
    pub window: u32,
    /// Cases CSV to compare mean cumulative positives against.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NarrowcastArgs {
    /// Output directory of `simulate`.
    #[arg(long)]
    pub events: PathBuf,
    /// Window start: hours since the start date, or an ISO date.
    #[arg(long)]
    pub from: String,
    /// Window end: hours since the start date, or an ISO date.
    #[arg(long)]
    pub to: String,
    /// Index of the rollout to replay.
    #[arg(long, default_value_t = 0)]
    pub rollout: usize,
    /// Which positives count: those known at the window's start or at its end.
    #[arg(long, value_enum, default_value_t = PositivesBy::End)]
    pub positives_by: PositivesBy,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PositivesBy {
    Start,
    End,
}

/// Per-rollout seeds recorded next to the outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RolloutEntry {
    pub index: usize,
    pub seed: u64,
    pub dir: String,
}

pub const RESOLVED_CONFIG: &str = "resolved_config.json";
pub const MANIFEST: &str = "rollouts.json";

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("HOTSPOT_LOG")
        .try_init();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return EXIT_INPUT;
    }
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Narrowcast(a) => cmd_narrowcast(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

/// Input problems (bad files, bad values) map to 2, everything else to 1.
pub fn exit_code(e: &anyhow::Error) -> i32 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::Io { source, .. } if source.kind() != std::io::ErrorKind::NotFound => EXIT_RUNTIME,
                Error::IllConditioned(_) => EXIT_RUNTIME,
                _ => EXIT_INPUT,
            };
        }
        if cause.downcast_ref::<InputError>().is_some() {
            return EXIT_INPUT;
        }
    }
    EXIT_RUNTIME
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct InputError(String);

fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("HOTSPOT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| input_error(format!("HOTSPOT_THREADS must be a positive integer, got `{value}`")))?;
    // a pool built earlier in the process (tests, repeated calls) stays in place
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn create_dir(path: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn scenario_of(config: &ScenarioConfig) -> anyhow::Result<CalibScenario> {
    let resolved = config.resolve()?;
    Ok(CalibScenario {
        tiles: resolved.tiles,
        sites: resolved.sites,
        world: resolved.world,
        sim: resolved.sim,
        downscale: config.population.downscale,
    })
}

pub fn cmd_simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    let mut config = ScenarioConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(r) = args.rollouts {
        config.rollouts = r;
    }
    let scenario = scenario_of(&config)?;
    create_dir(&args.out)?;
    write_json(&args.out.join(RESOLVED_CONFIG), &config)?;
    write_sites(&args.out.join("sites.csv"), &scenario.sites)?;

    let days = config.horizon_days;
    let entries: Vec<RolloutEntry> = (0..config.rollouts)
        .map(|index| RolloutEntry {
            index,
            seed: mix(config.seed, index as u64),
            dir: format!("rollout_{index:03}"),
        })
        .collect();
    let results: Vec<(EventLog, usize)> = entries
        .par_iter()
        .map(|entry| -> anyhow::Result<(EventLog, usize)> {
            let world = scenario.world(entry.seed)?;
            let rollout = run_simulation(&world, &scenario.sim, entry.seed)?;
            let dir = args.out.join(&entry.dir);
            create_dir(&dir)?;
            rollout.log.save(&dir.join("events.jsonl"))?;
            crate::simcore::log::write_daily_csv(
                &dir.join("daily.csv"),
                &rollout.log.daily_summary(world.len(), days),
            )?;
            write_tests_csv(&dir.join("tests.csv"), &rollout.tests)?;
            log::info!("rollout {} done: {} events", entry.index, rollout.log.len());
            Ok((rollout.log, world.len()))
        })
        .collect::<anyhow::Result<_>>()?;
    write_json(&args.out.join(MANIFEST), &entries)?;
    let population = results[0].1;
    let logs: Vec<EventLog> = results.into_iter().map(|(l, _)| l).collect();
    emit_report(
        &logs,
        &ReportOptions {
            population: Some(population),
            days,
            window_days: 7,
            seed: config.seed,
            reference: None,
        },
        &args.out,
    )?;
    Ok(())
}

pub fn cmd_calibrate(args: &CalibrateArgs) -> anyhow::Result<()> {
    if args.init == 0 || args.steps < args.init {
        return Err(input_error("need 1 <= --init <= --steps"));
    }
    if args.rollouts == 0 {
        return Err(input_error("--rollouts must be positive"));
    }
    let mut config = ScenarioConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(k) = args.downscale {
        config.population.downscale = k;
    }
    let rows = read_cases_csv(&args.cases)?;
    let mut c_true = align_cases(&rows, config.start_date);
    c_true.truncate(config.horizon_days as usize);
    if c_true.is_empty() {
        return Err(input_error(format!(
            "{}: no case rows fall inside the scenario horizon",
            args.cases.display()
        )));
    }
    // the fit covers exactly the observed days
    config.horizon_days = c_true.len() as u32;
    let scenario = scenario_of(&config)?;
    create_dir(&args.out)?;
    write_json(&args.out.join(RESOLVED_CONFIG), &config)?;

    let domain = ThetaDomain::default();
    let calib = CalibConfig {
        steps: args.steps,
        init: args.init,
        rollouts: args.rollouts,
        seed: config.seed,
        ..Default::default()
    };
    let names = domain.names.clone();
    let progress_path = args.out.join("calibration.jsonl");
    let mut progress = Vec::new();
    let result = calibrate(
        |theta, j, seed| simulate_g(&names, theta, j, &scenario, seed),
        &c_true,
        &domain,
        &calib,
        |e| {
            progress.push(e.clone());
            // rewrite after every step so partial runs leave a usable record
            if let Err(err) = write_calibration_jsonl(&progress_path, &progress) {
                log::warn!("{err}");
            }
        },
    )?;
    write_calibration_jsonl(&progress_path, &result.evaluations)?;
    write_theta_star(&args.out.join("theta_star.json"), &domain, &result)?;

    let best = result
        .evaluations
        .iter()
        .find(|e| e.theta == result.theta_star)
        .ok_or_else(|| anyhow!("best evaluation missing"))?;
    let fit_path = args.out.join("fit.csv");
    let mut w = csv::Writer::from_path(&fit_path).map_err(|e| Error::parse(&fit_path, e.to_string()))?;
    w.write_record(["day", "date", "observed", "fitted"])?;
    for (d, (obs, fit)) in c_true.iter().zip(&best.g_hat).enumerate() {
        w.write_record([
            d.to_string(),
            config.date_of_day(d as u32).to_string(),
            obs.to_string(),
            fit.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&fit_path, e))?;
    println!(
        "theta* = {:?}  score = {:.4e}  mae = {:.3}",
        result.theta_star,
        result.best_score,
        crate::analysis::mae(&best.g_hat, &c_true)?
    );
    Ok(())
}

/// Event logs found under `dir`: `dir/events.jsonl` or `dir/*/events.jsonl`.
fn find_logs(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(input_error(format!("{}: not a directory", dir.display())));
    }
    let direct = dir.join("events.jsonl");
    if direct.is_file() {
        return Ok(vec![direct]);
    }
    let mut found = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path().join("events.jsonl");
        if path.is_file() {
            found.push(path);
        }
    }
    found.sort();
    if found.is_empty() {
        return Err(input_error(format!("{}: no event logs found", dir.display())));
    }
    Ok(found)
}

fn load_resolved(dir: &Path) -> anyhow::Result<Option<ScenarioConfig>> {
    let path = dir.join(RESOLVED_CONFIG);
    if !path.is_file() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(Some(
        ScenarioConfig::from_json(&text).with_context(|| format!("reading {}", path.display()))?,
    ))
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> anyhow::Result<()> {
    if args.window == 0 {
        return Err(input_error("--window must be at least one day"));
    }
    let paths = find_logs(&args.events)?;
    let logs: Vec<EventLog> = paths.iter().map(|p| EventLog::load(p)).collect::<Result<_, _>>()?;
    let config = load_resolved(&args.events)?;
    let days = match &config {
        Some(c) => c.horizon_days,
        None => {
            let t_last = logs
                .iter()
                .filter_map(|l| l.events.last())
                .map(|e| e.time)
                .fold(0.0, f64::max);
            (t_last / 24.0).floor() as u32 + 1
        }
    };
    let population = config
        .as_ref()
        .map(|c| c.population.total.div_ceil(c.population.downscale.max(1) as u64) as usize);
    let reference = match &args.reference {
        Some(path) => {
            let rows = read_cases_csv(path)?;
            let start = config.as_ref().map_or(rows[0].0, |c| c.start_date);
            Some(align_cases(&rows, start))
        }
        None => None,
    };
    let outcome = emit_report(
        &logs,
        &ReportOptions {
            population,
            days,
            window_days: args.window,
            seed: config.as_ref().map_or(0, |c| c.seed),
            reference: reference.as_deref(),
        },
        &args.out,
    )?;
    if let Some(fit) = outcome.overall {
        println!("{} infectors, R = {:.3}, k = {:.3}", outcome.n_infectors, fit.r, fit.k);
    }
    if let Some(m) = outcome.mae {
        println!("MAE vs reference: {m:.3}");
    }
    Ok(())
}

fn parse_time(value: &str, config: &ScenarioConfig) -> anyhow::Result<f64> {
    if let Ok(h) = value.parse::<f64>() {
        if h.is_finite() {
            return Ok(h);
        }
    }
    let date = NaiveDate::parse_from_str(value, "%Y-%m-%d")
        .map_err(|_| input_error(format!("`{value}` is neither hours nor an ISO date")))?;
    Ok(config.hours_at(date))
}

pub fn cmd_narrowcast(args: &NarrowcastArgs) -> anyhow::Result<()> {
    let config = load_resolved(&args.events)?
        .ok_or_else(|| input_error(format!("{}: missing {RESOLVED_CONFIG}", args.events.display())))?;
    let manifest_path = args.events.join(MANIFEST);
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let entries: Vec<RolloutEntry> =
        serde_json::from_str(&text).map_err(|e| Error::parse(&manifest_path, e.to_string()))?;
    let entry = entries
        .iter()
        .find(|e| e.index == args.rollout)
        .ok_or_else(|| input_error(format!("no rollout {} in {}", args.rollout, manifest_path.display())))?;
    let t0 = parse_time(&args.from, &config)?;
    let tf = parse_time(&args.to, &config)?;
    if !(tf > t0) {
        bail!(input_error("--to must be after --from"));
    }
    let saved = EventLog::load(&args.events.join(&entry.dir).join("events.jsonl"))?;

    // presence under measures and isolation is recovered by replaying the rollout
    let scenario = scenario_of(&config)?;
    let world = scenario.world(entry.seed)?;
    let rollout = run_simulation(&world, &scenario.sim, entry.seed)?;
    if rollout.log != saved {
        log::warn!("replayed rollout differs from the saved event log; the risk map follows the replay");
    }
    let policies = PolicySet {
        policies: scenario.sim.policies.clone(),
        controllers: rollout.lockdowns.clone(),
    };
    let presence = RealizedPresence::new(&world, &policies, &rollout.isolation, entry.seed);
    let known_at = match args.positives_by {
        PositivesBy::Start => t0,
        PositivesBy::End => tf,
    };
    let mut positives: Vec<u32> = saved
        .of_kind(crate::simcore::EventKind::TestOutcome)
        .filter(|e| e.positive == Some(true) && e.time <= known_at)
        .map(|e| e.subject)
        .collect();
    positives.sort_unstable();
    positives.dedup();
    let risk = narrowcast_all(&presence, (t0, tf), &positives, &scenario.sim.params);
    create_dir(&args.out)?;
    write_site_risk_csv(&args.out.join("site_risk.csv"), &world, &risk)?;
    println!("{} positives, {} sites with nonzero risk", positives.len(), risk.len());
    Ok(())
}

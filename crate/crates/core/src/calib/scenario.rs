//! The simulator as a black-box objective for calibration.

use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::interventions::Policy;
use crate::rng::{mix, stream, streams};
use crate::simcore::{run_simulation, EventKind, EventLog, SimConfig};
use crate::synthpop::{downscale_sites, Site, Tile, World, WorldSpec};

/// Region data plus the simulation settings that are held fixed while the
/// free parameters are fitted.
#[derive(Debug, Clone)]
pub struct CalibScenario {
    pub tiles: Vec<Tile>,
    pub sites: Vec<Site>,
    pub world: WorldSpec,
    pub sim: SimConfig,
    /// Population and sites are reduced by this factor; seeds and case
    /// counts are not.
    pub downscale: u32,
}

impl CalibScenario {
    pub fn days(&self) -> usize {
        (self.sim.t_max / 24.0).ceil() as usize
    }

    /// Draws a fresh, downscaled world.
    pub fn world(&self, seed: u64) -> Result<World> {
        let k = self.downscale.max(1);
        let mut spec = self.world.clone();
        spec.population.downscale = k;
        spec.horizon_hours = spec.horizon_hours.max(self.sim.t_max);
        let sites = downscale_sites(
            &self.sites,
            k,
            &spec.sites_per_category,
            &mut stream(seed, streams::DOWNSCALE),
        );
        World::synthesize(&self.tiles, sites, &spec, seed)
    }

    /// Simulation settings at parameter vector `theta` named by `names`.
    pub fn config_at(&self, names: &[String], theta: &[f64]) -> Result<SimConfig> {
        let mut sim = self.sim.clone();
        for (name, &v) in names.iter().zip(theta) {
            match name.as_str() {
                "beta" => sim.params.beta = [v; crate::synthpop::NUM_CATEGORIES],
                "xi" => sim.params.xi = v,
                "rho" => set_rho(&mut sim.policies, v),
                other => return Err(Error::config("domain", format!("unknown parameter `{other}`"))),
            }
        }
        Ok(sim)
    }
}

/// Replaces the participation reduction of every social-distancing policy,
/// including those switched by conditional lockdowns.
pub fn set_rho(policies: &mut [Policy], rho: f64) {
    for p in policies {
        match p {
            Policy::SocialDistancing { rho: r, .. } => *r = rho,
            Policy::ConditionalLockdown { bundle, .. } => set_rho(bundle, rho),
            _ => {}
        }
    }
}

/// Cumulative positive test results at the end of each day.
pub fn daily_cumulative_positives(log: &EventLog, days: usize) -> Vec<f64> {
    let mut per_day = vec![0.0; days];
    for e in log.of_kind(EventKind::TestOutcome) {
        if e.positive == Some(true) {
            let d = (e.time / 24.0).floor() as usize;
            if d < days {
                per_day[d] += 1.0;
            }
        }
    }
    let mut acc = 0.0;
    for v in per_day.iter_mut() {
        acc += *v;
        *v = acc;
    }
    per_day
}

/// Mean daily cumulative positives over `rollouts` independent simulations,
/// each on its own freshly synthesized world.
pub fn simulate_g(
    names: &[String],
    theta: &[f64],
    rollouts: usize,
    scenario: &CalibScenario,
    seed: u64,
) -> Result<Vec<f64>> {
    if rollouts == 0 {
        return Err(Error::config("rollouts", "need at least one rollout"));
    }
    let config = scenario.config_at(names, theta)?;
    config.validate()?;
    let days = scenario.days();
    let curves: Vec<Vec<f64>> = (0..rollouts)
        .into_par_iter()
        .map(|r| {
            let s = mix(seed, r as u64);
            let world = scenario.world(s)?;
            let rollout = run_simulation(&world, &config, s)?;
            Ok(daily_cumulative_positives(&rollout.log, days))
        })
        .collect::<Result<_>>()?;
    let mut mean = vec![0.0; days];
    for c in &curves {
        for (m, v) in mean.iter_mut().zip(c) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= rollouts as f64);
    Ok(mean)
}

#[derive(Deserialize)]
struct CaseRow {
    date: String,
    cumulative_positive: f64,
}

/// Reads `date,cumulative_positive` rows (ISO dates, consecutive days).
pub fn read_cases_csv(path: &Path) -> Result<Vec<(NaiveDate, f64)>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut rows: Vec<(NaiveDate, f64)> = Vec::new();
    for (n, row) in rdr.deserialize::<CaseRow>().enumerate() {
        let line = n + 2;
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(line);
            Error::parse(path, format!("line {line}: {e}"))
        })?;
        let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d")
            .map_err(|e| Error::parse(path, format!("line {line}: bad date `{}`: {e}", row.date)))?;
        if !(row.cumulative_positive >= 0.0) || !row.cumulative_positive.is_finite() {
            return Err(Error::parse(
                path,
                format!("line {line}: count must be a nonnegative number"),
            ));
        }
        if let Some((prev_date, prev)) = rows.last() {
            if date != *prev_date + chrono::Duration::days(1) {
                return Err(Error::parse(
                    path,
                    format!("line {line}: dates must be consecutive days"),
                ));
            }
            if row.cumulative_positive < *prev {
                return Err(Error::parse(
                    path,
                    format!("line {line}: cumulative counts must not decrease"),
                ));
            }
        }
        rows.push((date, row.cumulative_positive));
    }
    if rows.is_empty() {
        return Err(Error::parse(path, "no case rows"));
    }
    Ok(rows)
}

/// Aligns case rows to simulation days starting at `start`; days before the
/// first row count as zero, days after the last row are dropped.
pub fn align_cases(rows: &[(NaiveDate, f64)], start: NaiveDate) -> Vec<f64> {
    let first = rows[0].0;
    let offset = (first - start).num_days();
    let mut out = Vec::new();
    if offset > 0 {
        out.extend(std::iter::repeat_n(0.0, offset as usize));
    }
    out.extend(rows.iter().filter(|(d, _)| *d >= start).map(|(_, c)| *c));
    out
}

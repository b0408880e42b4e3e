//! Scenario files: one JSON document describing region data, population,
//! disease parameters, seeds, measures and testing.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interventions::{Policy, Window};
use crate::simcore::{init_seeds, EpidemicParams, SeedCounts, SimConfig};
use crate::synthpop::io::{read_sites, read_tiles};
use crate::synthpop::{
    synthetic_town, MobilityTable, PopulationSpec, Site, Tile, TownSpec, WorldSpec, DEFAULT_SITES_PER_CATEGORY,
    NUM_CATEGORIES,
};
use crate::testtrace::TestConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Where tiles and sites come from: CSV files, or a generated town.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionConfig {
    Files { tiles: PathBuf, sites: PathBuf },
    Synthetic(TownSpec),
}

/// Calendar window `[start, end)`; a missing bound is unbounded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DateWindow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedSpec {
    /// Initial state from the cases observed at the start date.
    Observed {
        cases: usize,
        r0: f64,
    },
    Counts(SeedCounts),
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec::Counts(SeedCounts::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub region: RegionConfig,
    pub start_date: NaiveDate,
    pub horizon_days: u32,
    pub population: PopulationSpec,
    pub mobility: MobilityTable,
    pub sites_per_category: [usize; NUM_CATEGORIES],
    pub epidemic: EpidemicParams,
    pub seeds: SeedSpec,
    pub policies: Vec<Policy<DateWindow>>,
    pub testing: Option<TestConfig>,
    pub rollouts: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            region: RegionConfig::Synthetic(TownSpec::default()),
            start_date: NaiveDate::from_ymd_opt(2020, 3, 1).expect("valid date"),
            horizon_days: 56,
            population: PopulationSpec::default(),
            mobility: MobilityTable::default(),
            sites_per_category: DEFAULT_SITES_PER_CATEGORY,
            epidemic: EpidemicParams::default(),
            seeds: SeedSpec::default(),
            policies: Vec::new(),
            testing: Some(TestConfig::default()),
            rollouts: 1,
            seed: 0,
        }
    }
}

/// A scenario with region data loaded and dates turned into hours.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub tiles: Vec<Tile>,
    pub sites: Vec<Site>,
    pub world: WorldSpec,
    pub sim: SimConfig,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<ScenarioConfig> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(
                if path == "." { "<root>".into() } else { path },
                e.into_inner().to_string(),
            )
        })?;
        Ok(config)
    }

    /// Reads a scenario file; relative region paths are taken relative to it.
    pub fn load(path: &Path) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json(&text).map_err(|e| match e {
            Error::Config { key, message } => Error::config(key, format!("{message} (in {})", path.display())),
            other => other,
        })?;
        if let RegionConfig::Files { tiles, sites } = &mut config.region {
            let base = path.parent().unwrap_or(Path::new(""));
            for p in [tiles, sites] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn t_max(&self) -> f64 {
        self.horizon_days as f64 * 24.0
    }

    /// Hours from the start date to midnight of `date`.
    pub fn hours_at(&self, date: NaiveDate) -> f64 {
        (date - self.start_date).num_days() as f64 * 24.0
    }

    pub fn date_of_day(&self, day: u32) -> NaiveDate {
        self.start_date + chrono::Duration::days(day as i64)
    }

    fn window(&self, w: &DateWindow) -> Result<Window> {
        let end_date = self.date_of_day(self.horizon_days);
        for d in [w.start, w.end].into_iter().flatten() {
            if d < self.start_date || d > end_date {
                return Err(Error::config(
                    "policies.window",
                    format!("date {d} lies outside the horizon {} to {end_date}", self.start_date),
                ));
            }
        }
        if let (Some(a), Some(b)) = (w.start, w.end) {
            if b < a {
                return Err(Error::config(
                    "policies.window",
                    format!("window ends ({b}) before it starts ({a})"),
                ));
            }
        }
        Ok(Window {
            from: w.start.map_or(f64::NEG_INFINITY, |d| self.hours_at(d)),
            to: w.end.map_or(f64::INFINITY, |d| self.hours_at(d)),
        })
    }

    pub fn seed_counts(&self) -> SeedCounts {
        match &self.seeds {
            SeedSpec::Observed { cases, r0 } => init_seeds(*cases, self.epidemic.alpha_a, *r0),
            SeedSpec::Counts(c) => *c,
        }
    }

    /// Simulation settings with policy dates resolved to hours.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let policies = self
            .policies
            .iter()
            .map(|p| p.map_window(&|w| self.window(w)))
            .collect::<Result<Vec<_>>>()?;
        let sim = SimConfig {
            params: self.epidemic.clone(),
            seeds: self.seed_counts(),
            policies,
            testing: self.testing.clone(),
            t_max: self.t_max(),
        };
        sim.validate()?;
        Ok(sim)
    }

    pub fn world_spec(&self) -> WorldSpec {
        WorldSpec {
            population: self.population.clone(),
            mobility: self.mobility.clone(),
            sites_per_category: self.sites_per_category,
            horizon_hours: self.t_max(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        if self.horizon_days == 0 {
            return Err(Error::config("horizon_days", "must be positive"));
        }
        if self.rollouts == 0 {
            return Err(Error::config("rollouts", "must be positive"));
        }
        if self.population.downscale == 0 {
            return Err(Error::config("population.downscale", "must be positive"));
        }
        if let SeedSpec::Observed { r0, .. } = self.seeds {
            if !(r0 >= 0.0) || !r0.is_finite() {
                return Err(Error::config("seeds.observed.r0", "must be finite and nonnegative"));
            }
        }
        if let RegionConfig::Files { tiles, sites } = &self.region {
            for (key, p) in [("region.files.tiles", tiles), ("region.files.sites", sites)] {
                if !p.is_file() {
                    return Err(Error::config(key, format!("file not found: {}", p.display())));
                }
            }
        }
        self.sim_config().map(|_| ())
    }

    /// Validates and loads the region data.
    pub fn resolve(&self) -> Result<Scenario> {
        self.validate()?;
        let (tiles, sites) = match &self.region {
            RegionConfig::Files { tiles, sites } => (read_tiles(tiles)?, read_sites(sites)?),
            RegionConfig::Synthetic(town) => synthetic_town(town, self.seed),
        };
        if tiles.is_empty() {
            return Err(Error::config("region", "no population tiles"));
        }
        Ok(Scenario {
            config: self.clone(),
            tiles,
            sites,
            world: self.world_spec(),
            sim: self.sim_config()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
        "schema_version": 1,
        "start_date": "2020-03-08",
        "horizon_days": 28,
        "seeds": {"observed": {"cases": 5, "r0": 2.0}},
        "policies": [
            {"type": "social_distancing", "rho": 0.5, "window": {"start": "2020-03-15"}},
            {"type": "beta_multiplier", "factors": [0.5, 0.5, 0.5, 0.5, 0.5],
             "window": {"start": "2020-03-15", "end": "2020-03-29"}}
        ]
    }"#;

    #[test]
    fn defaults_and_date_resolution() {
        let c = ScenarioConfig::from_json(EXAMPLE).unwrap();
        assert_eq!(c.epidemic, EpidemicParams::default());
        assert_eq!(c.sites_per_category, [1, 10, 5, 1, 2]);
        let sim = c.sim_config().unwrap();
        assert_eq!(
            (sim.seeds.symptomatic, sim.seeds.asymptomatic, sim.seeds.exposed),
            (5, 3, 16)
        );
        assert_eq!(sim.t_max, 28.0 * 24.0);
        assert_eq!(*sim.policies[0].window(), Window::new(7.0 * 24.0, f64::INFINITY));
        assert_eq!(*sim.policies[1].window(), Window::new(168.0, 21.0 * 24.0));
    }

    #[test]
    fn round_trip_is_identity() {
        let c = ScenarioConfig::from_json(EXAMPLE).unwrap();
        let again = ScenarioConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(c, again);
        let d = ScenarioConfig::default();
        assert_eq!(ScenarioConfig::from_json(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn errors_name_the_key() {
        let err = ScenarioConfig::from_json(r#"{"epidemic": {"xi": "high"}}"#).unwrap_err();
        assert!(err.to_string().contains("epidemic.xi"), "{err}");
        let err = ScenarioConfig::from_json(r#"{"bogus": 1}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn dates_outside_horizon_rejected() {
        let mut c = ScenarioConfig::from_json(EXAMPLE).unwrap();
        c.horizon_days = 3;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::from_json(EXAMPLE).unwrap();
        c.schema_version = 2;
        assert!(matches!(c.validate(), Err(Error::Config { key, .. }) if key == "schema_version"));
    }

    #[test]
    fn missing_region_file_named() {
        let c = ScenarioConfig {
            region: RegionConfig::Files {
                tiles: "nope/tiles.csv".into(),
                sites: "nope/sites.csv".into(),
            },
            ..Default::default()
        };
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("nope/tiles.csv"), "{err}");
    }
}

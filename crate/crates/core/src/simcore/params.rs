use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthpop::presence::saturated_window;
use crate::synthpop::{NUM_AGE_GROUPS, NUM_CATEGORIES};

pub const HOURS_PER_DAY: f64 = 24.0;

/// Log-normal time-to-event, parameters of the underlying normal in log-days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalDays {
    pub meanlog: f64,
    pub sdlog: f64,
}

impl LogNormalDays {
    pub const fn new(meanlog: f64, sdlog: f64) -> Self {
        LogNormalDays { meanlog, sdlog }
    }

    pub fn sample_hours<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        (self.meanlog + self.sdlog * z).exp() * HOURS_PER_DAY
    }

    pub fn mean_days(&self) -> f64 {
        (self.meanlog + 0.5 * self.sdlog * self.sdlog).exp()
    }
}

/// The time-to-event processes of the disease course.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Process {
    /// exposed -> infectious
    Incubation,
    /// symptomatic -> recovered
    SymptomaticRecovery,
    /// asymptomatic -> recovered
    AsymptomaticRecovery,
    /// presymptomatic -> symptomatic
    SymptomOnset,
    /// symptomatic -> hospitalized
    Hospitalization,
    /// symptomatic -> dead
    Death,
}

impl FromStr for Process {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "M" => Process::Incubation,
            "Rs" | "Rˢ" => Process::SymptomaticRecovery,
            "Ra" | "Rᵃ" => Process::AsymptomaticRecovery,
            "W" => Process::SymptomOnset,
            "Y" => Process::Hospitalization,
            "Z" => Process::Death,
            other => return Err(Error::UnknownProcess(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayTable {
    #[serde(rename = "M")]
    pub incubation: LogNormalDays,
    #[serde(rename = "R")]
    pub recovery: LogNormalDays,
    #[serde(rename = "W")]
    pub symptom_onset: LogNormalDays,
    #[serde(rename = "Y")]
    pub hospitalization: LogNormalDays,
    #[serde(rename = "Z")]
    pub death: LogNormalDays,
}

impl Default for DelayTable {
    fn default() -> Self {
        DelayTable {
            incubation: LogNormalDays::new(0.9470, 0.6669),
            recovery: LogNormalDays::new(2.6365, 0.0713),
            symptom_onset: LogNormalDays::new(0.7463, 0.4161),
            hospitalization: LogNormalDays::new(1.9358, 0.1421),
            death: LogNormalDays::new(2.5620, 0.0768),
        }
    }
}

impl DelayTable {
    pub fn get(&self, process: Process) -> &LogNormalDays {
        match process {
            Process::Incubation => &self.incubation,
            Process::SymptomaticRecovery | Process::AsymptomaticRecovery => &self.recovery,
            Process::SymptomOnset => &self.symptom_onset,
            Process::Hospitalization => &self.hospitalization,
            Process::Death => &self.death,
        }
    }

    fn all(&self) -> [&LogNormalDays; 5] {
        [
            &self.incubation,
            &self.recovery,
            &self.symptom_onset,
            &self.hospitalization,
            &self.death,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpidemicParams {
    /// Site transmission rate per category (1/hour).
    pub beta: [f64; NUM_CATEGORIES],
    /// Household transmission rate (1/hour).
    pub xi: f64,
    /// Relative infectiousness of asymptomatic cases.
    pub mu: f64,
    /// Decay of infectiousness left at a site (1/hour).
    pub gamma: f64,
    /// Environmental transmission window (hours).
    pub delta: f64,
    pub alpha_a: f64,
    /// Probability a symptomatic case is hospitalized, by age group.
    pub alpha_h: [f64; NUM_AGE_GROUPS],
    /// Probability a symptomatic case dies, by age group.
    pub alpha_b: [f64; NUM_AGE_GROUPS],
    pub delays: DelayTable,
    /// Imported exposures per week per 100,000 inhabitants.
    pub background_rate: f64,
}

impl Default for EpidemicParams {
    fn default() -> Self {
        EpidemicParams {
            beta: [0.5; NUM_CATEGORIES],
            xi: 0.5,
            mu: 0.55,
            gamma: 0.3465,
            delta: 4.6438,
            alpha_a: 0.4,
            alpha_h: [0.001, 0.003, 0.015, 0.05, 0.18, 0.27],
            alpha_b: [0.000_02, 0.000_06, 0.000_5, 0.003, 0.035, 0.093],
            delays: DelayTable::default(),
            background_rate: 0.0,
        }
    }
}

impl EpidemicParams {
    pub fn with_shared_beta(mut self, beta: f64) -> Self {
        self.beta = [beta; NUM_CATEGORIES];
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, m: &str| Err(Error::config(format!("epidemic.{k}"), m));
        if self.beta.iter().any(|b| !(*b >= 0.0) || !b.is_finite()) {
            return bad("beta", "rates must be finite and nonnegative");
        }
        if !(self.xi >= 0.0) || !self.xi.is_finite() {
            return bad("xi", "must be finite and nonnegative");
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return bad("mu", "must lie in [0, 1]");
        }
        if !(self.gamma > 0.0) || !(self.delta > 0.0) {
            return bad("gamma", "gamma and delta must be positive");
        }
        if !(0.0..1.0).contains(&self.alpha_a) {
            return bad("alpha_a", "must lie in [0, 1)");
        }
        for p in self.alpha_h.iter().chain(self.alpha_b.iter()) {
            if !(0.0..=1.0).contains(p) {
                return bad("alpha_h", "probabilities must lie in [0, 1]");
            }
        }
        for d in self.delays.all() {
            if !(d.sdlog > 0.0) || !d.meanlog.is_finite() {
                return bad("delays", "log-normal sdlog must be positive");
            }
        }
        if !(self.background_rate >= 0.0) {
            return bad("background_rate", "must be nonnegative");
        }
        Ok(())
    }

    pub fn max_beta(&self) -> f64 {
        self.beta.iter().copied().fold(0.0, f64::max)
    }

    /// Upper bound on any single pair's site exposure rate:
    /// `max_k beta_k (1 - e^{-gamma delta}) / gamma`.
    pub fn lambda_max(&self) -> f64 {
        self.max_beta() * saturated_window(self.gamma, self.delta)
    }

    /// Upper bound on a household pair's exposure rate.
    pub fn household_lambda_max(&self) -> f64 {
        self.xi * saturated_window(self.gamma, self.delta)
    }
}

/// Draws a delay in hours for one process.
pub fn sample_transition_delay<R: Rng + ?Sized>(process: Process, params: &EpidemicParams, rng: &mut R) -> f64 {
    params.delays.get(process).sample_hours(rng)
}

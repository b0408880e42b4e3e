//! Testing with reporting delay, contact tracing, isolation and site
//! narrowcasting.

pub mod contacts;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervals::Interval;
use crate::simcore::event::{Event, EventKind};
use crate::simcore::state::Compartment;
use crate::synthpop::{Individual, World};

pub use contacts::{
    empirical_exposure_probability, exposure_kernel, narrowcast_all, narrowcast_site_risk, rank_contacts,
    trace_contacts_both_ways, trace_contacts_location, trace_contacts_proximity, ContactMode, ContactRecord,
    PresenceSource,
};

/// What happens after a positive result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TestPolicy {
    /// Symptomatic individuals are tested first come, first served; no tracing.
    SymptomaticFifo,
    /// Contacts of positives are isolated.
    TracedIsolate,
    /// Contacts of positives are isolated and tested.
    TracedContacts,
    /// All contacts are isolated; the `k` most exposed are tested.
    RiskRanked { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TracingMode {
    Isolate,
    IsolateAndTest,
    IsolateAndTestRanked(usize),
}

impl TestPolicy {
    pub fn tracing_mode(self) -> Option<TracingMode> {
        match self {
            TestPolicy::SymptomaticFifo => None,
            TestPolicy::TracedIsolate => Some(TracingMode::Isolate),
            TestPolicy::TracedContacts => Some(TracingMode::IsolateAndTest),
            TestPolicy::RiskRanked { k } => Some(TracingMode::IsolateAndTestRanked(k)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestConfig {
    /// Reporting delay in hours.
    pub delta_test: f64,
    pub tests_per_day: f64,
    pub policy: TestPolicy,
    /// Share of the population that takes part in tracing.
    pub compliance: f64,
    pub lookback_days: f64,
    pub isolation_days: f64,
    pub contact_mode: ContactMode,
    /// Whether positives stop visiting sites and isolate from their household.
    pub isolate_positives: bool,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            delta_test: 48.0,
            tests_per_day: 100.0,
            policy: TestPolicy::SymptomaticFifo,
            compliance: 1.0,
            lookback_days: 10.0,
            isolation_days: 14.0,
            contact_mode: ContactMode::Location,
            isolate_positives: true,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::config("testing", m));
        if !(self.delta_test >= 0.0) {
            return bad("delta_test must be nonnegative");
        }
        if !(self.tests_per_day > 0.0) {
            return bad("tests_per_day must be positive");
        }
        if !(0.0..=1.0).contains(&self.compliance) {
            return bad("compliance must lie in [0, 1]");
        }
        if !(self.lookback_days > 0.0 && self.isolation_days > 0.0) {
            return bad("lookback and isolation periods must be positive");
        }
        Ok(())
    }

    pub fn lookback_hours(&self) -> f64 {
        self.lookback_days * 24.0
    }

    pub fn isolation_hours(&self) -> f64 {
        self.isolation_days * 24.0
    }
}

/// Fixed daily capacity served at evenly spaced slots, first in first out.
#[derive(Debug, Clone)]
pub struct TestQueue {
    spacing: f64,
    next_free: f64,
    pub enqueued: u64,
    pub dequeued: u64,
}

impl TestQueue {
    pub fn new(tests_per_day: f64) -> Self {
        TestQueue {
            spacing: 24.0 / tests_per_day,
            next_free: 0.0,
            enqueued: 0,
            dequeued: 0,
        }
    }

    /// Reserves the first free slot at or after `t` and returns its time.
    pub fn schedule(&mut self, t: f64) -> f64 {
        let grid = (t / self.spacing).ceil() * self.spacing;
        let slot = grid.max(t).max(self.next_free);
        self.next_free = slot + self.spacing;
        self.enqueued += 1;
        slot
    }

    pub fn mark_dequeued(&mut self) {
        self.dequeued += 1;
    }

    pub fn queued(&self) -> u64 {
        self.enqueued - self.dequeued
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub t_enqueue: f64,
    pub t_sample: f64,
    pub t_outcome: f64,
    pub individual: u32,
    pub positive: bool,
}

/// Isolations and tests triggered by one positive result.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TracingActions {
    pub isolate: Vec<(u32, Interval)>,
    pub test: Vec<u32>,
}

/// Applies a tracing mode to the scored contacts `(id, p̂)` of `index`.
/// Both index and contact must take part in tracing.
pub fn apply_tracing_policy(
    index: u32,
    contacts: &[(u32, f64)],
    mode: TracingMode,
    now: f64,
    isolation_hours: f64,
    compliance: f64,
    individuals: &[Individual],
) -> TracingActions {
    let mut actions = TracingActions::default();
    if !individuals[index as usize].is_compliant(compliance) {
        return actions;
    }
    let traced: Vec<(u32, f64)> = contacts
        .iter()
        .copied()
        .filter(|&(j, _)| j != index && individuals[j as usize].is_compliant(compliance))
        .collect();
    actions.isolate = traced.iter().map(|&(j, _)| (j, (now, now + isolation_hours))).collect();
    actions.test = match mode {
        TracingMode::Isolate => Vec::new(),
        TracingMode::IsolateAndTest => traced.iter().map(|&(j, _)| j).collect(),
        TracingMode::IsolateAndTestRanked(k) => rank_contacts(&traced, k),
    };
    actions
}

/// Replays symptomatic testing over a finished log, ignoring any feedback
/// of results on the epidemic.
pub fn process_testing(log: &[Event], config: &TestConfig, population: usize) -> Vec<TestRecord> {
    let mut timelines: Vec<Vec<(f64, Compartment)>> = vec![Vec::new(); population];
    let mut onsets = Vec::new();
    for e in log {
        let c = match e.kind {
            EventKind::Exposure => Compartment::Exposed,
            EventKind::BecomeIa => Compartment::Asymptomatic,
            EventKind::BecomeIp => Compartment::Presymptomatic,
            EventKind::BecomeIs => Compartment::Symptomatic,
            EventKind::Recover => Compartment::Recovered,
            EventKind::Die => Compartment::Dead,
            _ => continue,
        };
        timelines[e.subject as usize].push((e.time, c));
        if c == Compartment::Symptomatic {
            onsets.push((e.time, e.subject));
        }
    }
    let at = |i: u32, t: f64| {
        timelines[i as usize]
            .iter()
            .take_while(|(s, _)| *s <= t)
            .last()
            .map(|&(_, c)| c)
            .unwrap_or(Compartment::Susceptible)
    };
    let mut queue = TestQueue::new(config.tests_per_day);
    let mut busy_until = vec![f64::NEG_INFINITY; population];
    let mut records = Vec::new();
    for (t, i) in onsets {
        if busy_until[i as usize] > t {
            continue;
        }
        let sample = queue.schedule(t);
        queue.mark_dequeued();
        busy_until[i as usize] = sample + config.delta_test;
        let state = at(i, sample);
        if state == Compartment::Dead {
            continue;
        }
        records.push(TestRecord {
            t_enqueue: t,
            t_sample: sample,
            t_outcome: sample + config.delta_test,
            individual: i,
            positive: state.tests_positive(),
        });
    }
    records
}

pub fn write_tests_csv(path: &Path, records: &[TestRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e.to_string()))?;
    w.write_record(["t_enqueue_h", "t_outcome_h", "individual", "result"])
        .map_err(|e| Error::parse(path, e.to_string()))?;
    for r in records {
        w.write_record([
            r.t_enqueue.to_string(),
            r.t_outcome.to_string(),
            r.individual.to_string(),
            if r.positive { "positive" } else { "negative" }.to_string(),
        ])
        .map_err(|e| Error::parse(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `site_id,lat,lon,category,p_hat` for every site of the world, riskiest first.
pub fn write_site_risk_csv(path: &Path, world: &World, risk: &std::collections::BTreeMap<u32, f64>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "site_id,lat,lon,category,p_hat").map_err(io)?;
    let mut rows: Vec<(&crate::synthpop::Site, f64)> = world
        .sites
        .iter()
        .map(|s| (s, risk.get(&s.id).copied().unwrap_or(0.0)))
        .collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.id.cmp(&b.0.id)));
    for (s, p) in rows {
        writeln!(out, "{},{},{},{},{}", s.id, s.lat, s.lon, s.category, p).map_err(io)?;
    }
    out.flush().map_err(io)
}

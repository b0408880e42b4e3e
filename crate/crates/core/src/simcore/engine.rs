//! Event-driven simulation over a fixed world.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::intervals::{self, Interval};
use crate::interventions::{effective_beta, visit_admitted, LockdownController, Policy, PolicySet};
use crate::rng::{self, streams, SimRng};
use crate::simcore::event::{Event, EventKind, EventQueue, Pending, Route};
use crate::simcore::exposure::{
    exposure_contribution, first_arrival, household_contact_spans, household_contribution, relative_infectiousness,
};
use crate::simcore::log::EventLog;
use crate::simcore::params::{sample_transition_delay, EpidemicParams, Process};
use crate::simcore::seeds::{place_seeds, InitialCase, SeedCounts};
use crate::simcore::state::{Compartment, Course, HealthState};
use crate::synthpop::presence::presence_integral;
use crate::synthpop::{Visit, World};
use crate::testtrace::{
    apply_tracing_policy, empirical_exposure_probability, trace_contacts_both_ways, trace_contacts_proximity,
    ContactMode, PresenceSource, TestConfig, TestQueue, TestRecord, TracingMode,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: EpidemicParams,
    pub seeds: SeedCounts,
    pub policies: Vec<Policy>,
    pub testing: Option<TestConfig>,
    /// Horizon in hours.
    pub t_max: f64,
}

impl SimConfig {
    pub fn new(params: EpidemicParams, t_max: f64) -> Self {
        SimConfig {
            params,
            seeds: SeedCounts::default(),
            policies: Vec::new(),
            testing: None,
            t_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        for p in &self.policies {
            p.validate()?;
        }
        if let Some(t) = &self.testing {
            t.validate()?;
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(crate::Error::config("t_max", "horizon must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Everything a single run produces.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub seed: u64,
    pub log: EventLog,
    pub tests: Vec<TestRecord>,
    pub states: Vec<HealthState>,
    /// Isolation intervals per individual.
    pub isolation: Vec<Vec<Interval>>,
    /// One controller per configured policy; only conditional lockdowns use theirs.
    pub lockdowns: Vec<LockdownController>,
    /// Exposure proposals removed by containment measures.
    pub rejected_exposures: u64,
}

impl Rollout {
    pub fn positives(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.tests.iter().filter(|r| r.positive).map(|r| r.individual).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Individuals with a positive result no later than `t`.
    pub fn positives_by(&self, t: f64) -> Vec<u32> {
        let mut ids: Vec<u32> = self
            .tests
            .iter()
            .filter(|r| r.positive && r.t_outcome <= t)
            .map(|r| r.individual)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Check-ins as they actually happened under containment measures and isolation.
pub struct RealizedPresence<'a> {
    pub world: &'a World,
    pub policies: &'a PolicySet,
    pub isolation: &'a [Vec<Interval>],
    admission_seed: u64,
    gate_visits: bool,
}

impl<'a> RealizedPresence<'a> {
    pub fn new(world: &'a World, policies: &'a PolicySet, isolation: &'a [Vec<Interval>], seed: u64) -> Self {
        RealizedPresence {
            world,
            policies,
            isolation,
            admission_seed: rng::mix(seed, streams::ADMISSION),
            gate_visits: !policies.is_inert(),
        }
    }

    /// Whether visit `v` survives the containment measures (isolation aside).
    pub fn admitted(&self, v: usize) -> bool {
        if !self.gate_visits {
            return true;
        }
        let visit = &self.world.visits[v];
        let person = &self.world.individuals[visit.individual as usize];
        visit_admitted(
            person,
            visit,
            self.policies,
            &mut rng::keyed(self.admission_seed, v as u64),
        )
    }

    /// Parts of visit `v` that took place.
    pub fn pieces(&self, v: usize, out: &mut Vec<Interval>) {
        out.clear();
        if !self.admitted(v) {
            return;
        }
        let visit = &self.world.visits[v];
        let iso = &self.isolation[visit.individual as usize];
        if iso.is_empty() {
            out.push((visit.t_arrive, visit.t_depart));
        } else {
            out.extend(intervals::subtract((visit.t_arrive, visit.t_depart), iso));
        }
    }

    pub fn isolated_at(&self, person: u32, t: f64) -> bool {
        intervals::covers(&self.isolation[person as usize], t)
    }

    /// All realized visits, in the world's visit order.
    pub fn visits(&self) -> Vec<Visit> {
        let mut pieces = Vec::new();
        let mut out = Vec::new();
        for v in 0..self.world.visits.len() {
            self.pieces(v, &mut pieces);
            let base = &self.world.visits[v];
            out.extend(pieces.iter().map(|&(a, b)| Visit {
                t_arrive: a,
                t_depart: b,
                ..*base
            }));
        }
        out
    }
}

impl PresenceSource for RealizedPresence<'_> {
    fn stays(&self, person: u32, lo: f64, hi: f64, out: &mut Vec<(u32, Interval)>) {
        let mut pieces = Vec::new();
        for v in self.world.visits_overlapping(person, lo, hi) {
            self.pieces(v, &mut pieces);
            let site = self.world.visits[v].site;
            out.extend(pieces.iter().map(|&p| (site, p)));
        }
    }

    fn occupants(&self, site: u32, lo: f64, hi: f64, out: &mut Vec<(u32, Interval)>) {
        let mut pieces = Vec::new();
        for v in self.world.site_visits_overlapping(site, lo, hi) {
            self.pieces(v, &mut pieces);
            let person = self.world.visits[v].individual;
            out.extend(pieces.iter().map(|&p| (person, p)));
        }
    }
}

/// Runs one rollout with seeds placed uniformly at random.
pub fn run_simulation(world: &World, config: &SimConfig, seed: u64) -> Result<Rollout> {
    config.validate()?;
    let mut rng = rng::stream(seed, streams::SIMULATION);
    let initial = place_seeds(&config.seeds, world.len(), &mut rng);
    Ok(Simulator::new(world, config, seed, rng).run(&initial))
}

/// Runs one rollout from explicitly given initial cases.
pub fn run_with_initial(world: &World, config: &SimConfig, initial: &[InitialCase], seed: u64) -> Result<Rollout> {
    config.validate()?;
    for case in initial {
        if case.individual as usize >= world.len() {
            return Err(crate::Error::invalid(format!(
                "initial case {} is not in the world",
                case.individual
            )));
        }
    }
    let rng = rng::stream(seed, streams::SIMULATION);
    Ok(Simulator::new(world, config, seed, rng).run(initial))
}

struct Simulator<'a> {
    world: &'a World,
    config: &'a SimConfig,
    params: &'a EpidemicParams,
    seed: u64,
    rng: SimRng,
    queue: EventQueue,
    states: Vec<HealthState>,
    transmits: Vec<bool>,
    isolation: Vec<Vec<Interval>>,
    any_isolation: bool,
    policies: PolicySet,
    log: Vec<Event>,
    tests: Vec<TestRecord>,
    test_queue: Option<TestQueue>,
    awaiting: Vec<bool>,
    daily_positives: Vec<u64>,
    n_susceptible: usize,
    rejected: u64,
}

impl<'a> Simulator<'a> {
    fn new(world: &'a World, config: &'a SimConfig, seed: u64, rng: SimRng) -> Self {
        let n = world.len();
        let days = (config.t_max / 24.0).ceil() as usize + 1;
        Simulator {
            world,
            config,
            params: &config.params,
            seed,
            rng,
            queue: EventQueue::new(),
            states: vec![HealthState::default(); n],
            transmits: vec![true; n],
            isolation: vec![Vec::new(); n],
            any_isolation: false,
            policies: PolicySet::new(config.policies.clone()),
            log: Vec::new(),
            tests: Vec::new(),
            test_queue: config.testing.as_ref().map(|t| TestQueue::new(t.tests_per_day)),
            awaiting: vec![false; n],
            daily_positives: vec![0; days],
            n_susceptible: n,
            rejected: 0,
        }
    }

    fn run(mut self, initial: &[InitialCase]) -> Rollout {
        for case in initial {
            self.seed_case(case);
        }
        self.schedule_imports();
        if self.policies.has_conditional() {
            let days = (self.config.t_max / 24.0).floor() as u64;
            for d in 1..=days {
                self.queue.push(d as f64 * 24.0, Pending::PolicyTick);
            }
        }
        while let Some((t, item)) = self.queue.pop() {
            if t > self.config.t_max {
                break;
            }
            match item {
                Pending::Exposure {
                    subject,
                    infector,
                    route,
                } => self.on_exposure(t, subject, infector, route),
                Pending::Import => self.on_import(t),
                Pending::Transition { kind, subject } => self.on_transition(t, kind, subject),
                Pending::TestSample {
                    subject,
                    enqueued,
                    capacity,
                } => self.on_test_sample(t, subject, enqueued, capacity),
                Pending::TestOutcome {
                    subject,
                    enqueued,
                    sampled,
                    positive,
                } => self.on_test_outcome(t, subject, enqueued, sampled, positive),
                Pending::PolicyTick => {
                    let n = self.world.len();
                    self.policies.tick(t, &self.daily_positives, n);
                }
            }
        }
        Rollout {
            seed: self.seed,
            log: EventLog { events: self.log },
            tests: self.tests,
            states: self.states,
            isolation: self.isolation,
            lockdowns: self.policies.controllers,
            rejected_exposures: self.rejected,
        }
    }

    fn push(&mut self, t: f64, item: Pending) {
        if t <= self.config.t_max {
            self.queue.push(t, item);
        }
    }

    fn record(&mut self, t: f64, kind: EventKind, subject: u32, infector: Option<u32>, site: Option<u32>) {
        self.log.push(Event {
            time: t,
            kind,
            subject,
            infector,
            site,
            positive: None,
        });
    }

    fn sample_course(&mut self, subject: u32, asymptomatic: Option<bool>) -> Course {
        let p = self.params;
        let age = self.world.individuals[subject as usize].age_group.index();
        let asymptomatic = asymptomatic.unwrap_or_else(|| self.rng.random::<f64>() < p.alpha_a);
        let incubation = sample_transition_delay(Process::Incubation, p, &mut self.rng);
        if asymptomatic {
            let recovery = sample_transition_delay(Process::AsymptomaticRecovery, p, &mut self.rng);
            return Course {
                asymptomatic,
                hospitalize: false,
                dies: false,
                incubation,
                symptom_onset: 0.0,
                recovery,
                hospitalization: 0.0,
                death: 0.0,
            };
        }
        let symptom_onset = sample_transition_delay(Process::SymptomOnset, p, &mut self.rng);
        let hospitalize = self.rng.random::<f64>() < p.alpha_h[age];
        let dies = self.rng.random::<f64>() < p.alpha_b[age];
        let hospitalization = if hospitalize {
            sample_transition_delay(Process::Hospitalization, p, &mut self.rng)
        } else {
            0.0
        };
        let death = if dies {
            sample_transition_delay(Process::Death, p, &mut self.rng)
        } else {
            0.0
        };
        let recovery = sample_transition_delay(Process::SymptomaticRecovery, p, &mut self.rng);
        Course {
            asymptomatic,
            hospitalize,
            dies,
            incubation,
            symptom_onset,
            recovery,
            hospitalization,
            death,
        }
    }

    fn leave_susceptible(&mut self, i: u32) {
        if self.states[i as usize].is_susceptible() {
            self.n_susceptible -= 1;
        }
    }

    fn seed_case(&mut self, case: &InitialCase) {
        let i = case.individual;
        if !self.states[i as usize].is_susceptible() {
            return;
        }
        if case.compartment == Compartment::Susceptible {
            return;
        }
        if case.compartment != Compartment::Exposed {
            // `expose` does its own bookkeeping
            self.leave_susceptible(i);
        }
        self.transmits[i as usize] = case.transmits;
        match case.compartment {
            Compartment::Susceptible => unreachable!(),
            Compartment::Recovered | Compartment::Dead => {
                self.states[i as usize].compartment = case.compartment;
            }
            Compartment::Exposed => self.expose(0.0, i, None, None),
            Compartment::Asymptomatic => {
                let course = self.sample_course(i, Some(true));
                let s = &mut self.states[i as usize];
                s.course = Some(course);
                s.t_exposed = Some(0.0);
                s.compartment = Compartment::Exposed;
                self.become_infectious(0.0, i, EventKind::BecomeIa);
            }
            Compartment::Presymptomatic => {
                let course = self.sample_course(i, Some(false));
                let s = &mut self.states[i as usize];
                s.course = Some(course);
                s.t_exposed = Some(0.0);
                s.compartment = Compartment::Exposed;
                self.become_infectious(0.0, i, EventKind::BecomeIp);
            }
            Compartment::Symptomatic => {
                let course = self.sample_course(i, Some(false));
                let s = &mut self.states[i as usize];
                s.course = Some(Course {
                    symptom_onset: 0.0,
                    ..course
                });
                s.t_exposed = Some(0.0);
                s.t_infectious = Some(0.0);
                s.compartment = Compartment::Presymptomatic;
                self.become_symptomatic(0.0, i, false);
                if case.transmits {
                    let course = self.states[i as usize].course.expect("seeded cases carry a course");
                    let end = course.infectious_duration().min(self.config.t_max);
                    self.sample_all_exposures(i, 0.0, end);
                }
                self.states[i as usize].tests_positive += 1;
                self.tests.push(TestRecord {
                    t_enqueue: 0.0,
                    t_sample: 0.0,
                    t_outcome: 0.0,
                    individual: i,
                    positive: true,
                });
                self.log.push(Event {
                    positive: Some(true),
                    ..Event::new(0.0, EventKind::TestOutcome, i)
                });
                self.daily_positives[0] += 1;
                if self.config.testing.as_ref().is_some_and(|t| t.isolate_positives) {
                    self.isolate(i, (0.0, f64::INFINITY));
                }
            }
        }
    }

    fn schedule_imports(&mut self) {
        let per_hour = self.params.background_rate * self.world.len() as f64 / 100_000.0 / (24.0 * 7.0);
        if !(per_hour > 0.0) {
            return;
        }
        let mut t = 0.0;
        loop {
            t += self.rng.sample::<f64, _>(rand_distr::Exp1) / per_hour;
            if t > self.config.t_max {
                break;
            }
            self.queue.push(t, Pending::Import);
        }
    }

    fn on_import(&mut self, t: f64) {
        if self.n_susceptible == 0 {
            return;
        }
        let n = self.world.len();
        let target = loop {
            let i = self.rng.random_range(0..n) as u32;
            if self.states[i as usize].is_susceptible() {
                break i;
            }
        };
        self.expose(t, target, None, None);
    }

    /// Moves a susceptible into the exposed compartment and schedules its course.
    fn expose(&mut self, t: f64, i: u32, infector: Option<u32>, site: Option<u32>) {
        self.leave_susceptible(i);
        let course = self.sample_course(i, None);
        let s = &mut self.states[i as usize];
        s.compartment = Compartment::Exposed;
        s.t_exposed = Some(t);
        s.course = Some(course);
        self.record(t, EventKind::Exposure, i, infector, site);
        let kind = if course.asymptomatic {
            EventKind::BecomeIa
        } else {
            EventKind::BecomeIp
        };
        self.push(t + course.incubation, Pending::Transition { kind, subject: i });
    }

    fn become_infectious(&mut self, t: f64, i: u32, kind: EventKind) {
        let course = self.states[i as usize]
            .course
            .expect("infected individuals carry a course");
        let s = &mut self.states[i as usize];
        s.t_infectious = Some(t);
        s.compartment = if kind == EventKind::BecomeIa {
            Compartment::Asymptomatic
        } else {
            Compartment::Presymptomatic
        };
        self.record(t, kind, i, None, None);
        if kind == EventKind::BecomeIa {
            self.push(
                t + course.recovery,
                Pending::Transition {
                    kind: EventKind::Recover,
                    subject: i,
                },
            );
        } else {
            self.push(
                t + course.symptom_onset,
                Pending::Transition {
                    kind: EventKind::BecomeIs,
                    subject: i,
                },
            );
        }
        if self.transmits[i as usize] {
            let end = (t + course.infectious_duration()).min(self.config.t_max);
            self.sample_all_exposures(i, t, end);
        }
    }

    fn become_symptomatic(&mut self, t: f64, i: u32, enqueue_test: bool) {
        let course = self.states[i as usize]
            .course
            .expect("infected individuals carry a course");
        let s = &mut self.states[i as usize];
        s.compartment = Compartment::Symptomatic;
        s.t_symptomatic = Some(t);
        self.record(t, EventKind::BecomeIs, i, None, None);
        if course.hospitalize {
            self.push(
                t + course.hospitalization,
                Pending::Transition {
                    kind: EventKind::Hospitalize,
                    subject: i,
                },
            );
        }
        if course.dies {
            self.push(
                t + course.death,
                Pending::Transition {
                    kind: EventKind::Die,
                    subject: i,
                },
            );
        }
        self.push(
            t + course.recovery,
            Pending::Transition {
                kind: EventKind::Recover,
                subject: i,
            },
        );
        if enqueue_test {
            self.enqueue_test(t, i, false);
        }
    }

    fn on_transition(&mut self, t: f64, kind: EventKind, i: u32) {
        let c = self.states[i as usize].compartment;
        match kind {
            EventKind::BecomeIa | EventKind::BecomeIp if c == Compartment::Exposed => {
                self.become_infectious(t, i, kind)
            }
            EventKind::BecomeIs if c == Compartment::Presymptomatic => self.become_symptomatic(t, i, true),
            EventKind::Hospitalize if c == Compartment::Symptomatic && !self.states[i as usize].hospitalized => {
                self.states[i as usize].hospitalized = true;
                self.record(t, kind, i, None, None);
            }
            EventKind::Recover if matches!(c, Compartment::Asymptomatic | Compartment::Symptomatic) => {
                let s = &mut self.states[i as usize];
                s.compartment = Compartment::Recovered;
                s.hospitalized = false;
                s.t_resolved = Some(t);
                self.record(t, kind, i, None, None);
            }
            EventKind::Die if c == Compartment::Symptomatic => {
                let s = &mut self.states[i as usize];
                s.compartment = Compartment::Dead;
                s.hospitalized = false;
                s.t_resolved = Some(t);
                self.record(t, kind, i, None, None);
            }
            // stale: the individual already moved on
            _ => {}
        }
    }

    /// Samples the first exposure of every susceptible contact of `j` over `[from, to)`.
    fn sample_all_exposures(&mut self, j: u32, from: f64, to: f64) {
        if to <= from {
            return;
        }
        let world = self.world;
        let params = self.params;
        let delta = params.delta;
        let course = self.states[j as usize]
            .course
            .expect("infectious individuals carry a course");
        let r = relative_infectiousness(course.asymptomatic, params);

        let mut spans: Vec<(u32, Interval)> = Vec::new();
        for vj in world.visits_overlapping(j, from - delta, to) {
            let v = &world.visits[vj];
            let reach = (v.t_arrive.max(from), (v.t_depart + delta).min(to));
            if reach.1 <= reach.0 {
                continue;
            }
            for vi in world.site_visits_overlapping(v.site, reach.0, reach.1) {
                let w = &world.visits[vi];
                if w.individual == j || !self.states[w.individual as usize].is_susceptible() {
                    continue;
                }
                if let Some(s) = intervals::intersect((w.t_arrive, w.t_depart), reach) {
                    spans.push((w.individual, s));
                }
            }
        }
        spans.sort_by(|a, b| a.0.cmp(&b.0).then(a.1 .0.total_cmp(&b.1 .0)));
        let bound = params.lambda_max() * r;
        let mut k = 0;
        let mut merged = Vec::new();
        while k < spans.len() {
            let i = spans[k].0;
            merged.clear();
            while k < spans.len() && spans[k].0 == i {
                merged.push(spans[k].1);
                k += 1;
            }
            intervals::normalize(&mut merged);
            if let Some(t) = first_arrival(&merged, bound, &mut self.rng, |t| {
                exposure_contribution(world, j, i, t, params, r)
            }) {
                let site = world
                    .visit_at(i, t)
                    .map(|v| world.visits[v].site)
                    .expect("exposed at a site");
                self.queue.push(
                    t,
                    Pending::Exposure {
                        subject: i,
                        infector: j,
                        route: Route::Site(site),
                    },
                );
            }
        }

        let hh_bound = params.household_lambda_max() * r;
        if hh_bound > 0.0 {
            for &i in world.household_of(j) {
                if i == j || !self.states[i as usize].is_susceptible() {
                    continue;
                }
                self.sample_household(j, i, from, to, r);
            }
        }
    }

    fn sample_site(&mut self, j: u32, i: u32, from: f64, to: f64, r: f64) {
        let (world, params) = (self.world, self.params);
        let spans = crate::simcore::exposure::site_contact_spans(world, j, i, from, to, params.delta);
        if let Some(t) = first_arrival(&spans, params.lambda_max() * r, &mut self.rng, |t| {
            exposure_contribution(world, j, i, t, params, r)
        }) {
            let site = world
                .visit_at(i, t)
                .map(|v| world.visits[v].site)
                .expect("exposed at a site");
            self.queue.push(
                t,
                Pending::Exposure {
                    subject: i,
                    infector: j,
                    route: Route::Site(site),
                },
            );
        }
    }

    fn sample_household(&mut self, j: u32, i: u32, from: f64, to: f64, r: f64) {
        let (world, params) = (self.world, self.params);
        let spans = household_contact_spans(world, j, i, from, to, params.delta);
        if let Some(t) = first_arrival(&spans, params.household_lambda_max() * r, &mut self.rng, |t| {
            household_contribution(world, j, i, t, params, r)
        }) {
            self.queue.push(
                t,
                Pending::Exposure {
                    subject: i,
                    infector: j,
                    route: Route::Household,
                },
            );
        }
    }

    fn on_exposure(&mut self, t: f64, i: u32, j: u32, route: Route) {
        if !self.states[j as usize].compartment.is_infectious() {
            return;
        }
        let ratio = self.policy_ratio(t, i, j, route);
        if ratio < 1.0 && self.rng.random::<f64>() >= ratio {
            self.rejected += 1;
            if self.states[i as usize].is_susceptible() {
                let course = self.states[j as usize]
                    .course
                    .expect("infectious individuals carry a course");
                let onset = self.states[j as usize].t_infectious.unwrap_or(0.0);
                let end = (onset + course.infectious_duration()).min(self.config.t_max);
                let r = relative_infectiousness(course.asymptomatic, self.params);
                match route {
                    Route::Site(_) => self.sample_site(j, i, t, end, r),
                    Route::Household => self.sample_household(j, i, t, end, r),
                    Route::Import => {}
                }
            }
            return;
        }
        if !self.states[i as usize].is_susceptible() {
            return;
        }
        let site = match route {
            Route::Site(k) => Some(k),
            _ => None,
        };
        self.expose(t, i, Some(j), site);
    }

    /// Ratio of the exposure rate under containment measures and isolation
    /// to the rate it was sampled from.
    fn policy_ratio(&self, t: f64, i: u32, j: u32, route: Route) -> f64 {
        let iso_free =
            !self.any_isolation || (self.isolation[i as usize].is_empty() && self.isolation[j as usize].is_empty());
        if self.policies.policies.is_empty() && iso_free {
            return 1.0;
        }
        let (world, params) = (self.world, self.params);
        let view = RealizedPresence::new(world, &self.policies, &self.isolation, self.seed);
        if view.isolated_at(i, t) {
            return 0.0;
        }
        let lo = t - params.delta;
        match route {
            Route::Import => 1.0,
            Route::Household => {
                if iso_free {
                    return 1.0;
                }
                let base = household_contribution(world, j, i, t, params, 1.0);
                if !(base > 0.0) {
                    return 0.0;
                }
                let mut both =
                    intervals::intersect_all(&world.home_intervals(i, lo, t), &world.home_intervals(j, lo, t));
                let mut holes = self.isolation[i as usize].clone();
                holes.extend_from_slice(&self.isolation[j as usize]);
                intervals::normalize(&mut holes);
                both = both
                    .into_iter()
                    .flat_map(|iv| intervals::subtract(iv, &holes))
                    .collect();
                let kept: f64 = both
                    .iter()
                    .map(|&iv| presence_integral(iv, t, params.delta, params.gamma))
                    .sum();
                (params.xi * kept / base).min(1.0)
            }
            Route::Site(k) => {
                let Some(vi) = world.visit_at(i, t) else {
                    return 0.0;
                };
                if !view.admitted(vi) {
                    return 0.0;
                }
                let category = world.site(k).map(|s| s.category).expect("known site");
                let beta = params.beta[category.index()];
                let beta_now = effective_beta(category, t, &self.policies, params);
                let mut base = 0.0;
                let mut kept = 0.0;
                let mut pieces = Vec::new();
                for v in world.visits_overlapping(j, lo, t) {
                    let visit = &world.visits[v];
                    if visit.site != k {
                        continue;
                    }
                    base += presence_integral((visit.t_arrive, visit.t_depart), t, params.delta, params.gamma);
                    view.pieces(v, &mut pieces);
                    kept += pieces
                        .iter()
                        .map(|&p| presence_integral(p, t, params.delta, params.gamma))
                        .sum::<f64>();
                }
                if !(base > 0.0 && beta > 0.0) {
                    return 0.0;
                }
                ((beta_now * kept) / (beta * base)).min(1.0)
            }
        }
    }

    fn isolate(&mut self, i: u32, span: Interval) {
        let list = &mut self.isolation[i as usize];
        list.push(span);
        intervals::normalize(list);
        self.any_isolation = true;
    }

    fn enqueue_test(&mut self, t: f64, i: u32, bypass_capacity: bool) {
        let s = &self.states[i as usize];
        if self.awaiting[i as usize] || s.tests_positive > 0 || s.compartment == Compartment::Dead {
            return;
        }
        let Some(queue) = self.test_queue.as_mut() else {
            return;
        };
        let sample = if bypass_capacity { t } else { queue.schedule(t) };
        self.awaiting[i as usize] = true;
        self.queue.push(
            sample.max(t),
            Pending::TestSample {
                subject: i,
                enqueued: t,
                capacity: !bypass_capacity,
            },
        );
    }

    fn on_test_sample(&mut self, t: f64, i: u32, enqueued: f64, capacity: bool) {
        if capacity {
            if let Some(q) = self.test_queue.as_mut() {
                q.mark_dequeued();
            }
        }
        let c = self.states[i as usize].compartment;
        if c == Compartment::Dead {
            self.awaiting[i as usize] = false;
            return;
        }
        let delay = self.config.testing.as_ref().map(|c| c.delta_test).unwrap_or(0.0);
        self.push(
            t + delay,
            Pending::TestOutcome {
                subject: i,
                enqueued,
                sampled: t,
                positive: c.tests_positive(),
            },
        );
    }

    fn on_test_outcome(&mut self, t: f64, i: u32, enqueued: f64, sampled: f64, positive: bool) {
        self.awaiting[i as usize] = false;
        self.tests.push(TestRecord {
            t_enqueue: enqueued,
            t_sample: sampled,
            t_outcome: t,
            individual: i,
            positive,
        });
        self.log.push(Event {
            positive: Some(positive),
            ..Event::new(t, EventKind::TestOutcome, i)
        });
        let s = &mut self.states[i as usize];
        if !positive {
            s.tests_negative += 1;
            return;
        }
        s.tests_positive += 1;
        let day = (t / 24.0).floor() as usize;
        if let Some(slot) = self.daily_positives.get_mut(day) {
            *slot += 1;
        }
        let Some(config) = self.config.testing.clone() else {
            return;
        };
        if config.isolate_positives {
            self.isolate(i, (t, f64::INFINITY));
        }
        if let Some(mode) = config.policy.tracing_mode() {
            self.trace(t, i, mode, &config);
        }
    }

    fn trace(&mut self, t: f64, i: u32, mode: TracingMode, config: &TestConfig) {
        let world = self.world;
        if !world.individuals[i as usize].is_compliant(config.compliance) {
            return;
        }
        let window = (t - config.lookback_hours(), t);
        let scored: Vec<(u32, f64)> = {
            let view = RealizedPresence::new(world, &self.policies, &self.isolation, self.seed);
            let ids: Vec<u32> = match config.contact_mode {
                ContactMode::Location => trace_contacts_both_ways(&view, i, window, self.params),
                ContactMode::Proximity => {
                    let mut ids: Vec<u32> = trace_contacts_proximity(&view, i, window)
                        .into_iter()
                        .map(|c| c.j)
                        .collect();
                    ids.dedup();
                    ids
                }
            };
            let ranked = matches!(mode, TracingMode::IsolateAndTestRanked(_));
            ids.into_iter()
                .map(|j| {
                    let p = if ranked {
                        empirical_exposure_probability(&view, world, i, j, window, self.params)
                    } else {
                        0.0
                    };
                    (j, p)
                })
                .collect()
        };
        let actions = apply_tracing_policy(
            i,
            &scored,
            mode,
            t,
            config.isolation_hours(),
            config.compliance,
            &world.individuals,
        );
        for (j, span) in actions.isolate {
            if self.states[j as usize].compartment != Compartment::Dead {
                self.isolate(j, span);
            }
        }
        for j in actions.test {
            self.enqueue_test(t, j, true);
        }
    }
}

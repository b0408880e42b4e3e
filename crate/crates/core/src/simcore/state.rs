use serde::{Deserialize, Serialize};

/// Mutually exclusive epidemic compartments. Hospitalization is tracked as a
/// flag on top of `Symptomatic`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Compartment {
    Susceptible,
    Exposed,
    Asymptomatic,
    Presymptomatic,
    Symptomatic,
    Recovered,
    Dead,
}

impl Compartment {
    pub fn is_infectious(self) -> bool {
        matches!(
            self,
            Compartment::Asymptomatic | Compartment::Presymptomatic | Compartment::Symptomatic
        )
    }

    /// Whether a perfect test taken in this compartment comes back positive.
    pub fn tests_positive(self) -> bool {
        matches!(
            self,
            Compartment::Exposed | Compartment::Asymptomatic | Compartment::Presymptomatic | Compartment::Symptomatic
        )
    }
}

/// Boolean view of a health state, one flag per compartment plus `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HealthFlags {
    pub s: bool,
    pub e: bool,
    pub ia: bool,
    pub ip: bool,
    pub is: bool,
    pub h: bool,
    pub r: bool,
    pub d: bool,
}

impl HealthFlags {
    pub fn count_exclusive(&self) -> usize {
        [self.s, self.e, self.ia, self.ip, self.is, self.r, self.d]
            .iter()
            .filter(|b| **b)
            .count()
    }
}

/// Disease course outcomes, drawn once at exposure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Course {
    pub asymptomatic: bool,
    pub hospitalize: bool,
    pub dies: bool,
    /// Exposure to infectiousness onset, hours.
    pub incubation: f64,
    /// Presymptomatic onset to symptoms (symptomatic course only).
    pub symptom_onset: f64,
    /// Infectiousness onset (asymptomatic) or symptom onset to recovery.
    pub recovery: f64,
    /// Symptom onset to hospitalization.
    pub hospitalization: f64,
    /// Symptom onset to death.
    pub death: f64,
}

impl Course {
    /// Offset from infectiousness onset to the end of the infectious period.
    pub fn infectious_duration(&self) -> f64 {
        if self.asymptomatic {
            self.recovery
        } else {
            let resolve = if self.dies {
                self.recovery.min(self.death)
            } else {
                self.recovery
            };
            self.symptom_onset + resolve
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthState {
    pub compartment: Compartment,
    pub hospitalized: bool,
    pub t_exposed: Option<f64>,
    pub t_infectious: Option<f64>,
    pub t_symptomatic: Option<f64>,
    pub t_resolved: Option<f64>,
    pub course: Option<Course>,
    pub tests_positive: u32,
    pub tests_negative: u32,
}

impl Default for HealthState {
    fn default() -> Self {
        HealthState {
            compartment: Compartment::Susceptible,
            hospitalized: false,
            t_exposed: None,
            t_infectious: None,
            t_symptomatic: None,
            t_resolved: None,
            course: None,
            tests_positive: 0,
            tests_negative: 0,
        }
    }
}

impl HealthState {
    pub fn flags(&self) -> HealthFlags {
        let c = self.compartment;
        HealthFlags {
            s: c == Compartment::Susceptible,
            e: c == Compartment::Exposed,
            ia: c == Compartment::Asymptomatic,
            ip: c == Compartment::Presymptomatic,
            is: c == Compartment::Symptomatic,
            h: self.hospitalized,
            r: c == Compartment::Recovered,
            d: c == Compartment::Dead,
        }
    }

    pub fn is_susceptible(&self) -> bool {
        self.compartment == Compartment::Susceptible
    }

    /// Holds for every reachable state.
    pub fn is_consistent(&self) -> bool {
        let f = self.flags();
        let stamps = [self.t_exposed, self.t_infectious, self.t_symptomatic, self.t_resolved];
        let mut last = f64::NEG_INFINITY;
        let monotone = stamps.iter().flatten().all(|&t| {
            let ok = t >= last;
            last = t;
            ok
        });
        f.count_exclusive() == 1 && (!f.h || f.is) && monotone
    }
}

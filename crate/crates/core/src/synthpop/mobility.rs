use rand::prelude::*;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};

use super::types::{CheckInTrace, Individual, Visit, NUM_AGE_GROUPS, NUM_CATEGORIES};
use crate::rng::SimRng;

pub const HOURS_PER_WEEK: f64 = 168.0;

/// Visit rates and durations by age group and site category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MobilityTable {
    /// Average visits per week, `[age_group][category]`.
    pub visits_per_week: [[f64; NUM_CATEGORIES]; NUM_AGE_GROUPS],
    /// Mean visit duration in minutes per category.
    pub mean_duration_min: [f64; NUM_CATEGORIES],
}

impl Default for MobilityTable {
    /// Columns: education, social, transport, work, grocery.
    fn default() -> Self {
        MobilityTable {
            visits_per_week: [
                [5.0, 1.0, 0.0, 0.0, 0.0],
                [5.0, 2.0, 3.0, 0.0, 0.0],
                [2.0, 2.0, 3.0, 3.0, 1.0],
                [0.0, 2.0, 1.0, 5.0, 1.0],
                [0.0, 3.0, 2.0, 0.0, 1.0],
                [0.0, 2.0, 1.0, 0.0, 1.0],
            ],
            mean_duration_min: [120.0, 90.0, 12.0, 120.0, 30.0],
        }
    }
}

impl MobilityTable {
    /// Per-site visit rate (1/hour) for one of `n_assigned` sites in category `c`.
    pub fn site_rate(&self, age_index: usize, c: usize, n_assigned: usize) -> f64 {
        if n_assigned == 0 {
            return 0.0;
        }
        self.visits_per_week[age_index][c] / n_assigned as f64 / HOURS_PER_WEEK
    }
}

/// Samples the check-in trace of one individual over `[0, t_max]` hours.
///
/// Each assigned site proposes arrivals as a homogeneous Poisson process; a
/// proposal landing inside an already accepted visit is dropped, which is what
/// gating the arrival intensity by "not currently at any site" amounts to.
pub fn generate_trace(individual: &Individual, table: &MobilityTable, t_max: f64, rng: &mut SimRng) -> CheckInTrace {
    assert!(t_max > 0.0, "t_max must be positive");
    let age = individual.age_group.index();
    let mut candidates: Vec<Visit> = Vec::new();
    for (c, sites) in individual.assigned_sites.iter().enumerate() {
        let rate = table.site_rate(age, c, sites.len());
        let mean_h = table.mean_duration_min[c] / 60.0;
        if rate <= 0.0 || mean_h <= 0.0 {
            continue;
        }
        let gap = Exp::new(rate).expect("positive rate");
        let duration = Exp::new(1.0 / mean_h).expect("positive duration");
        for &site in sites {
            let mut t = 0.0;
            loop {
                t += gap.sample(rng);
                if t > t_max {
                    break;
                }
                let d: f64 = duration.sample(rng);
                candidates.push(Visit {
                    individual: individual.id,
                    site,
                    t_arrive: t,
                    t_depart: t + d.max(f64::MIN_POSITIVE * 4.0),
                });
            }
        }
    }
    candidates.sort_by(|a, b| a.t_arrive.total_cmp(&b.t_arrive).then(a.site.cmp(&b.site)));
    let mut visits: Vec<Visit> = Vec::with_capacity(candidates.len());
    for v in candidates {
        match visits.last() {
            Some(last) if v.t_arrive < last.t_depart => {}
            _ => visits.push(v),
        }
    }
    CheckInTrace { visits }
}

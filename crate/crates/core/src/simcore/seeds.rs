use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::simcore::state::Compartment;

/// Initial infections by compartment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedCounts {
    pub symptomatic: usize,
    pub asymptomatic: usize,
    pub exposed: usize,
}

impl SeedCounts {
    pub fn total(&self) -> usize {
        self.symptomatic + self.asymptomatic + self.exposed
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Seeds from an observed case count: the symptomatic cases are the observed
/// ones, undetected asymptomatic cases follow from `alpha_a`, and exposed
/// seeds are `r0` times all infectious seeds.
pub fn init_seeds(observed_cases: usize, alpha_a: f64, r0: f64) -> SeedCounts {
    let symptomatic = observed_cases;
    let asymptomatic = round_half_up(alpha_a / (1.0 - alpha_a) * symptomatic as f64);
    let exposed = round_half_up(r0 * (asymptomatic + symptomatic) as f64);
    SeedCounts {
        symptomatic,
        asymptomatic,
        exposed,
    }
}

/// One individual's state at time zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCase {
    pub individual: u32,
    pub compartment: Compartment,
    /// Whether the case exposes others. Seeds placed from counts only do so
    /// when exposed.
    pub transmits: bool,
}

/// Picks distinct individuals uniformly for each seed class.
pub fn place_seeds<R: Rng + ?Sized>(counts: &SeedCounts, population: usize, rng: &mut R) -> Vec<InitialCase> {
    let n = counts.total().min(population);
    let chosen = rand::seq::index::sample(rng, population, n);
    let classes = std::iter::repeat_n(Compartment::Symptomatic, counts.symptomatic)
        .chain(std::iter::repeat_n(Compartment::Asymptomatic, counts.asymptomatic))
        .chain(std::iter::repeat_n(Compartment::Exposed, counts.exposed));
    chosen
        .iter()
        .zip(classes)
        .map(|(i, compartment)| InitialCase {
            individual: i as u32,
            compartment,
            transmits: compartment == Compartment::Exposed,
        })
        .collect()
}

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use serde::{Deserialize, Serialize};

use super::types::{AgeGroup, Individual, Tile, NUM_AGE_GROUPS};
use crate::error::{Error, Result};
use crate::rng::SimRng;

pub const MAX_HOUSEHOLD_SIZE: usize = 5;

/// Household size distribution and which age bands may live in a household of
/// each size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HouseholdTable {
    /// Fraction of households with 1..=5 members.
    pub size_fractions: [f64; MAX_HOUSEHOLD_SIZE],
    /// `admissible[s - 1][band]`: may an individual of `band` live in a household of size `s`.
    pub admissible: [[bool; NUM_AGE_GROUPS]; MAX_HOUSEHOLD_SIZE],
    /// Bands eligible to head (found) a household.
    pub head_bands: [bool; NUM_AGE_GROUPS],
}

impl Default for HouseholdTable {
    fn default() -> Self {
        let adults = [false, false, true, true, true, true];
        let anyone = [true; NUM_AGE_GROUPS];
        HouseholdTable {
            size_fractions: [0.41, 0.34, 0.12, 0.09, 0.04],
            admissible: [adults, adults, anyone, anyone, anyone],
            head_bands: adults,
        }
    }
}

impl HouseholdTable {
    /// Every individual lives alone.
    pub fn singletons() -> Self {
        HouseholdTable {
            size_fractions: [1.0, 0.0, 0.0, 0.0, 0.0],
            admissible: [[true; NUM_AGE_GROUPS]; MAX_HOUSEHOLD_SIZE],
            head_bands: [true; NUM_AGE_GROUPS],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PopulationSpec {
    pub age_fractions: [f64; NUM_AGE_GROUPS],
    pub households: HouseholdTable,
    pub total: u64,
    pub downscale: u32,
    /// Edge length of the square population tiles.
    pub tile_size_km: f64,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        PopulationSpec {
            age_fractions: [0.048, 0.093, 0.232, 0.354, 0.214, 0.059],
            households: HouseholdTable::default(),
            total: 10_000,
            downscale: 1,
            tile_size_km: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub individuals: Vec<Individual>,
    /// Member ids per household id.
    pub households: Vec<Vec<u32>>,
}

fn check_fractions(name: &str, fractions: &[f64]) -> Result<()> {
    if fractions.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(Error::invalid(format!("{name} must be nonnegative")));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("{name} sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Synthesizes `ceil(total / downscale)` individuals grouped into households and
/// placed uniformly at random inside tiles drawn proportionally to tile population.
pub fn build_population(tiles: &[Tile], spec: &PopulationSpec, rng: &mut SimRng) -> Result<Population> {
    if tiles.is_empty() {
        return Err(Error::invalid("no population tiles"));
    }
    if spec.total == 0 {
        return Err(Error::invalid("total population is zero"));
    }
    if spec.downscale == 0 {
        return Err(Error::invalid("downscale factor must be positive"));
    }
    check_fractions("age fractions", &spec.age_fractions)?;
    check_fractions("household size fractions", &spec.households.size_fractions)?;
    if tiles
        .iter()
        .any(|t| !(t.population >= 0.0) || !t.lat.is_finite() || !t.lon.is_finite())
    {
        return Err(Error::invalid(
            "tiles need finite coordinates and nonnegative population",
        ));
    }
    let tile_index = WeightedIndex::new(tiles.iter().map(|t| t.population))
        .map_err(|e| Error::invalid(format!("tile populations: {e}")))?;
    let age_index = WeightedIndex::new(spec.age_fractions).expect("checked above");
    let size_index = WeightedIndex::new(spec.households.size_fractions).expect("checked above");

    let n = spec.total.div_ceil(spec.downscale as u64) as usize;
    let ages: Vec<AgeGroup> = (0..n).map(|_| AgeGroup::ALL[age_index.sample(rng)]).collect();

    let mut pools: [Vec<u32>; NUM_AGE_GROUPS] = Default::default();
    for (id, age) in ages.iter().enumerate() {
        pools[age.index()].push(id as u32);
    }
    for pool in pools.iter_mut() {
        pool.shuffle(rng);
    }

    let households = compose_households(&mut pools, &spec.households, &size_index, rng);

    let half_deg_lat = spec.tile_size_km / 2.0 / 111.32;
    let mut individuals: Vec<Option<Individual>> = vec![None; n];
    for (hh_id, members) in households.iter().enumerate() {
        let tile = &tiles[tile_index.sample(rng)];
        let half_deg_lon = half_deg_lat / tile.lat.to_radians().cos().max(1e-6);
        let home = (
            tile.lat + rng.random_range(-half_deg_lat..=half_deg_lat),
            tile.lon + rng.random_range(-half_deg_lon..=half_deg_lon),
        );
        for &id in members {
            individuals[id as usize] = Some(Individual {
                id,
                age_group: ages[id as usize],
                household: hh_id as u32,
                home,
                assigned_sites: Default::default(),
                curfew_draw: 0.0,
                compliance_draw: 0.0,
            });
        }
    }
    let mut individuals: Vec<Individual> = individuals
        .into_iter()
        .map(|i| i.expect("every individual belongs to a household"))
        .collect();
    for ind in individuals.iter_mut() {
        ind.curfew_draw = rng.random();
        ind.compliance_draw = rng.random();
    }
    Ok(Population {
        individuals,
        households,
    })
}

/// Greedy fill: draw a size, a head from the head bands, then the remaining
/// members from bands admissible for that size. Leftovers become singletons.
fn compose_households(
    pools: &mut [Vec<u32>; NUM_AGE_GROUPS],
    table: &HouseholdTable,
    size_index: &WeightedIndex<f64>,
    rng: &mut SimRng,
) -> Vec<Vec<u32>> {
    fn draw(pools: &mut [Vec<u32>; NUM_AGE_GROUPS], allowed: &[bool; NUM_AGE_GROUPS], rng: &mut SimRng) -> Option<u32> {
        let weights: Vec<f64> = (0..NUM_AGE_GROUPS)
            .map(|b| if allowed[b] { pools[b].len() as f64 } else { 0.0 })
            .collect();
        let band = WeightedIndex::new(&weights).ok()?.sample(rng);
        pools[band].pop()
    }

    let mut households = Vec::new();
    loop {
        let size = size_index.sample(rng) + 1;
        let Some(head) = draw(pools, &table.head_bands, rng) else {
            break;
        };
        let mut members = vec![head];
        while members.len() < size {
            match draw(pools, &table.admissible[size - 1], rng) {
                Some(id) => members.push(id),
                None => break,
            }
        }
        households.push(members);
    }
    for pool in pools.iter_mut() {
        while let Some(id) = pool.pop() {
            households.push(vec![id]);
        }
    }
    households
}

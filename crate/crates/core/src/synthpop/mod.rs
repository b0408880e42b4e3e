//! Synthetic population, site assignment and check-in traces.

pub mod io;
pub mod mobility;
pub mod population;
pub mod presence;
pub mod sites;
pub mod town;
pub mod types;
pub mod world;

use rand::seq::SliceRandom;

pub use mobility::{generate_trace, MobilityTable};
pub use population::{build_population, HouseholdTable, Population, PopulationSpec};
pub use presence::{pair_kernel, presence_integral, saturated_window};
pub use sites::{assign_sites, DEFAULT_SITES_PER_CATEGORY};
pub use town::{synthetic_town, TownSpec};
pub use types::*;
pub use world::{World, WorldSpec};

use crate::rng::SimRng;

/// Keeps a uniformly random `1/factor` share of the sites of each category, but
/// never fewer than `min_per_category[c]` (or all of them, if there are fewer).
pub fn downscale_sites(
    sites: &[Site],
    factor: u32,
    min_per_category: &[usize; NUM_CATEGORIES],
    rng: &mut SimRng,
) -> Vec<Site> {
    if factor <= 1 {
        return sites.to_vec();
    }
    let mut kept = Vec::new();
    for category in SiteCategory::ALL {
        let mut of_cat: Vec<&Site> = sites.iter().filter(|s| s.category == category).collect();
        let target = of_cat
            .len()
            .div_ceil(factor as usize)
            .max(min_per_category[category.index()])
            .min(of_cat.len());
        of_cat.shuffle(rng);
        kept.extend(of_cat.into_iter().take(target).cloned());
    }
    kept.sort_by_key(|s| s.id);
    kept
}

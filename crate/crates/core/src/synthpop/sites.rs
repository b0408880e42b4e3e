use rand::prelude::*;

use super::types::{haversine_m, Individual, Site, NUM_CATEGORIES};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Distances below this are treated as this, so a site on top of a home does not
/// receive an unbounded weight.
pub const MIN_DISTANCE_M: f64 = 10.0;

/// Default number of distinct sites per category each individual frequents.
pub const DEFAULT_SITES_PER_CATEGORY: [usize; NUM_CATEGORIES] = [1, 10, 5, 1, 2];

pub fn inverse_square_weight(home: (f64, f64), site: &Site) -> f64 {
    let d = haversine_m(home, (site.lat, site.lon)).max(MIN_DISTANCE_M);
    1.0 / (d * d)
}

/// Gives every individual `per_category[c]` distinct sites of each category,
/// drawn without replacement with probability proportional to 1/d^2 from home.
pub fn assign_sites(
    individuals: &mut [Individual],
    sites: &[Site],
    per_category: &[usize; NUM_CATEGORIES],
    rng: &mut SimRng,
) -> Result<()> {
    let mut by_category: [Vec<&Site>; NUM_CATEGORIES] = Default::default();
    for site in sites {
        by_category[site.category.index()].push(site);
    }
    for (c, list) in by_category.iter().enumerate() {
        if list.len() < per_category[c] {
            return Err(Error::InsufficientSites {
                category: super::types::SiteCategory::ALL[c].to_string(),
                needed: per_category[c],
                available: list.len(),
            });
        }
    }

    let mut weights = Vec::new();
    for ind in individuals.iter_mut() {
        for (c, candidates) in by_category.iter().enumerate() {
            let want = per_category[c];
            ind.assigned_sites[c].clear();
            if want == 0 {
                continue;
            }
            weights.clear();
            weights.extend(candidates.iter().map(|s| inverse_square_weight(ind.home, s)));
            for _ in 0..want {
                let k = draw_weighted(&weights, rng);
                ind.assigned_sites[c].push(candidates[k].id);
                weights[k] = 0.0;
            }
        }
    }
    Ok(())
}

fn draw_weighted(weights: &[f64], rng: &mut SimRng) -> usize {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        // every remaining candidate is equally (un)likely
        let open: Vec<usize> = (0..weights.len()).collect();
        return *open.choose(rng).expect("nonempty candidate list");
    }
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w <= 0.0 {
            continue;
        }
        last = i;
        if u < *w {
            return i;
        }
        u -= w;
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::synthpop::types::{AgeGroup, SiteCategory};

    fn person(home: (f64, f64)) -> Individual {
        Individual {
            id: 0,
            age_group: AgeGroup::Age35To59,
            household: 0,
            home,
            assigned_sites: Default::default(),
            curfew_draw: 0.0,
            compliance_draw: 0.0,
        }
    }

    fn site(id: u32, category: SiteCategory, lat: f64, lon: f64) -> Site {
        Site { id, category, lat, lon }
    }

    fn one_each(extra_social: &[Site]) -> Vec<Site> {
        let mut sites = vec![
            site(100, SiteCategory::Education, 0.0, 0.0),
            site(101, SiteCategory::Transport, 0.0, 0.0),
            site(102, SiteCategory::Work, 0.0, 0.0),
            site(103, SiteCategory::Grocery, 0.0, 0.0),
        ];
        sites.extend_from_slice(extra_social);
        sites
    }

    #[test]
    fn forced_choice() {
        let sites = one_each(&[site(7, SiteCategory::Social, 0.01, 0.01)]);
        let mut people = vec![person((0.0, 0.0))];
        assign_sites(&mut people, &sites, &[1, 1, 1, 1, 1], &mut stream(1, 0)).unwrap();
        assert_eq!(people[0].assigned_sites[SiteCategory::Social.index()], vec![7]);
    }

    #[test]
    fn insufficient_sites() {
        let sites = one_each(&[site(7, SiteCategory::Social, 0.0, 0.0)]);
        let mut people = vec![person((0.0, 0.0))];
        let err = assign_sites(&mut people, &sites, &[1, 2, 1, 1, 1], &mut stream(1, 0)).unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientSites {
                needed: 2,
                available: 1,
                ..
            }
        ));
    }

    #[test]
    fn distinct_without_replacement() {
        let social: Vec<Site> = (0..12)
            .map(|i| site(i, SiteCategory::Social, 0.001 * i as f64, 0.0))
            .collect();
        let sites = one_each(&social);
        let mut people = vec![person((0.0, 0.0)); 50];
        assign_sites(&mut people, &sites, &[1, 10, 1, 1, 1], &mut stream(2, 0)).unwrap();
        for p in &people {
            let mut s = p.assigned_sites[1].clone();
            s.sort();
            s.dedup();
            assert_eq!(s.len(), 10);
        }
    }

    #[test]
    fn inverse_square_frequencies() {
        // one degree of latitude is ~111.2 km, so these sit at ~1 km and ~2 km
        let km = 1.0 / 111.195;
        let sites = one_each(&[
            site(1, SiteCategory::Social, km, 0.0),
            site(2, SiteCategory::Social, -2.0 * km, 0.0),
        ]);
        let mut people = vec![person((0.0, 0.0)); 10_000];
        assign_sites(&mut people, &sites, &[1, 1, 1, 1, 1], &mut stream(3, 0)).unwrap();
        let near = people.iter().filter(|p| p.assigned_sites[1][0] == 1).count() as f64;
        let ratio = near / (10_000.0 - near);
        assert!((ratio - 4.0).abs() / 4.0 < 0.05, "{ratio}");
    }

    #[test]
    fn clamp_keeps_weights_finite() {
        let s = site(1, SiteCategory::Social, 0.0, 0.0);
        let w = inverse_square_weight((0.0, 0.0), &s);
        assert_eq!(w, 1.0 / (MIN_DISTANCE_M * MIN_DISTANCE_M));
    }

    #[test]
    fn inverse_square_goodness_of_fit() {
        let km = 1.0 / 111.195;
        let offsets = [0.5, 1.0, 1.5, 2.0, 3.0, 4.0];
        let social: Vec<Site> = offsets
            .iter()
            .enumerate()
            .map(|(k, d)| site(k as u32, SiteCategory::Social, d * km, 0.0))
            .collect();
        let sites = one_each(&social);
        let n = 20_000;
        let mut people = vec![person((0.0, 0.0)); n];
        assign_sites(&mut people, &sites, &[1, 1, 1, 1, 1], &mut stream(5, 0)).unwrap();
        let weights: Vec<f64> = social.iter().map(|s| inverse_square_weight((0.0, 0.0), s)).collect();
        let total: f64 = weights.iter().sum();
        let chi2: f64 = social
            .iter()
            .zip(&weights)
            .map(|(s, w)| {
                let seen = people.iter().filter(|p| p.assigned_sites[1][0] == s.id).count() as f64;
                let expected = n as f64 * w / total;
                (seen - expected).powi(2) / expected
            })
            .sum();
        // 99.9th percentile of chi-squared with 5 degrees of freedom
        assert!(chi2 < 20.52, "chi2 = {chi2}");
    }
}

//! Contact sets, exposure-probability estimates and site risk from traces.

use std::collections::BTreeMap;

use crate::intervals::Interval;
use crate::simcore::params::EpidemicParams;
use crate::synthpop::presence::{overlap_length, pair_kernel};
use crate::synthpop::World;

/// Where individuals were, as seen by the tracing system.
pub trait PresenceSource {
    /// `(site, interval)` for every stay of `person` overlapping `[lo, hi)`.
    fn stays(&self, person: u32, lo: f64, hi: f64, out: &mut Vec<(u32, Interval)>);
    /// `(person, interval)` for every stay at `site` overlapping `[lo, hi)`.
    fn occupants(&self, site: u32, lo: f64, hi: f64, out: &mut Vec<(u32, Interval)>);
}

impl PresenceSource for World {
    fn stays(&self, person: u32, lo: f64, hi: f64, out: &mut Vec<(u32, Interval)>) {
        out.extend(
            self.visits_overlapping(person, lo, hi)
                .map(|v| &self.visits[v])
                .map(|v| (v.site, (v.t_arrive, v.t_depart))),
        );
    }

    fn occupants(&self, site: u32, lo: f64, hi: f64, out: &mut Vec<(u32, Interval)>) {
        out.extend(
            self.site_visits_overlapping(site, lo, hi)
                .map(|v| &self.visits[v])
                .map(|v| (v.individual, (v.t_arrive, v.t_depart))),
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactRecord {
    pub i: u32,
    pub j: u32,
    pub site: u32,
    pub overlap_kernel: f64,
    pub window: Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactMode {
    /// Check-in based: includes environmental contacts within `delta`.
    #[default]
    Location,
    /// Physical co-presence only.
    Proximity,
}

/// Accumulates a kernel over every pair of stays `(outer of a, inner of b)`
/// at the same site, per `(b, site)`.
fn accumulate<S: PresenceSource + ?Sized>(
    source: &S,
    a: u32,
    window: Interval,
    inner_lead: f64,
    mut kernel: impl FnMut(Interval, Interval) -> f64,
) -> BTreeMap<(u32, u32), f64> {
    let mut totals = BTreeMap::new();
    let mut stays = Vec::new();
    let mut others = Vec::new();
    source.stays(a, window.0, window.1, &mut stays);
    for &(site, stay) in &stays {
        others.clear();
        source.occupants(site, stay.0 - inner_lead, stay.1.min(window.1), &mut others);
        for &(b, other) in &others {
            if b == a {
                continue;
            }
            let k = kernel(stay, other);
            if k > 0.0 {
                *totals.entry((b, site)).or_insert(0.0) += k;
            }
        }
    }
    totals
}

fn records(i: u32, window: Interval, totals: BTreeMap<(u32, u32), f64>) -> Vec<ContactRecord> {
    totals
        .into_iter()
        .map(|((j, site), k)| ContactRecord {
            i,
            j,
            site,
            overlap_kernel: k,
            window,
        })
        .collect()
}

/// Everyone `i` could have picked up exposure from while `i` was at a site
/// during `window`, directly or through the environment.
pub fn trace_contacts_location<S: PresenceSource + ?Sized>(
    source: &S,
    i: u32,
    window: Interval,
    params: &EpidemicParams,
) -> Vec<ContactRecord> {
    let (delta, gamma) = (params.delta, params.gamma);
    let totals = accumulate(source, i, window, delta, |outer, inner| {
        pair_kernel(outer, inner, window, delta, gamma)
    });
    records(i, window, totals)
}

/// Everyone physically co-present with `i` during `window`; the kernel is
/// the co-presence time.
pub fn trace_contacts_proximity<S: PresenceSource + ?Sized>(
    source: &S,
    i: u32,
    window: Interval,
) -> Vec<ContactRecord> {
    let totals = accumulate(source, i, window, 0.0, |a, b| overlap_length(a, b, window));
    records(i, window, totals)
}

/// Individuals whose stays within `window` overlap environmentally with
/// stays of `i` in either order, i.e. those who may have exposed `i` or been
/// exposed by `i`.
pub fn trace_contacts_both_ways<S: PresenceSource + ?Sized>(
    source: &S,
    i: u32,
    window: Interval,
    params: &EpidemicParams,
) -> Vec<u32> {
    let mut ids: Vec<u32> = trace_contacts_location(source, i, window, params)
        .into_iter()
        .map(|c| c.j)
        .collect();
    let mut stays = Vec::new();
    let mut others = Vec::new();
    source.stays(i, window.0, window.1, &mut stays);
    for &(site, stay) in &stays {
        others.clear();
        source.occupants(site, stay.0, (stay.1 + params.delta).min(window.1), &mut others);
        for &(j, other) in &others {
            if j != i && pair_kernel(other, stay, window, params.delta, params.gamma) > 0.0 {
                ids.push(j);
            }
        }
    }
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// β-weighted kernel mass of `j` being exposed by `i` over `window`.
pub fn exposure_kernel<S: PresenceSource + ?Sized>(
    source: &S,
    world: &World,
    i: u32,
    j: u32,
    window: Interval,
    params: &EpidemicParams,
) -> f64 {
    let mut stays_j = Vec::new();
    let mut stays_i = Vec::new();
    source.stays(j, window.0, window.1, &mut stays_j);
    source.stays(i, window.0 - params.delta, window.1, &mut stays_i);
    let mut total = 0.0;
    for &(site_j, sj) in &stays_j {
        let beta = world
            .site(site_j)
            .map(|s| params.beta[s.category.index()])
            .unwrap_or(0.0);
        for &(site_i, si) in &stays_i {
            if site_i == site_j {
                total += beta * pair_kernel(sj, si, window, params.delta, params.gamma);
            }
        }
    }
    total
}

/// `1 - exp(-K)` with `K` the β-weighted kernel of `j` being exposed by `i`.
pub fn empirical_exposure_probability<S: PresenceSource + ?Sized>(
    source: &S,
    world: &World,
    i: u32,
    j: u32,
    window: Interval,
    params: &EpidemicParams,
) -> f64 {
    -(-exposure_kernel(source, world, i, j, window, params)).exp_m1()
}

/// Ids by descending probability, ties by ascending id, at most `k_top`.
pub fn rank_contacts(contacts: &[(u32, f64)], k_top: usize) -> Vec<u32> {
    let mut sorted = contacts.to_vec();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    sorted.into_iter().take(k_top).map(|(id, _)| id).collect()
}

/// Probability that someone present at `site` throughout `window` was
/// exposed by at least one of `positives`.
pub fn narrowcast_site_risk<S: PresenceSource + ?Sized>(
    source: &S,
    site: u32,
    window: Interval,
    positives: &[u32],
    params: &EpidemicParams,
) -> f64 {
    let mut positives = positives.to_vec();
    positives.sort_unstable();
    let mut occupants = Vec::new();
    source.occupants(site, window.0 - params.delta, window.1, &mut occupants);
    let mass: f64 = occupants
        .iter()
        .filter(|(p, _)| positives.binary_search(p).is_ok())
        .map(|&(_, stay)| pair_kernel(window, stay, window, params.delta, params.gamma))
        .sum();
    -(-mass).exp_m1()
}

/// Risk for every site visited by a positive individual; other sites carry
/// zero risk and are omitted.
pub fn narrowcast_all<S: PresenceSource + ?Sized>(
    source: &S,
    window: Interval,
    positives: &[u32],
    params: &EpidemicParams,
) -> BTreeMap<u32, f64> {
    let mut mass: BTreeMap<u32, f64> = BTreeMap::new();
    let mut stays = Vec::new();
    for &i in positives {
        stays.clear();
        source.stays(i, window.0 - params.delta, window.1, &mut stays);
        for &(site, stay) in &stays {
            *mass.entry(site).or_insert(0.0) += pair_kernel(window, stay, window, params.delta, params.gamma);
        }
    }
    mass.into_iter().map(|(s, m)| (s, -(-m).exp_m1())).collect()
}

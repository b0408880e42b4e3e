//! Pairwise exposure intensities and the thinning sampler that draws the
//! first exposure of one susceptible by one infectious individual.

use rand::Rng;
use rand_distr::Exp1;

use crate::intervals::{self, Interval};
use crate::simcore::params::EpidemicParams;
use crate::synthpop::presence::presence_integral;
use crate::synthpop::World;

/// Relative infectiousness: `mu` for asymptomatic infectors, else 1.
pub fn relative_infectiousness(asymptomatic: bool, params: &EpidemicParams) -> f64 {
    if asymptomatic {
        params.mu
    } else {
        1.0
    }
}

/// Site contribution of `j` to the exposure rate of `i` at `t`, together
/// with the site `i` is at.
pub fn site_intensity(world: &World, j: u32, i: u32, t: f64, params: &EpidemicParams, r: f64) -> (f64, Option<u32>) {
    let Some(vi) = world.visit_at(i, t) else {
        return (0.0, None);
    };
    let site = world.visits[vi].site;
    let mass: f64 = world
        .visits_overlapping(j, t - params.delta, t)
        .map(|v| &world.visits[v])
        .filter(|v| v.site == site)
        .map(|v| presence_integral((v.t_arrive, v.t_depart), t, params.delta, params.gamma))
        .sum();
    let category = world.site(site).map(|s| s.category.index()).unwrap_or(0);
    (params.beta[category] * r * mass, Some(site))
}

/// `λ*_{j→i}(t)` summed over sites.
pub fn exposure_contribution(world: &World, j: u32, i: u32, t: f64, params: &EpidemicParams, r: f64) -> f64 {
    site_intensity(world, j, i, t, params, r).0
}

/// Household contribution of `j` to `i` at `t`: zero unless `i` is home, in
/// which case the decayed time both spent at home over the last `delta` hours.
pub fn household_contribution(world: &World, j: u32, i: u32, t: f64, params: &EpidemicParams, r: f64) -> f64 {
    if i == j || world.individuals[i as usize].household != world.individuals[j as usize].household {
        return 0.0;
    }
    if world.visit_at(i, t).is_some() {
        return 0.0;
    }
    let lo = t - params.delta;
    let both = intervals::intersect_all(&world.home_intervals(i, lo, t), &world.home_intervals(j, lo, t));
    params.xi
        * r
        * both
            .iter()
            .map(|&iv| presence_integral(iv, t, params.delta, params.gamma))
            .sum::<f64>()
}

/// Times at which `i` is at a site that `j` visited within the preceding
/// `delta` hours, clipped to `[from, to)`. Sorted and disjoint.
pub fn site_contact_spans(world: &World, j: u32, i: u32, from: f64, to: f64, delta: f64) -> Vec<Interval> {
    let mut spans = Vec::new();
    if i == j || to <= from {
        return spans;
    }
    for vj in world.visits_overlapping(j, from - delta, to) {
        let v = &world.visits[vj];
        let reach = (v.t_arrive.max(from), (v.t_depart + delta).min(to));
        if reach.1 <= reach.0 {
            continue;
        }
        for vi in world.visits_overlapping(i, reach.0, reach.1) {
            let w = &world.visits[vi];
            if w.site != v.site {
                continue;
            }
            if let Some(s) = intervals::intersect((w.t_arrive, w.t_depart), reach) {
                spans.push(s);
            }
        }
    }
    intervals::normalize(&mut spans);
    spans
}

/// Times at which `i` is home while `j` was home within the preceding
/// `delta` hours, clipped to `[from, to)`.
pub fn household_contact_spans(world: &World, j: u32, i: u32, from: f64, to: f64, delta: f64) -> Vec<Interval> {
    if i == j || to <= from {
        return Vec::new();
    }
    let mut reach: Vec<Interval> = world
        .home_intervals(j, from - delta, to)
        .into_iter()
        .map(|(a, b)| (a, b + delta))
        .collect();
    intervals::normalize(&mut reach);
    let mut spans = intervals::intersect_all(&world.home_intervals(i, from, to), &reach);
    spans.retain(|s| s.1 > s.0);
    for s in &mut spans {
        s.0 = s.0.max(from);
        s.1 = s.1.min(to);
    }
    spans.retain(|s| s.1 > s.0);
    spans
}

/// First point of a Poisson process with intensity `intensity(t) <= bound`
/// restricted to `spans`, drawn by thinning a homogeneous `bound` process
/// that runs only inside the spans.
pub fn first_arrival<R: Rng + ?Sized>(
    spans: &[Interval],
    bound: f64,
    rng: &mut R,
    mut intensity: impl FnMut(f64) -> f64,
) -> Option<f64> {
    if !(bound > 0.0) || spans.is_empty() {
        return None;
    }
    let mut idx = 0;
    let mut pos = spans[0].0;
    loop {
        let mut step: f64 = rng.sample::<f64, _>(Exp1) / bound;
        loop {
            let remaining = spans[idx].1 - pos;
            if step < remaining {
                pos += step;
                break;
            }
            step -= remaining;
            idx += 1;
            if idx == spans.len() {
                return None;
            }
            pos = spans[idx].0;
        }
        let p = intensity(pos) / bound;
        assert!(p <= 1.0 + 1e-9, "thinning acceptance {p} exceeds 1");
        if rng.random::<f64>() < p {
            return Some(pos);
        }
    }
}

/// A sampled exposure of `subject` by `infector` before it is validated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExposureProposal {
    pub time: f64,
    pub subject: u32,
    pub infector: u32,
    pub site: Option<u32>,
}

/// First site exposure of `i` by `j` in `[t_start, t_end)` with `j`
/// infectious throughout at relative infectiousness `r`.
#[allow(clippy::too_many_arguments)]
pub fn sample_exposures_from<R: Rng + ?Sized>(
    world: &World,
    j: u32,
    i: u32,
    t_start: f64,
    t_end: f64,
    r: f64,
    params: &EpidemicParams,
    rng: &mut R,
) -> Option<ExposureProposal> {
    let spans = site_contact_spans(world, j, i, t_start, t_end, params.delta);
    let bound = params.lambda_max() * r;
    let t = first_arrival(&spans, bound, rng, |t| exposure_contribution(world, j, i, t, params, r))?;
    Some(ExposureProposal {
        time: t,
        subject: i,
        infector: j,
        site: world.visit_at(i, t).map(|v| world.visits[v].site),
    })
}

/// First household exposure of `i` by `j` in `[t_start, t_end)`.
#[allow(clippy::too_many_arguments)]
pub fn sample_household_exposure<R: Rng + ?Sized>(
    world: &World,
    j: u32,
    i: u32,
    t_start: f64,
    t_end: f64,
    r: f64,
    params: &EpidemicParams,
    rng: &mut R,
) -> Option<ExposureProposal> {
    if world.individuals[i as usize].household != world.individuals[j as usize].household {
        return None;
    }
    let spans = household_contact_spans(world, j, i, t_start, t_end, params.delta);
    let bound = params.household_lambda_max() * r;
    let t = first_arrival(&spans, bound, rng, |t| {
        household_contribution(world, j, i, t, params, r)
    })?;
    Some(ExposureProposal {
        time: t,
        subject: i,
        infector: j,
        site: None,
    })
}

#![allow(dead_code)]

use hotspot::synthpop::MobilityTable;
use hotspot::synthpop::{synthetic_town, PopulationSpec, TownSpec, World, WorldSpec};
use hotspot::synthpop::{AgeGroup, Individual, Site, SiteCategory, Visit};

/// A synthesized town of `population` people over `days` days.
pub fn town(population: u64, sites: [usize; 5], days: f64, seed: u64) -> World {
    let spec = TownSpec {
        population,
        sites,
        ..Default::default()
    };
    let (tiles, site_list) = synthetic_town(&spec, seed);
    let world_spec = WorldSpec {
        population: PopulationSpec {
            total: population,
            ..Default::default()
        },
        mobility: MobilityTable::default(),
        sites_per_category: [1, 10, 5, 1, 2],
        horizon_hours: days * 24.0,
    };
    World::synthesize(&tiles, site_list, &world_spec, seed).expect("town synthesizes")
}

pub fn person(id: u32, household: u32, age: AgeGroup) -> Individual {
    Individual {
        id,
        age_group: age,
        household,
        home: (0.0, 0.0),
        assigned_sites: Default::default(),
        curfew_draw: (id as f64 * 0.618_033_988_75).fract(),
        compliance_draw: (id as f64 * 0.754_877_666_2).fract(),
    }
}

pub fn site(id: u32, category: SiteCategory) -> Site {
    Site {
        id,
        category,
        lat: 50.0 + id as f64 * 1e-3,
        lon: 8.0,
    }
}

pub fn visit(individual: u32, site: u32, t_arrive: f64, t_depart: f64) -> Visit {
    Visit {
        individual,
        site,
        t_arrive,
        t_depart,
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        let mut x = (std::f64::consts::PI * (k as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for m in 2..=n {
                let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `∫_a^b f` by Gauss-Legendre on each piece between consecutive `breaks`.
pub fn integrate(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, breaks: &[f64], rule: &[(f64, f64)]) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&c| c > a && c < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        total += half * rule.iter().map(|&(x, wt)| wt * f(mid + half * x)).sum::<f64>();
    }
    total
}

/// Reference for the decayed presence of a stay `(c, d)` seen from `t`.
pub fn presence_reference(stay: (f64, f64), t: f64, delta: f64, gamma: f64, rule: &[(f64, f64)]) -> f64 {
    let lo = stay.0.max(t - delta);
    let hi = stay.1.min(t);
    integrate(&mut |tau| (-gamma * (t - tau)).exp(), lo, hi, &[], rule)
}

/// Reference for the double integral over `t' ∈ outer ∩ window` of the
/// decayed presence of `inner`.
pub fn pair_reference(
    outer: (f64, f64),
    inner: (f64, f64),
    window: (f64, f64),
    delta: f64,
    gamma: f64,
    rule: &[(f64, f64)],
) -> f64 {
    let a = outer.0.max(window.0);
    let b = outer.1.min(window.1);
    let (c, d) = inner;
    let breaks = [c, d, c + delta, d + delta];
    integrate(
        &mut |t| presence_reference(inner, t, delta, gamma, rule),
        a,
        b,
        &breaks,
        rule,
    )
}

/// A synthesized town plus a few high-traffic social hubs: a share of the
/// residents visits one hub about once a week for a few hours.
pub fn hub_town(population: u64, hubs: usize, days: f64, seed: u64) -> World {
    use hotspot::rng::stream;
    use rand::Rng;
    use rand_distr::{Distribution, Exp};

    let spec = TownSpec {
        population,
        ..Default::default()
    };
    let (tiles, mut sites) = synthetic_town(&spec, seed);
    let first_hub = sites.len() as u32;
    for h in 0..hubs {
        sites.push(Site {
            id: first_hub + h as u32,
            category: SiteCategory::Social,
            lat: spec.center.0 + 0.002 * h as f64,
            lon: spec.center.1,
        });
    }
    let world_spec = WorldSpec {
        population: PopulationSpec {
            total: population,
            ..Default::default()
        },
        mobility: MobilityTable::default(),
        sites_per_category: hotspot::synthpop::DEFAULT_SITES_PER_CATEGORY,
        horizon_hours: days * 24.0,
    };
    let world = World::synthesize(&tiles, sites, &world_spec, seed).expect("town synthesizes");

    let mut rng = stream(seed, 0x4B);
    let gap = Exp::new(1.0 / 168.0).unwrap();
    let stay = Exp::new(1.0 / 3.0).unwrap();
    let mut visits = world.visits.clone();
    for p in 0..world.len() as u32 {
        if hubs == 0 || rng.random::<f64>() >= 0.2 {
            continue;
        }
        let hub = first_hub + rng.random_range(0..hubs) as u32;
        let mut t = gap.sample(&mut rng);
        while t < world.horizon {
            let end = (t + stay.sample(&mut rng)).min(world.horizon);
            if !world.trace(p).iter().any(|v| v.t_arrive < end && t < v.t_depart) {
                visits.push(visit(p, hub, t, end));
            }
            t = end + gap.sample(&mut rng);
        }
    }
    World::from_visits(world.individuals.clone(), world.sites.clone(), visits, world.horizon)
        .expect("hub visits are valid")
}

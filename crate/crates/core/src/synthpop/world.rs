use serde::{Deserialize, Serialize};

use super::mobility::{generate_trace, MobilityTable};
use super::population::{build_population, PopulationSpec};
use super::sites::assign_sites;
use super::types::{CheckInTrace, Individual, Site, Tile, Visit, NUM_CATEGORIES};
use crate::error::{Error, Result};
use crate::intervals::Interval;
use crate::rng::{stream, streams};

/// Everything needed to synthesize a world from region data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub population: PopulationSpec,
    pub mobility: MobilityTable,
    pub sites_per_category: [usize; NUM_CATEGORIES],
    pub horizon_hours: f64,
}

/// The synthetic world: individuals, sites, households and the check-in traces,
/// indexed both per individual and per site.
#[derive(Debug, Clone)]
pub struct World {
    pub individuals: Vec<Individual>,
    pub sites: Vec<Site>,
    pub households: Vec<Vec<u32>>,
    /// All visits, grouped by individual and sorted by arrival within a group.
    pub visits: Vec<Visit>,
    person_offsets: Vec<usize>,
    /// Visit indices per site position, sorted by arrival.
    site_visits: Vec<Vec<u32>>,
    site_max_duration: Vec<f64>,
    site_pos: std::collections::HashMap<u32, u32>,
    pub horizon: f64,
}

impl World {
    /// Assembles a world from already generated traces. Site ids in the visits
    /// must refer to `sites`; `traces[i]` belongs to `individuals[i]`.
    pub fn from_parts(
        individuals: Vec<Individual>,
        sites: Vec<Site>,
        households: Vec<Vec<u32>>,
        traces: Vec<CheckInTrace>,
        horizon: f64,
    ) -> Result<World> {
        if traces.len() != individuals.len() {
            return Err(Error::LengthMismatch {
                expected: individuals.len(),
                actual: traces.len(),
            });
        }
        let site_pos: std::collections::HashMap<u32, u32> =
            sites.iter().enumerate().map(|(p, s)| (s.id, p as u32)).collect();
        let mut visits = Vec::with_capacity(traces.iter().map(|t| t.visits.len()).sum());
        let mut person_offsets = Vec::with_capacity(individuals.len() + 1);
        for (i, trace) in traces.into_iter().enumerate() {
            person_offsets.push(visits.len());
            if !trace.is_valid() {
                return Err(Error::invalid(format!(
                    "trace of individual {i} overlaps or is unsorted"
                )));
            }
            for v in trace.visits {
                if v.individual as usize != i {
                    return Err(Error::invalid(format!("visit of {} filed under {i}", v.individual)));
                }
                if !site_pos.contains_key(&v.site) {
                    return Err(Error::invalid(format!("visit to unknown site {}", v.site)));
                }
                visits.push(v);
            }
        }
        person_offsets.push(visits.len());

        let mut site_visits = vec![Vec::new(); sites.len()];
        let mut site_max_duration = vec![0.0f64; sites.len()];
        for (idx, v) in visits.iter().enumerate() {
            let p = site_pos[&v.site] as usize;
            site_visits[p].push(idx as u32);
            site_max_duration[p] = site_max_duration[p].max(v.duration());
        }
        for list in site_visits.iter_mut() {
            list.sort_by(|&a, &b| visits[a as usize].t_arrive.total_cmp(&visits[b as usize].t_arrive));
        }
        Ok(World {
            individuals,
            sites,
            households,
            visits,
            person_offsets,
            site_visits,
            site_max_duration,
            site_pos,
            horizon,
        })
    }

    /// Builds a world from a flat visit list; households are grouped from
    /// each individual's `household` field, which must be dense from zero.
    pub fn from_visits(
        individuals: Vec<Individual>,
        sites: Vec<Site>,
        mut visits: Vec<Visit>,
        horizon: f64,
    ) -> Result<World> {
        let n_households = individuals.iter().map(|p| p.household as usize + 1).max().unwrap_or(0);
        let mut households = vec![Vec::new(); n_households];
        for (idx, p) in individuals.iter().enumerate() {
            if p.id as usize != idx {
                return Err(Error::invalid(format!("individual at position {idx} has id {}", p.id)));
            }
            households[p.household as usize].push(p.id);
        }
        if let Some(v) = visits.iter().find(|v| v.individual as usize >= individuals.len()) {
            return Err(Error::invalid(format!("visit of unknown individual {}", v.individual)));
        }
        visits.sort_by(|a, b| a.individual.cmp(&b.individual).then(a.t_arrive.total_cmp(&b.t_arrive)));
        let mut traces = vec![CheckInTrace::default(); individuals.len()];
        for v in visits {
            traces[v.individual as usize].visits.push(v);
        }
        World::from_parts(individuals, sites, households, traces, horizon)
    }

    /// Synthesizes population, site assignment and traces from one seed.
    pub fn synthesize(tiles: &[Tile], sites: Vec<Site>, spec: &WorldSpec, seed: u64) -> Result<World> {
        let pop = build_population(tiles, &spec.population, &mut stream(seed, streams::POPULATION))?;
        let mut individuals = pop.individuals;
        assign_sites(
            &mut individuals,
            &sites,
            &spec.sites_per_category,
            &mut stream(seed, streams::SITES),
        )?;
        let mut rng = stream(seed, streams::TRACES);
        let traces = individuals
            .iter()
            .map(|ind| generate_trace(ind, &spec.mobility, spec.horizon_hours, &mut rng))
            .collect();
        World::from_parts(individuals, sites, pop.households, traces, spec.horizon_hours)
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    /// Index range into `visits` for one individual.
    pub fn visit_range(&self, individual: u32) -> std::ops::Range<usize> {
        let i = individual as usize;
        self.person_offsets[i]..self.person_offsets[i + 1]
    }

    pub fn trace(&self, individual: u32) -> &[Visit] {
        &self.visits[self.visit_range(individual)]
    }

    /// Visit index of the visit `individual` is in at time `t`, if any.
    pub fn visit_at(&self, individual: u32, t: f64) -> Option<usize> {
        let range = self.visit_range(individual);
        let trace = &self.visits[range.clone()];
        let k = trace.partition_point(|v| v.t_arrive <= t);
        (k > 0 && trace[k - 1].contains(t)).then(|| range.start + k - 1)
    }

    /// Visits of `individual` with departure after `from`, in arrival order.
    pub fn visits_after(&self, individual: u32, from: f64) -> impl Iterator<Item = usize> + '_ {
        let range = self.visit_range(individual);
        let trace = &self.visits[range.clone()];
        let k = trace.partition_point(|v| v.t_depart <= from);
        (range.start + k)..range.end
    }

    /// Visits of `individual` that overlap `[lo, hi)`.
    pub fn visits_overlapping(&self, individual: u32, lo: f64, hi: f64) -> impl Iterator<Item = usize> + '_ {
        let range = self.visit_range(individual);
        let trace = &self.visits[range.clone()];
        let first = trace.partition_point(|v| v.t_depart <= lo);
        let last = trace.partition_point(|v| v.t_arrive < hi);
        (range.start + first)..(range.start + last.max(first))
    }

    pub fn site_position(&self, site_id: u32) -> Option<usize> {
        self.site_pos.get(&site_id).map(|p| *p as usize)
    }

    pub fn site(&self, site_id: u32) -> Option<&Site> {
        self.site_position(site_id).map(|p| &self.sites[p])
    }

    /// Visits at `site_id` overlapping `[lo, hi)`, in arrival order.
    pub fn site_visits_overlapping(&self, site_id: u32, lo: f64, hi: f64) -> impl Iterator<Item = usize> + '_ {
        let (list, max_d): (&[u32], f64) = match self.site_position(site_id) {
            Some(p) => (&self.site_visits[p], self.site_max_duration[p]),
            None => (&[], 0.0),
        };
        let start = list.partition_point(|&v| self.visits[v as usize].t_arrive < lo - max_d);
        let end = list.partition_point(|&v| self.visits[v as usize].t_arrive < hi);
        list[start..end.max(start)]
            .iter()
            .map(|&v| v as usize)
            .filter(move |&v| self.visits[v].t_depart > lo)
    }

    /// Intervals during which `individual` is at no site, clipped to `[lo, hi)`.
    pub fn home_intervals(&self, individual: u32, lo: f64, hi: f64) -> Vec<Interval> {
        let away: Vec<Interval> = self
            .visits_overlapping(individual, lo, hi)
            .map(|v| (self.visits[v].t_arrive, self.visits[v].t_depart))
            .collect();
        crate::intervals::complement(&away, lo, hi)
    }

    pub fn household_of(&self, individual: u32) -> &[u32] {
        let h = self.individuals[individual as usize].household as usize;
        &self.households[h]
    }
}

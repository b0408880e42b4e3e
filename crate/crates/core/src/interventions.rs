//! Containment measures. Every measure only removes visits or scales site
//! transmission rates down, so the simulator applies them by thinning.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simcore::params::EpidemicParams;
use crate::synthpop::{AgeGroup, Individual, SiteCategory, Visit, NUM_CATEGORIES};

/// Half-open activity window `[from, to)` in simulation hours. A missing
/// bound in JSON means unbounded on that side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    #[serde(
        default = "neg_inf",
        serialize_with = "open_bound::serialize",
        deserialize_with = "open_bound::lower"
    )]
    pub from: f64,
    #[serde(
        default = "pos_inf",
        serialize_with = "open_bound::serialize",
        deserialize_with = "open_bound::upper"
    )]
    pub to: f64,
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}

fn pos_inf() -> f64 {
    f64::INFINITY
}

mod open_bound {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn lower<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }

    pub fn upper<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Default for Window {
    fn default() -> Self {
        Window::ALWAYS
    }
}

impl Window {
    pub const ALWAYS: Window = Window {
        from: f64::NEG_INFINITY,
        to: f64::INFINITY,
    };

    pub fn new(from: f64, to: f64) -> Self {
        Window { from, to }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.from <= t && t < self.to
    }
}

/// A containment measure active during `window`. The window type is hours
/// (`Window`) inside the simulator and calendar dates in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "type",
    rename_all = "snake_case",
    bound(serialize = "W: Serialize", deserialize = "W: Deserialize<'de> + Default")
)]
pub enum Policy<W = Window> {
    /// Each visit is skipped with probability `rho`.
    SocialDistancing {
        rho: f64,
        #[serde(default)]
        window: W,
    },
    /// Site transmission rates scaled per category.
    BetaMultiplier {
        factors: [f64; NUM_CATEGORIES],
        #[serde(default)]
        window: W,
    },
    /// Population split into `groups`; on each day only one group keeps its visits.
    AlternatingCurfew {
        groups: u32,
        #[serde(default)]
        window: W,
    },
    /// Social distancing restricted to individuals of `min_age` band and older.
    VulnerableDistancing {
        rho: f64,
        min_age: AgeGroup,
        #[serde(default)]
        window: W,
    },
    /// Switches `bundle` on while weekly incidence per 100k exceeds the threshold.
    /// Windows inside the bundle are ignored.
    ConditionalLockdown {
        threshold_per_100k: f64,
        window_days: u32,
        bundle: Vec<Policy<W>>,
        #[serde(default)]
        window: W,
    },
}

impl<W> Policy<W> {
    pub fn window(&self) -> &W {
        match self {
            Policy::SocialDistancing { window, .. }
            | Policy::BetaMultiplier { window, .. }
            | Policy::AlternatingCurfew { window, .. }
            | Policy::VulnerableDistancing { window, .. }
            | Policy::ConditionalLockdown { window, .. } => window,
        }
    }

    /// Converts every window, bundled policies included.
    pub fn map_window<V, E>(&self, f: &impl Fn(&W) -> std::result::Result<V, E>) -> std::result::Result<Policy<V>, E> {
        Ok(match self {
            Policy::SocialDistancing { rho, window } => Policy::SocialDistancing {
                rho: *rho,
                window: f(window)?,
            },
            Policy::BetaMultiplier { factors, window } => Policy::BetaMultiplier {
                factors: *factors,
                window: f(window)?,
            },
            Policy::AlternatingCurfew { groups, window } => Policy::AlternatingCurfew {
                groups: *groups,
                window: f(window)?,
            },
            Policy::VulnerableDistancing { rho, min_age, window } => Policy::VulnerableDistancing {
                rho: *rho,
                min_age: *min_age,
                window: f(window)?,
            },
            Policy::ConditionalLockdown {
                threshold_per_100k,
                window_days,
                bundle,
                window,
            } => Policy::ConditionalLockdown {
                threshold_per_100k: *threshold_per_100k,
                window_days: *window_days,
                bundle: bundle
                    .iter()
                    .map(|p| p.map_window(f))
                    .collect::<std::result::Result<_, E>>()?,
                window: f(window)?,
            },
        })
    }
}

impl Policy {
    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(Error::config("policies", m));
        match self {
            Policy::SocialDistancing { rho, .. } | Policy::VulnerableDistancing { rho, .. } => {
                if !(0.0..=1.0).contains(rho) {
                    return err("rho must lie in [0, 1]");
                }
            }
            Policy::BetaMultiplier { factors, .. } => {
                if factors.iter().any(|f| !(0.0..=1.0).contains(f)) {
                    return err("beta multipliers must lie in [0, 1]");
                }
            }
            Policy::AlternatingCurfew { groups, .. } => {
                if *groups < 1 {
                    return err("curfew needs at least one group");
                }
            }
            Policy::ConditionalLockdown {
                threshold_per_100k,
                window_days,
                bundle,
                ..
            } => {
                if !(*threshold_per_100k > 0.0) || *window_days == 0 {
                    return err("conditional lockdown needs a positive threshold and window");
                }
                for p in bundle {
                    if matches!(p, Policy::ConditionalLockdown { .. }) {
                        return err("conditional lockdowns cannot be nested");
                    }
                    p.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Whether the policy can never change anything (ρ = 0, all factors 1, one group).
    pub fn is_inert(&self) -> bool {
        match self {
            Policy::SocialDistancing { rho, .. } | Policy::VulnerableDistancing { rho, .. } => *rho == 0.0,
            Policy::BetaMultiplier { factors, .. } => factors.iter().all(|f| *f == 1.0),
            Policy::AlternatingCurfew { groups, .. } => *groups == 1,
            Policy::ConditionalLockdown { bundle, .. } => bundle.iter().all(Policy::is_inert),
        }
    }
}

/// On/off state of one conditional lockdown with its activation history.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LockdownController {
    pub active: bool,
    /// `[on, off)` intervals; the last one is open (`off = inf`) while active.
    pub history: Vec<(f64, f64)>,
}

impl LockdownController {
    pub fn active_at(&self, t: f64) -> bool {
        self.history.iter().any(|&(on, off)| on <= t && t < off)
    }
}

/// Updates the controller from the case counts of the last days. Activation
/// requires strict exceedance of the threshold.
pub fn conditional_lockdown_tick(
    recent_daily_cases: &[u64],
    population: usize,
    threshold_per_100k: f64,
    now: f64,
    controller: &mut LockdownController,
) {
    let total: u64 = recent_daily_cases.iter().sum();
    let incidence = total as f64 * 100_000.0 / population.max(1) as f64;
    let exceed = incidence > threshold_per_100k;
    if exceed && !controller.active {
        controller.active = true;
        controller.history.push((now, f64::INFINITY));
    } else if !exceed && controller.active {
        controller.active = false;
        if let Some(last) = controller.history.last_mut() {
            last.1 = now;
        }
    }
}

/// The policies of a run together with the state of their controllers.
#[derive(Debug, Clone, Default)]
pub struct PolicySet {
    pub policies: Vec<Policy>,
    pub controllers: Vec<LockdownController>,
}

impl PolicySet {
    pub fn new(policies: Vec<Policy>) -> Self {
        let controllers = vec![LockdownController::default(); policies.len()];
        PolicySet { policies, controllers }
    }

    pub fn is_inert(&self) -> bool {
        self.policies.iter().all(Policy::is_inert)
    }

    pub fn has_conditional(&self) -> bool {
        self.policies
            .iter()
            .any(|p| matches!(p, Policy::ConditionalLockdown { .. }))
    }

    /// Calls `f` for every plain policy in force at `t`, expanding active
    /// conditional lockdowns into their bundles.
    fn for_each_active(&self, t: f64, mut f: impl FnMut(&Policy)) {
        for (p, ctl) in self.policies.iter().zip(&self.controllers) {
            match p {
                Policy::ConditionalLockdown { bundle, window, .. } => {
                    if window.contains(t) && ctl.active_at(t) {
                        bundle.iter().for_each(&mut f);
                    }
                }
                Policy::SocialDistancing { window, .. }
                | Policy::BetaMultiplier { window, .. }
                | Policy::AlternatingCurfew { window, .. }
                | Policy::VulnerableDistancing { window, .. } => {
                    if window.contains(t) {
                        f(p)
                    }
                }
            }
        }
    }

    /// Product of active multipliers for `category` at `t`.
    pub fn beta_factor(&self, category: SiteCategory, t: f64) -> f64 {
        let mut factor = 1.0;
        self.for_each_active(t, |p| {
            if let Policy::BetaMultiplier { factors, .. } = p {
                factor *= factors[category.index()];
            }
        });
        factor
    }

    /// Runs every daily controller update at day boundary `now`.
    pub fn tick(&mut self, now: f64, daily_positives: &[u64], population: usize) {
        for (p, ctl) in self.policies.iter().zip(self.controllers.iter_mut()) {
            if let Policy::ConditionalLockdown {
                threshold_per_100k,
                window_days,
                window,
                ..
            } = p
            {
                let today = (now / 24.0).round() as usize;
                let from = today.saturating_sub(*window_days as usize);
                let upto = today.min(daily_positives.len());
                let recent = if from < upto {
                    &daily_positives[from..upto]
                } else {
                    &[][..]
                };
                if window.contains(now) {
                    conditional_lockdown_tick(recent, population, *threshold_per_100k, now, ctl);
                } else if ctl.active {
                    conditional_lockdown_tick(&[], population, f64::INFINITY, now, ctl);
                }
            }
        }
    }
}

/// Base site rate times the active multipliers for its category.
pub fn effective_beta(category: SiteCategory, t: f64, policies: &PolicySet, params: &EpidemicParams) -> f64 {
    params.beta[category.index()] * policies.beta_factor(category, t)
}

/// Whether a visit takes place under the policies in force at its arrival.
pub fn visit_admitted<R: Rng + ?Sized>(
    individual: &Individual,
    visit: &Visit,
    policies: &PolicySet,
    rng: &mut R,
) -> bool {
    let t = visit.t_arrive;
    let mut admitted = true;
    policies.for_each_active(t, |p| {
        if !admitted {
            return;
        }
        match p {
            Policy::SocialDistancing { rho, .. } => {
                if *rho > 0.0 && rng.random::<f64>() < *rho {
                    admitted = false;
                }
            }
            Policy::VulnerableDistancing { rho, min_age, .. } => {
                if individual.age_group >= *min_age && *rho > 0.0 && rng.random::<f64>() < *rho {
                    admitted = false;
                }
            }
            Policy::AlternatingCurfew { groups, window } => {
                let origin = if window.from.is_finite() { window.from } else { 0.0 };
                let day = ((t - origin) / 24.0).floor().max(0.0) as u64;
                if individual.curfew_group(*groups) as u64 != day % *groups as u64 {
                    admitted = false;
                }
            }
            Policy::BetaMultiplier { .. } | Policy::ConditionalLockdown { .. } => {}
        }
    });
    admitted
}

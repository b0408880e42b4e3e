use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_AGE_GROUPS: usize = 6;
pub const NUM_CATEGORIES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgeGroup {
    #[serde(rename = "0-4")]
    Age0To4,
    #[serde(rename = "5-14")]
    Age5To14,
    #[serde(rename = "15-34")]
    Age15To34,
    #[serde(rename = "35-59")]
    Age35To59,
    #[serde(rename = "60-79")]
    Age60To79,
    #[serde(rename = "80+")]
    Age80Plus,
}

impl AgeGroup {
    pub const ALL: [AgeGroup; NUM_AGE_GROUPS] = [
        AgeGroup::Age0To4,
        AgeGroup::Age5To14,
        AgeGroup::Age15To34,
        AgeGroup::Age35To59,
        AgeGroup::Age60To79,
        AgeGroup::Age80Plus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Lower bound of the band in years.
    pub fn min_age(self) -> u32 {
        [0, 5, 15, 35, 60, 80][self.index()]
    }

    pub fn label(self) -> &'static str {
        ["0-4", "5-14", "15-34", "35-59", "60-79", "80+"][self.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteCategory {
    Education,
    Social,
    Transport,
    Work,
    Grocery,
}

impl SiteCategory {
    pub const ALL: [SiteCategory; NUM_CATEGORIES] = [
        SiteCategory::Education,
        SiteCategory::Social,
        SiteCategory::Transport,
        SiteCategory::Work,
        SiteCategory::Grocery,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SiteCategory::Education => "education",
            SiteCategory::Social => "social",
            SiteCategory::Transport => "transport",
            SiteCategory::Work => "work",
            SiteCategory::Grocery => "grocery",
        }
    }
}

impl fmt::Display for SiteCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SiteCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "education" => Ok(SiteCategory::Education),
            "social" => Ok(SiteCategory::Social),
            "transport" | "transportation" | "bus_stop" => Ok(SiteCategory::Transport),
            "work" | "office" => Ok(SiteCategory::Work),
            "grocery" | "groceries" | "supermarket" => Ok(SiteCategory::Grocery),
            other => Err(Error::invalid(format!("unknown site category `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub tile_id: String,
    pub lat: f64,
    pub lon: f64,
    pub population: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: u32,
    pub category: SiteCategory,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub id: u32,
    pub age_group: AgeGroup,
    pub household: u32,
    pub home: (f64, f64),
    /// Site ids per category, indexed by `SiteCategory::index`.
    pub assigned_sites: [Vec<u32>; NUM_CATEGORIES],
    /// Uniform draw fixing the individual's curfew group for any group count.
    pub curfew_draw: f64,
    /// Uniform draw fixing contact-tracing adoption for any compliance level.
    pub compliance_draw: f64,
}

impl Individual {
    pub fn curfew_group(&self, groups: u32) -> u32 {
        ((self.curfew_draw * groups as f64) as u32).min(groups.saturating_sub(1))
    }

    pub fn is_compliant(&self, compliance: f64) -> bool {
        self.compliance_draw < compliance
    }
}

/// One check-in: `individual` is at `site` during `[t_arrive, t_depart)` (hours).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub individual: u32,
    pub site: u32,
    #[serde(rename = "t_arrive_h")]
    pub t_arrive: f64,
    #[serde(rename = "t_depart_h")]
    pub t_depart: f64,
}

impl Visit {
    pub fn duration(&self) -> f64 {
        self.t_depart - self.t_arrive
    }

    pub fn contains(&self, t: f64) -> bool {
        self.t_arrive <= t && t < self.t_depart
    }
}

/// Time-sorted, pairwise disjoint visits of one individual.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckInTrace {
    pub visits: Vec<Visit>,
}

impl CheckInTrace {
    pub fn is_valid(&self) -> bool {
        self.visits.iter().all(|v| v.t_depart > v.t_arrive)
            && self.visits.windows(2).all(|w| w[0].t_depart <= w[1].t_arrive)
    }
}

/// Great-circle distance in metres.
pub fn haversine_m(a: (f64, f64), b: (f64, f64)) -> f64 {
    const EARTH_RADIUS_M: f64 = 6_371_008.8;
    let (lat1, lon1) = (a.0.to_radians(), a.1.to_radians());
    let (lat2, lon2) = (b.0.to_radians(), b.1.to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

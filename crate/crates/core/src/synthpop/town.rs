//! Synthetic region generator for scenarios without real census or site data.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::types::{Site, SiteCategory, Tile, NUM_CATEGORIES};
use crate::rng::{stream, streams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TownSpec {
    pub population: u64,
    /// Tiles per side of the square grid.
    pub grid: usize,
    pub tile_size_km: f64,
    pub center: (f64, f64),
    pub sites: [usize; NUM_CATEGORIES],
}

impl Default for TownSpec {
    fn default() -> Self {
        TownSpec {
            population: 10_000,
            grid: 5,
            tile_size_km: 1.0,
            center: (50.0, 8.0),
            sites: [10, 60, 20, 40, 20],
        }
    }
}

const KM_PER_DEG_LAT: f64 = 111.32;

/// Tiles with a denser centre and sites scattered over the same area.
pub fn synthetic_town(spec: &TownSpec, seed: u64) -> (Vec<Tile>, Vec<Site>) {
    let mut rng = stream(seed, streams::TOWN);
    let g = spec.grid.max(1);
    let deg_lat = spec.tile_size_km / KM_PER_DEG_LAT;
    let deg_lon = deg_lat / spec.center.0.to_radians().cos();
    let half = (g as f64 - 1.0) / 2.0;
    let mut weights = Vec::with_capacity(g * g);
    for r in 0..g {
        for c in 0..g {
            let d2 = ((r as f64 - half).powi(2) + (c as f64 - half).powi(2)) / (half.max(1.0)).powi(2);
            weights.push((-d2).exp());
        }
    }
    let total_w: f64 = weights.iter().sum();
    let tiles: Vec<Tile> = weights
        .iter()
        .enumerate()
        .map(|(k, w)| Tile {
            tile_id: format!("t{k}"),
            lat: spec.center.0 + ((k / g) as f64 - half) * deg_lat,
            lon: spec.center.1 + ((k % g) as f64 - half) * deg_lon,
            population: (spec.population as f64 * w / total_w).round(),
        })
        .collect();
    let extent = (g as f64 / 2.0, g as f64 / 2.0);
    let mut sites = Vec::new();
    for (c, &count) in spec.sites.iter().enumerate() {
        let category = SiteCategory::ALL[c];
        for _ in 0..count {
            // average of two uniforms pulls sites toward the centre
            let u = (rng.random::<f64>() + rng.random::<f64>()) - 1.0;
            let v = (rng.random::<f64>() + rng.random::<f64>()) - 1.0;
            sites.push(Site {
                id: sites.len() as u32,
                category,
                lat: spec.center.0 + u * extent.0 * deg_lat,
                lon: spec.center.1 + v * extent.1 * deg_lon,
            });
        }
    }
    (tiles, sites)
}

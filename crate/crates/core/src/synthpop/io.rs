use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

use super::types::{Site, Tile, Visit};
use crate::error::{Error, Result};

#[derive(Deserialize)]
struct SiteRow {
    site_id: u32,
    category: String,
    lat: f64,
    lon: f64,
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn row_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::parse(path, format!("line {line}: {e}"))
}

/// Reads `tile_id,lat,lon,population`.
pub fn read_tiles(path: &Path) -> Result<Vec<Tile>> {
    let mut rdr = open_csv(path)?;
    let mut tiles = Vec::new();
    for row in rdr.deserialize::<Tile>() {
        let tile = row.map_err(|e| row_error(path, e))?;
        if !(tile.population >= 0.0) || !tile.lat.is_finite() || !tile.lon.is_finite() {
            return Err(Error::parse(path, format!("tile {} has invalid values", tile.tile_id)));
        }
        tiles.push(tile);
    }
    Ok(tiles)
}

/// Reads `site_id,category,lat,lon`.
pub fn read_sites(path: &Path) -> Result<Vec<Site>> {
    let mut rdr = open_csv(path)?;
    let mut sites = Vec::new();
    for (n, row) in rdr.deserialize::<SiteRow>().enumerate() {
        let row = row.map_err(|e| row_error(path, e))?;
        let category = row
            .category
            .parse()
            .map_err(|e: Error| Error::parse(path, format!("line {}: {e}", n + 2)))?;
        sites.push(Site {
            id: row.site_id,
            category,
            lat: row.lat,
            lon: row.lon,
        });
    }
    Ok(sites)
}

pub fn write_sites(path: &Path, sites: &[Site]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e.to_string()))?;
    w.write_record(["site_id", "category", "lat", "lon"])
        .map_err(|e| Error::parse(path, e.to_string()))?;
    for s in sites {
        w.write_record([
            s.id.to_string(),
            s.category.to_string(),
            s.lat.to_string(),
            s.lon.to_string(),
        ])
        .map_err(|e| Error::parse(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One JSON object per visit: `{individual, site, t_arrive_h, t_depart_h}`.
pub fn write_traces_jsonl<'a>(path: &Path, visits: impl IntoIterator<Item = &'a Visit>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for v in visits {
        serde_json::to_writer(&mut w, v).map_err(|e| Error::parse(path, e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_traces_jsonl(path: &Path) -> Result<Vec<Visit>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Visit = serde_json::from_str(&line).map_err(|e| Error::parse(path, format!("line {}: {e}", n + 1)))?;
        out.push(v);
    }
    Ok(out)
}

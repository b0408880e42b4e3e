//! Minimal SVG line charts.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
    pub color: &'a str,
}

/// Shaded region between `lo` and `hi` over shared x values.
pub struct Shade<'a> {
    pub x: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub color: &'a str,
}

const W: f64 = 640.0;
const H: f64 = 360.0;
const PAD: f64 = 48.0;

pub fn line_chart(
    path: &Path,
    title: &str,
    y_label: &str,
    series: &[Series],
    shades: &[Shade],
    hline: Option<f64>,
) -> Result<()> {
    let xs = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .chain(shades.iter().flat_map(|s| s.x.iter().copied()));
    let ys = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .chain(shades.iter().flat_map(|s| s.lo.iter().chain(&s.hi).copied()))
        .chain(hline);
    let (x0, x1) = bounds(xs);
    let (_, y1) = bounds(ys);
    let y0 = 0.0;
    let y1 = if y1 > y0 { y1 * 1.05 } else { 1.0 };
    let x1 = if x1 > x0 { x1 } else { x0 + 1.0 };
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y.min(y1) - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#,
        W / 2.0
    );
    for s in shades {
        let mut pts: Vec<String> =
            s.x.iter()
                .zip(&s.hi)
                .filter(|(_, y)| y.is_finite())
                .map(|(x, y)| format!("{:.1},{:.1}", sx(*x), sy(*y)))
                .collect();
        pts.extend(
            s.x.iter()
                .zip(&s.lo)
                .rev()
                .filter(|(_, y)| y.is_finite())
                .map(|(x, y)| format!("{:.1},{:.1}", sx(*x), sy(*y))),
        );
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="{}" fill-opacity="0.25"/>"#,
            pts.join(" "),
            s.color
        );
    }
    // axes
    let _ = writeln!(
        svg,
        r#"<path d="M{PAD},{PAD} V{} H{}" stroke="black" fill="none"/>"#,
        H - PAD,
        W - PAD
    );
    for k in 0..=4 {
        let y = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            PAD - 4.0,
            sy(y) + 4.0,
            tick(y)
        );
        let x = x0 + (x1 - x0) * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            sx(x),
            H - PAD + 16.0,
            tick(x)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">day</text>"#,
        W / 2.0,
        H - 8.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{y_label}</text>"#,
        H / 2.0,
        H / 2.0
    );
    if let Some(h) = hline {
        let _ = writeln!(
            svg,
            r#"<line x1="{PAD}" x2="{}" y1="{:.1}" y2="{:.1}" stroke="gray" stroke-dasharray="4 4"/>"#,
            W - PAD,
            sy(h),
            sy(h)
        );
    }
    for (n, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|(x, y)| format!("{:.1},{:.1}", sx(*x), sy(*y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" stroke="{}" fill="none" stroke-width="1.5"/>"#,
            pts.join(" "),
            s.color
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{}">{}</text>"#,
            W - PAD - 120.0,
            PAD + 14.0 * n as f64,
            s.color,
            s.label
        );
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

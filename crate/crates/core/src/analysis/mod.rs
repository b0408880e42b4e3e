//! Secondary-case statistics, negative-binomial dispersion fits and reports.

mod plot;
pub mod report;

use std::collections::{HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::simcore::{EventKind, EventLog};

pub use report::{emit_report, write_rt_kt_csv, write_secondary_hist_csv, write_summary_csv, SummaryRow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfectorRecord {
    pub id: u32,
    /// Hours at which the infector became infectious.
    pub t_infectious: f64,
    pub n_secondary: u32,
}

/// One row per individual who was infected during the run (seeded exposures
/// included) and became infectious.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SecondaryCaseTable {
    pub rows: Vec<InfectorRecord>,
}

impl SecondaryCaseTable {
    pub fn counts(&self) -> Vec<u32> {
        self.rows.iter().map(|r| r.n_secondary).collect()
    }

    pub fn extend(&mut self, other: SecondaryCaseTable) {
        self.rows.extend(other.rows);
    }

    /// Number of infectors per secondary-case count, index = count.
    pub fn histogram(&self) -> Vec<u64> {
        let max = self.rows.iter().map(|r| r.n_secondary).max().unwrap_or(0) as usize;
        let mut h = vec![0u64; if self.rows.is_empty() { 0 } else { max + 1 }];
        for r in &self.rows {
            h[r.n_secondary as usize] += 1;
        }
        h
    }
}

/// Attributes each exposure with a known infector to that infector.
pub fn secondary_counts(log: &EventLog) -> SecondaryCaseTable {
    let mut exposed: HashSet<u32> = HashSet::new();
    let mut index: HashMap<u32, usize> = HashMap::new();
    let mut rows: Vec<InfectorRecord> = Vec::new();
    let mut orphan: HashMap<u32, u32> = HashMap::new();
    for e in &log.events {
        match e.kind {
            EventKind::Exposure => {
                exposed.insert(e.subject);
                if let Some(j) = e.infector {
                    match index.get(&j) {
                        Some(&r) => rows[r].n_secondary += 1,
                        // a causally valid log never gets here; keep the count anyway
                        None => *orphan.entry(j).or_default() += 1,
                    }
                }
            }
            EventKind::BecomeIa | EventKind::BecomeIp if exposed.contains(&e.subject) => {
                index.entry(e.subject).or_insert_with(|| {
                    rows.push(InfectorRecord {
                        id: e.subject,
                        t_infectious: e.time,
                        n_secondary: 0,
                    });
                    rows.len() - 1
                });
            }
            _ => {}
        }
    }
    for (j, n) in orphan {
        match index.get(&j) {
            Some(&r) => rows[r].n_secondary += n,
            None => rows.push(InfectorRecord {
                id: j,
                t_infectious: f64::NAN,
                n_secondary: n,
            }),
        }
    }
    SecondaryCaseTable { rows }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NbFit {
    /// Mean number of secondary cases.
    pub r: f64,
    /// Dispersion; `f64::INFINITY` marks the Poisson limit.
    pub k: f64,
    pub log_likelihood: f64,
}

impl NbFit {
    pub fn is_overdispersed(&self) -> bool {
        self.k < 1.0
    }
}

/// Log-likelihood of counts under a negative binomial with mean `r` and
/// dispersion `k` (Poisson when `k` is infinite).
pub fn nb_log_likelihood(counts: &[u32], r: f64, k: f64) -> f64 {
    grouped_log_likelihood(&tally(counts), r, k)
}

/// Distinct values with their multiplicities.
fn tally(counts: &[u32]) -> Vec<(u32, f64)> {
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let mut out: Vec<(u32, f64)> = Vec::new();
    for x in sorted {
        match out.last_mut() {
            Some((v, n)) if *v == x => *n += 1.0,
            _ => out.push((x, 1.0)),
        }
    }
    out
}

fn grouped_log_likelihood(tally: &[(u32, f64)], r: f64, k: f64) -> f64 {
    tally
        .iter()
        .map(|&(x, n)| {
            let x = x as f64;
            let lf = ln_gamma(x + 1.0);
            let ll = if k.is_infinite() {
                if r == 0.0 {
                    if x == 0.0 {
                        0.0
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    x * r.ln() - r - lf
                }
            } else {
                let mut ll = ln_gamma(x + k) - ln_gamma(k) - lf + k * (k / (k + r)).ln();
                if x > 0.0 {
                    ll += x * (r / (k + r)).ln();
                }
                ll
            };
            n * ll
        })
        .sum()
}

fn mean_var(counts: &[u32]) -> (f64, f64) {
    let n = counts.len() as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let var = if counts.len() > 1 {
        counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Maximum-likelihood fit. The mean is the sample mean; the dispersion
/// maximizes the profile likelihood over `[1e-3, 1e3]` by golden-section
/// search in log space.
pub fn nb_mle(counts: &[u32]) -> Result<NbFit> {
    if counts.is_empty() {
        return Err(Error::invalid("cannot fit a distribution to no counts"));
    }
    let (r, var) = mean_var(counts);
    let tally = tally(counts);
    if var <= r {
        return Ok(NbFit {
            r,
            k: f64::INFINITY,
            log_likelihood: grouped_log_likelihood(&tally, r, f64::INFINITY),
        });
    }
    let f = |log_k: f64| grouped_log_likelihood(&tally, r, log_k.exp());
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1e-3f64.ln(), 1e3f64.ln());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let k = (0.5 * (a + b)).exp();
    Ok(NbFit {
        r,
        k,
        log_likelihood: grouped_log_likelihood(&tally, r, k),
    })
}

/// Method-of-moments dispersion, `mean^2 / (var - mean)`.
pub fn nb_moments(counts: &[u32]) -> Option<NbFit> {
    if counts.is_empty() {
        return None;
    }
    let (r, var) = mean_var(counts);
    let k = if var > r { r * r / (var - r) } else { f64::INFINITY };
    Some(NbFit {
        r,
        k,
        log_likelihood: nb_log_likelihood(counts, r, k),
    })
}

/// Point estimate with a one-standard-deviation band from bootstrap resampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtKt {
    pub day: u32,
    pub n_infectors: usize,
    pub rt: Option<Band>,
    pub kt: Option<Band>,
}

pub const MIN_COHORT: usize = 5;
pub const BOOTSTRAP_RESAMPLES: usize = 200;

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if frac == 0.0 || i + 1 >= sorted.len() {
        return sorted[i];
    }
    let (a, b) = (sorted[i], sorted[i + 1]);
    if a.is_infinite() || b.is_infinite() {
        return if frac < 0.5 { a } else { b };
    }
    a + frac * (b - a)
}

/// Band from the 16th and 84th bootstrap percentiles, widened to contain
/// the point estimate.
fn band(value: f64, mut samples: Vec<f64>) -> Band {
    samples.sort_by(f64::total_cmp);
    let lo = quantile(&samples, 0.158_655_25);
    let hi = quantile(&samples, 0.841_344_75);
    Band {
        value,
        lo: lo.min(value),
        hi: hi.max(value),
    }
}

/// Daily fits over infectors whose infectious onset falls in the trailing
/// `window_days` days. Days with fewer than five infectors are left empty.
pub fn rt_kt_series<R: Rng + ?Sized>(
    table: &SecondaryCaseTable,
    window_days: u32,
    days: u32,
    rng: &mut R,
) -> Result<Vec<RtKt>> {
    if window_days == 0 {
        return Err(Error::config("window", "window must be at least one day"));
    }
    let mut by_day: Vec<Vec<u32>> = vec![Vec::new(); days as usize];
    for r in &table.rows {
        if r.t_infectious.is_finite() && r.t_infectious >= 0.0 {
            let d = (r.t_infectious / 24.0).floor() as usize;
            if d < by_day.len() {
                by_day[d].push(r.n_secondary);
            }
        }
    }
    let mut out = Vec::with_capacity(days as usize);
    for day in 0..days {
        let from = (day + 1).saturating_sub(window_days) as usize;
        let cohort: Vec<u32> = by_day[from..=day as usize].iter().flatten().copied().collect();
        let mut row = RtKt {
            day,
            n_infectors: cohort.len(),
            rt: None,
            kt: None,
        };
        if cohort.len() >= MIN_COHORT {
            let fit = nb_mle(&cohort)?;
            let mut rs = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
            let mut ks = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
            let mut resample = vec![0u32; cohort.len()];
            for _ in 0..BOOTSTRAP_RESAMPLES {
                for slot in resample.iter_mut() {
                    *slot = cohort[rng.random_range(0..cohort.len())];
                }
                let b = nb_mle(&resample)?;
                rs.push(b.r);
                ks.push(b.k);
            }
            row.rt = Some(band(fit.r, rs));
            row.kt = Some(band(fit.k, ks));
        }
        out.push(row);
    }
    Ok(out)
}

/// Mean absolute error between two daily series.
pub fn mae(predicted: &[f64], reference: &[f64]) -> Result<f64> {
    if predicted.len() != reference.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            actual: predicted.len(),
        });
    }
    if predicted.is_empty() {
        return Ok(0.0);
    }
    Ok(predicted.iter().zip(reference).map(|(p, r)| (p - r).abs()).sum::<f64>() / predicted.len() as f64)
}

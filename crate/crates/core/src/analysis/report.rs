//! CSV and plot output for a set of rollouts.

use std::path::Path;

use serde::Serialize;

use super::plot::{line_chart, Series, Shade};
use super::{mae, nb_mle, rt_kt_series, secondary_counts, NbFit, RtKt, SecondaryCaseTable};
use crate::calib::scenario::daily_cumulative_positives;
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::simcore::{DailySummary, EventLog};

/// Per-day mean and standard deviation over rollouts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SummaryRow {
    pub day: u32,
    #[serde(rename = "S_mean")]
    pub s_mean: f64,
    #[serde(rename = "S_sd")]
    pub s_sd: f64,
    #[serde(rename = "E_mean")]
    pub e_mean: f64,
    #[serde(rename = "E_sd")]
    pub e_sd: f64,
    #[serde(rename = "Ia_mean")]
    pub ia_mean: f64,
    #[serde(rename = "Ia_sd")]
    pub ia_sd: f64,
    #[serde(rename = "Ip_mean")]
    pub ip_mean: f64,
    #[serde(rename = "Ip_sd")]
    pub ip_sd: f64,
    #[serde(rename = "Is_mean")]
    pub is_mean: f64,
    #[serde(rename = "Is_sd")]
    pub is_sd: f64,
    #[serde(rename = "H_mean")]
    pub h_mean: f64,
    #[serde(rename = "H_sd")]
    pub h_sd: f64,
    #[serde(rename = "R_mean")]
    pub r_mean: f64,
    #[serde(rename = "R_sd")]
    pub r_sd: f64,
    #[serde(rename = "D_mean")]
    pub d_mean: f64,
    #[serde(rename = "D_sd")]
    pub d_sd: f64,
    pub cumpos_mean: f64,
    pub cumpos_sd: f64,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn summarize(per_rollout: &[Vec<DailySummary>]) -> Result<Vec<SummaryRow>> {
    let Some(first) = per_rollout.first() else {
        return Err(Error::invalid("no rollouts to summarize"));
    };
    let days = first.len();
    if per_rollout.iter().any(|r| r.len() != days) {
        return Err(Error::invalid("rollouts cover different numbers of days"));
    }
    let field = |d: usize, f: fn(&DailySummary) -> u64| -> (f64, f64) {
        let v: Vec<f64> = per_rollout.iter().map(|r| f(&r[d]) as f64).collect();
        mean_sd(&v)
    };
    Ok((0..days)
        .map(|d| {
            let (s_mean, s_sd) = field(d, |x| x.susceptible);
            let (e_mean, e_sd) = field(d, |x| x.exposed);
            let (ia_mean, ia_sd) = field(d, |x| x.infectious_asym);
            let (ip_mean, ip_sd) = field(d, |x| x.infectious_presym);
            let (is_mean, is_sd) = field(d, |x| x.infectious_sym);
            let (h_mean, h_sd) = field(d, |x| x.hospitalized);
            let (r_mean, r_sd) = field(d, |x| x.recovered);
            let (d_mean, d_sd) = field(d, |x| x.dead);
            let (cumpos_mean, cumpos_sd) = field(d, |x| x.cum_positive_tests);
            SummaryRow {
                day: first[d].day,
                s_mean,
                s_sd,
                e_mean,
                e_sd,
                ia_mean,
                ia_sd,
                ip_mean,
                ip_sd,
                is_mean,
                is_sd,
                h_mean,
                h_sd,
                r_mean,
                r_sd,
                d_mean,
                d_sd,
                cumpos_mean,
                cumpos_sd,
            }
        })
        .collect())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::parse(path, e.to_string())
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) if x.is_infinite() => "inf".into(),
        Some(x) => format!("{x}"),
    }
}

pub fn write_rt_kt_csv(path: &Path, series: &[RtKt]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["day", "Rt", "Rt_lo", "Rt_hi", "kt", "kt_lo", "kt_hi", "n_infectors"])
        .map_err(csv_err(path))?;
    for r in series {
        w.write_record([
            r.day.to_string(),
            fmt_opt(r.rt.map(|b| b.value)),
            fmt_opt(r.rt.map(|b| b.lo)),
            fmt_opt(r.rt.map(|b| b.hi)),
            fmt_opt(r.kt.map(|b| b.value)),
            fmt_opt(r.kt.map(|b| b.lo)),
            fmt_opt(r.kt.map(|b| b.hi)),
            r.n_infectors.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_secondary_hist_csv(path: &Path, table: &SecondaryCaseTable) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["n_secondary", "n_infectors"]).map_err(csv_err(path))?;
    for (n, count) in table.histogram().iter().enumerate() {
        w.write_record([n.to_string(), count.to_string()])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportOutcome {
    /// Fit over all infectors of all rollouts; `None` without infectors.
    pub overall: Option<NbFit>,
    pub n_infectors: usize,
    /// MAE of mean cumulative positives against the reference, if given.
    pub mae: Option<f64>,
    #[serde(skip)]
    pub rt_kt: Vec<RtKt>,
    #[serde(skip)]
    pub summary: Vec<SummaryRow>,
}

pub struct ReportOptions<'a> {
    /// Enables `summary.csv`; compartment counts need the population size.
    pub population: Option<usize>,
    pub days: u32,
    pub window_days: u32,
    pub seed: u64,
    pub reference: Option<&'a [f64]>,
}

/// Writes `summary.csv` (when the population is known), `rt_kt.csv`,
/// `secondary_hist.csv`, `report.json` and SVG plots into `out_dir`.
pub fn emit_report(logs: &[EventLog], options: &ReportOptions, out_dir: &Path) -> Result<ReportOutcome> {
    if logs.is_empty() {
        return Err(Error::invalid("no rollouts to report on"));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut table = SecondaryCaseTable::default();
    for log in logs {
        table.extend(secondary_counts(log));
    }
    let rt_kt = rt_kt_series(
        &table,
        options.window_days,
        options.days,
        &mut stream(options.seed, 0xA11),
    )?;
    let counts = table.counts();
    let overall = if counts.is_empty() {
        None
    } else {
        Some(nb_mle(&counts)?)
    };

    let summary = match options.population {
        Some(n) => {
            let per: Vec<Vec<DailySummary>> = logs.iter().map(|l| l.daily_summary(n, options.days)).collect();
            let rows = summarize(&per)?;
            write_summary_csv(&out_dir.join("summary.csv"), &rows)?;
            let pts = |f: fn(&SummaryRow) -> f64| rows.iter().map(|r| (r.day as f64, f(r))).collect::<Vec<_>>();
            line_chart(
                &out_dir.join("infected.svg"),
                "Infectious individuals (mean over rollouts)",
                "individuals",
                &[
                    Series {
                        label: "infectious",
                        points: pts(|r| r.ia_mean + r.ip_mean + r.is_mean),
                        color: "crimson",
                    },
                    Series {
                        label: "exposed",
                        points: pts(|r| r.e_mean),
                        color: "darkorange",
                    },
                    Series {
                        label: "cum. positives",
                        points: pts(|r| r.cumpos_mean),
                        color: "steelblue",
                    },
                ],
                &[],
                None,
            )?;
            rows
        }
        None => Vec::new(),
    };

    write_rt_kt_csv(&out_dir.join("rt_kt.csv"), &rt_kt)?;
    write_secondary_hist_csv(&out_dir.join("secondary_hist.csv"), &table)?;
    let fitted: Vec<&RtKt> = rt_kt.iter().filter(|r| r.rt.is_some()).collect();
    let day = |r: &&RtKt| r.day as f64;
    line_chart(
        &out_dir.join("rt.svg"),
        "Effective reproduction number",
        "R_t",
        &[Series {
            label: "R_t",
            points: fitted.iter().map(|r| (day(r), r.rt.unwrap().value)).collect(),
            color: "crimson",
        }],
        &[Shade {
            x: fitted.iter().map(day).collect(),
            lo: fitted.iter().map(|r| r.rt.unwrap().lo).collect(),
            hi: fitted.iter().map(|r| r.rt.unwrap().hi).collect(),
            color: "crimson",
        }],
        Some(1.0),
    )?;

    let mae = match options.reference {
        Some(reference) => {
            let curves: Vec<Vec<f64>> = logs
                .iter()
                .map(|l| daily_cumulative_positives(l, options.days as usize))
                .collect();
            let n = reference.len().min(options.days as usize);
            let mean: Vec<f64> = (0..n)
                .map(|d| curves.iter().map(|c| c[d]).sum::<f64>() / curves.len() as f64)
                .collect();
            Some(mae(&mean, &reference[..n])?)
        }
        None => None,
    };
    let outcome = ReportOutcome {
        overall,
        n_infectors: counts.len(),
        mae,
        rt_kt,
        summary,
    };
    let report_path = out_dir.join("report.json");
    let text = serde_json::to_string_pretty(&outcome).map_err(|e| Error::parse(&report_path, e.to_string()))?;
    std::fs::write(&report_path, text + "\n").map_err(|e| Error::io(&report_path, e))?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::{Event, EventKind};

    fn toy_log(extra: bool) -> EventLog {
        let mut log = EventLog::default();
        log.events.push(Event::new(0.0, EventKind::Exposure, 0));
        log.events.push(Event::new(20.0, EventKind::BecomeIa, 0));
        if extra {
            log.events.push(Event {
                infector: Some(0),
                ..Event::new(30.0, EventKind::Exposure, 1)
            });
        }
        log
    }

    #[test]
    fn zero_rollouts_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let opts = ReportOptions {
            population: Some(3),
            days: 3,
            window_days: 7,
            seed: 0,
            reference: None,
        };
        assert!(emit_report(&[], &opts, dir.path()).is_err());
        assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
    }

    #[test]
    fn headers_and_sd() {
        let dir = tempfile::tempdir().unwrap();
        let opts = ReportOptions {
            population: Some(3),
            days: 3,
            window_days: 7,
            seed: 0,
            reference: Some(&[0.0, 0.0, 0.0]),
        };
        let out = emit_report(&[toy_log(false)], &opts, dir.path()).unwrap();
        assert!(out.summary.iter().all(|r| r.e_sd == 0.0 && r.s_sd == 0.0));
        assert_eq!(out.mae, Some(0.0));
        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(
            summary.lines().next().unwrap(),
            "day,S_mean,S_sd,E_mean,E_sd,Ia_mean,Ia_sd,Ip_mean,Ip_sd,Is_mean,Is_sd,H_mean,H_sd,R_mean,R_sd,D_mean,D_sd,cumpos_mean,cumpos_sd"
        );
        let rt = std::fs::read_to_string(dir.path().join("rt_kt.csv")).unwrap();
        assert_eq!(
            rt.lines().next().unwrap(),
            "day,Rt,Rt_lo,Rt_hi,kt,kt_lo,kt_hi,n_infectors"
        );
        assert_eq!(rt.lines().count(), 4);

        let out = emit_report(&[toy_log(false), toy_log(true)], &opts, dir.path()).unwrap();
        assert!(out.summary[1].e_sd > 0.0);
        assert_eq!(out.n_infectors, 2);
        assert!(dir.path().join("rt.svg").exists());
        assert!(dir.path().join("infected.svg").exists());
    }
}

//! Bayesian-optimization calibration of transmission parameters against
//! observed cumulative case counts.

pub mod acquisition;
pub mod gp;
pub mod scenario;
pub mod sobol;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{mix, stream};

pub use acquisition::{expected_score, knowledge_gradient, score, KgEstimate, KnowledgeGradient};
pub use gp::{Gp, GpConfig, GpHyper, Posterior};
pub use scenario::{read_cases_csv, simulate_g, CalibScenario};
pub use sobol::{sobol_points, Sobol};

/// Box of admissible parameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaDomain {
    pub names: Vec<String>,
    pub bounds: Vec<(f64, f64)>,
}

impl Default for ThetaDomain {
    fn default() -> Self {
        ThetaDomain {
            names: vec!["beta".into(), "xi".into(), "rho".into()],
            bounds: vec![(0.0, 1.5), (0.0, 1.5), (0.0, 1.0)],
        }
    }
}

impl ThetaDomain {
    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.names.len() != self.bounds.len() || self.bounds.is_empty() {
            return Err(Error::config("domain", "one name per bound, at least one dimension"));
        }
        for (name, (lo, hi)) in self.names.iter().zip(&self.bounds) {
            if !(lo < hi) {
                return Err(Error::config(
                    format!("domain.{name}"),
                    "lower bound must be below upper bound",
                ));
            }
            if name == "rho" && (*lo < 0.0 || *hi > 1.0) {
                return Err(Error::config("domain.rho", "rho must stay within [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn to_unit(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(&self.bounds)
            .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.bounds)
            .map(|(v, (lo, hi))| lo + v.clamp(0.0, 1.0) * (hi - lo))
            .collect()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim() && theta.iter().zip(&self.bounds).all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibConfig {
    /// Total number of evaluations.
    pub steps: usize,
    /// Quasi-random evaluations before the acquisition takes over.
    pub init: usize,
    pub rollouts: usize,
    pub n_fantasies: usize,
    pub n_candidates: usize,
    pub gp: GpConfig,
    pub seed: u64,
}

impl Default for CalibConfig {
    fn default() -> Self {
        CalibConfig {
            steps: 40,
            init: 20,
            rollouts: 96,
            n_fantasies: 16,
            n_candidates: 128,
            gp: GpConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub step: usize,
    pub theta: Vec<f64>,
    pub g_hat: Vec<f64>,
    pub score: f64,
    pub rollouts: usize,
    /// Knowledge-gradient value that selected this point, if any.
    pub kg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibResult {
    pub theta_star: Vec<f64>,
    pub best_score: f64,
    pub evaluations: Vec<Evaluation>,
}

/// Fits `theta` so that `objective(theta, rollouts, seed)` reproduces
/// `c_true`: quasi-random initial design, then knowledge-gradient proposals
/// from a GP surrogate. Returns the best evaluated point.
pub fn calibrate<F>(
    mut objective: F,
    c_true: &[f64],
    domain: &ThetaDomain,
    config: &CalibConfig,
    mut on_eval: impl FnMut(&Evaluation),
) -> Result<CalibResult>
where
    F: FnMut(&[f64], usize, u64) -> Result<Vec<f64>>,
{
    domain.validate()?;
    if config.init == 0 || config.steps < config.init {
        return Err(Error::config("calibration", "need 1 <= init <= steps"));
    }
    if config.rollouts == 0 {
        return Err(Error::config("calibration.rollouts", "need at least one rollout"));
    }
    let unit = vec![(0.0, 1.0); domain.dim()];
    let mut evaluations: Vec<Evaluation> = Vec::with_capacity(config.steps);
    let mut evaluate = |step: usize, u: &[f64], kg: Option<f64>, evaluations: &mut Vec<Evaluation>| -> Result<()> {
        let theta = domain.from_unit(u);
        let g_hat = objective(&theta, config.rollouts, mix(config.seed, step as u64))?;
        let s = score(&g_hat, c_true)?;
        let e = Evaluation {
            step,
            theta,
            g_hat,
            score: s,
            rollouts: config.rollouts,
            kg,
        };
        log::info!("step {step}: theta {:?} score {:.4e}", e.theta, e.score);
        on_eval(&e);
        evaluations.push(e);
        Ok(())
    };

    for (step, u) in sobol_points(config.init, &unit)?.iter().enumerate() {
        evaluate(step, u, None, &mut evaluations)?;
    }
    // candidates continue the same sequence past the initial design
    let mut grid = sobol_points(config.init + config.n_candidates, &unit)?;
    let grid = grid.split_off(config.init);

    for step in config.init..config.steps {
        let x: Vec<Vec<f64>> = evaluations.iter().map(|e| domain.to_unit(&e.theta)).collect();
        let y: Vec<Vec<f64>> = evaluations.iter().map(|e| e.g_hat.clone()).collect();
        let gp_config = GpConfig {
            seed: mix(config.seed, 0x9000 + step as u64),
            ..config.gp.clone()
        };
        let gp = Gp::fit(&x, &y, &gp_config)?;
        let mut candidates = grid.clone();
        candidates.extend(x.iter().cloned());
        let mut rng = stream(config.seed, 0xC000 + step as u64);
        let kg = KnowledgeGradient::new(&gp, c_true, candidates.clone(), config.n_fantasies, &mut rng)?;
        let (best_u, best_kg) = candidates
            .iter()
            .map(|u| (u, kg.estimate(u).value))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("candidate set is nonempty");
        let best_u = best_u.clone();
        evaluate(step, &best_u, Some(best_kg), &mut evaluations)?;
    }

    let best = evaluations
        .iter()
        .max_by(|a, b| a.score.total_cmp(&b.score))
        .expect("at least one evaluation");
    let result = CalibResult {
        theta_star: best.theta.clone(),
        best_score: best.score,
        evaluations: evaluations.clone(),
    };
    assert!(result.evaluations.iter().all(|e| e.score <= result.best_score));
    Ok(result)
}

pub fn write_calibration_jsonl(path: &Path, evaluations: &[Evaluation]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    for e in evaluations {
        serde_json::to_writer(&mut out, e).map_err(|e| Error::parse(path, e.to_string()))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_theta_star(path: &Path, domain: &ThetaDomain, result: &CalibResult) -> Result<()> {
    let named: serde_json::Map<String, serde_json::Value> = domain
        .names
        .iter()
        .zip(&result.theta_star)
        .map(|(n, v)| (n.clone(), serde_json::json!(v)))
        .collect();
    let doc = serde_json::json!({
        "theta": named,
        "score": result.best_score,
        "evaluations": result.evaluations.len(),
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::parse(path, e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

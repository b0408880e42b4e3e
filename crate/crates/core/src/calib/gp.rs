//! Gaussian-process surrogate for a vector-valued black box. Outputs are
//! modelled as independent GPs that share one squared-exponential kernel on
//! the unit box; outputs are standardized before fitting.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;

/// Kernel hyperparameters in standardized output units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    pub lengthscales: Vec<f64>,
    pub signal_var: f64,
    pub noise_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    pub noise_floor: f64,
    pub restarts: usize,
    pub max_iters: u64,
    pub seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            noise_floor: 1e-6,
            restarts: 4,
            max_iters: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Gp {
    x: Vec<Vec<f64>>,
    /// Standardized targets, one column per output.
    ys: DMatrix<f64>,
    /// Per-output mean and scale used for standardization.
    means: Vec<f64>,
    scales: Vec<f64>,
    pub hyper: GpHyper,
    chol: Cholesky<f64, Dyn>,
    /// `K^{-1} Y` for the standardized outputs, one column per output.
    alpha: DMatrix<f64>,
}

/// Posterior at one input, in data units.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

fn kernel(a: &[f64], b: &[f64], h: &GpHyper) -> f64 {
    let d2: f64 = a
        .iter()
        .zip(b)
        .zip(&h.lengthscales)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum();
    h.signal_var * (-0.5 * d2).exp()
}

fn gram(x: &[Vec<f64>], h: &GpHyper) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| {
        kernel(&x[i], &x[j], h) + if i == j { h.noise_var } else { 0.0 }
    })
}

/// Cholesky factor, rejecting numerically singular matrices.
fn factor(k: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let chol = Cholesky::new(k).ok_or_else(|| Error::IllConditioned("Gram matrix is not positive definite".into()))?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
        (lo.min(d.abs()), hi.max(d.abs()))
    });
    if !(lo > 0.0) || (lo / hi).powi(2) < 1e-14 {
        return Err(Error::IllConditioned(format!(
            "Gram matrix condition estimate {:.3e}",
            (hi / lo).powi(2)
        )));
    }
    Ok(chol)
}

fn standardize(y: &[Vec<f64>]) -> (DMatrix<f64>, Vec<f64>, Vec<f64>) {
    let n = y.len();
    let t = y[0].len();
    let mut means = vec![0.0; t];
    let mut scales = vec![1.0; t];
    for c in 0..t {
        let m = y.iter().map(|r| r[c]).sum::<f64>() / n as f64;
        let var = y.iter().map(|r| (r[c] - m).powi(2)).sum::<f64>() / n as f64;
        means[c] = m;
        scales[c] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }
    let ys = DMatrix::from_fn(n, t, |i, c| (y[i][c] - means[c]) / scales[c]);
    (ys, means, scales)
}

/// Negative log marginal likelihood summed over outputs.
fn neg_log_likelihood(x: &[Vec<f64>], ys: &DMatrix<f64>, h: &GpHyper) -> f64 {
    let Ok(chol) = factor(gram(x, h)) else {
        return f64::INFINITY;
    };
    let n = x.len() as f64;
    let t = ys.ncols() as f64;
    let alpha = chol.solve(ys);
    let fit: f64 = ys.component_mul(&alpha).sum();
    let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    0.5 * fit + 0.5 * t * log_det + 0.5 * n * t * (2.0 * std::f64::consts::PI).ln()
}

#[derive(Clone)]
struct Likelihood<'a> {
    x: &'a [Vec<f64>],
    ys: &'a DMatrix<f64>,
    bounds: Vec<(f64, f64)>,
}

impl Likelihood<'_> {
    fn hyper(&self, p: &[f64]) -> GpHyper {
        let c: Vec<f64> = p
            .iter()
            .zip(&self.bounds)
            .map(|(v, (lo, hi))| v.clamp(*lo, *hi).exp())
            .collect();
        let d = c.len() - 2;
        GpHyper {
            lengthscales: c[..d].to_vec(),
            signal_var: c[d],
            noise_var: c[d + 1],
        }
    }
}

impl CostFunction for Likelihood<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        // penalize leaving the box so the simplex comes back
        let excess: f64 = p
            .iter()
            .zip(&self.bounds)
            .map(|(v, (lo, hi))| (lo - v).max(0.0) + (v - hi).max(0.0))
            .sum();
        let nll = neg_log_likelihood(self.x, self.ys, &self.hyper(p));
        Ok(if nll.is_finite() { nll + 1e3 * excess } else { 1e300 })
    }
}

impl Gp {
    /// Fits hyperparameters by maximizing the marginal likelihood from
    /// several starting points. Inputs must lie in the unit box.
    pub fn fit(x: &[Vec<f64>], y: &[Vec<f64>], config: &GpConfig) -> Result<Gp> {
        Self::check_shapes(x, y)?;
        let d = x[0].len();
        let (ys, _, _) = standardize(y);
        let floor = config.noise_floor.max(1e-12);
        let mut bounds = vec![(0.01f64.ln(), 10f64.ln()); d];
        bounds.push((0.05f64.ln(), 20f64.ln()));
        bounds.push((floor.ln(), 2f64.ln()));
        let problem = Likelihood { x, ys: &ys, bounds };

        let mut rng = stream(config.seed, 0x6770);
        let mut starts = vec![{
            let mut s = vec![0.3f64.ln(); d];
            s.push(0.0);
            s.push(0.01f64.max(floor).ln());
            s
        }];
        for _ in 0..config.restarts {
            starts.push(
                problem
                    .bounds
                    .iter()
                    .map(|(lo, hi)| rng.random_range(*lo..=*hi))
                    .collect(),
            );
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for start in starts {
            let mut simplex = vec![start.clone()];
            for k in 0..start.len() {
                let mut v = start.clone();
                v[k] += 0.5;
                simplex.push(v);
            }
            let solver = NelderMead::new(simplex)
                .with_sd_tolerance(1e-7)
                .map_err(|e| Error::invalid(e.to_string()))?;
            let Ok(res) = Executor::new(problem.clone(), solver)
                .configure(|s| s.max_iters(config.max_iters))
                .run()
            else {
                continue;
            };
            let state = res.state();
            if let Some(p) = state.get_best_param().cloned() {
                let c = state.get_best_cost();
                if c.is_finite() && best.as_ref().is_none_or(|(bc, _)| c < *bc) {
                    best = Some((c, p));
                }
            }
        }
        let (_, p) =
            best.ok_or_else(|| Error::IllConditioned("no hyperparameters yield a valid Gram matrix".into()))?;
        Self::with_hyper(x, y, problem.hyper(&p))
    }

    /// Conditions on the data with fixed hyperparameters.
    pub fn with_hyper(x: &[Vec<f64>], y: &[Vec<f64>], hyper: GpHyper) -> Result<Gp> {
        Self::check_shapes(x, y)?;
        if hyper.lengthscales.len() != x[0].len() {
            return Err(Error::LengthMismatch {
                expected: x[0].len(),
                actual: hyper.lengthscales.len(),
            });
        }
        let (ys, means, scales) = standardize(y);
        let chol = factor(gram(x, &hyper))?;
        let alpha = chol.solve(&ys);
        Ok(Gp {
            x: x.to_vec(),
            ys,
            means,
            scales,
            hyper,
            chol,
            alpha,
        })
    }

    fn check_shapes(x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<()> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                actual: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::invalid("a GP needs at least one observation"));
        }
        let (d, t) = (x[0].len(), y[0].len());
        if d == 0 || t == 0 {
            return Err(Error::invalid("inputs and outputs must be nonempty"));
        }
        if let Some(r) = x.iter().find(|r| r.len() != d) {
            return Err(Error::LengthMismatch {
                expected: d,
                actual: r.len(),
            });
        }
        if let Some(r) = y.iter().find(|r| r.len() != t) {
            return Err(Error::LengthMismatch {
                expected: t,
                actual: r.len(),
            });
        }
        Ok(())
    }

    /// Adds one observation, keeping hyperparameters and output scaling.
    pub fn condition_on(&self, x: &[f64], y: &[f64]) -> Result<Gp> {
        if y.len() != self.n_outputs() {
            return Err(Error::LengthMismatch {
                expected: self.n_outputs(),
                actual: y.len(),
            });
        }
        let mut xs = self.x.clone();
        xs.push(x.to_vec());
        let mut ys = self.ys.clone().insert_row(self.x.len(), 0.0);
        for (c, v) in y.iter().enumerate() {
            ys[(self.x.len(), c)] = (v - self.means[c]) / self.scales[c];
        }
        let chol = factor(gram(&xs, &self.hyper))?;
        let alpha = chol.solve(&ys);
        Ok(Gp {
            x: xs,
            ys,
            means: self.means.clone(),
            scales: self.scales.clone(),
            hyper: self.hyper.clone(),
            chol,
            alpha,
        })
    }

    pub fn n_outputs(&self) -> usize {
        self.means.len()
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Observation noise variance of output `t` in data units.
    pub fn noise_var(&self, t: usize) -> f64 {
        self.hyper.noise_var * self.scales[t].powi(2)
    }

    /// Kernel values between `x` and every training input.
    pub fn cross_vec(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.x.len(), self.x.iter().map(|xi| kernel(xi, x, &self.hyper)))
    }

    /// `K^{-1} k(x)`.
    pub fn cross_solved(&self, x: &[f64]) -> DVector<f64> {
        self.chol.solve(&self.cross_vec(x))
    }

    /// Prior kernel value.
    pub fn prior_cov(&self, a: &[f64], b: &[f64]) -> f64 {
        kernel(a, b, &self.hyper)
    }

    /// Latent posterior variance in standardized units (shared by all outputs).
    pub fn latent_var(&self, x: &[f64]) -> f64 {
        let k = self.cross_vec(x);
        let v = self.chol.solve(&k);
        (self.hyper.signal_var - k.dot(&v)).max(0.0)
    }

    /// Latent posterior covariance of two inputs in standardized units.
    pub fn latent_cov(&self, a: &[f64], b: &[f64]) -> f64 {
        let ka = self.cross_vec(a);
        let kb = self.cross_vec(b);
        kernel(a, b, &self.hyper) - ka.dot(&self.chol.solve(&kb))
    }

    /// Posterior mean in standardized units, one entry per output.
    pub fn mean_std(&self, x: &[f64]) -> Vec<f64> {
        let k = self.cross_vec(x);
        (0..self.n_outputs()).map(|t| k.dot(&self.alpha.column(t))).collect()
    }

    /// Posterior of the latent function in data units.
    pub fn predict(&self, x: &[f64]) -> Posterior {
        let v = self.latent_var(x);
        let mean = self
            .mean_std(x)
            .iter()
            .enumerate()
            .map(|(t, m)| self.means[t] + self.scales[t] * m)
            .collect();
        let var = self.scales.iter().map(|s| s * s * v).collect();
        Posterior { mean, var }
    }

    pub fn destandardize(&self, t: usize, m: f64) -> f64 {
        self.means[t] + self.scales[t] * m
    }
}

//! Composite objective and the knowledge-gradient acquisition.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use super::gp::{Gp, Posterior};
use crate::error::{Error, Result};

/// Negative sum of squared daily errors.
pub fn score(g_hat: &[f64], c_true: &[f64]) -> Result<f64> {
    if g_hat.len() != c_true.len() {
        return Err(Error::LengthMismatch {
            expected: c_true.len(),
            actual: g_hat.len(),
        });
    }
    Ok(-g_hat.iter().zip(c_true).map(|(g, c)| (c - g).powi(2)).sum::<f64>())
}

/// Posterior expectation of the score: `-Σ (c - μ)² + σ²`.
pub fn expected_score(post: &Posterior, c_true: &[f64]) -> f64 {
    -post
        .mean
        .iter()
        .zip(&post.var)
        .zip(c_true)
        .map(|((m, v), c)| (c - m).powi(2) + v)
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KgEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Discrete knowledge gradient over a fixed candidate set. Candidate
/// posteriors are computed once; fantasies use common random numbers across
/// evaluated points.
pub struct KnowledgeGradient<'a> {
    gp: &'a Gp,
    c_true: &'a [f64],
    candidates: Vec<Vec<f64>>,
    cross: Vec<DVector<f64>>,
    posts: Vec<Posterior>,
    latent_var: Vec<f64>,
    best: f64,
    /// `n_fantasies x outputs` standard normal draws.
    z: Vec<Vec<f64>>,
}

impl<'a> KnowledgeGradient<'a> {
    pub fn new<R: Rng + ?Sized>(
        gp: &'a Gp,
        c_true: &'a [f64],
        candidates: Vec<Vec<f64>>,
        n_fantasies: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if candidates.is_empty() || n_fantasies == 0 {
            return Err(Error::invalid("knowledge gradient needs candidates and fantasies"));
        }
        if c_true.len() != gp.n_outputs() {
            return Err(Error::LengthMismatch {
                expected: gp.n_outputs(),
                actual: c_true.len(),
            });
        }
        let posts: Vec<Posterior> = candidates.iter().map(|x| gp.predict(x)).collect();
        let latent_var = candidates.iter().map(|x| gp.latent_var(x)).collect();
        let cross = candidates.iter().map(|x| gp.cross_vec(x)).collect();
        let best = posts
            .iter()
            .map(|p| expected_score(p, c_true))
            .fold(f64::NEG_INFINITY, f64::max);
        let z = (0..n_fantasies)
            .map(|_| (0..gp.n_outputs()).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        Ok(KnowledgeGradient {
            gp,
            c_true,
            candidates,
            cross,
            posts,
            latent_var,
            best,
            z,
        })
    }

    pub fn candidates(&self) -> &[Vec<f64>] {
        &self.candidates
    }

    /// Current maximum of the expected score over the candidates.
    pub fn current_best(&self) -> f64 {
        self.best
    }

    /// Expected gain in the best expected score from one more noisy
    /// evaluation at `theta`.
    pub fn estimate(&self, theta: &[f64]) -> KgEstimate {
        let gp = self.gp;
        let t_out = gp.n_outputs();
        let v_theta = gp.latent_var(theta);
        let denom = v_theta + gp.hyper.noise_var;
        let post_theta = gp.predict(theta);
        let w_theta = gp.cross_solved(theta);
        // posterior covariance of each candidate (and theta itself) with theta
        let mut covs: Vec<f64> = self
            .candidates
            .iter()
            .zip(&self.cross)
            .map(|(x, kx)| gp.prior_cov(x, theta) - kx.dot(&w_theta))
            .collect();
        covs.push(v_theta);
        let mut posts: Vec<&Posterior> = self.posts.iter().collect();
        posts.push(&post_theta);
        let mut vars: Vec<f64> = self.latent_var.clone();
        vars.push(v_theta);

        let scales = gp.scales();
        let mut gains = Vec::with_capacity(self.z.len());
        for z in &self.z {
            let mut best = f64::NEG_INFINITY;
            for ((post, &c), &v) in posts.iter().zip(&covs).zip(&vars) {
                let shift = if denom > 0.0 { c / denom.sqrt() } else { 0.0 };
                let var_left = (v - if denom > 0.0 { c * c / denom } else { 0.0 }).max(0.0);
                let mut s = 0.0;
                for t in 0..t_out {
                    let m = post.mean[t] + scales[t] * shift * z[t];
                    s += (self.c_true[t] - m).powi(2) + scales[t] * scales[t] * var_left;
                }
                best = best.max(-s);
            }
            let base = self.best.max(expected_score(&post_theta, self.c_true));
            gains.push(best - base);
        }
        let n = gains.len() as f64;
        let mean = gains.iter().sum::<f64>() / n;
        let var = if gains.len() > 1 {
            gains.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        KgEstimate {
            value: mean,
            std_error: (var / n).sqrt(),
        }
    }
}

/// One-off knowledge-gradient estimate at `theta`.
pub fn knowledge_gradient<R: Rng + ?Sized>(
    theta: &[f64],
    gp: &Gp,
    c_true: &[f64],
    candidates: &[Vec<f64>],
    n_fantasies: usize,
    rng: &mut R,
) -> Result<KgEstimate> {
    Ok(KnowledgeGradient::new(gp, c_true, candidates.to_vec(), n_fantasies, rng)?.estimate(theta))
}

//! Analytic score and optimal denoiser of a uniform isotropic Gaussian
//! mixture centered on training matrices.
//!
//! Matrices are flattened row-major; every center must have the same length.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GmmSpec {
    centers: Vec<Vec<f64>>,
    sigma: f64,
}

impl GmmSpec {
    pub fn new(centers: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        let dim = centers.first().ok_or(Error::EmptyInput("no centers"))?.len();
        if let Some(c) = centers.iter().find(|c| c.len() != dim) {
            return Err(Error::SizeMismatch {
                expected: dim,
                found: c.len(),
            });
        }
        check_sigma(sigma)?;
        Ok(Self { centers, sigma })
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    /// Same centers at another noise level.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Self {
            centers: self.centers.clone(),
            sigma,
        })
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::SizeMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Per-component log-likelihood terms `-‖x − c_i‖² / (2σ²)`.
    fn logits(&self, x: &[f64]) -> Vec<f64> {
        let s2 = self.sigma * self.sigma;
        self.centers
            .iter()
            .map(|c| -c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * s2))
            .collect()
    }

    /// Posterior component probabilities given `x`.
    pub fn responsibilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let logits = self.logits(x);
        let lse = log_sum_exp(&logits);
        Ok(logits.iter().map(|l| (l - lse).exp()).collect())
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `log p_σ(x)` with `p_σ = (1/m) Σ N(c_i, σ²I)`.
pub fn gmm_log_density(x: &[f64], spec: &GmmSpec) -> Result<f64> {
    spec.check_input(x)?;
    let d = spec.dim() as f64;
    let m = spec.centers.len() as f64;
    let norm = -0.5 * d * (2.0 * std::f64::consts::PI * spec.sigma * spec.sigma).ln();
    Ok(log_sum_exp(&spec.logits(x)) - m.ln() + norm)
}

/// `∇_x log p_σ(x) = (Σ_i r_i c_i − x) / σ²`.
pub fn gmm_score(x: &[f64], spec: &GmmSpec) -> Result<Vec<f64>> {
    let mean = gmm_optimal_denoiser(x, spec)?;
    let s2 = spec.sigma * spec.sigma;
    Ok(mean.iter().zip(x).map(|(m, xi)| (m - xi) / s2).collect())
}

/// Posterior mean `E[A | x] = Σ_i r_i c_i`, equal to `x + σ²·score(x)`.
pub fn gmm_optimal_denoiser(x: &[f64], spec: &GmmSpec) -> Result<Vec<f64>> {
    let r = spec.responsibilities(x)?;
    let mut out = vec![0.0; spec.dim()];
    for (c, w) in spec.centers.iter().zip(&r) {
        for (o, ci) in out.iter_mut().zip(c) {
            *o += w * ci;
        }
    }
    Ok(out)
}

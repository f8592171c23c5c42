//! Repeated sampling and fitting from a known truth.
//!
//! Replicate r draws from `ChaCha8Rng::seed_from_u64(seed)` on stream r, so
//! results do not depend on how replicates are scheduled across threads.

use super::{fit_direct, fit_em, FitConfig, FitMethod, FitResult, Psi};
use crate::distribution::NpsModel;
use crate::error::Result;
use crate::power_series::Family;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub family: Family,
    pub truth: Psi,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub method: FitMethod,
    pub fit: FitConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub family: Family,
    pub model: String,
    pub truth: Psi,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub method: FitMethod,
    /// Replicates whose fit returned an estimate.
    pub fitted: usize,
    pub failed: usize,
    pub not_converged: usize,
    pub boundary: usize,
    pub mean_estimate: [f64; 3],
    /// Standard deviation of the estimates across replicates.
    pub empirical_se: [f64; 3],
    /// Average of the per-replicate standard errors.
    pub mean_se: Option<[f64; 3]>,
    /// Average of the per-replicate covariance matrices.
    pub mean_cov: Option<[[f64; 3]; 3]>,
    pub mean_abs_error: [f64; 3],
    pub errors: Vec<String>,
}

/// Draws one replicate's sample.
pub fn replicate_sample(cfg: &SimConfig, rep: u64) -> Result<Vec<f64>> {
    let model = NpsModel::new(cfg.family, cfg.truth.mu, cfg.truth.sigma, cfg.truth.theta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(rep);
    (0..cfg.n).map(|_| model.sample_inverse(&mut rng)).collect()
}

pub fn simulate(cfg: &SimConfig) -> Result<SimSummary> {
    NpsModel::new(cfg.family, cfg.truth.mu, cfg.truth.sigma, cfg.truth.theta)?;
    let results: Vec<Result<FitResult>> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let data = replicate_sample(cfg, r)?;
            match cfg.method {
                FitMethod::Direct => fit_direct(cfg.family, &data, &cfg.fit),
                FitMethod::Em => fit_em(cfg.family, &data, &cfg.fit),
            }
        })
        .collect();

    let mut fits = Vec::new();
    let mut errors = Vec::new();
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(f) => fits.push(f),
            Err(e) => errors.push(format!("replicate {r}: {e}")),
        }
    }
    let k = fits.len() as f64;
    let ests: Vec<[f64; 3]> = fits.iter().map(|f| f.psi.to_array()).collect();
    let truth = cfg.truth.to_array();
    let mean = |f: &dyn Fn(&[f64; 3], usize) -> f64| -> [f64; 3] {
        [0, 1, 2].map(|i| ests.iter().map(|e| f(e, i)).sum::<f64>() / k)
    };
    let mean_estimate = mean(&|e, i| e[i]);
    let mean_abs_error = mean(&|e, i| (e[i] - truth[i]).abs());
    let empirical_se = [0, 1, 2].map(|i| {
        let ss: f64 = ests.iter().map(|e| (e[i] - mean_estimate[i]).powi(2)).sum();
        (ss / (k - 1.0).max(1.0)).sqrt()
    });
    let with_cov: Vec<&FitResult> = fits.iter().filter(|f| f.cov.is_some()).collect();
    let (mean_se, mean_cov) = if with_cov.is_empty() {
        (None, None)
    } else {
        let m = with_cov.len() as f64;
        let se = [0, 1, 2].map(|i| with_cov.iter().map(|f| f.se.unwrap()[i]).sum::<f64>() / m);
        let cov = std::array::from_fn(|i| {
            std::array::from_fn(|j| with_cov.iter().map(|f| f.cov.unwrap()[i][j]).sum::<f64>() / m)
        });
        (Some(se), Some(cov))
    };
    Ok(SimSummary {
        family: cfg.family,
        model: cfg.family.model_label(),
        truth: cfg.truth,
        n: cfg.n,
        replicates: cfg.replicates,
        seed: cfg.seed,
        method: cfg.method,
        fitted: fits.len(),
        failed: errors.len(),
        not_converged: fits.iter().filter(|f| !f.converged).count(),
        boundary: fits.iter().filter(|f| f.boundary).count(),
        mean_estimate,
        empirical_se,
        mean_se,
        mean_cov,
        mean_abs_error,
        errors,
    })
}

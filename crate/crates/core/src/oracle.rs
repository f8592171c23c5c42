//! Brute-force verifiers: numerical integration of the density, Monte Carlo
//! moments, truncated posterior sums over the latent count, finite
//! differences and the two-sample Kolmogorov–Smirnov test.
//!
//! None of these routines call the closed forms they are meant to check.

use crate::distribution::NpsModel;
use crate::error::{domain_err, NpsError, Result};
use crate::power_series::{series_cap, Family};
use crate::quad::{integrate, QuadConfig};
use crate::special::norm_pdf;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMethod {
    Quadrature,
    MonteCarlo,
    TruncatedSum,
    FiniteDifference,
    KsTest,
}

impl fmt::Display for OracleMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleMethod::Quadrature => "quadrature",
            OracleMethod::MonteCarlo => "monte-carlo",
            OracleMethod::TruncatedSum => "truncated-sum",
            OracleMethod::FiniteDifference => "finite-difference",
            OracleMethod::KsTest => "ks-test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity: String,
    pub value: f64,
    pub error_estimate: f64,
    pub method: OracleMethod,
}

impl OracleReport {
    pub fn new(quantity: impl Into<String>, value: f64, error_estimate: f64, method: OracleMethod) -> Self {
        Self {
            quantity: quantity.into(),
            value,
            error_estimate,
            method,
        }
    }
}

/// One line of space-free key=value pairs; spaces in the quantity become commas.
impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "quantity={} value={:.12e} error={:.3e} method={}",
            self.quantity.replace(' ', ","),
            self.value,
            self.error_estimate,
            self.method
        )
    }
}

/// ∫ y^k f(y) dy over μ ± 12σ, plus a bound on the neglected tails.
pub fn integrate_pdf(model: &NpsModel, k: u32) -> Result<OracleReport> {
    let (mu, sigma) = (model.mu(), model.sigma());
    let g = |y: f64| y.powi(k as i32) * model.pdf(y);
    let cfg = QuadConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    let mut value = 0.0;
    let mut err = 0.0;
    let knots = [-12.0, -6.0, -3.0, 0.0, 3.0, 6.0, 12.0];
    for w in knots.windows(2) {
        let r = integrate(g, mu + w[0] * sigma, mu + w[1] * sigma, cfg)?;
        value += r.value;
        err += r.error;
    }
    Ok(OracleReport::new(
        format!("E[Y^{k}] {} mu={mu} sigma={sigma} theta={}", model.family(), model.theta()),
        value,
        err + tail_bound(model, k)?,
        OracleMethod::Quadrature,
    ))
}

/// Bound on ∫_{|z|>12} |y|^k f(y) dy using f(y) ≤ K φ(z)/σ with
/// K = sup_p θ C'(θp)/C(θ), attained at p = 0 or p = 1.
fn tail_bound(model: &NpsModel, k: u32) -> Result<f64> {
    let f = model.family();
    let th = model.theta();
    let c = f.c(th)?;
    let kmax = (th * f.dc_raw(0.0) / c).max(th * f.dc(th)? / c);
    let (mu, s) = (model.mu().abs(), model.sigma());
    let kk = k as i32;
    let zt = integrate(|z: f64| (mu + s * z).powi(kk) * norm_pdf(z), 12.0, 60.0, QuadConfig::abs(1e-30))?;
    Ok(2.0 * kmax * zt.value)
}

/// Monte Carlo estimates of E(Y^k), k = 1..=4, with standard errors. The
/// compound sampler is used on proper θ and the inverse sampler otherwise.
pub fn mc_moments(model: &NpsModel, n_draws: usize, seed: u64) -> Result<Vec<OracleReport>> {
    if n_draws < 1000 {
        return Err(NpsError::Data(format!("{n_draws} draws; at least 1000 required")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let proper = model.is_proper();
    let mut sums = [0.0f64; 8];
    for _ in 0..n_draws {
        let y = if proper {
            model.sample_compound(&mut rng)?
        } else {
            model.sample_inverse(&mut rng)?
        };
        let mut p = 1.0;
        for s in sums.iter_mut() {
            p *= y;
            *s += p;
        }
    }
    let n = n_draws as f64;
    Ok((1..=4)
        .map(|k| {
            let m = sums[k - 1] / n;
            let m2 = sums[2 * k - 1] / n;
            let se = ((m2 - m * m).max(0.0) / (n - 1.0)).sqrt();
            OracleReport::new(format!("E[Y^{k}]"), m, se, OracleMethod::MonteCarlo)
        })
        .collect())
}

/// E(Z | y) and Var(Z | y) by direct summation of the posterior
/// g(z | y) ∝ a_z z θ*^{z−1}, normalised by its own sum.
pub fn posterior_sums(family: Family, theta_star: f64, tol: f64) -> Result<(OracleReport, OracleReport)> {
    if !(theta_star > 0.0 && family.proper_domain().contains(theta_star)) {
        return Err(domain_err("theta_star", theta_star, family.proper_domain()));
    }
    let cap = series_cap() as u64;
    let ln_t = theta_star.ln();
    let start = family.min_index();
    let lw = |z: u64| -> Option<f64> {
        family
            .ln_coef(z)
            .map(|la| la + (z as f64).ln() + (z as f64 - 1.0) * ln_t)
    };
    let mut weights = Vec::new();
    let mut peak = f64::NEG_INFINITY;
    let mut z = start;
    loop {
        let w = match lw(z) {
            Some(w) => w,
            None => break,
        };
        peak = peak.max(w);
        weights.push(w);
        // Past the mode the log-weights decrease; stop once the remaining
        // terms are negligible relative to the peak even with cubic growth.
        if w < peak + tol.ln() - 3.0 * (z as f64).ln() - 10.0 && z > start + 2 {
            break;
        }
        if z - start >= cap {
            return Err(NpsError::TruncationCap { cap: cap as usize, tol });
        }
        z += 1;
    }
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for (i, w) in weights.iter().enumerate() {
        let e = (w - peak).exp();
        let zf = (start + i as u64) as f64;
        s0 += e;
        s1 += e * zf;
        s2 += e * zf * zf;
    }
    let mean = s1 / s0;
    let var = (s2 / s0 - mean * mean).max(0.0);
    let terms = weights.len() as f64;
    let err = f64::EPSILON * terms * (1.0 + mean * mean);
    Ok((
        OracleReport::new(
            format!("E[Z|y] {family} theta*={theta_star}"),
            mean,
            err,
            OracleMethod::TruncatedSum,
        ),
        OracleReport::new(
            format!("Var[Z|y] {family} theta*={theta_star}"),
            var,
            err,
            OracleMethod::TruncatedSum,
        ),
    ))
}

/// Central-difference gradient with per-coordinate steps.
pub fn fd_grad<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: &[f64]) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            xp[i] = x[i] + h[i];
            let fp = f(&xp);
            xp[i] = x[i] - h[i];
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h[i])
        })
        .collect()
}

/// Central-difference Hessian with per-coordinate steps.
pub fn fd_hess<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: &[f64]) -> Vec<Vec<f64>> {
    let d = x.len();
    let mut out = vec![vec![0.0; d]; d];
    let f0 = f(x);
    let mut xp = x.to_vec();
    for i in 0..d {
        xp[i] = x[i] + h[i];
        let fp = f(&xp);
        xp[i] = x[i] - h[i];
        let fm = f(&xp);
        xp[i] = x[i];
        out[i][i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let mut at = |si: f64, sj: f64| {
                xp[i] = x[i] + si * h[i];
                xp[j] = x[j] + sj * h[j];
                let v = f(&xp);
                xp[i] = x[i];
                xp[j] = x[j];
                v
            };
            let v = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0))
                / (4.0 * h[i] * h[j]);
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(NpsError::Data("empty sample in KS test".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    Ok((d, kolmogorov_sf(lambda)))
}

/// P(K > λ) for the Kolmogorov distribution.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let t = 2.0 * (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { t } else { -t };
        if t < 1e-17 {
            break;
        }
    }
    s.clamp(0.0, 1.0)
}

//! Log-likelihood, score and observed information.
//!
//! Per observation, with z = (y − μ)/σ, x = θΦ(z), λ = φ(z)/Φ(z) and the
//! scaled ratios s₁ = xC''(x)/C'(x), s₂ = x²C'''(x)/C'(x):
//!
//! ∂ℓ/∂μ = (z − λs₁)/σ,  ∂ℓ/∂σ = (z² − 1 − zλs₁)/σ,  ∂ℓ/∂θ = (1 + s₁)/θ − C'(θ)/C(θ).
//!
//! Working with λ, s₁ and s₂ keeps every term finite deep in the lower tail.

use super::Psi;
use crate::distribution::NpsModel;
use crate::error::{domain_err, Result};
use crate::oracle::fd_hess;
use crate::power_series::Family;
use crate::special::{mills_lower, norm_cdf, norm_pdf};
use serde::{Deserialize, Serialize};

pub(crate) fn model(family: Family, psi: Psi) -> Result<NpsModel> {
    NpsModel::new(family, psi.mu, psi.sigma, psi.theta)
}

/// Σ log f(y_i); −∞ when Ψ is outside the parameter space.
pub fn loglik(family: Family, psi: Psi, data: &[f64]) -> f64 {
    match model(family, psi) {
        Ok(m) => data.iter().map(|&y| m.ln_pdf(y)).sum(),
        Err(_) => f64::NEG_INFINITY,
    }
}

pub(crate) struct Obs {
    pub z: f64,
    pub lam: f64,
    pub s1: f64,
    pub s2: f64,
}

pub(crate) fn obs(family: Family, psi: Psi, y: f64) -> Obs {
    let z = (y - psi.mu) / psi.sigma;
    let x = psi.theta * norm_cdf(z);
    let (s1, s2) = family.scaled_ratios(x);
    Obs {
        z,
        lam: mills_lower(z),
        s1,
        s2,
    }
}

pub fn score(family: Family, psi: Psi, data: &[f64]) -> Result<[f64; 3]> {
    model(family, psi)?;
    let (dlc, _) = family.log_derivs(psi.theta);
    let s = psi.sigma;
    let mut g = [0.0; 3];
    for &y in data {
        let o = obs(family, psi, y);
        g[0] += (o.z - o.lam * o.s1) / s;
        g[1] += (o.z * o.z - 1.0 - o.z * o.lam * o.s1) / s;
        g[2] += (1.0 + o.s1) / psi.theta - dlc;
    }
    Ok(g)
}

/// Second derivatives of the log-likelihood.
pub fn hessian(family: Family, psi: Psi, data: &[f64]) -> Result<[[f64; 3]; 3]> {
    model(family, psi)?;
    let (dlc, d2lc) = family.log_derivs(psi.theta);
    let (s, th) = (psi.sigma, psi.theta);
    let s2 = s * s;
    let mut h = [[0.0; 3]; 3];
    for &y in data {
        let Obs { z, lam, s1, s2: t2 } = obs(family, psi, y);
        let a = lam * s1;
        let b = lam * lam * (t2 - s1 * s1);
        let d = s1 + t2 - s1 * s1;
        h[0][0] += -(1.0 + z * a - b) / s2;
        h[0][1] += (-2.0 * z + a - z * z * a + z * b) / s2;
        h[0][2] += -lam * d / (s * th);
        h[1][1] += (1.0 - 3.0 * z * z + 2.0 * z * a - z.powi(3) * a + z * z * b) / s2;
        h[1][2] += -z * lam * d / (s * th);
        h[2][2] += (t2 - s1 * s1 - 1.0) / (th * th) - d2lc + dlc * dlc;
    }
    symmetrize(&mut h);
    Ok(h)
}

fn symmetrize(h: &mut [[f64; 3]; 3]) {
    h[1][0] = h[0][1];
    h[2][0] = h[0][2];
    h[2][1] = h[1][2];
}

fn negate(h: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    h.map(|r| r.map(|v| -v))
}

/// Observed information −∂²ℓ/∂Ψ∂Ψᵀ.
pub fn observed_info(family: Family, psi: Psi, data: &[f64]) -> Result<[[f64; 3]; 3]> {
    hessian(family, psi, data).map(negate)
}

/// The observed information in the commonly printed form, written with
/// C', C'', C''' at θΦ(z). It differs from [`observed_info`] in the (σ, σ)
/// entry, where the bracketed C''/C''' term carries the opposite sign, and in
/// the (σ, θ) entry, whose first sum is scaled by 1/σ² instead of 1/σ.
pub fn observed_info_as_printed(family: Family, psi: Psi, data: &[f64]) -> Result<[[f64; 3]; 3]> {
    model(family, psi)?;
    let (dlc, d2lc) = family.log_derivs(psi.theta);
    let (s, th) = (psi.sigma, psi.theta);
    let s2 = s * s;
    let mut h = [[0.0; 3]; 3];
    for &y in data {
        let z = (y - psi.mu) / s;
        let (phi, cdf) = (norm_pdf(z), norm_cdf(z));
        let x = th * cdf;
        let (t1, t2) = family.scaled_ratios(x);
        // C''/C' and C'''/C' at x
        let (r1, r2) = (t1 / x, t2 / (x * x));
        let ph2 = phi * phi;
        h[0][0] += -1.0 / s2 - th / s2 * (z * phi * r1 - th * r2 * ph2 + th * r1 * r1 * ph2);
        h[0][1] += -2.0 * z / s2 + th / s2 * phi * r1
            - th / s2 * (z * z * phi * r1 - th * z * ph2 * r2 + th * z * ph2 * r1 * r1);
        h[0][2] += -phi * r1 / s - th / s * (cdf * phi * r2 - cdf * phi * r1 * r1);
        h[1][1] += 1.0 / s2 - 3.0 * z * z / s2
            + th / s2 * z * phi * r1
            + th / s2 * ((z.powi(3) * phi - z * phi) * r1 - th * z * z * ph2 * r2)
            - th * th / s2 * z * z * ph2 * r1 * r1;
        h[1][2] += -z * phi * r1 / s2 - th / s * (z * phi * cdf * r2 - z * phi * cdf * r1 * r1);
        h[2][2] += -1.0 / (th * th) + cdf * cdf * r2 - cdf * cdf * r1 * r1 - d2lc + dlc * dlc;
    }
    symmetrize(&mut h);
    Ok(negate(h))
}

/// Finite-difference steps for (μ, σ, θ) that stay inside the θ domain.
pub(crate) fn fd_steps(family: Family, psi: Psi) -> [f64; 3] {
    let d = family.extended_domain();
    let mut room = psi.theta.abs().max(1e-2);
    if d.lower.is_finite() {
        room = room.min(psi.theta - d.lower);
    }
    if d.upper.is_finite() {
        room = room.min(d.upper - psi.theta);
    }
    if d.excludes_zero {
        room = room.min(psi.theta.abs());
    }
    [1e-3 * psi.sigma, 1e-3 * psi.sigma, 1e-3 * room]
}

/// Observed information by central differences of the log-likelihood.
pub fn fd_observed_info(family: Family, psi: Psi, data: &[f64]) -> Result<[[f64; 3]; 3]> {
    model(family, psi)?;
    let h = fd_steps(family, psi);
    let f = |x: &[f64]| loglik(family, Psi::new(x[0], x[1], x[2]), data);
    let m = fd_hess(f, &psi.to_array(), &h);
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| -m[i][j])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoDiscrepancy {
    pub entry: String,
    pub as_printed: f64,
    pub analytic: f64,
    pub finite_difference: f64,
    pub rel_gap_printed: f64,
    pub rel_gap_analytic: f64,
}

/// Analytic, printed-form and finite-difference observed information side
/// by side, with the entries on which they disagree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoReport {
    pub analytic: [[f64; 3]; 3],
    pub as_printed: [[f64; 3]; 3],
    pub finite_difference: [[f64; 3]; 3],
    pub max_rel_gap_analytic: f64,
    pub max_rel_gap_printed: f64,
    pub discrepancies: Vec<InfoDiscrepancy>,
}

/// Relative-gap threshold above which an entry is reported.
pub const INFO_GAP_TOL: f64 = 1e-3;

const NAMES: [&str; 3] = ["mu", "sigma", "theta"];

pub fn info_report(family: Family, psi: Psi, data: &[f64]) -> Result<InfoReport> {
    if data.is_empty() {
        return Err(domain_err("n", 0.0, "n ≥ 1"));
    }
    let analytic = observed_info(family, psi, data)?;
    let as_printed = observed_info_as_printed(family, psi, data)?;
    let fd = fd_observed_info(family, psi, data)?;
    let floor = 1e-6 * data.len() as f64;
    let gap = |a: f64, b: f64| {
        if a.abs().max(b.abs()) <= floor {
            0.0
        } else {
            (a - b).abs() / b.abs().max(floor)
        }
    };
    let mut out = InfoReport {
        analytic,
        as_printed,
        finite_difference: fd,
        max_rel_gap_analytic: 0.0,
        max_rel_gap_printed: 0.0,
        discrepancies: Vec::new(),
    };
    for i in 0..3 {
        for j in i..3 {
            let ga = gap(analytic[i][j], fd[i][j]);
            let gp = gap(as_printed[i][j], fd[i][j]);
            out.max_rel_gap_analytic = out.max_rel_gap_analytic.max(ga);
            out.max_rel_gap_printed = out.max_rel_gap_printed.max(gp);
            if ga > INFO_GAP_TOL || gp > INFO_GAP_TOL {
                out.discrepancies.push(InfoDiscrepancy {
                    entry: format!("I_{}{}", NAMES[i], NAMES[j]),
                    as_printed: as_printed[i][j],
                    analytic: analytic[i][j],
                    finite_difference: fd[i][j],
                    rel_gap_printed: gp,
                    rel_gap_analytic: ga,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::fd_grad;
    use rand::SeedableRng;

    fn sample(f: Family, psi: Psi, n: usize, seed: u64) -> Vec<f64> {
        let m = model(f, psi).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| m.sample_inverse(&mut rng).unwrap()).collect()
    }

    #[test]
    fn single_datum_matches_log_pdf() {
        let psi = Psi::new(1.0, 2.0, 0.6);
        let m = model(Family::Geometric, psi).unwrap();
        assert_eq!(loglik(Family::Geometric, psi, &[1.0]), m.pdf(1.0).ln());
        assert_eq!(loglik(Family::Geometric, Psi::new(0.0, 1.0, 1.5), &[0.0]), f64::NEG_INFINITY);
    }

    #[test]
    fn score_matches_finite_differences() {
        for (f, psi) in [
            (Family::Geometric, Psi::new(0.3, 1.2, 0.6)),
            (Family::Poisson, Psi::new(-0.2, 0.8, 2.5)),
            (Family::Logarithmic, Psi::new(1.0, 2.0, -1.5)),
            (Family::Binomial { m: 4 }, Psi::new(0.0, 1.0, 0.7)),
            (Family::NegativeBinomial { k: 3 }, Psi::new(0.5, 1.5, 0.4)),
        ] {
            let data = sample(f, psi, 200, 7);
            let g = score(f, psi, &data).unwrap();
            let h = fd_steps(f, psi).map(|v| v * 1e-2);
            let fd = fd_grad(|x| loglik(f, Psi::new(x[0], x[1], x[2]), &data), &psi.to_array(), &h);
            for i in 0..3 {
                assert!((g[i] - fd[i]).abs() <= 1e-5 * fd[i].abs().max(1.0), "{f} {i}: {} {}", g[i], fd[i]);
            }
        }
    }

    #[test]
    fn analytic_info_matches_fd_and_printed_form_does_not() {
        let psi = Psi::new(0.0, 1.0, 0.5);
        let data = sample(Family::Geometric, psi, 500, 11);
        let r = info_report(Family::Geometric, psi, &data).unwrap();
        assert!(r.max_rel_gap_analytic < 1e-3, "{r:?}");
        assert!(r.discrepancies.iter().any(|d| d.entry == "I_sigmasigma"));
        assert!(r.discrepancies.iter().all(|d| d.rel_gap_analytic < 1e-3));
        let a = observed_info(Family::Geometric, psi, &data).unwrap();
        let p = observed_info_as_printed(Family::Geometric, psi, &data).unwrap();
        for (i, j) in [(0, 0), (0, 1), (0, 2), (2, 2)] {
            assert!((a[i][j] - p[i][j]).abs() < 1e-8 * a[i][j].abs().max(1.0));
        }
    }

    #[test]
    fn normal_limit_information() {
        let psi = Psi::new(0.0, 2.0, 1e-7);
        let data = sample(Family::Geometric, Psi::new(0.0, 2.0, 0.5), 100, 3);
        let i = observed_info(Family::Geometric, psi, &data).unwrap();
        assert!((i[0][0] - 100.0 / 4.0).abs() < 1e-4);
    }
}

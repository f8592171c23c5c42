//! Moments of NPS laws.
//!
//! Three routes are provided:
//!
//! * the quantile integral E(Y^k) = ∫₀¹ Q(u)^k du, which works on the whole
//!   extended θ domain and is the primary method;
//! * the order-statistic series, which writes E(Y), E(Y²) and the MGF as
//!   pmf-weighted sums of equicorrelated normal orthant probabilities and
//!   needs a proper θ;
//! * first-order closed-form approximations obtained from
//!   erf⁻¹(x) ≈ x√π/2, available for the geometric, Poisson and binomial
//!   families.

use crate::distribution::NpsModel;
use crate::error::{domain_err, NpsError, Result};
use crate::power_series::Family;
use crate::quad::{integrate, QuadConfig};
use crate::special::{ln_norm_cdf, norm_pdf, norm_ppf, INV_2_SQRT_PI, INV_SQRT_2PI};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Endpoint truncation of the quantile integral.
pub const QUANTILE_EPS: f64 = 1e-12;

const MOMENT_TOL: f64 = 1e-10;
const ORTHANT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMethod {
    QuantileIntegral,
    Series,
    Approximation,
    MonteCarlo,
}

/// Raw moments m_k = E(Y^k) with the derived central summaries.
/// Skewness is μ₃/σ³ and kurtosis μ₄/σ⁴ (3 for the normal).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub m1: f64,
    pub m2: f64,
    pub m3: Option<f64>,
    pub m4: Option<f64>,
    pub variance: f64,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
    pub method: MomentMethod,
    pub est_error: f64,
}

impl MomentSummary {
    /// Builds a summary from the mean and central moments μ₂, μ₃, μ₄.
    pub fn from_central(
        mean: f64,
        c2: f64,
        c3: f64,
        c4: f64,
        method: MomentMethod,
        est_error: f64,
    ) -> Self {
        let m = mean;
        let m2 = c2 + m * m;
        let m3 = c3 + 3.0 * m * c2 + m.powi(3);
        let m4 = c4 + 4.0 * m * c3 + 6.0 * m * m * c2 + m.powi(4);
        Self {
            m1: m,
            m2,
            m3: Some(m3),
            m4: Some(m4),
            variance: c2,
            skewness: Some(c3 / c2.powf(1.5)),
            kurtosis: Some(c4 / (c2 * c2)),
            method,
            est_error,
        }
    }

    /// Builds a summary from the four raw moments.
    pub fn from_raw(raw: [f64; 4], method: MomentMethod, est_error: f64) -> Self {
        let [m1, m2, m3, m4] = raw;
        let c2 = m2 - m1 * m1;
        let c3 = m3 - 3.0 * m1 * m2 + 2.0 * m1.powi(3);
        let c4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
        Self::from_central(m1, c2, c3, c4, method, est_error)
    }

    /// Summary carrying only the first two moments.
    pub fn first_two(m1: f64, m2: f64, method: MomentMethod, est_error: f64) -> Self {
        Self {
            m1,
            m2,
            m3: None,
            m4: None,
            variance: m2 - m1 * m1,
            skewness: None,
            kurtosis: None,
            method,
            est_error,
        }
    }

    pub fn mean(&self) -> f64 {
        self.m1
    }
}

/// Arguments of Φ_dim(t·1; I + c·11ᵀ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthantSpec {
    pub dim: u64,
    pub offdiag: f64,
    pub shift: f64,
}

impl OrthantSpec {
    pub fn new(dim: u64, offdiag: f64, shift: f64) -> Self {
        Self {
            dim,
            offdiag,
            shift,
        }
    }
}

/// P(X_i ≤ t for all i) with X ~ N(0, I + c·11ᵀ).
///
/// Writing X_i = √c·W + ε_i reduces this to ∫ φ(w) Φ(t − √c·w)^dim dw.
/// Only c ≥ 0 is handled; every orthant used by the series moments has
/// c ∈ {1/3, 1/2, 1}.
pub fn orthant_prob(spec: OrthantSpec) -> Result<f64> {
    let OrthantSpec { dim, offdiag: c, shift: t } = spec;
    if !c.is_finite() || 1.0 + c * dim as f64 <= 0.0 {
        return Err(domain_err("offdiag", c, "1 + c·dim > 0"));
    }
    if c < 0.0 {
        return Err(NpsError::Unsupported(
            "orthant probability with negative equicorrelation".into(),
        ));
    }
    if dim == 0 {
        return Ok(1.0);
    }
    let d = dim as f64;
    if c == 0.0 {
        return Ok((d * ln_norm_cdf(t)).exp());
    }
    let rc = c.sqrt();
    let f = |w: f64| (d * ln_norm_cdf(t - rc * w) - 0.5 * w * w).exp() * INV_SQRT_2PI;
    let cfg = QuadConfig {
        abs_tol: ORTHANT_TOL,
        rel_tol: 1e-14,
        max_intervals: 4000,
    };
    let mut total = 0.0;
    for (a, b) in [(-12.0, -4.0), (-4.0, 0.0), (0.0, 4.0), (4.0, 12.0)] {
        total += integrate(f, a, b, cfg)?.value;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Raw moments E(Y^k), k = 1..=kmax, by the quantile integral, together
/// with an error estimate.
///
/// The mean is integrated first and higher moments are integrated about it,
/// so that the central moments do not suffer cancellation. The pieces of the
/// integral on (0, ε) and (1 − ε, 1) are recovered through the density.
pub fn raw_moments_quantile_integral(model: &NpsModel, kmax: u32) -> Result<(Vec<f64>, f64)> {
    let q = |u: f64| model.mu() + model.sigma() * model.standard_quantile_closed(u);
    let (mean, mut err) = quantile_integral_power(model, &q, 0.0, 1)?;
    let mut central = vec![1.0, 0.0];
    for k in 2..=kmax {
        let (ck, e) = quantile_integral_power(model, &q, mean, k)?;
        central.push(ck);
        err += e;
    }
    let mut raw = Vec::with_capacity(kmax as usize);
    for k in 1..=kmax as usize {
        // E(Y^k) = Σ_j binom(k, j) mean^{k−j} μ_j
        let mut s = 0.0;
        let mut binom = 1.0;
        for (j, cj) in central.iter().enumerate().take(k + 1) {
            s += binom * mean.powi((k - j) as i32) * cj;
            binom *= (k - j) as f64 / (j + 1) as f64;
        }
        raw.push(s);
    }
    Ok((raw, err))
}

fn quantile_integral_power<Q: Fn(f64) -> f64>(
    model: &NpsModel,
    q: &Q,
    center: f64,
    k: u32,
) -> Result<(f64, f64)> {
    let cfg = QuadConfig {
        abs_tol: MOMENT_TOL,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    let g = |u: f64| (q(u) - center).powi(k as i32);
    let cuts = [QUANTILE_EPS, 1e-8, 1e-4, 0.02, 0.5, 0.98, 1.0 - 1e-4, 1.0 - 1e-8, 1.0 - QUANTILE_EPS];
    let mut value = 0.0;
    let mut err = 0.0;
    for w in cuts.windows(2) {
        let r = integrate(g, w[0], w[1], cfg)?;
        value += r.value;
        err += r.error;
    }
    let h = |y: f64| (y - center).powi(k as i32) * model.pdf(y);
    let span = 20.0 * model.sigma();
    let lo = q(QUANTILE_EPS);
    let hi = q(1.0 - QUANTILE_EPS);
    let tail_cfg = QuadConfig::abs(1e-16);
    for (a, b) in [(lo - span, lo), (hi, hi + span)] {
        let r = integrate(h, a, b, tail_cfg)?;
        value += r.value;
        err += r.error;
    }
    Ok((value, err))
}

/// Mean, variance, skewness and kurtosis by the quantile integral.
pub fn moments_quantile_integral(model: &NpsModel) -> Result<MomentSummary> {
    let q = |u: f64| model.mu() + model.sigma() * model.standard_quantile_closed(u);
    let (mean, e1) = quantile_integral_power(model, &q, 0.0, 1)?;
    let (c2, e2) = quantile_integral_power(model, &q, mean, 2)?;
    let (c3, e3) = quantile_integral_power(model, &q, mean, 3)?;
    let (c4, e4) = quantile_integral_power(model, &q, mean, 4)?;
    Ok(MomentSummary::from_central(
        mean,
        c2,
        c3,
        c4,
        MomentMethod::QuantileIntegral,
        e1 + e2 + e3 + e4,
    ))
}

/// Moments of the θ → 0⁺ limit Φ((y − μ)/σ)^c, i.e. the maximum of c
/// normals (the plain normal when c = 1).
pub fn moments_theta_zero_limit(family: Family, mu: f64, sigma: f64) -> Result<MomentSummary> {
    if !(sigma > 0.0) {
        return Err(domain_err("sigma", sigma, "(0, inf)"));
    }
    let c = family.min_index();
    if c == 1 {
        return Ok(MomentSummary::from_central(
            mu,
            sigma * sigma,
            0.0,
            3.0 * sigma.powi(4),
            MomentMethod::QuantileIntegral,
            0.0,
        ));
    }
    let inv_c = 1.0 / c as f64;
    let q = |u: f64| mu + sigma * norm_ppf(u.powf(inv_c));
    let cfg = QuadConfig {
        abs_tol: MOMENT_TOL,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    let cuts = [QUANTILE_EPS, 1e-6, 0.5, 1.0 - 1e-6, 1.0 - QUANTILE_EPS];
    let integral = |k: i32, center: f64| -> Result<(f64, f64)> {
        let mut v = 0.0;
        let mut e = 0.0;
        for w in cuts.windows(2) {
            let r = integrate(|u| (q(u) - center).powi(k), w[0], w[1], cfg)?;
            v += r.value;
            e += r.error;
        }
        Ok((v, e))
    };
    let (mean, e1) = integral(1, 0.0)?;
    let (c2, e2) = integral(2, mean)?;
    let (c3, e3) = integral(3, mean)?;
    let (c4, e4) = integral(4, mean)?;
    Ok(MomentSummary::from_central(
        mean,
        c2,
        c3,
        c4,
        MomentMethod::QuantileIntegral,
        e1 + e2 + e3 + e4,
    ))
}

fn require_proper(model: &NpsModel, what: &str) -> Result<()> {
    if model.is_proper() {
        Ok(())
    } else {
        Err(NpsError::Domain {
            what: "theta",
            value: model.theta(),
            domain: format!("{} (required by {what})", model.family().proper_domain()),
        })
    }
}

/// E(Y) from (1/(2√π)) Σ pmf(n)·n(n−1)·Φ_{n−2}(0; I + ½11ᵀ), rescaled to
/// (μ, σ).
pub fn mean_series(model: &NpsModel, tol: f64) -> Result<f64> {
    require_proper(model, "the series mean")?;
    let mut err = None;
    let (s, _) = model
        .family()
        .sum_series(model.theta(), 2, INV_2_SQRT_PI, tol, |n, pmf| {
            if n < 2 {
                return 0.0;
            }
            match orthant_prob(OrthantSpec::new(n - 2, 0.5, 0.0)) {
                Ok(p) => INV_2_SQRT_PI * pmf * (n * (n - 1)) as f64 * p,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(model.mu() + model.sigma() * s)
}

/// E(Y²) from 1 + (1/(4√3π)) Σ pmf(n)·n(n−1)(n−2)·Φ_{n−3}(0; I + ⅓11ᵀ),
/// rescaled to (μ, σ).
pub fn second_moment_series(model: &NpsModel, tol: f64) -> Result<f64> {
    require_proper(model, "the series second moment")?;
    let k = 1.0 / (4.0 * 3f64.sqrt() * PI);
    let mut err = None;
    let (s, _) = model
        .family()
        .sum_series(model.theta(), 3, k, tol, |n, pmf| {
            if n < 3 {
                return 0.0;
            }
            match orthant_prob(OrthantSpec::new(n - 3, 1.0 / 3.0, 0.0)) {
                Ok(p) => k * pmf * (n * (n - 1) * (n - 2)) as f64 * p,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        })?;
    if let Some(e) = err {
        return Err(e);
    }
    let m1 = (mean_series(model, tol)? - model.mu()) / model.sigma();
    let (mu, sg) = (model.mu(), model.sigma());
    Ok(mu * mu + 2.0 * mu * sg * m1 + sg * sg * (1.0 + s))
}

/// M_Y(t) = e^{μt} e^{(σt)²/2} Σ pmf(n)·n·Φ_{n−1}(σt·1; I + 11ᵀ).
pub fn mgf_series(model: &NpsModel, t: f64, tol: f64) -> Result<f64> {
    require_proper(model, "the series MGF")?;
    let st = model.sigma() * t;
    let mut err = None;
    let (s, _) = model.family().sum_series(model.theta(), 1, 1.0, tol, |n, pmf| {
        match orthant_prob(OrthantSpec::new(n - 1, 1.0, st)) {
            Ok(p) => pmf * n as f64 * p,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok((model.mu() * t + 0.5 * st * st).exp() * s)
}

/// Mean from the series and second moment from the corrected series.
pub fn moments_series(model: &NpsModel, tol: f64) -> Result<MomentSummary> {
    let m1 = mean_series(model, tol)?;
    let m2 = second_moment_series(model, tol)?;
    Ok(MomentSummary::first_two(m1, m2, MomentMethod::Series, tol))
}

/// E(T) and E(T²) for T on (0, 1) with cdf C(θt)/C(θ), in closed form.
fn t_moments(family: Family, theta: f64) -> Result<(f64, f64)> {
    // ∫₀^θ C(x) dx and ∫₀^θ x C(x) dx
    let (i0, i1) = match family {
        Family::Geometric => {
            let l = (-theta).ln_1p();
            (-theta - l, -0.5 * theta * theta - theta - l)
        }
        Family::Poisson => {
            let e = theta.exp();
            (theta.exp_m1() - theta, (theta - 1.0) * e + 1.0 - 0.5 * theta * theta)
        }
        Family::Binomial { m } => {
            let m = m as f64;
            let lp = theta.ln_1p();
            let a1 = ((m + 1.0) * lp).exp_m1() / (m + 1.0);
            let a2 = ((m + 2.0) * lp).exp_m1() / (m + 2.0);
            (a1 - theta, a2 - a1 - 0.5 * theta * theta)
        }
        _ => {
            return Err(NpsError::Unsupported(format!(
                "the closed-form moment approximation ({})",
                family.name()
            )))
        }
    };
    let c = family.c_raw(theta);
    Ok((1.0 - i0 / (theta * c), 1.0 - 2.0 * i1 / (theta * theta * c)))
}

/// First-order approximations of E(Y) and E(Y²).
///
/// Replacing Φ⁻¹(t) = √2·erf⁻¹(2t − 1) by its linearisation √(π/2)(2t − 1)
/// in the quantile integral gives Y ≈ μ + σ√(π/2)(2T − 1), where T has cdf
/// C(θt)/C(θ) on (0, 1). `est_error` is the larger gap to the
/// quantile-integral moments.
pub fn approx_moments(model: &NpsModel) -> Result<MomentSummary> {
    let (et, et2) = t_moments(model.family(), model.theta())?;
    let a = (PI / 2.0).sqrt() * model.sigma();
    let mu = model.mu();
    let d1 = 2.0 * et - 1.0;
    let d2 = 4.0 * et2 - 4.0 * et + 1.0;
    let m1 = mu + a * d1;
    let m2 = mu * mu + 2.0 * mu * a * d1 + a * a * d2;
    let exact = moments_quantile_integral(model)?;
    let gap = (m1 - exact.m1).abs().max((m2 - exact.m2).abs());
    Ok(MomentSummary::first_two(m1, m2, MomentMethod::Approximation, gap))
}

/// E(Y) of the standard-normal maximum of n draws; used in tests and as a
/// sanity anchor for the orthant integrals.
pub fn expected_max_of_normals(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(domain_err("n", 0.0, "n ≥ 1"));
    }
    let d = n as f64;
    let f = |z: f64| z * d * (ln_norm_cdf(z) * (d - 1.0)).exp() * norm_pdf(z);
    Ok(integrate(f, -12.0, 12.0, QuadConfig::abs(1e-13))?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model(f: Family, theta: f64) -> NpsModel {
        NpsModel::standard(f, theta).unwrap()
    }

    #[test]
    fn orthant_trivial_cases() {
        assert_eq!(orthant_prob(OrthantSpec::new(0, 0.5, 0.0)).unwrap(), 1.0);
        assert!((orthant_prob(OrthantSpec::new(1, 0.5, 0.0)).unwrap() - 0.5).abs() < 1e-12);
        // P(max of two exchangeable normals with correlation ρ ≤ 0) = 1/4 + asin(ρ)/(2π)
        let rho: f64 = 0.5 / 1.5;
        let expected = 0.25 + rho.asin() / (2.0 * PI);
        assert!((orthant_prob(OrthantSpec::new(2, 0.5, 0.0)).unwrap() - expected).abs() < 1e-12);
        assert!(orthant_prob(OrthantSpec::new(3, -0.5, 0.0)).is_err());
        assert!(orthant_prob(OrthantSpec::new(3, -0.1, 0.0)).is_err());
    }

    #[test]
    fn orthant_decreases_in_dim() {
        let ps: Vec<f64> = (1..30)
            .map(|d| orthant_prob(OrthantSpec::new(d, 0.5, 0.0)).unwrap())
            .collect();
        assert!(ps.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
    }

    #[test]
    fn orthant_dim3_closed_form() {
        // For three exchangeable normals with correlation ρ: 1/8 + 3 asin(ρ)/(4π)
        let rho: f64 = 1.0 / 3.0;
        let expected = 0.125 + 3.0 * rho.asin() / (4.0 * PI);
        assert!((orthant_prob(OrthantSpec::new(3, 0.5, 0.0)).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn standard_normal_maxima() {
        assert!((expected_max_of_normals(2).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-12);
        assert!((expected_max_of_normals(3).unwrap() - 1.5 / PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn table_anchor_geometric_half() {
        let s = moments_quantile_integral(&model(Family::Geometric, 0.5)).unwrap();
        assert!((s.m1 - 0.3894).abs() < 5e-4);
        assert!((s.variance - 0.9799).abs() < 5e-4);
        assert!((s.skewness.unwrap() + 0.1942).abs() < 5e-4);
        assert!((s.kurtosis.unwrap() - 3.0846).abs() < 5e-4);
    }

    #[test]
    fn table_anchor_poisson_one() {
        let s = moments_quantile_integral(&model(Family::Poisson, 1.0)).unwrap();
        assert!((s.m1 - 0.2781).abs() < 5e-4);
        assert!((s.variance - 0.9677).abs() < 5e-4);
        assert!((s.skewness.unwrap() + 0.1349).abs() < 5e-4);
        assert!((s.kurtosis.unwrap() - 3.0792).abs() < 5e-4);
    }

    #[test]
    fn theta_zero_limit_is_normal() {
        let s = moments_theta_zero_limit(Family::Geometric, 0.0, 1.0).unwrap();
        assert_eq!((s.m1, s.variance, s.skewness, s.kurtosis), (0.0, 1.0, Some(0.0), Some(3.0)));
        let s = moments_theta_zero_limit(Family::NegativeBinomial { k: 2 }, 0.0, 1.0).unwrap();
        assert!((s.m1 - 1.0 / PI.sqrt()).abs() < 1e-10);
        assert!((s.variance - (1.0 - 1.0 / PI)).abs() < 1e-10);
    }

    #[test]
    fn series_mean_and_mgf() {
        let m = model(Family::Geometric, 0.5);
        assert!((mean_series(&m, 1e-12).unwrap() - 0.3894).abs() < 1e-3);
        assert!((mgf_series(&m, 0.0, 1e-12).unwrap() - 1.0).abs() < 1e-10);
        let qi = moments_quantile_integral(&m).unwrap();
        // M'(0) = E(Y)
        let h = 1e-4;
        let d = (mgf_series(&m, h, 1e-13).unwrap() - mgf_series(&m, -h, 1e-13).unwrap()) / (2.0 * h);
        assert!((d - qi.m1).abs() < 1e-6);
        assert!(mean_series(&model(Family::Geometric, -0.5), 1e-10).is_err());
    }

    #[test]
    fn series_second_moment_matches_integral() {
        for (f, th) in [
            (Family::Geometric, 0.5),
            (Family::Poisson, 3.0),
            (Family::Binomial { m: 5 }, 1.0),
            (Family::NegativeBinomial { k: 2 }, 0.4),
        ] {
            let m = NpsModel::new(f, 1.0, 2.0, th).unwrap();
            let a = second_moment_series(&m, 1e-12).unwrap();
            let b = moments_quantile_integral(&m).unwrap().m2;
            assert!((a - b).abs() < 1e-6, "{f} {th}: {a} vs {b}");
        }
    }

    #[test]
    fn affine_equivariance() {
        let s0 = moments_quantile_integral(&model(Family::Logarithmic, 0.7)).unwrap();
        let m = NpsModel::new(Family::Logarithmic, 3.0, 2.5, 0.7).unwrap();
        let s = moments_quantile_integral(&m).unwrap();
        assert_relative_eq!(s.m1, 3.0 + 2.5 * s0.m1, max_relative = 1e-10);
        assert_relative_eq!(s.variance, 6.25 * s0.variance, max_relative = 1e-10);
        assert!((s.skewness.unwrap() - s0.skewness.unwrap()).abs() < 1e-9);
        assert!((s.kurtosis.unwrap() - s0.kurtosis.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn raw_moments_agree_with_summary() {
        let m = NpsModel::new(Family::Poisson, 0.5, 1.5, 2.0).unwrap();
        let (raw, _) = raw_moments_quantile_integral(&m, 4).unwrap();
        let s = moments_quantile_integral(&m).unwrap();
        assert_relative_eq!(raw[0], s.m1, max_relative = 1e-12);
        assert_relative_eq!(raw[1], s.m2, max_relative = 1e-12);
        assert_relative_eq!(raw[3], s.m4.unwrap(), max_relative = 1e-12);
    }

    // Closed forms for E(Y) (geometric, binomial) and E(Y²) (Poisson) as they
    // are usually printed; they must coincide with the derived approximation.
    fn printed_ng_mean(mu: f64, s: f64, t: f64) -> f64 {
        (2.0 * t * t * mu
            + (2.0 * PI).sqrt() * s * (2.0 * (1.0 - t).ln() * (1.0 - t) + 2.0 * t - t * t))
            / (2.0 * t * t)
    }

    fn printed_np_second(mu: f64, s: f64, t: f64) -> f64 {
        let r = (2.0 * PI).sqrt();
        let e = t.exp();
        (s * mu * t * (4.0 * r + 2.0 * r * t) - 8.0 * PI * s * s - t * t * (PI * s * s + 2.0 * mu * mu)
            - 4.0 * PI * t * s * s
            + (2.0 * t * t * mu * mu + 8.0 * PI * s * s - 4.0 * PI * t * s * s + PI * t * t * s * s
                + 2.0 * r * t * t * s * mu
                - 4.0 * r * t * s * mu)
                * e)
            / (2.0 * t * t * (e - 1.0))
    }

    fn printed_nb_mean(mu: f64, s: f64, t: f64, m: f64) -> f64 {
        let r = (2.0 * PI).sqrt();
        let p = (t + 1.0).powf(m);
        (2.0 * r * s + (r * s * (1.0 + m) - 2.0 * mu * (1.0 + m)) * t
            - (2.0 * r * s * (1.0 + m) + (r * s * (1.0 + m) - 2.0 * mu * (1.0 + m)) * t
                - 2.0 * r * m * s * (t + 1.0))
                * p)
            / (2.0 * t * (p - 1.0) * (m + 1.0))
    }

    #[test]
    fn approximation_matches_known_closed_forms() {
        for &(mu, s, t) in &[(0.0, 1.0, 0.5), (1.5, 2.0, 0.8), (-1.0, 0.5, -2.0)] {
            let a = approx_moments(&NpsModel::new(Family::Geometric, mu, s, t).unwrap()).unwrap();
            assert_relative_eq!(a.m1, printed_ng_mean(mu, s, t), max_relative = 1e-10);
        }
        for &(mu, s, t) in &[(0.0, 1.0, 1.0), (1.5, 2.0, 3.0)] {
            let a = approx_moments(&NpsModel::new(Family::Poisson, mu, s, t).unwrap()).unwrap();
            assert_relative_eq!(a.m2, printed_np_second(mu, s, t), max_relative = 1e-10);
        }
        for &(mu, s, t) in &[(0.0, 1.0, 1.0), (1.5, 2.0, 0.3)] {
            let f = Family::Binomial { m: 4 };
            let a = approx_moments(&NpsModel::new(f, mu, s, t).unwrap()).unwrap();
            assert_relative_eq!(a.m1, printed_nb_mean(mu, s, t, 4.0), max_relative = 1e-10);
        }
    }

    #[test]
    fn approximation_gaps() {
        let a = approx_moments(&model(Family::Geometric, 0.5)).unwrap();
        assert!((a.m1 - 0.3894).abs() < 0.15);
        let a = approx_moments(&model(Family::Poisson, 1.0)).unwrap();
        assert!((a.m1 - 0.2781).abs() < 0.15);
        let a = approx_moments(&model(Family::Geometric, -1e-4)).unwrap();
        assert!(a.m1.abs() < 1e-3);
        assert!(matches!(
            approx_moments(&model(Family::Logarithmic, 0.5)),
            Err(NpsError::Unsupported(_))
        ));
    }
}

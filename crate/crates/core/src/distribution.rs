//! The normal power-series law: Y = max(X_1, …, X_N) with X_i ~ N(μ, σ²)
//! i.i.d. and N zero-truncated power-series distributed, so that
//!
//! F(y) = C(θ Φ(z)) / C(θ),   f(y) = (θ/σ) φ(z) C'(θ Φ(z)) / C(θ),   z = (y − μ)/σ.

use crate::error::{domain_err, NpsError, Result};
use crate::power_series::Family;
use crate::roots::{brent, expand_bracket};
use crate::special::{ln_norm_cdf, ln_norm_pdf, norm_cdf, norm_pdf, norm_ppf, norm_sf};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Largest |cdf(quantile(γ)) − γ| accepted from the closed-form quantile
/// before falling back to a bracketed solve.
const QUANTILE_ROUNDTRIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NpsModel {
    family: Family,
    mu: f64,
    sigma: f64,
    theta: f64,
}

impl NpsModel {
    /// Builds a model; θ must lie in the family's extended domain.
    pub fn new(family: Family, mu: f64, sigma: f64, theta: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(domain_err("mu", mu, "(-inf, inf)"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(domain_err("sigma", sigma, "(0, inf)"));
        }
        let dom = family.extended_domain();
        if !dom.contains(theta) {
            return Err(domain_err("theta", theta, dom));
        }
        Ok(Self {
            family,
            mu,
            sigma,
            theta,
        })
    }

    pub fn standard(family: Family, theta: f64) -> Result<Self> {
        Self::new(family, 0.0, 1.0, theta)
    }

    pub fn family(&self) -> Family {
        self.family
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// True when θ is also in the proper domain, i.e. the compound
    /// (max-of-N) reading holds.
    pub fn is_proper(&self) -> bool {
        self.family.is_proper(self.theta)
    }

    fn require_proper(&self, what: &str) -> Result<()> {
        if self.is_proper() {
            Ok(())
        } else {
            Err(NpsError::Domain {
                what: "theta",
                value: self.theta,
                domain: format!("{} (required by {what})", self.family.proper_domain()),
            })
        }
    }

    #[inline]
    pub fn z(&self, y: f64) -> f64 {
        (y - self.mu) / self.sigma
    }

    pub fn ln_pdf(&self, y: f64) -> f64 {
        if !y.is_finite() {
            return f64::NEG_INFINITY;
        }
        let z = self.z(y);
        let ln_p = ln_norm_cdf(z);
        let p = ln_p.exp();
        self.family.ln_theta_over_c(self.theta) - self.sigma.ln()
            + ln_norm_pdf(z)
            + self.family.ln_dc_at(self.theta, p, ln_p)
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.ln_pdf(y).exp()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y == f64::INFINITY {
            return 1.0;
        }
        if y == f64::NEG_INFINITY {
            return 0.0;
        }
        let p = norm_cdf(self.z(y));
        self.family.cdf_ratio(self.theta, p).clamp(0.0, 1.0)
    }

    pub fn survival(&self, y: f64) -> f64 {
        if y == f64::INFINITY {
            return 0.0;
        }
        if y == f64::NEG_INFINITY {
            return 1.0;
        }
        let z = self.z(y);
        self.family
            .sf_ratio(self.theta, norm_cdf(z), norm_sf(z))
            .clamp(0.0, 1.0)
    }

    /// f(y)/S(y). Returns `f64::INFINITY` once the survival function
    /// underflows, which happens only far in the upper tail.
    pub fn hazard(&self, y: f64) -> f64 {
        let s = self.survival(y);
        if s <= 0.0 {
            return f64::INFINITY;
        }
        self.pdf(y) / s
    }

    /// The γ-quantile σ Φ⁻¹(C⁻¹(γ C(θ))/θ) + μ, with a bracketed root solve on
    /// F(y) = γ as fallback when the closed form misses the roundtrip check.
    pub fn quantile(&self, gamma: f64) -> Result<f64> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(domain_err("gamma", gamma, "(0, 1)"));
        }
        let y = self.mu + self.sigma * self.standard_quantile_closed(gamma);
        if y.is_finite() && (self.cdf(y) - gamma).abs() <= QUANTILE_ROUNDTRIP_TOL {
            return Ok(y);
        }
        self.quantile_by_root(gamma)
    }

    /// Φ⁻¹(C⁻¹(u C(θ))/θ) without any safeguard.
    pub(crate) fn standard_quantile_closed(&self, u: f64) -> f64 {
        let f = self.family;
        let t = f.c_inv_raw(u * f.c_raw(self.theta)) / self.theta;
        norm_ppf(t.clamp(0.0, 1.0))
    }

    pub(crate) fn quantile_by_root(&self, gamma: f64) -> Result<f64> {
        let g = |y: f64| self.cdf(y) - gamma;
        let (lo, hi) = expand_bracket(
            g,
            self.mu - 15.0 * self.sigma,
            self.mu + 15.0 * self.sigma,
            (f64::NEG_INFINITY, f64::INFINITY),
            200,
        )?;
        brent(g, lo, hi, 1e-15 * self.sigma.max(self.mu.abs()), 400)
    }

    /// Inverse-transform draw: quantile of a uniform variate.
    pub fn sample_inverse<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                return self.quantile(u);
            }
        }
    }

    /// Compound draw: N from the power-series law, then the max of N normals.
    pub fn sample_compound<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        self.require_proper("the compound sampler")?;
        let n = self.family.sample_n(self.theta, rng)?;
        let mut best = f64::NEG_INFINITY;
        for _ in 0..n {
            let x: f64 = rng.sample(StandardNormal);
            best = best.max(x);
        }
        Ok(self.mu + self.sigma * best)
    }

    /// Σ_n P(N = n) · n Φ(z)^{n−1} φ(z)/σ, truncated once the remaining
    /// terms are below `tol`.
    pub fn mixture_pdf(&self, y: f64, tol: f64) -> Result<f64> {
        self.require_proper("the order-statistic mixture")?;
        if !(tol > 0.0) {
            return Err(domain_err("tol", tol, "(0, inf)"));
        }
        let z = self.z(y);
        let phi = norm_pdf(z) / self.sigma;
        let p = norm_cdf(z);
        let (sum, _) = self.family.sum_series(self.theta, 1, phi, tol, |n, pmf| {
            pmf * n as f64 * p.powi(n as i32 - 1) * phi
        })?;
        Ok(sum)
    }

    /// Number of mixture terms `mixture_pdf` would use at (y, tol).
    pub fn mixture_terms(&self, y: f64, tol: f64) -> Result<u64> {
        self.require_proper("the order-statistic mixture")?;
        let z = self.z(y);
        let phi = norm_pdf(z) / self.sigma;
        let p = norm_cdf(z);
        let (_, n) = self.family.sum_series(self.theta, 1, phi, tol, |n, pmf| {
            pmf * n as f64 * p.powi(n as i32 - 1) * phi
        })?;
        Ok(n)
    }
}

/// The θ → 0⁺ limit of the cdf, Φ(z)^c with c the family's truncation index.
pub fn limit_theta_zero_cdf(family: Family, mu: f64, sigma: f64, y: f64) -> f64 {
    norm_cdf((y - mu) / sigma).powi(family.min_index() as i32)
}

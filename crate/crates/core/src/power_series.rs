//! Zero-truncated power-series laws P(N = n) = a_n θ^n / C(θ), n ≥ 1.
//!
//! | family | a_n | C(θ) | proper θ | extended θ |
//! |---|---|---|---|---|
//! | geometric | 1 | θ/(1−θ) | (0, 1) | θ < 1, θ ≠ 0 |
//! | Poisson | 1/n! | e^θ − 1 | (0, ∞) | θ ≠ 0 |
//! | logarithmic | 1/n | −ln(1−θ) | (0, 1) | θ < 1, θ ≠ 0 |
//! | binomial(m) | C(m, n) | (1+θ)^m − 1 | (0, ∞) | θ > −1, θ ≠ 0 |
//! | negative binomial(k) | C(n−1, k−1) | θ^k/(1−θ)^k | (0, 1) | (0, 1) |
//!
//! The extended ranges are where the normal-power-series density formula is
//! still a density even though a_n θ^n / C(θ) is no longer a pmf.

use crate::error::{domain_err, NpsError, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use libm::lgamma as ln_gamma;
use std::fmt;
use std::str::FromStr;

/// Hard cap on series length, overridable with `NPS_MAX_SERIES`.
pub const DEFAULT_MAX_SERIES: usize = 1_000_000;

/// Tail mass below which `sample_n` stops extending the cdf table.
pub const SAMPLE_TAIL_MASS: f64 = 1e-12;

pub fn series_cap() -> usize {
    std::env::var("NPS_MAX_SERIES")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_MAX_SERIES)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Family {
    Geometric,
    Poisson,
    Logarithmic,
    Binomial { m: u32 },
    NegativeBinomial { k: u32 },
}

/// Open interval `(lower, upper)`, optionally punctured at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaDomain {
    pub lower: f64,
    pub upper: f64,
    pub excludes_zero: bool,
}

impl ThetaDomain {
    pub fn contains(&self, theta: f64) -> bool {
        theta > self.lower && theta < self.upper && !(self.excludes_zero && theta == 0.0)
    }
}

impl fmt::Display for ThetaDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lower, self.upper)?;
        if self.excludes_zero {
            write!(f, " \\ {{0}}")?;
        }
        Ok(())
    }
}

impl Family {
    pub const ALL_DEFAULT: [Family; 5] = [
        Family::Geometric,
        Family::Poisson,
        Family::Logarithmic,
        Family::Binomial { m: 5 },
        Family::NegativeBinomial { k: 2 },
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Geometric => "geometric",
            Family::Poisson => "poisson",
            Family::Logarithmic => "logarithmic",
            Family::Binomial { .. } => "binomial",
            Family::NegativeBinomial { .. } => "negbinomial",
        }
    }

    /// Short label of the compounded model (NG, NP, NL, NB(m), NNB(k)).
    pub fn model_label(&self) -> String {
        match self {
            Family::Geometric => "NG".into(),
            Family::Poisson => "NP".into(),
            Family::Logarithmic => "NL".into(),
            Family::Binomial { m } => format!("NB({m})"),
            Family::NegativeBinomial { k } => format!("NNB({k})"),
        }
    }

    pub fn shape(&self) -> Option<u32> {
        match *self {
            Family::Binomial { m } => Some(m),
            Family::NegativeBinomial { k } => Some(k),
            _ => None,
        }
    }

    /// Smallest n with a_n > 0.
    pub fn min_index(&self) -> u64 {
        match *self {
            Family::NegativeBinomial { k } => k as u64,
            _ => 1,
        }
    }

    /// (0, s): the θ range where a_n θ^n / C(θ) is a pmf.
    pub fn proper_domain(&self) -> ThetaDomain {
        let upper = match self {
            Family::Geometric | Family::Logarithmic | Family::NegativeBinomial { .. } => 1.0,
            Family::Poisson | Family::Binomial { .. } => f64::INFINITY,
        };
        ThetaDomain {
            lower: 0.0,
            upper,
            excludes_zero: true,
        }
    }

    pub fn extended_domain(&self) -> ThetaDomain {
        let (lower, upper) = match self {
            Family::Geometric | Family::Logarithmic => (f64::NEG_INFINITY, 1.0),
            Family::Poisson => (f64::NEG_INFINITY, f64::INFINITY),
            Family::Binomial { .. } => (-1.0, f64::INFINITY),
            Family::NegativeBinomial { .. } => (0.0, 1.0),
        };
        ThetaDomain {
            lower,
            upper,
            excludes_zero: true,
        }
    }

    pub fn is_proper(&self, theta: f64) -> bool {
        self.proper_domain().contains(theta)
    }

    fn check_extended(&self, theta: f64) -> Result<()> {
        let d = self.extended_domain();
        if d.contains(theta) {
            Ok(())
        } else {
            Err(domain_err("theta", theta, d))
        }
    }

    fn check_proper(&self, theta: f64) -> Result<()> {
        let d = self.proper_domain();
        if d.contains(theta) {
            Ok(())
        } else {
            Err(domain_err("theta", theta, d))
        }
    }

    /// ln a_n, or `None` when a_n = 0.
    pub fn ln_coef(&self, n: u64) -> Option<f64> {
        if n == 0 {
            return None;
        }
        let nf = n as f64;
        match *self {
            Family::Geometric => Some(0.0),
            Family::Poisson => Some(-ln_gamma(nf + 1.0)),
            Family::Logarithmic => Some(-nf.ln()),
            Family::Binomial { m } => (n <= m as u64).then(|| ln_binom(m as f64, nf)),
            Family::NegativeBinomial { k } => {
                (n >= k as u64).then(|| ln_binom(nf - 1.0, k as f64 - 1.0))
            }
        }
    }

    pub fn coef(&self, n: u64) -> f64 {
        self.ln_coef(n).map_or(0.0, f64::exp)
    }

    // --- closed forms, no domain checks -------------------------------------

    pub(crate) fn c_raw(&self, t: f64) -> f64 {
        match *self {
            Family::Geometric => t / (1.0 - t),
            Family::Poisson => t.exp_m1(),
            Family::Logarithmic => -(-t).ln_1p(),
            Family::Binomial { m } => (m as f64 * t.ln_1p()).exp_m1(),
            Family::NegativeBinomial { k } => (t / (1.0 - t)).powi(k as i32),
        }
    }

    pub(crate) fn dc_raw(&self, t: f64) -> f64 {
        match *self {
            Family::Geometric => (1.0 - t).powi(-2),
            Family::Poisson => t.exp(),
            Family::Logarithmic => 1.0 / (1.0 - t),
            Family::Binomial { m } => {
                let m = m as f64;
                m * ((m - 1.0) * t.ln_1p()).exp()
            }
            Family::NegativeBinomial { k } => {
                let k = k as i32;
                k as f64 * t.powi(k - 1) * (1.0 - t).powi(-k - 1)
            }
        }
    }

    pub(crate) fn d2c_raw(&self, t: f64) -> f64 {
        match *self {
            Family::Geometric => 2.0 * (1.0 - t).powi(-3),
            Family::Poisson => t.exp(),
            Family::Logarithmic => (1.0 - t).powi(-2),
            Family::Binomial { m } => {
                let m = m as f64;
                m * (m - 1.0) * ((m - 2.0) * t.ln_1p()).exp()
            }
            Family::NegativeBinomial { k } => {
                let kf = k as f64;
                let k = k as i32;
                kf * (kf - 1.0 + 2.0 * t) * t.powi(k - 2) * (1.0 - t).powi(-k - 2)
            }
        }
    }

    pub(crate) fn d3c_raw(&self, t: f64) -> f64 {
        match *self {
            Family::Geometric => 6.0 * (1.0 - t).powi(-4),
            Family::Poisson => t.exp(),
            Family::Logarithmic => 2.0 * (1.0 - t).powi(-3),
            Family::Binomial { m } => {
                let m = m as f64;
                m * (m - 1.0) * (m - 2.0) * ((m - 3.0) * t.ln_1p()).exp()
            }
            Family::NegativeBinomial { k } => {
                let kf = k as f64;
                let k = k as i32;
                let poly = kf * kf - 3.0 * kf + 2.0 + 6.0 * kf * t - 6.0 * t + 6.0 * t * t;
                kf * poly * t.powi(k - 3) * (1.0 - t).powi(-k - 3)
            }
        }
    }

    fn checked(&self, what: &str, theta: f64, value: f64) -> Result<f64> {
        if value.is_finite() {
            Ok(value)
        } else {
            Err(NpsError::Overflow(format!("{what}({theta}) for {self}")))
        }
    }

    /// C(θ) = Σ a_n θ^n.
    pub fn c(&self, theta: f64) -> Result<f64> {
        self.check_extended(theta)?;
        self.checked("C", theta, self.c_raw(theta))
    }

    pub fn dc(&self, theta: f64) -> Result<f64> {
        self.check_extended(theta)?;
        self.checked("C'", theta, self.dc_raw(theta))
    }

    pub fn d2c(&self, theta: f64) -> Result<f64> {
        self.check_extended(theta)?;
        self.checked("C''", theta, self.d2c_raw(theta))
    }

    pub fn d3c(&self, theta: f64) -> Result<f64> {
        self.check_extended(theta)?;
        self.checked("C'''", theta, self.d3c_raw(theta))
    }

    /// Range of C over the extended domain, as an open interval.
    pub fn c_range(&self) -> (f64, f64) {
        match self {
            Family::Geometric | Family::Poisson | Family::Binomial { .. } => (-1.0, f64::INFINITY),
            Family::Logarithmic => (f64::NEG_INFINITY, f64::INFINITY),
            Family::NegativeBinomial { .. } => (0.0, f64::INFINITY),
        }
    }

    pub(crate) fn c_inv_raw(&self, u: f64) -> f64 {
        match *self {
            Family::Geometric => u / (1.0 + u),
            Family::Poisson => u.ln_1p(),
            Family::Logarithmic => -(-u).exp_m1(),
            Family::Binomial { m } => (u.ln_1p() / m as f64).exp_m1(),
            Family::NegativeBinomial { k } => {
                let v = u.powf(1.0 / k as f64);
                v / (1.0 + v)
            }
        }
    }

    /// Closed-form inverse of C.
    pub fn c_inv(&self, u: f64) -> Result<f64> {
        let (lo, hi) = self.c_range();
        if !(u > lo && u < hi) {
            return Err(domain_err("u", u, format!("({lo}, {hi})")));
        }
        Ok(self.c_inv_raw(u))
    }

    // --- stable compound quantities used by the NPS evaluation --------------

    /// C(θp)/C(θ) for p ∈ [0, 1].
    pub(crate) fn cdf_ratio(&self, theta: f64, p: f64) -> f64 {
        match *self {
            Family::Geometric => p * (1.0 - theta) / (1.0 - theta * p),
            Family::Poisson => (theta * p).exp_m1() / theta.exp_m1(),
            Family::Logarithmic => (-theta * p).ln_1p() / (-theta).ln_1p(),
            Family::Binomial { m } => {
                let m = m as f64;
                (m * (theta * p).ln_1p()).exp_m1() / (m * theta.ln_1p()).exp_m1()
            }
            Family::NegativeBinomial { k } => {
                (p * (1.0 - theta) / (1.0 - theta * p)).powi(k as i32)
            }
        }
    }

    /// (C(θ) − C(θp))/C(θ) with q = 1 − p supplied separately.
    pub(crate) fn sf_ratio(&self, theta: f64, p: f64, q: f64) -> f64 {
        match *self {
            Family::Geometric => q / (1.0 - theta * p),
            Family::Poisson => {
                if theta > 0.0 {
                    (theta * (p - 1.0)).exp() * (theta * q).exp_m1() / -(-theta).exp_m1()
                } else {
                    (theta * p).exp() * (theta * q).exp_m1() / theta.exp_m1()
                }
            }
            Family::Logarithmic => (theta * q / (1.0 - theta)).ln_1p() / -(-theta).ln_1p(),
            Family::Binomial { m } => {
                let m = m as f64;
                let base = 1.0 + theta * p;
                (m * base.ln()).exp() * (m * (theta * q / base).ln_1p()).exp_m1()
                    / (m * theta.ln_1p()).exp_m1()
            }
            Family::NegativeBinomial { k } => {
                -(k as f64 * (-q / (1.0 - theta * p)).ln_1p()).exp_m1()
            }
        }
    }

    /// ln(θ / C(θ)); the ratio is positive on the whole extended domain.
    pub(crate) fn ln_theta_over_c(&self, theta: f64) -> f64 {
        match *self {
            Family::Geometric => (-theta).ln_1p(),
            Family::Poisson => {
                if theta > 30.0 {
                    theta.ln() - theta - (-(-theta).exp()).ln_1p()
                } else {
                    (theta / theta.exp_m1()).ln()
                }
            }
            Family::Logarithmic => (theta / -(-theta).ln_1p()).ln(),
            Family::Binomial { m } => (theta / (m as f64 * theta.ln_1p()).exp_m1()).ln(),
            Family::NegativeBinomial { k } => {
                let k = k as f64;
                (1.0 - k) * theta.ln() + k * (-theta).ln_1p()
            }
        }
    }

    /// ln C'(θp), given ln p for accuracy deep in the lower tail.
    pub(crate) fn ln_dc_at(&self, theta: f64, p: f64, ln_p: f64) -> f64 {
        let x = theta * p;
        match *self {
            Family::Geometric => -2.0 * (-x).ln_1p(),
            Family::Poisson => x,
            Family::Logarithmic => -(-x).ln_1p(),
            Family::Binomial { m } => {
                let m = m as f64;
                m.ln() + (m - 1.0) * x.ln_1p()
            }
            Family::NegativeBinomial { k } => {
                let k = k as f64;
                k.ln() + (k - 1.0) * (theta.ln() + ln_p) - (k + 1.0) * (-x).ln_1p()
            }
        }
    }

    /// (x·C''(x)/C'(x), x²·C'''(x)/C'(x)); both stay finite as x → 0.
    pub fn scaled_ratios(&self, x: f64) -> (f64, f64) {
        match *self {
            Family::Geometric => {
                let r = x / (1.0 - x);
                (2.0 * r, 6.0 * r * r)
            }
            Family::Poisson => (x, x * x),
            Family::Logarithmic => {
                let r = x / (1.0 - x);
                (r, 2.0 * r * r)
            }
            Family::Binomial { m } => {
                let m = m as f64;
                let r = x / (1.0 + x);
                ((m - 1.0) * r, (m - 1.0) * (m - 2.0) * r * r)
            }
            Family::NegativeBinomial { k } => {
                let k = k as f64;
                let om = 1.0 - x;
                (
                    (k - 1.0 + 2.0 * x) / om,
                    (k * k - 3.0 * k + 2.0 + 6.0 * k * x - 6.0 * x + 6.0 * x * x) / (om * om),
                )
            }
        }
    }

    /// (C'(θ)/C(θ), C''(θ)/C(θ)).
    pub(crate) fn log_derivs(&self, theta: f64) -> (f64, f64) {
        match *self {
            Family::Geometric => {
                let a = 1.0 / (theta * (1.0 - theta));
                (a, 2.0 * a / (1.0 - theta))
            }
            Family::Poisson => {
                let r = if theta > 30.0 {
                    1.0 / -(-theta).exp_m1()
                } else {
                    theta.exp() / theta.exp_m1()
                };
                (r, r)
            }
            Family::Logarithmic => {
                let c = -(-theta).ln_1p();
                let a = 1.0 / ((1.0 - theta) * c);
                (a, a / (1.0 - theta))
            }
            Family::Binomial { .. } => {
                let c = self.c_raw(theta);
                (self.dc_raw(theta) / c, self.d2c_raw(theta) / c)
            }
            Family::NegativeBinomial { k } => {
                let k = k as f64;
                let a = k / (theta * (1.0 - theta));
                (a, a * (k - 1.0 + 2.0 * theta) / (theta * (1.0 - theta)))
            }
        }
    }

    /// E(N) = θ C'(θ) / C(θ) on the proper domain.
    pub fn mean_n(&self, theta: f64) -> f64 {
        theta * self.log_derivs(theta).0
    }

    // --- pmf, series and sampling -------------------------------------------

    pub fn ln_pmf(&self, theta: f64, n: u64) -> Result<f64> {
        self.check_proper(theta)?;
        Ok(self.ln_pmf_raw(theta, n))
    }

    /// a_n θ^n / C(θ); zero where a_n = 0.
    pub fn pmf(&self, theta: f64, n: u64) -> Result<f64> {
        self.ln_pmf(theta, n).map(f64::exp)
    }

    pub(crate) fn ln_pmf_raw(&self, theta: f64, n: u64) -> f64 {
        match self.ln_coef(n) {
            // θ^n / C(θ) = θ^{n−1} · θ/C(θ)
            Some(la) => la + (n as f64 - 1.0) * theta.ln() + self.ln_theta_over_c(theta),
            None => f64::NEG_INFINITY,
        }
    }

    /// pmf(n+1)/pmf(n) for n ≥ min_index.
    fn pmf_step(&self, theta: f64, n: u64) -> f64 {
        let nf = n as f64;
        match *self {
            Family::Geometric => theta,
            Family::Poisson => theta / (nf + 1.0),
            Family::Logarithmic => theta * nf / (nf + 1.0),
            Family::Binomial { m } => {
                if n >= m as u64 {
                    0.0
                } else {
                    theta * (m as f64 - nf) / (nf + 1.0)
                }
            }
            Family::NegativeBinomial { k } => theta * nf / (nf - k as f64 + 1.0),
        }
    }

    /// sup over j ≥ n of pmf(j+1)/pmf(j).
    fn pmf_step_bound(&self, theta: f64, n: u64) -> f64 {
        match self {
            Family::Logarithmic => theta,
            _ => self.pmf_step(theta, n),
        }
    }

    /// Σ_n term(n, pmf(n)) truncated once the remaining tail is below `tol`.
    ///
    /// The caller promises |term(n, pmf)| ≤ scale · n^degree · pmf for every
    /// n; the tail after n is then bounded by a geometric series in the pmf
    /// step ratio. Returns the sum and the last index used.
    pub fn sum_series<F: FnMut(u64, f64) -> f64>(
        &self,
        theta: f64,
        degree: i32,
        scale: f64,
        tol: f64,
        mut term: F,
    ) -> Result<(f64, u64)> {
        self.check_proper(theta)?;
        let cap = series_cap() as u64;
        let start = self.min_index();
        let mut pmf = self.ln_pmf_raw(theta, start).exp();
        let mut sum = 0.0;
        let mut n = start;
        loop {
            sum += term(n, pmf);
            let nf = n as f64;
            let rho = self.pmf_step_bound(theta, n) * ((nf + 1.0) / nf).powi(degree);
            if rho <= 0.0 {
                return Ok((sum, n));
            }
            let envelope = scale * nf.powi(degree) * pmf;
            if rho < 1.0 && envelope * rho / (1.0 - rho) < tol {
                return Ok((sum, n));
            }
            if n - start + 1 >= cap {
                return Err(NpsError::TruncationCap {
                    cap: cap as usize,
                    tol,
                });
            }
            pmf *= self.pmf_step(theta, n);
            n += 1;
        }
    }

    /// Upper bound on P(N > n).
    fn tail_bound(&self, theta: f64, n: u64, pmf_n: f64) -> f64 {
        let rho = self.pmf_step_bound(theta, n);
        if rho <= 0.0 {
            0.0
        } else if rho < 1.0 {
            pmf_n * rho / (1.0 - rho)
        } else {
            f64::INFINITY
        }
    }

    /// Draws N by sequential inversion of its cdf.
    pub fn sample_n<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> Result<u64> {
        self.check_proper(theta)?;
        let u: f64 = rng.random();
        let cap = series_cap() as u64;
        let start = self.min_index();
        let mut pmf = self.ln_pmf_raw(theta, start).exp();
        let mut cum = 0.0;
        let mut n = start;
        loop {
            cum += pmf;
            if u <= cum || self.tail_bound(theta, n, pmf) < SAMPLE_TAIL_MASS {
                return Ok(n);
            }
            if n - start + 1 >= cap {
                return Err(NpsError::TruncationCap {
                    cap: cap as usize,
                    tol: SAMPLE_TAIL_MASS,
                });
            }
            pmf *= self.pmf_step(theta, n);
            n += 1;
        }
    }
}

fn ln_binom(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.shape() {
            Some(s) => write!(f, "{}:{}", self.name(), s),
            None => f.write_str(self.name()),
        }
    }
}

impl FromStr for Family {
    type Err = NpsError;

    /// Accepts full names and the model aliases: `ng`, `np`, `nl`,
    /// `nb:<m>` (binomial), `nnb:<k>` (negative binomial).
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, shape) = match lower.split_once(':') {
            Some((n, sh)) => (n, Some(sh)),
            None => (lower.as_str(), None),
        };
        let bad = || NpsError::FamilySpec(s.to_string());
        let shape = match shape {
            Some(sh) => Some(sh.parse::<u32>().ok().filter(|&v| v >= 1).ok_or_else(bad)?),
            None => None,
        };
        let family = match (name, shape) {
            ("geometric" | "ng", None) => Family::Geometric,
            ("poisson" | "np", None) => Family::Poisson,
            ("logarithmic" | "log" | "nl", None) => Family::Logarithmic,
            ("binomial" | "nb", Some(m)) => Family::Binomial { m },
            ("negbinomial" | "negative-binomial" | "nnb", Some(k)) => {
                Family::NegativeBinomial { k }
            }
            _ => return Err(bad()),
        };
        Ok(family)
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.to_string()
    }
}

impl TryFrom<String> for Family {
    type Error = NpsError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-6 * x.abs().max(1.0);
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn pmf_examples() {
        assert_relative_eq!(Family::Geometric.pmf(0.5, 1).unwrap(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(
            Family::Poisson.pmf(1.0, 1).unwrap(),
            1.0 / (E - 1.0),
            max_relative = 1e-14
        );
        let nb = Family::NegativeBinomial { k: 2 };
        // brute-force sum of a_n θ^n / C(θ) with the coefficients spelled out
        let c = (0.5f64 / 0.5).powi(2);
        let total: f64 = (2..=200u64)
            .map(|n| (n as f64 - 1.0) * 0.5f64.powi(n as i32) / c)
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        let ours: f64 = (1..=200u64).map(|n| nb.pmf(0.5, n).unwrap()).sum();
        assert!((ours - 1.0).abs() < 1e-12);
        assert_eq!(nb.pmf(0.5, 1).unwrap(), 0.0);
    }

    #[test]
    fn pmf_rejects_extended_theta() {
        assert!(Family::Geometric.pmf(-0.5, 1).is_err());
        assert!(Family::Logarithmic.pmf(1.0, 1).is_err());
    }

    #[test]
    fn c_and_derivative_examples() {
        let g = Family::Geometric;
        assert_relative_eq!(g.c(0.5).unwrap(), 1.0);
        assert_relative_eq!(g.dc(0.5).unwrap(), 4.0);
        assert_relative_eq!(g.d2c(0.5).unwrap(), 16.0);
        assert_relative_eq!(g.d3c(0.5).unwrap(), 96.0);
        let p = Family::Poisson;
        assert_relative_eq!(p.c(1.0).unwrap(), E - 1.0, max_relative = 1e-15);
        for v in [p.dc(1.0), p.d2c(1.0), p.d3c(1.0)] {
            assert_relative_eq!(v.unwrap(), E, max_relative = 1e-15);
        }
        let nb = Family::NegativeBinomial { k: 2 };
        let c = |t: f64| (t / (1.0 - t)).powi(2);
        assert_relative_eq!(nb.dc(0.3).unwrap(), fd(c, 0.3), max_relative = 1e-7);
    }

    #[test]
    fn c_signals_domain_and_overflow() {
        assert!(matches!(Family::Geometric.c(1.0), Err(NpsError::Domain { .. })));
        assert!(matches!(Family::Geometric.c(0.0), Err(NpsError::Domain { .. })));
        assert!(matches!(Family::Poisson.c(800.0), Err(NpsError::Overflow(_))));
        assert!(Family::Binomial { m: 3 }.c(-1.5).is_err());
    }

    #[test]
    fn c_inv_examples() {
        assert_relative_eq!(Family::Geometric.c_inv(1.0).unwrap(), 0.5);
        assert_relative_eq!(Family::Poisson.c_inv(E - 1.0).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(Family::Geometric.c_inv(-0.5).unwrap(), -1.0);
        assert!(Family::Geometric.c_inv(-1.0).is_err());
        assert!(Family::NegativeBinomial { k: 3 }.c_inv(-0.1).is_err());
    }

    #[test]
    fn negative_binomial_truncation_index() {
        let nb = Family::NegativeBinomial { k: 3 };
        assert_eq!(nb.min_index(), 3);
        for n in 1..3 {
            assert_eq!(nb.pmf(0.4, n).unwrap(), 0.0);
        }
        assert!(nb.pmf(0.4, 3).unwrap() > 0.0);
    }

    #[test]
    fn sample_n_geometric_mean() {
        let g = Family::Geometric;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| g.sample_n(0.5, &mut rng).unwrap() as f64)
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        let expected = g.mean_n(0.5);
        assert_relative_eq!(expected, 2.0, max_relative = 1e-14);
        assert!((mean - expected).abs() < 3.0 * (var / draws.len() as f64).sqrt());
    }

    #[test]
    fn sample_n_binomial_support() {
        let b = Family::Binomial { m: 3 };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20_000 {
            let n = b.sample_n(1.0, &mut rng).unwrap();
            assert!((1..=3).contains(&n));
        }
    }

    #[test]
    fn sample_n_respects_cap() {
        // θ so close to 1 that the geometric tail needs ~1e13 terms
        let g = Family::Geometric;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hit_cap = (0..50).any(|_| {
            matches!(
                g.sample_n(1.0 - 1e-12, &mut rng),
                Err(NpsError::TruncationCap { .. })
            )
        });
        assert!(hit_cap);
    }

    #[test]
    fn parse_family_specs() {
        assert_eq!("ng".parse::<Family>().unwrap(), Family::Geometric);
        assert_eq!("NP".parse::<Family>().unwrap(), Family::Poisson);
        assert_eq!("nb:5".parse::<Family>().unwrap(), Family::Binomial { m: 5 });
        assert_eq!(
            "negbinomial:2".parse::<Family>().unwrap(),
            Family::NegativeBinomial { k: 2 }
        );
        assert_eq!("nnb:3".parse::<Family>().unwrap(), Family::NegativeBinomial { k: 3 });
        for bad in ["binomial", "geometric:2", "nb:0", "nb:x", "weibull"] {
            assert!(bad.parse::<Family>().is_err(), "{bad}");
        }
        let f = Family::Binomial { m: 7 };
        assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
    }
}

//! Maximum-likelihood inference for NPS models: likelihood and derivatives,
//! direct quasi-Newton fitting, the EM algorithm with Louis standard errors,
//! model comparison and a simulation driver.

mod compare;
mod direct;
mod em;
mod likelihood;
mod optim;
mod simulate;
mod transform;

pub use compare::{compare, fit_normal, Candidate, CompareRow, NormalFit};
pub use direct::fit_direct;
pub use em::{e_step, fit_em, louis_info, louis_se, LatentPosterior, LouisInfo};
pub use likelihood::{
    fd_observed_info, hessian, info_report, loglik, observed_info, observed_info_as_printed, score,
    InfoDiscrepancy, InfoReport, INFO_GAP_TOL,
};
pub use optim::{bfgs, OptOutcome};
pub use simulate::{replicate_sample, simulate, SimConfig, SimSummary};
pub use transform::ThetaMap;

use crate::error::{NpsError, Result};
use crate::power_series::{Family, ThetaDomain};
use crate::special::norm_isf;
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

/// Parameter vector Ψ = (μ, σ, θ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Psi {
    pub mu: f64,
    pub sigma: f64,
    pub theta: f64,
}

impl Psi {
    pub fn new(mu: f64, sigma: f64, theta: f64) -> Self {
        Self { mu, sigma, theta }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.mu, self.sigma, self.theta]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    Direct,
    Em,
}

/// Which θ values a fit may visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainMode {
    Proper,
    Extended,
}

impl DomainMode {
    pub fn domain(self, family: Family) -> ThetaDomain {
        match self {
            DomainMode::Proper => family.proper_domain(),
            DomainMode::Extended => family.extended_domain(),
        }
    }
}

/// Where the reported covariance came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeSource {
    ObservedInfo,
    FiniteDifference,
    Louis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub domain: DomainMode,
    /// EM stops once the relative change in log-likelihood drops below this.
    pub tol: f64,
    pub max_em_iter: usize,
    pub max_qn_iter: usize,
    /// Starting values for θ; `None` uses the default grid for the domain.
    pub theta_starts: Option<Vec<f64>>,
    pub min_n: usize,
    pub standard_errors: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            domain: DomainMode::Proper,
            tol: 1e-8,
            max_em_iter: 500,
            max_qn_iter: 200,
            theta_starts: None,
            min_n: 10,
            standard_errors: true,
        }
    }
}

impl FitConfig {
    /// θ starting grid: 0.2, 0.5 and 0.8 of the width of a bounded domain,
    /// or {0.5, 1, 3} on an unbounded one.
    pub fn starts(&self, family: Family) -> Vec<f64> {
        if let Some(s) = &self.theta_starts {
            return s.clone();
        }
        let d = family.proper_domain();
        if d.upper.is_finite() {
            [0.2, 0.5, 0.8].iter().map(|f| d.lower + f * (d.upper - d.lower)).collect()
        } else {
            vec![0.5, 1.0, 3.0]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: Family,
    pub model: String,
    pub method: FitMethod,
    pub domain: DomainMode,
    pub n: usize,
    pub psi: Psi,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub cov: Option<[[f64; 3]; 3]>,
    pub se: Option<[f64; 3]>,
    pub aci95: Option<[[f64; 2]; 3]>,
    pub se_source: Option<SeSource>,
    pub iterations: usize,
    pub converged: bool,
    pub boundary: bool,
    pub score_max_abs: f64,
    pub trace: Vec<TracePoint>,
    pub notes: Vec<String>,
}

impl FitResult {
    pub fn neg_loglik(&self) -> f64 {
        -self.loglik
    }

    /// 100(1 − γ)% Wald intervals Ψ̂_r ± z_{γ/2} √(I^{rr}).
    pub fn aci(&self, gamma: f64) -> Option<[[f64; 2]; 3]> {
        self.se.map(|se| aci(self.psi, se, gamma))
    }
}

pub fn aic(loglik: f64, k: usize) -> f64 {
    2.0 * k as f64 - 2.0 * loglik
}

pub fn bic(loglik: f64, k: usize, n: usize) -> f64 {
    k as f64 * (n as f64).ln() - 2.0 * loglik
}

pub fn aci(psi: Psi, se: [f64; 3], gamma: f64) -> [[f64; 2]; 3] {
    let z = norm_isf(gamma / 2.0);
    let p = psi.to_array();
    [0, 1, 2].map(|i| [p[i] - z * se[i], p[i] + z * se[i]])
}

/// Inverts a symmetric positive-definite information matrix.
pub fn invert_info(info: &[[f64; 3]; 3]) -> Result<[[f64; 3]; 3]> {
    let m = Matrix3::from_fn(|i, j| info[i][j]);
    let chol = m
        .cholesky()
        .ok_or_else(|| NpsError::Singular("information matrix is not positive definite".into()))?;
    let inv = chol.inverse();
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| inv[(i, j)])))
}

pub fn min_eigenvalue(m: &[[f64; 3]; 3]) -> f64 {
    let a = Matrix3::from_fn(|i, j| 0.5 * (m[i][j] + m[j][i]));
    a.symmetric_eigen().eigenvalues.min()
}

pub(crate) fn check_data(data: &[f64], min_n: usize) -> Result<()> {
    if data.len() < min_n.max(1) {
        return Err(NpsError::Data(format!(
            "{} observations; at least {} required",
            data.len(),
            min_n.max(1)
        )));
    }
    if let Some(i) = data.iter().position(|y| !y.is_finite()) {
        return Err(NpsError::Data(format!("non-finite value at position {i}")));
    }
    let (m, s) = mean_sd(data);
    if !(s > 0.0) || !m.is_finite() {
        return Err(NpsError::Data("sample has zero spread".into()));
    }
    Ok(())
}

/// Sample mean and standard deviation (divisor n − 1).
pub(crate) fn mean_sd(data: &[f64]) -> (f64, f64) {
    let n = data.len() as f64;
    let m = data.iter().sum::<f64>() / n;
    let ss = data.iter().map(|y| (y - m) * (y - m)).sum::<f64>();
    (m, (ss / (n - 1.0).max(1.0)).sqrt())
}

pub(crate) fn finish(
    family: Family,
    method: FitMethod,
    domain: DomainMode,
    data: &[f64],
    psi: Psi,
    ll: f64,
) -> FitResult {
    let n = data.len();
    FitResult {
        family,
        model: family.model_label(),
        method,
        domain,
        n,
        psi,
        loglik: ll,
        aic: aic(ll, 3),
        bic: bic(ll, 3, n),
        cov: None,
        se: None,
        aci95: None,
        se_source: None,
        iterations: 0,
        converged: false,
        boundary: false,
        score_max_abs: 0.0,
        trace: Vec::new(),
        notes: Vec::new(),
    }
}

pub(crate) fn attach_cov(fit: &mut FitResult, cov: [[f64; 3]; 3], source: SeSource) {
    let se = [0, 1, 2].map(|i| cov[i][i].max(0.0).sqrt());
    fit.cov = Some(cov);
    fit.se = Some(se);
    fit.aci95 = Some(aci(fit.psi, se, 0.05));
    fit.se_source = Some(source);
}

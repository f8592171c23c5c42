//! Model comparison by AIC with BIC as tie-breaker, including a plain normal
//! baseline.

use super::{aic, bic, check_data, fit_direct, fit_em, FitConfig, FitMethod, FitResult};
use crate::error::{NpsError, Result};
use crate::power_series::Family;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Candidate {
    Nps(Family),
    Normal,
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Candidate::Nps(fam) => write!(f, "{fam}"),
            Candidate::Normal => write!(f, "normal"),
        }
    }
}

impl FromStr for Candidate {
    type Err = NpsError;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("normal") {
            Ok(Candidate::Normal)
        } else {
            s.parse().map(Candidate::Nps)
        }
    }
}

impl From<Candidate> for String {
    fn from(c: Candidate) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for Candidate {
    type Error = NpsError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Closed-form normal MLE (mean and divisor-n variance), k = 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalFit {
    pub n: usize,
    pub mu: f64,
    pub sigma: f64,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
}

pub fn fit_normal(data: &[f64]) -> Result<NormalFit> {
    check_data(data, 2)?;
    let n = data.len();
    let nf = n as f64;
    let mu = data.iter().sum::<f64>() / nf;
    let var = data.iter().map(|y| (y - mu) * (y - mu)).sum::<f64>() / nf;
    let loglik = -0.5 * nf * ((2.0 * std::f64::consts::PI * var).ln() + 1.0);
    Ok(NormalFit {
        n,
        mu,
        sigma: var.sqrt(),
        loglik,
        aic: aic(loglik, 2),
        bic: bic(loglik, 2, n),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub candidate: Candidate,
    pub model: String,
    /// 1 for the lowest AIC; absent for failed fits.
    pub rank: Option<usize>,
    pub k: usize,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub theta: Option<f64>,
    pub neg_loglik: Option<f64>,
    pub aic: Option<f64>,
    pub bic: Option<f64>,
    pub converged: bool,
    pub fit: Option<FitResult>,
    pub error: Option<String>,
}

/// Fits every candidate and ranks the successful ones by AIC, then BIC.
/// A failing candidate keeps its row with the error message.
pub fn compare(data: &[f64], candidates: &[Candidate], method: FitMethod, config: &FitConfig) -> Result<Vec<CompareRow>> {
    if candidates.is_empty() {
        return Err(NpsError::Data("no candidate models requested".into()));
    }
    check_data(data, 2)?;
    let mut rows: Vec<CompareRow> = candidates
        .iter()
        .map(|&c| match c {
            Candidate::Normal => match fit_normal(data) {
                Ok(f) => CompareRow {
                    candidate: c,
                    model: "normal".into(),
                    rank: None,
                    k: 2,
                    mu: Some(f.mu),
                    sigma: Some(f.sigma),
                    theta: None,
                    neg_loglik: Some(-f.loglik),
                    aic: Some(f.aic),
                    bic: Some(f.bic),
                    converged: true,
                    fit: None,
                    error: None,
                },
                Err(e) => failed(c, "normal".into(), 2, e),
            },
            Candidate::Nps(fam) => {
                let res = match method {
                    FitMethod::Direct => fit_direct(fam, data, config),
                    FitMethod::Em => fit_em(fam, data, config),
                };
                match res {
                    Ok(f) => CompareRow {
                        candidate: c,
                        model: f.model.clone(),
                        rank: None,
                        k: 3,
                        mu: Some(f.psi.mu),
                        sigma: Some(f.psi.sigma),
                        theta: Some(f.psi.theta),
                        neg_loglik: Some(-f.loglik),
                        aic: Some(f.aic),
                        bic: Some(f.bic),
                        converged: f.converged,
                        fit: Some(f),
                        error: None,
                    },
                    Err(e) => failed(c, fam.model_label(), 3, e),
                }
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        let key = |r: &CompareRow| (r.aic.unwrap_or(f64::INFINITY), r.bic.unwrap_or(f64::INFINITY));
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    let mut rank = 0;
    for r in rows.iter_mut().filter(|r| r.aic.is_some()) {
        rank += 1;
        r.rank = Some(rank);
    }
    Ok(rows)
}

fn failed(candidate: Candidate, model: String, k: usize, e: NpsError) -> CompareRow {
    CompareRow {
        candidate,
        model,
        rank: None,
        k,
        mu: None,
        sigma: None,
        theta: None,
        neg_loglik: None,
        aic: None,
        bic: None,
        converged: false,
        fit: None,
        error: Some(e.to_string()),
    }
}

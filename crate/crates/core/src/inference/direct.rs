//! Direct maximisation of the log-likelihood.
//!
//! BFGS runs on −ℓ/n in standardised coordinates
//! u = ((μ − ȳ)/s, ln(σ/s), t) with θ = map(t), from each θ start; the best
//! end point is then polished by Newton steps on the analytic Hessian.

use super::likelihood::{fd_observed_info, hessian, loglik, observed_info, score};
use super::optim::bfgs;
use super::transform::ThetaMap;
use super::{
    attach_cov, check_data, finish, invert_info, mean_sd, DomainMode, FitConfig, FitMethod,
    FitResult, Psi, SeSource,
};
use crate::error::Result;
use crate::power_series::Family;
use nalgebra::{Matrix3, Vector3};

/// Relative gap between analytic and finite-difference information above
/// which the finite-difference matrix is used for standard errors.
pub const INFO_FD_TOL: f64 = 1e-3;

struct Coords {
    m: f64,
    s: f64,
    map: ThetaMap,
}

impl Coords {
    fn psi(&self, u: &[f64]) -> Psi {
        Psi::new(self.m + self.s * u[0], self.s * u[1].exp(), self.map.theta(u[2]))
    }

    fn u(&self, p: Psi) -> [f64; 3] {
        [(p.mu - self.m) / self.s, (p.sigma / self.s).ln(), self.map.inv(p.theta)]
    }
}

pub fn fit_direct(family: Family, data: &[f64], config: &FitConfig) -> Result<FitResult> {
    check_data(data, config.min_n)?;
    let (m, s) = mean_sd(data);
    let n = data.len() as f64;
    let domain = config.domain.domain(family);
    let c = Coords {
        m,
        s,
        map: ThetaMap::for_family(family, config.domain),
    };
    let objective = |u: &[f64]| -> (f64, Vec<f64>) {
        let p = c.psi(u);
        if !domain.contains(p.theta) || !(p.sigma > 0.0) {
            return (f64::NAN, vec![0.0; 3]);
        }
        let ll = loglik(family, p, data);
        match score(family, p, data) {
            Ok(g) if ll.is_finite() => {
                let grad = vec![
                    -g[0] * c.s / n,
                    -g[1] * p.sigma / n,
                    -g[2] * c.map.dtheta_dt(u[2]) / n,
                ];
                (-ll / n, grad)
            }
            _ => (f64::NAN, vec![0.0; 3]),
        }
    };

    let mut starts = config.starts(family);
    if config.domain == DomainMode::Extended && config.theta_starts.is_none() {
        starts.extend([-0.5, -2.0]);
    }
    let mut best: Option<(Vec<f64>, f64, usize, bool)> = None;
    for th in starts.into_iter().filter(|&t| domain.contains(t)) {
        let u0 = c.u(Psi::new(m, s, th));
        let out = bfgs(objective, &u0, 1e-9, config.max_qn_iter);
        if !out.f.is_finite() {
            continue;
        }
        if best.as_ref().map_or(true, |b| out.f < b.1) {
            best = Some((out.x, out.f, out.iterations, out.converged));
        }
    }
    let Some((u, _, iterations, qn_converged)) = best else {
        return Err(crate::error::NpsError::Root(
            "no starting value gave a finite log-likelihood".into(),
        ));
    };

    let boundary = c.map.is_boundary(u[2]);
    let mut psi = c.psi(&u);
    if !boundary {
        psi = newton_polish(family, psi, data, domain);
    }
    let ll = loglik(family, psi, data);
    let mut fit = finish(family, FitMethod::Direct, config.domain, data, psi, ll);
    fit.iterations = iterations;
    fit.boundary = boundary;
    let g = score(family, psi, data)?;
    fit.score_max_abs = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cert = 1e-6 * n;
    fit.converged = if boundary {
        g[0].abs() < cert && g[1].abs() < cert
    } else {
        fit.score_max_abs < cert || qn_converged
    };
    fit.trace.push(super::TracePoint { iteration: iterations, loglik: ll });
    if boundary {
        fit.notes.push(format!("theta is attracted to the edge of its domain {domain}"));
    }
    if config.standard_errors && !boundary {
        covariance(&mut fit, family, data);
    }
    Ok(fit)
}

fn newton_polish(family: Family, start: Psi, data: &[f64], domain: crate::power_series::ThetaDomain) -> Psi {
    let mut psi = start;
    let mut ll = loglik(family, psi, data);
    for _ in 0..30 {
        let (Ok(g), Ok(h)) = (score(family, psi, data), hessian(family, psi, data)) else {
            break;
        };
        let hm = -Matrix3::from_fn(|i, j| h[i][j]);
        let Some(chol) = hm.cholesky() else { break };
        let step = chol.solve(&Vector3::new(g[0], g[1], g[2]));
        let mut a = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let p = Psi::new(psi.mu + a * step[0], psi.sigma + a * step[1], psi.theta + a * step[2]);
            if p.sigma > 0.0 && domain.contains(p.theta) {
                let l = loglik(family, p, data);
                if l >= ll {
                    moved = (p.mu - psi.mu).abs() + (p.sigma - psi.sigma).abs() + (p.theta - psi.theta).abs() > 0.0;
                    psi = p;
                    ll = l;
                    break;
                }
            }
            a *= 0.5;
        }
        let size = step.abs().max();
        if !moved || size < 1e-12 * (1.0 + psi.sigma + psi.theta.abs()) {
            break;
        }
    }
    psi
}

/// Observed information at the optimum, checked against finite differences.
fn covariance(fit: &mut FitResult, family: Family, data: &[f64]) {
    let psi = fit.psi;
    let (Ok(an), Ok(fd)) = (observed_info(family, psi, data), fd_observed_info(family, psi, data)) else {
        fit.notes.push("observed information could not be evaluated".into());
        return;
    };
    let floor = 1e-6 * data.len() as f64;
    let mut gap = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            if an[i][j].abs().max(fd[i][j].abs()) > floor {
                gap = gap.max((an[i][j] - fd[i][j]).abs() / fd[i][j].abs().max(floor));
            }
        }
    }
    let (info, source) = if gap > INFO_FD_TOL {
        fit.notes.push(format!(
            "analytic information differs from finite differences by {gap:.2e}; using finite differences"
        ));
        (fd, SeSource::FiniteDifference)
    } else {
        (an, SeSource::ObservedInfo)
    };
    match invert_info(&info) {
        Ok(cov) => attach_cov(fit, cov, source),
        Err(e) => fit.notes.push(e.to_string()),
    }
}

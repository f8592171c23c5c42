//! EM algorithm for the latent count N and Louis standard errors.
//!
//! Given Y = y the posterior of N is proportional to a_n n θ*^{n−1} with
//! θ* = θΦ(z), so E(N | y) = 1 + s₁ and Var(N | y) = s₁ + s₂ − s₁², where
//! s₁ = θ*C''(θ*)/C'(θ*) and s₂ = θ*²C'''(θ*)/C'(θ*).
//!
//! The M-step is run as three conditional maximisations (μ, then σ, then θ),
//! each of which increases the expected complete-data log-likelihood. Plain
//! EM crawls when θ is weakly identified, so steps are extrapolated along the
//! slowest mode under a safeguard that keeps the log-likelihood nondecreasing.

use super::likelihood::{loglik, obs};
use super::transform::ThetaMap;
use super::{
    attach_cov, check_data, finish, invert_info, mean_sd, DomainMode, FitConfig, FitMethod,
    FitResult, Psi, SeSource, TracePoint,
};
use crate::error::{domain_err, NpsError, Result};
use crate::power_series::Family;
use crate::roots::{brent, expand_bracket, safeguarded_newton};
use crate::special::mills_lower;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentPosterior {
    pub ez: Vec<f64>,
    pub varz: Vec<f64>,
}

pub fn e_step(family: Family, psi: Psi, data: &[f64]) -> Result<LatentPosterior> {
    if !family.is_proper(psi.theta) {
        return Err(domain_err("theta", psi.theta, family.proper_domain()));
    }
    if !(psi.sigma > 0.0) {
        return Err(domain_err("sigma", psi.sigma, "(0, inf)"));
    }
    let (ez, varz) = data
        .iter()
        .map(|&y| {
            let o = obs(family, psi, y);
            (1.0 + o.s1, (o.s1 + o.s2 - o.s1 * o.s1).max(0.0))
        })
        .unzip();
    Ok(LatentPosterior { ez, varz })
}

/// Root of Σ z_i − Σ w_i λ(z_i) = 0 in μ, z_i = (y_i − μ)/σ.
fn update_mu(data: &[f64], w: &[f64], mu: f64, sigma: f64) -> Result<f64> {
    let f = |m: f64| {
        let (mut v, mut d) = (0.0, 0.0);
        for (&y, &wi) in data.iter().zip(w) {
            let z = (y - m) / sigma;
            let l = mills_lower(z);
            v += z - wi * l;
            d -= (1.0 + wi * l * (z + l)) / sigma;
        }
        (v, d)
    };
    let (lo, hi) = expand_bracket(|m| f(m).0, mu - sigma, mu + sigma, (f64::NEG_INFINITY, f64::INFINITY), 60)?;
    safeguarded_newton(f, lo, hi, mu, 1e-14, 200)
}

/// Root in τ = 1/σ of n/τ − τS + Σ w_i d_i λ(τ d_i) = 0, d_i = y_i − μ.
fn update_sigma(data: &[f64], w: &[f64], mu: f64, sigma: f64) -> Result<f64> {
    let n = data.len() as f64;
    let ss: f64 = data.iter().map(|y| (y - mu) * (y - mu)).sum();
    let f = |t: f64| {
        let (mut v, mut d) = (n / t - t * ss, -n / (t * t) - ss);
        for (&y, &wi) in data.iter().zip(w) {
            let e = y - mu;
            let l = mills_lower(t * e);
            v += wi * e * l;
            d -= wi * e * e * l * (t * e + l);
        }
        (v, d)
    };
    let t0 = 1.0 / sigma;
    let (lo, hi) = expand_bracket(|t| f(t).0, 0.5 * t0, 2.0 * t0, (0.0, f64::INFINITY), 200)?;
    Ok(1.0 / safeguarded_newton(f, lo, hi, t0, 1e-14, 200)?)
}

/// Root of E(N; θ) = mean of E(N | y); returns θ and whether it hit the edge.
fn update_theta(family: Family, map: ThetaMap, target: f64) -> Result<(f64, bool)> {
    let g = |eta: f64| family.mean_n(map.theta(eta)) - target;
    let (lo, hi) = (-30.0, 30.0);
    let (glo, ghi) = (g(lo), g(hi));
    if glo >= 0.0 {
        return Ok((map.theta(lo), true));
    }
    if ghi <= 0.0 || !ghi.is_finite() {
        let (a, b) = expand_bracket(g, lo, 0.0, (lo, hi), 200).unwrap_or((lo, hi));
        if g(b) <= 0.0 || !g(b).is_finite() {
            return Ok((map.theta(hi), true));
        }
        return Ok((map.theta(brent(g, a, b, 1e-14, 200)?), false));
    }
    Ok((map.theta(brent(g, lo, hi, 1e-14, 200)?), false))
}

/// One ECM iteration: E-step, then the μ, σ and θ updates in turn.
fn em_map(family: Family, map: ThetaMap, data: &[f64], psi: Psi, it: usize) -> Result<(Psi, bool)> {
    let post = e_step(family, psi, data)?;
    let w: Vec<f64> = post.ez.iter().map(|e| e - 1.0).collect();
    let mu = update_mu(data, &w, psi.mu, psi.sigma)
        .map_err(|e| NpsError::Root(format!("EM mu update at iteration {it}: {e}")))?;
    let sigma = update_sigma(data, &w, mu, psi.sigma)
        .map_err(|e| NpsError::Root(format!("EM sigma update at iteration {it}: {e}")))?;
    let target = post.ez.iter().sum::<f64>() / data.len() as f64;
    let (theta, edge) = update_theta(family, map, target)
        .map_err(|e| NpsError::Root(format!("EM theta update at iteration {it}: {e}")))?;
    Ok((Psi::new(mu, sigma, theta), edge))
}

/// Largest ECM step in (μ/σ, ln σ, η) still counted as converged. On flat
/// likelihoods the relative log-likelihood change alone stops far from the
/// optimum.
const STEP_TOL: f64 = 1e-8;

/// EM with geometric extrapolation. Each cycle takes three ECM steps
/// x₁, x₂, x₃ from x₀; near the optimum the error then lies along the slowest
/// mode of the ECM map, whose rate λ is estimated from r₁ = x₂ − x₁ and
/// r₂ = x₃ − x₂, and the jump x₃ + r₂λ/(1 − λ) is shortened until it does not
/// lower the log-likelihood. Coordinates are (μ, ln σ, η) with θ = map(η).
/// A run whose η drifts outward past the boundary threshold stops once μ and
/// σ have converged, flagged as a boundary fit.
fn run(family: Family, data: &[f64], mut psi: Psi, max_iter: usize, tol: f64) -> Result<EmRun> {
    let map = ThetaMap::for_family(family, DomainMode::Proper);
    let to_x = |p: Psi| [p.mu, p.sigma.ln(), map.inv(p.theta)];
    let from_x = |x: [f64; 3]| Psi::new(x[0], x[1].exp(), map.theta(x[2]));
    let mut ll = loglik(family, psi, data);
    let mut trace = vec![TracePoint { iteration: 0, loglik: ll }];
    let mut converged = false;
    let mut boundary = false;
    let mut it = 0;
    while it < max_iter && !converged {
        let mut xs = vec![to_x(psi)];
        for _ in 0..3 {
            let (p, edge) = em_map(family, map, data, psi, it + 1)?;
            it += 1;
            let l = loglik(family, p, data);
            trace.push(TracePoint { iteration: it, loglik: l });
            let rel = (l - ll).abs() / ll.abs().max(f64::MIN_POSITIVE);
            let x = to_x(p);
            let last = xs[xs.len() - 1];
            let steps: [f64; 3] = std::array::from_fn(|i| (x[i] - last[i]).abs() / if i == 0 { p.sigma } else { 1.0 });
            let outward = map.is_boundary(x[2]) && x[2].abs() > last[2].abs();
            psi = p;
            ll = l;
            boundary = edge;
            xs.push(x);
            if rel < tol && steps[0].max(steps[1]) < STEP_TOL && (steps[2] < STEP_TOL || outward) {
                converged = true;
                boundary |= outward;
            }
            if converged || edge || it >= max_iter {
                break;
            }
        }
        if converged || boundary || xs.len() < 4 {
            continue;
        }
        let r1: [f64; 3] = std::array::from_fn(|i| xs[2][i] - xs[1][i]);
        let r2: [f64; 3] = std::array::from_fn(|i| xs[3][i] - xs[2][i]);
        let dot = |a: &[f64; 3], b: &[f64; 3]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let lambda = dot(&r2, &r1) / dot(&r1, &r1);
        if !(lambda > 0.0 && lambda.is_finite()) {
            continue;
        }
        // λ ≥ 1 is a steady drift, typically θ heading for a domain edge.
        let mut jump = if lambda < 1.0 { (lambda / (1.0 - lambda)).min(1e4) } else { 1e4 };
        while jump > 0.5 {
            let pe = from_x(std::array::from_fn(|i| xs[3][i] + jump * r2[i]));
            if family.is_proper(pe.theta) {
                let le = loglik(family, pe, data);
                if le >= ll {
                    trace.push(TracePoint { iteration: it, loglik: le });
                    psi = pe;
                    ll = le;
                    break;
                }
            }
            jump *= 0.5;
        }
    }
    Ok(EmRun {
        psi,
        ll,
        trace,
        iterations: it,
        converged,
        boundary,
    })
}

struct EmRun {
    psi: Psi,
    ll: f64,
    trace: Vec<TracePoint>,
    iterations: usize,
    converged: bool,
    boundary: bool,
}

/// Iterations spent on each start before the best one is run to convergence.
const SCREEN_ITER: usize = 10;

pub fn fit_em(family: Family, data: &[f64], config: &FitConfig) -> Result<FitResult> {
    check_data(data, config.min_n)?;
    if config.domain != DomainMode::Proper {
        return Err(NpsError::Unsupported("EM on an extended theta domain".into()));
    }
    let (m, s) = mean_sd(data);
    let domain = family.proper_domain();
    let mut best: Option<EmRun> = None;
    let mut first_err = None;
    for th in config.starts(family).into_iter().filter(|&t| domain.contains(t)) {
        match run(family, data, Psi::new(m, s, th), SCREEN_ITER, config.tol) {
            Ok(r) if best.as_ref().map_or(true, |b| r.ll > b.ll) => best = Some(r),
            Ok(_) => {}
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some(screen) = best else {
        return Err(first_err.unwrap_or_else(|| NpsError::Root("no valid theta start".into())));
    };
    let r = if screen.converged {
        screen
    } else {
        let rest = run(family, data, screen.psi, config.max_em_iter.saturating_sub(screen.iterations), config.tol)?;
        let offset = screen.iterations;
        let mut trace = screen.trace;
        trace.extend(rest.trace.into_iter().skip(1).map(|p| TracePoint {
            iteration: p.iteration + offset,
            loglik: p.loglik,
        }));
        EmRun {
            trace,
            iterations: rest.iterations + offset,
            ..rest
        }
    };

    let mut fit = finish(family, FitMethod::Em, DomainMode::Proper, data, r.psi, r.ll);
    fit.iterations = r.iterations;
    fit.converged = r.converged;
    fit.boundary = r.boundary;
    fit.trace = r.trace;
    let g = super::likelihood::score(family, r.psi, data)?;
    fit.score_max_abs = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if r.boundary {
        fit.notes.push(format!("theta is attracted to the edge of its domain {domain}"));
    }
    if !r.converged {
        fit.notes.push(format!("EM stopped after {} iterations", r.iterations));
    }
    if config.standard_errors && !r.boundary {
        match louis_se(family, r.psi, data) {
            Ok((cov, _)) => attach_cov(&mut fit, cov, SeSource::Louis),
            Err(e) => fit.notes.push(e.to_string()),
        }
    }
    Ok(fit)
}

/// Components of the missing-information identity I = l_c − l_m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LouisInfo {
    /// Conditional expectation of the complete-data information.
    pub lc: [[f64; 3]; 3],
    /// Conditional covariance of the complete-data score.
    pub lm: [[f64; 3]; 3],
    pub info: [[f64; 3]; 3],
}

pub fn louis_info(family: Family, psi: Psi, data: &[f64]) -> Result<LouisInfo> {
    let post = e_step(family, psi, data)?;
    let (s, th) = (psi.sigma, psi.theta);
    let s2 = s * s;
    let (dlc, d2lc) = family.log_derivs(th);
    let mut lc = [[0.0; 3]; 3];
    let mut lm = [[0.0; 3]; 3];
    let mut sum_ez = 0.0;
    for (i, &y) in data.iter().enumerate() {
        let u = (y - psi.mu) / s;
        let l = mills_lower(u);
        let w = post.ez[i] - 1.0;
        let k = u * l + l * l;
        lc[0][0] += (1.0 + w * k) / s2;
        lc[0][1] += (2.0 * u - w * l + w * u * k) / s2;
        lc[1][1] += (-1.0 + 3.0 * u * u - 2.0 * w * u * l + w * u * u * k) / s2;
        sum_ez += post.ez[i];
        let b = [-l / s, -u * l / s, 1.0 / th];
        for a in 0..3 {
            for c in 0..3 {
                lm[a][c] += post.varz[i] * b[a] * b[c];
            }
        }
    }
    lc[2][2] = sum_ez / (th * th) + data.len() as f64 * (d2lc - dlc * dlc);
    lc[1][0] = lc[0][1];
    let info = std::array::from_fn(|a| std::array::from_fn(|c| lc[a][c] - lm[a][c]));
    Ok(LouisInfo { lc, lm, info })
}

/// Covariance and standard errors from the Louis information.
pub fn louis_se(family: Family, psi: Psi, data: &[f64]) -> Result<([[f64; 3]; 3], [f64; 3])> {
    let cov = invert_info(&louis_info(family, psi, data)?.info)?;
    let se = [0, 1, 2].map(|i| cov[i][i].max(0.0).sqrt());
    Ok((cov, se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{fit_direct, min_eigenvalue, observed_info};
    use crate::oracle::posterior_sums;
    use rand::SeedableRng;

    fn sample(f: Family, psi: Psi, n: usize, seed: u64) -> Vec<f64> {
        let m = crate::NpsModel::new(f, psi.mu, psi.sigma, psi.theta).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| m.sample_inverse(&mut rng).unwrap()).collect()
    }

    #[test]
    fn geometric_posterior_mean() {
        // θ* = 0.8 · 0.625 = 0.5
        let z = crate::special::norm_ppf(0.625);
        let p = e_step(Family::Geometric, Psi::new(0.0, 1.0, 0.8), &[z]).unwrap();
        assert!((p.ez[0] - 3.0).abs() < 1e-12);
        assert!(e_step(Family::Geometric, Psi::new(0.0, 1.0, -0.5), &[0.0]).is_err());
    }

    #[test]
    fn e_step_matches_posterior_sums() {
        for (f, theta) in [
            (Family::Geometric, 0.7),
            (Family::Poisson, 2.0),
            (Family::Logarithmic, 0.9),
            (Family::Binomial { m: 6 }, 1.5),
            (Family::NegativeBinomial { k: 3 }, 0.6),
        ] {
            for y in [-1.3, 0.0, 0.4, 2.2] {
                let p = e_step(f, Psi::new(0.0, 1.0, theta), &[y]).unwrap();
                let ts = theta * crate::special::norm_cdf(y);
                let (e, v) = posterior_sums(f, ts, 1e-15).unwrap();
                assert!((p.ez[0] - e.value).abs() < 1e-8, "{f} {y}");
                assert!((p.varz[0] - v.value).abs() < 1e-8, "{f} {y}");
            }
        }
    }

    #[test]
    fn louis_equals_observed_information() {
        let psi = Psi::new(0.2, 1.3, 0.6);
        let data = sample(Family::Geometric, psi, 300, 4);
        let l = louis_info(Family::Geometric, psi, &data).unwrap();
        let i = observed_info(Family::Geometric, psi, &data).unwrap();
        for a in 0..3 {
            for c in 0..3 {
                assert!((l.info[a][c] - i[a][c]).abs() < 1e-8 * i[a][c].abs().max(1.0));
            }
        }
        assert!(min_eigenvalue(&l.lm) >= -1e-10);
    }

    #[test]
    fn ascent_and_agreement_with_direct() {
        let data = sample(Family::Poisson, Psi::new(0.0, 1.0, 0.8), 1000, 2);
        let cfg = FitConfig::default();
        let em = fit_em(Family::Poisson, &data, &cfg).unwrap();
        for p in em.trace.windows(2) {
            assert!(p[1].loglik - p[0].loglik >= -1e-10);
        }
        let d = fit_direct(Family::Poisson, &data, &cfg).unwrap();
        let (a, b) = (em.psi.to_array(), d.psi.to_array());
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() < 1e-4, "{em:?}\n{d:?}");
        }
    }
}

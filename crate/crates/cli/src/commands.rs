//! Subcommand implementations. Each returns the process exit code on
//! success or a [`Failure`] that maps to one.

use crate::ingest::{read_column, DataColumn};
use crate::{
    CompareArgs, CurveArgs, FitArgs, FitOptionsEm, Format, ModelArgs, MomentMethodArg, MomentsArgs, OutputArgs,
    SampleArgs, Sampler, SimulateArgs, VerifyArgs,
};
use nps::inference::{
    self, e_step, fit_direct, fit_em, info_report, Candidate, CompareRow, DomainMode, FitConfig, FitMethod,
    FitResult, Psi, SimConfig, INFO_GAP_TOL,
};
use nps::moments::{self, MomentSummary};
use nps::oracle::{integrate_pdf, posterior_sums, OracleReport};
use nps::{Family, NpsError, NpsModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

#[derive(Debug)]
pub enum Failure {
    Compute(String),
    Ingest(String),
    NotConverged,
    Usage(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Compute(m) | Failure::Ingest(m) | Failure::Usage(m) => f.write_str(m),
            Failure::NotConverged => f.write_str("fit did not converge"),
        }
    }
}

impl From<NpsError> for Failure {
    fn from(e: NpsError) -> Self {
        match e {
            NpsError::Domain { .. } | NpsError::FamilySpec(_) => Failure::Usage(e.to_string()),
            NpsError::Data(_) => Failure::Ingest(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn load(path: &Path, column: Option<&str>) -> Result<DataColumn, Failure> {
    read_column(path, column).map_err(|e| Failure::Ingest(e.to_string()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Prints `text` (or the JSON form) and writes JSON to `--json` if given.
fn emit<T: Serialize>(out: &OutputArgs, value: &T, text: impl FnOnce() -> String) -> Result<(), Failure> {
    let json = to_json(value);
    if let Some(path) = &out.json {
        std::fs::write(path, &json).map_err(|e| Failure::Compute(format!("cannot write {}: {e}", path.display())))?;
    }
    match out.format {
        Format::Json => print!("{json}"),
        Format::Text | Format::Csv => print!("{}", text()),
    }
    Ok(())
}

fn model(m: &ModelArgs) -> Result<NpsModel, Failure> {
    Ok(NpsModel::new(m.family, m.mu, m.sigma, m.theta)?)
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

// --- fit ---------------------------------------------------------------------

#[derive(Serialize)]
struct FitReport<'a> {
    source: &'a str,
    column: &'a str,
    #[serde(flatten)]
    fit: &'a FitResult,
}

fn run_fit(family: Family, data: &[f64], method: FitMethod, config: &FitConfig) -> Result<FitResult, Failure> {
    let fit = match method {
        FitMethod::Direct => fit_direct(family, data, config),
        FitMethod::Em => fit_em(family, data, config),
    };
    Ok(fit?)
}

pub fn fit(a: FitArgs) -> CmdResult {
    let config = a.fit.config();
    if a.fit.extended && matches!(a.fit.method, crate::Method::Em) {
        return Err(Failure::Usage("--extended is only available with --method direct".into()));
    }
    let data = load(&a.data.data, a.data.column.as_deref())?;
    let fit = run_fit(a.family, &data.values, a.fit.method.into(), &config)?;
    let report = FitReport {
        source: &data.source,
        column: &data.column,
        fit: &fit,
    };
    emit(&a.out, &report, || fit_text(&report))?;
    Ok(if fit.converged { 0 } else { Failure::NotConverged.code() })
}

fn fit_text(r: &FitReport) -> String {
    let f = r.fit;
    let mut s = String::new();
    let _ = writeln!(s, "model       {} ({:?}, {:?} domain)", f.model, f.method, f.domain);
    let _ = writeln!(s, "data        {} [{}], n = {}", r.source, r.column, f.n);
    for (i, name) in ["mu", "sigma", "theta"].iter().enumerate() {
        let v = f.psi.to_array()[i];
        match (f.se, f.aci95) {
            (Some(se), Some(ci)) => {
                let _ = writeln!(s, "{name:<11} {v:.6}  se {:.6}  95% [{:.6}, {:.6}]", se[i], ci[i][0], ci[i][1]);
            }
            _ => {
                let _ = writeln!(s, "{name:<11} {v:.6}");
            }
        }
    }
    let _ = writeln!(s, "-log L      {:.4}", f.neg_loglik());
    let _ = writeln!(s, "AIC         {:.4}", f.aic);
    let _ = writeln!(s, "BIC         {:.4}", f.bic);
    let _ = writeln!(s, "iterations  {}", f.iterations);
    let _ = writeln!(s, "converged   {}{}", f.converged, if f.boundary { " (theta at domain boundary)" } else { "" });
    for n in &f.notes {
        let _ = writeln!(s, "note        {n}");
    }
    s
}

// --- compare -----------------------------------------------------------------

#[derive(Serialize)]
struct CompareReport<'a> {
    source: &'a str,
    column: &'a str,
    n: usize,
    method: FitMethod,
    rows: &'a [CompareRow],
}

pub fn compare(a: CompareArgs) -> CmdResult {
    let candidates = a
        .families
        .iter()
        .map(|s| Candidate::from_str(s))
        .collect::<Result<Vec<_>, _>>()?;
    let data = load(&a.data.data, a.data.column.as_deref())?;
    let method = a.fit.method.into();
    let rows = inference::compare(&data.values, &candidates, method, &a.fit.config())?;
    let report = CompareReport {
        source: &data.source,
        column: &data.column,
        n: data.n,
        method,
        rows: &rows,
    };
    let text = || match a.out.format {
        Format::Csv => compare_csv(&rows),
        _ => compare_text(&rows),
    };
    emit(&a.out, &report, text)?;
    if rows.iter().any(|r| r.rank.is_some()) {
        Ok(0)
    } else {
        Err(Failure::Compute("no candidate could be fitted".into()))
    }
}

fn compare_text(rows: &[CompareRow]) -> String {
    let mut s = format!(
        "{:<5} {:<8} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
        "rank", "model", "mu", "sigma", "theta", "-log L", "AIC", "BIC"
    );
    for r in rows {
        let rank = r.rank.map_or_else(|| "-".into(), |k| k.to_string());
        let _ = write!(
            s,
            "{:<5} {:<8} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}",
            rank,
            r.model,
            num(r.mu),
            num(r.sigma),
            num(r.theta),
            num(r.neg_loglik),
            num(r.aic),
            num(r.bic)
        );
        if let Some(e) = &r.error {
            let _ = write!(s, "  failed: {e}");
        } else if !r.converged {
            s.push_str("  not converged");
        }
        s.push('\n');
    }
    s
}

fn compare_csv(rows: &[CompareRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(["rank", "candidate", "model", "k", "mu", "sigma", "theta", "neg_loglik", "aic", "bic", "converged", "error"]);
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for r in rows {
        let _ = w.write_record([
            r.rank.map_or_else(String::new, |k| k.to_string()),
            r.candidate.to_string(),
            r.model.clone(),
            r.k.to_string(),
            opt(r.mu),
            opt(r.sigma),
            opt(r.theta),
            opt(r.neg_loglik),
            opt(r.aic),
            opt(r.bic),
            r.converged.to_string(),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}

// --- moments -----------------------------------------------------------------

#[derive(Serialize)]
struct MomentsReport {
    family: Family,
    model: String,
    mu: f64,
    sigma: f64,
    theta: f64,
    #[serde(flatten)]
    summary: MomentSummary,
}

pub fn moments(a: MomentsArgs) -> CmdResult {
    let m = &a.model;
    let summary = if m.theta == 0.0 {
        if a.method != MomentMethodArg::Integral {
            return Err(Failure::Usage("theta = 0 is only available with --method integral (normal limit)".into()));
        }
        moments::moments_theta_zero_limit(m.family, m.mu, m.sigma)?
    } else {
        let model = model(m)?;
        match a.method {
            MomentMethodArg::Integral => moments::moments_quantile_integral(&model)?,
            MomentMethodArg::Series => moments::moments_series(&model, a.series_tol)?,
            MomentMethodArg::Approx => moments::approx_moments(&model)?,
            MomentMethodArg::MonteCarlo => {
                let r = nps::oracle::mc_moments(&model, a.draws, a.seed)?;
                let raw = [r[0].value, r[1].value, r[2].value, r[3].value];
                MomentSummary::from_raw(raw, moments::MomentMethod::MonteCarlo, r[0].error_estimate)
            }
        }
    };
    let report = MomentsReport {
        family: m.family,
        model: m.family.model_label(),
        mu: m.mu,
        sigma: m.sigma,
        theta: m.theta,
        summary,
    };
    emit(&a.out, &report, || moments_text(&report))?;
    Ok(0)
}

fn moments_text(r: &MomentsReport) -> String {
    let s = &r.summary;
    let mut out = format!("{}({}, {}, {}) by {:?}\n", r.model, r.mu, r.sigma, r.theta, s.method);
    for (name, v) in [
        ("E(Y)", Some(s.m1)),
        ("E(Y^2)", Some(s.m2)),
        ("E(Y^3)", s.m3),
        ("E(Y^4)", s.m4),
        ("Var", Some(s.variance)),
        ("Sk", s.skewness),
        ("Kur", s.kurtosis),
    ] {
        let _ = writeln!(out, "{name:<8} {}", num(v));
    }
    let _ = writeln!(out, "error    {:.1e}", s.est_error);
    out
}

// --- sample ------------------------------------------------------------------

pub fn sample(a: SampleArgs) -> CmdResult {
    let m = model(&a.model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut out = String::with_capacity(a.count as usize * 20);
    for _ in 0..a.count {
        let y = match a.sampler {
            Sampler::Inverse => m.sample_inverse(&mut rng)?,
            Sampler::Compound => m.sample_compound(&mut rng)?,
        };
        let _ = writeln!(out, "{y}");
    }
    print!("{out}");
    Ok(0)
}

// --- curve -------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CurveColumn {
    Pdf,
    Cdf,
    Hazard,
}

fn parse_range(s: &str) -> Result<(f64, f64, usize), Failure> {
    let bad = || Failure::Usage(format!("range '{s}' is not lo:hi:steps with lo < hi and steps >= 1"));
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, steps] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let steps: usize = steps.trim().parse().map_err(|_| bad())?;
    if !(lo < hi && lo.is_finite() && hi.is_finite() && steps >= 1) {
        return Err(bad());
    }
    Ok((lo, hi, steps))
}

pub fn curve(a: CurveArgs) -> CmdResult {
    let m = model(&a.model)?;
    let (lo, hi, steps) = match &a.range {
        Some(r) => parse_range(r)?,
        None => (m.mu() - 5.0 * m.sigma(), m.mu() + 5.0 * m.sigma(), 200),
    };
    let mut out = String::from("y");
    for c in &a.what {
        out.push_str(match c {
            CurveColumn::Pdf => ",pdf",
            CurveColumn::Cdf => ",cdf",
            CurveColumn::Hazard => ",hazard",
        });
    }
    out.push('\n');
    for i in 0..=steps {
        let y = if i == steps { hi } else { lo + (hi - lo) * i as f64 / steps as f64 };
        let _ = write!(out, "{y}");
        for c in &a.what {
            let v = match c {
                CurveColumn::Pdf => m.pdf(y),
                CurveColumn::Cdf => m.cdf(y),
                CurveColumn::Hazard => m.hazard(y),
            };
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    print!("{out}");
    Ok(0)
}

// --- simulate ----------------------------------------------------------------

fn parse_truth(s: &str) -> Result<Psi, Failure> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Usage(format!("truth '{s}' is not mu,sigma,theta")))?;
    match v.as_slice() {
        &[mu, sigma, theta] => Ok(Psi::new(mu, sigma, theta)),
        _ => Err(Failure::Usage(format!("truth '{s}' needs exactly three values"))),
    }
}

impl FitOptionsEm {
    fn config(&self) -> FitConfig {
        FitConfig {
            domain: if self.extended { DomainMode::Extended } else { DomainMode::Proper },
            tol: self.tol,
            max_em_iter: self.max_em_iter,
            max_qn_iter: self.max_qn_iter,
            ..FitConfig::default()
        }
    }
}

pub fn simulate(a: SimulateArgs) -> CmdResult {
    let truth = parse_truth(&a.truth)?;
    if a.replicates == 0 || a.n == 0 {
        return Err(Failure::Usage("--n and --replicates must be positive".into()));
    }
    let cfg = SimConfig {
        family: a.family,
        truth,
        n: a.n,
        replicates: a.replicates,
        seed: a.seed,
        method: a.fit.method.into(),
        fit: a.fit.config(),
    };
    let s = inference::simulate(&cfg)?;
    emit(&a.out, &s, || {
        let mut t = format!(
            "{} truth ({}, {}, {}), n = {}, {} replicates, seed {}\n",
            s.model, truth.mu, truth.sigma, truth.theta, s.n, s.replicates, s.seed
        );
        let row = |name: &str, v: [f64; 3]| format!("{name:<15} {:>10.4} {:>10.4} {:>10.4}\n", v[0], v[1], v[2]);
        t.push_str(&format!("{:<15} {:>10} {:>10} {:>10}\n", "", "mu", "sigma", "theta"));
        t.push_str(&row("mean estimate", s.mean_estimate));
        t.push_str(&row("empirical se", s.empirical_se));
        if let Some(se) = s.mean_se {
            t.push_str(&row("mean se", se));
        }
        t.push_str(&row("mean |error|", s.mean_abs_error));
        let _ = writeln!(
            t,
            "fitted {}, failed {}, not converged {}, boundary {}",
            s.fitted, s.failed, s.not_converged, s.boundary
        );
        t
    })?;
    Ok(0)
}

// --- verify ------------------------------------------------------------------

fn check_line(check: &str, r: &OracleReport, reference: f64, tol: f64) -> (String, bool) {
    let gap = (r.value - reference).abs();
    let ok = gap <= tol;
    let line = format!(
        "check={check} {r} reference={reference:.12e} gap={gap:.3e} tol={tol:.1e} status={}",
        if ok { "ok" } else { "fail" }
    );
    (line, ok)
}

pub fn verify(a: VerifyArgs) -> CmdResult {
    let mut lines = Vec::new();
    let mut all_ok = true;
    let mut push = |(line, ok): (String, bool)| {
        all_ok &= ok;
        lines.push(line);
    };

    for (f, theta) in [
        (Family::Geometric, 0.5),
        (Family::Geometric, -2.0),
        (Family::Poisson, 3.0),
        (Family::Logarithmic, 0.7),
        (Family::Binomial { m: 5 }, 1.0),
        (Family::NegativeBinomial { k: 2 }, 0.5),
    ] {
        let m = NpsModel::standard(f, theta)?;
        push(check_line("normalization", &integrate_pdf(&m, 0)?, 1.0, 1e-8));
    }
    let ng = NpsModel::standard(Family::Geometric, 0.5)?;
    push(check_line("mean-table", &integrate_pdf(&ng, 1)?, 0.3894, 1e-4));
    let np = NpsModel::standard(Family::Poisson, 1.0)?;
    push(check_line("second-moment-table", &integrate_pdf(&np, 2)?, 0.9677 + 0.2781 * 0.2781, 1e-4));

    for (f, theta) in [
        (Family::Geometric, 0.8),
        (Family::Poisson, 2.0),
        (Family::Logarithmic, 0.6),
        (Family::Binomial { m: 4 }, 1.5),
        (Family::NegativeBinomial { k: 3 }, 0.4),
    ] {
        let p = e_step(f, Psi::new(0.0, 1.0, theta), &[0.0])?;
        let (e, v) = posterior_sums(f, theta * 0.5, 1e-15)?;
        push(check_line("e-step-mean", &e, p.ez[0], 1e-8));
        push(check_line("e-step-variance", &v, p.varz[0], 1e-8));
    }

    let (data, psi, origin) = match &a.data {
        Some(path) => {
            let d = load(path, a.column.as_deref())?;
            let fit = fit_direct(a.family, &d.values, &FitConfig::default())?;
            (d.values, fit.psi, format!("mle:{}", d.source))
        }
        None => {
            let psi = Psi::new(0.0, 1.0, default_theta(a.family));
            let m = NpsModel::new(a.family, psi.mu, psi.sigma, psi.theta)?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let d = (0..a.n).map(|_| m.sample_inverse(&mut rng)).collect::<Result<Vec<_>, _>>()?;
            (d, psi, format!("simulated:n={}:seed={}", a.n, a.seed))
        }
    };
    let info = info_report(a.family, psi, &data)?;
    let names = ["mu", "sigma", "theta"];
    for i in 0..3 {
        for j in i..3 {
            let fd = info.finite_difference[i][j];
            let scale = fd.abs().max(1e-300);
            let gap_a = (info.analytic[i][j] - fd).abs() / scale;
            let gap_p = (info.as_printed[i][j] - fd).abs() / scale;
            let ok = gap_a <= INFO_GAP_TOL || fd.abs() <= 1e-6 * data.len() as f64;
            all_ok &= ok;
            lines.push(format!(
                "check=observed-info entry=I_{}{} family={} at={origin} finite_difference={fd:.10e} analytic={:.10e} as_printed={:.10e} rel_gap_analytic={gap_a:.3e} rel_gap_printed={gap_p:.3e} status={}",
                names[i],
                names[j],
                a.family,
                info.analytic[i][j],
                info.as_printed[i][j],
                if !ok {
                    "fail"
                } else if gap_p > INFO_GAP_TOL {
                    "printed-form-discrepancy"
                } else {
                    "ok"
                }
            ));
        }
    }
    for l in &lines {
        println!("{l}");
    }
    Ok(if all_ok { 0 } else { 1 })
}

fn default_theta(family: Family) -> f64 {
    let d = family.proper_domain();
    if d.upper.is_finite() {
        0.5 * d.upper
    } else {
        1.0
    }
}

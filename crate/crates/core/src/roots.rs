//! Scalar root finding: Brent's method and a Newton iteration safeguarded by
//! bisection, plus geometric bracket expansion.

use crate::error::{NpsError, Result};

/// Widens `[lo, hi]` geometrically until `f` changes sign, keeping the
/// endpoints inside `(min, max)`.
pub fn expand_bracket<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    limits: (f64, f64),
    max_steps: usize,
) -> Result<(f64, f64)> {
    let (min, max) = limits;
    let mut flo = f(lo);
    let mut fhi = f(hi);
    for _ in 0..max_steps {
        if flo.is_finite() && fhi.is_finite() && flo * fhi <= 0.0 {
            return Ok((lo, hi));
        }
        let width = hi - lo;
        if flo.abs() < fhi.abs() && flo.is_finite() {
            let next = lo - 1.6 * width;
            lo = if next <= min { min + 0.5 * (lo - min) } else { next };
            flo = f(lo);
        } else {
            let next = hi + 1.6 * width;
            hi = if next >= max { max - 0.5 * (max - hi) } else { next };
            fhi = f(hi);
        }
    }
    Err(NpsError::Root(format!(
        "no sign change found in [{lo}, {hi}] (f = {flo}, {fhi})"
    )))
}

/// Brent's method on a sign-changing bracket.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(NpsError::Root(format!("[{a}, {b}] does not bracket a root")));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(NpsError::Root(format!("Brent did not converge in {max_iter} iterations")))
}

/// Newton's method on a bracket, falling back to bisection whenever the
/// Newton step leaves the bracket or fails to halve the residual.
/// `f` returns the value and derivative.
pub fn safeguarded_newton<F: FnMut(f64) -> (f64, f64)>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    x0: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64> {
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo * fhi > 0.0 {
        return Err(NpsError::Root(format!("[{lo}, {hi}] does not bracket a root")));
    }
    let increasing = fhi > flo;
    let mut x = x0.clamp(lo, hi);
    let mut last_abs = f64::INFINITY;
    for _ in 0..max_iter {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx > 0.0) == increasing {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - fx / dfx;
        let use_newton = dfx.is_finite()
            && dfx != 0.0
            && newton > lo
            && newton < hi
            && fx.abs() <= 0.5 * last_abs;
        let next = if use_newton { newton } else { 0.5 * (lo + hi) };
        last_abs = fx.abs();
        if (next - x).abs() <= xtol * (1.0 + x.abs()) || hi - lo <= xtol * (1.0 + x.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Err(NpsError::Root(format!(
        "safeguarded Newton did not converge in {max_iter} iterations"
    )))
}

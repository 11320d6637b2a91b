//! Bracketed root finding (Brent's method).

use crate::error::{Error, Result};

const MAX_ITER: usize = 200;

/// Finds a root of `g` in `[lo, hi]` with Brent's method.
///
/// Requires `g(lo) * g(hi) <= 0`. Iteration stops once the bracket
/// half-width drops below `0.5 * tol + 2 * eps * |x|`, so the returned point
/// is always inside the initial bracket.
pub fn find_root_bracketed<G>(g: G, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "root tolerance must be positive, got {tol}"
        )));
    }
    brent(g, lo, hi, tol, 0.0)
}

/// Like [`find_root_bracketed`] with the tolerance taken relative to the
/// current iterate, so roots close to zero are resolved to full relative
/// precision.
pub fn find_root_relative<G>(g: G, lo: f64, hi: f64, rel_tol: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "root tolerance must be positive, got {rel_tol}"
        )));
    }
    brent(g, lo, hi, f64::MIN_POSITIVE, rel_tol)
}

fn brent<G>(g: G, lo: f64, hi: f64, abs_tol: f64, rel_tol: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::InvalidInput(format!("invalid bracket [{lo}, {hi}]")));
    }
    let eval = |x: f64| -> Result<f64> {
        let y = g(x);
        if y.is_nan() {
            Err(Error::NonFinite(format!(
                "root function returned NaN at x = {x}"
            )))
        } else {
            Ok(y)
        }
    };

    let mut a = lo;
    let mut b = hi;
    let mut fa = eval(a)?;
    let mut fb = eval(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket {
            lo,
            hi,
            g_lo: fa,
            g_hi: fb,
        });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
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
        let tol1 = (2.0 * f64::EPSILON + 0.5 * rel_tol) * b.abs() + 0.5 * abs_tol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Inverse quadratic interpolation, or secant when only two points
            // are distinct.
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * m * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol1 * q).abs()).min((e * q).abs()) {
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
        b += if d.abs() > tol1 { d } else { tol1.copysign(m) };
        fb = eval(b)?;
    }
    Ok(b)
}

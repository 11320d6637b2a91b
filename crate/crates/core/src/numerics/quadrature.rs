//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

/// Tolerances for [`integrate_adaptive`].
///
/// The accepted error is `max(abs_tol, rel_tol * |I|)`, where `|I|` is
/// estimated from a coarse composite rule before refinement starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_depth: 60,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_depth: usize) -> Result<Self> {
        let spec = Self {
            abs_tol,
            rel_tol,
            max_depth,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.max_depth >= 1) {
            return Err(Error::InvalidInput(format!(
                "quadrature tolerances must be positive and max_depth >= 1, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Same spec with both tolerances scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            max_depth: self.max_depth,
        }
    }
}

// Panels used for the initial magnitude estimate.
const COARSE_PANELS: usize = 8;

/// Integrates `f` over `[lo, hi]` with recursive adaptive Simpson.
///
/// Returns `0` for an empty interval. Fails with [`Error::NonFinite`] as soon
/// as `f` returns a non-finite value, and with [`Error::DepthExceeded`] when a
/// sub-interval cannot meet its share of the tolerance within `max_depth`
/// bisections.
pub fn integrate_adaptive<F>(f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "integration limits must be finite, got [{lo}, {hi}]"
        )));
    }
    if lo > hi {
        return Err(Error::InvalidInput(format!(
            "integration limits out of order: [{lo}, {hi}]"
        )));
    }
    if lo == hi {
        return Ok(0.0);
    }

    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFinite(format!(
                "integrand returned {y} at x = {x}"
            )))
        }
    };

    // Coarse composite Simpson, one panel at a time; each panel seeds the
    // recursion with its endpoint and midpoint values.
    let width = (hi - lo) / COARSE_PANELS as f64;
    let mut nodes = Vec::with_capacity(2 * COARSE_PANELS + 1);
    for i in 0..=2 * COARSE_PANELS {
        let x = if i == 2 * COARSE_PANELS {
            hi
        } else {
            lo + 0.5 * width * i as f64
        };
        nodes.push((x, eval(x)?));
    }
    let mut panels = Vec::with_capacity(COARSE_PANELS);
    let mut magnitude = 0.0;
    for p in 0..COARSE_PANELS {
        let (a, fa) = nodes[2 * p];
        let (m, fm) = nodes[2 * p + 1];
        let (b, fb) = nodes[2 * p + 2];
        let whole = simpson(a, b, fa, fm, fb);
        magnitude += whole.abs();
        panels.push((a, m, b, fa, fm, fb, whole));
    }

    let tol = spec.abs_tol.max(spec.rel_tol * magnitude);
    let panel_tol = tol / COARSE_PANELS as f64;
    let mut total = 0.0;
    let mut compensation = 0.0;
    for (a, m, b, fa, fm, fb, whole) in panels {
        let part = refine(&eval, a, m, b, fa, fm, fb, whole, panel_tol, spec.max_depth)?;
        // Kahan summation over panels.
        let y = part - compensation;
        let t = total + y;
        compensation = (t - total) - y;
        total = t;
    }
    Ok(total)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<E>(
    eval: &E,
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth_left: usize,
) -> Result<f64>
where
    E: Fn(f64) -> Result<f64>,
{
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = eval(lm)?;
    let frm = eval(rm)?;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let sum = left + right;
    let diff = sum - whole;

    // Roundoff floor: rounding of the panel sum plus the effect of abscissa
    // rounding (|x| eps times the change of f across the panel). Below this
    // further bisection only chases noise.
    let jitter = a.abs().max(b.abs()) * ((fm - fa).abs() + (fb - fm).abs());
    let roundoff = 64.0 * f64::EPSILON * (left.abs() + right.abs() + jitter);
    if diff.abs() <= 15.0 * tol || diff.abs() <= roundoff || !(a < lm && rm < b) {
        return Ok(sum + diff / 15.0);
    }
    if depth_left == 0 {
        return Err(Error::DepthExceeded {
            lo: a,
            hi: b,
            max_depth: 0,
        });
    }
    let half = 0.5 * tol;
    let l = refine(eval, a, lm, m, fa, flm, fm, left, half, depth_left - 1);
    let l = l.map_err(|e| with_depth(e, depth_left))?;
    let r = refine(eval, m, rm, b, fm, frm, fb, right, half, depth_left - 1);
    let r = r.map_err(|e| with_depth(e, depth_left))?;
    Ok(l + r)
}

fn with_depth(err: Error, depth: usize) -> Error {
    match err {
        Error::DepthExceeded { lo, hi, max_depth } => Error::DepthExceeded {
            lo,
            hi,
            max_depth: max_depth.max(depth),
        },
        other => other,
    }
}

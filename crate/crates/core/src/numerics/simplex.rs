//! Deterministic Nelder-Mead minimization.

use crate::error::{Error, Result};

/// Options for [`minimize_simplex`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Offset of each initial vertex from the start point along its axis.
    pub scale: f64,
    pub max_iter: usize,
    /// Stop when the spread of function values across the simplex falls
    /// below this.
    pub f_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            scale: 0.25,
            max_iter: 2000,
            f_tol: 1e-10,
        }
    }
}

/// Result of a simplex run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexMinimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

// Standard reflection/expansion/contraction/shrink coefficients.
const ALPHA: f64 = 1.0;
const GAMMA: f64 = 2.0;
const RHO: f64 = 0.5;
const SIGMA: f64 = 0.5;

/// Minimizes `f` with the Nelder-Mead simplex method.
///
/// Constraints are the caller's business: wrap `f` with a finite penalty.
/// Any non-finite value aborts with [`Error::NonFinite`].
pub fn minimize_simplex<F>(f: F, start: &[f64], opts: &SimplexOptions) -> Result<SimplexMinimum>
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    if n == 0 {
        return Err(Error::InvalidInput("simplex start point is empty".into()));
    }
    if !(opts.scale > 0.0 && opts.f_tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "invalid simplex options {opts:?}"
        )));
    }
    let eval = |x: &[f64]| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFinite(format!("objective returned {y} at {x:?}")))
        }
    };

    let mut vertices: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    vertices.push((start.to_vec(), eval(start)?));
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += opts.scale;
        let y = eval(&x)?;
        vertices.push((x, y));
    }

    let mut iterations = 0;
    while iterations < opts.max_iter {
        // Stable sort keeps ties in insertion order, so runs are reproducible.
        vertices.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = vertices[0].1;
        let worst = vertices[n].1;
        if (worst - best).abs() <= opts.f_tol {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &vertices[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&vertices[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let reflected = along(-ALPHA);
        let fr = eval(&reflected)?;
        if fr < best {
            let expanded = along(-GAMMA);
            let fe = eval(&expanded)?;
            vertices[n] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
            continue;
        }
        if fr < vertices[n - 1].1 {
            vertices[n] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < worst {
            let x = along(-ALPHA * RHO);
            let y = eval(&x)?;
            (x, y)
        } else {
            let x = along(RHO);
            let y = eval(&x)?;
            (x, y)
        };
        if fc < worst.min(fr) {
            vertices[n] = (contracted, fc);
            continue;
        }

        let anchor = vertices[0].0.clone();
        for (x, y) in vertices.iter_mut().skip(1) {
            for (xi, ai) in x.iter_mut().zip(&anchor) {
                *xi = ai + SIGMA * (*xi - ai);
            }
            *y = eval(x)?;
        }
    }

    vertices.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (point, value) = vertices.swap_remove(0);
    Ok(SimplexMinimum {
        point,
        value,
        iterations,
    })
}

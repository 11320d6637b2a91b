//! Component-sequential (Gauss-Seidel) Euler integration.

use crate::error::{Error, Result};

/// Right-hand side of `θ'(t) = F(θ(t), t)`, evaluated one component at a time.
pub trait VectorField {
    fn dimension(&self) -> usize;

    /// `F_j(θ, t)` for `j` in `0..dimension()`.
    fn component(&self, j: usize, state: &[f64], t: f64) -> f64;
}

/// A [`VectorField`] backed by a closure returning one component.
pub struct FnField<F> {
    dimension: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(usize, &[f64], f64) -> f64,
{
    pub fn new(dimension: usize, f: F) -> Self {
        Self { dimension, f }
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(usize, &[f64], f64) -> f64,
{
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn component(&self, j: usize, state: &[f64], t: f64) -> f64 {
        (self.f)(j, state, t)
    }
}

/// Integrates the field from `t0` to `t1` in `steps` equal steps.
///
/// Within step `i`, component `j` advances by `Δ F_j(θ, t0 + iΔ)` where `θ`
/// already holds the step-`i+1` values of components `0..j`. Returns all
/// `steps + 1` states, starting with `theta0`.
pub fn gauss_seidel_euler<V>(
    field: &V,
    theta0: &[f64],
    t0: f64,
    t1: f64,
    steps: usize,
) -> Result<Vec<Vec<f64>>>
where
    V: VectorField + ?Sized,
{
    let m = field.dimension();
    if m == 0 || theta0.len() != m {
        return Err(Error::InvalidInput(format!(
            "state has length {} but the field has dimension {m}",
            theta0.len()
        )));
    }
    if steps == 0 || !(t1 > t0) {
        return Err(Error::InvalidInput(format!(
            "need steps >= 1 and t1 > t0, got steps = {steps}, [{t0}, {t1}]"
        )));
    }
    let delta = (t1 - t0) / steps as f64;
    let mut states = Vec::with_capacity(steps + 1);
    let mut theta = theta0.to_vec();
    states.push(theta.clone());
    for i in 0..steps {
        let t = t0 + i as f64 * delta;
        for j in 0..m {
            let next = theta[j] + delta * field.component(j, &theta, t);
            if !next.is_finite() {
                return Err(Error::NonFinite(format!(
                    "component {j} became {next} at step {}",
                    i + 1
                )));
            }
            theta[j] = next;
        }
        states.push(theta.clone());
    }
    Ok(states)
}

//! The rank-1 linear relaying bound `E(A_f, B_f)` and its outer minimization.
//!
//! For a boundary pair `(A_f, B_f)` with `A_f / B_f <= a²` the pipeline is:
//!
//! 1. `φ = A_f B_f + 1/A_f - 1/B_f` fixes the curve `B = f(A)` on which
//!    `AB + 1/A - 1/B = φ`.
//! 2. `A0` is the unique zero of the increasing function [`g_eval`], and `ψ`
//!    follows from the log-integral equation
//!    `∫ f²/(1+wf²) = ln(A0³ B_f / (a⁴ ψ²))`.
//! 3. The source energy `Q1`, relay energy `Q2` and the argument of the
//!    rate logarithm are closed-form in `(A0, ψ, B0 = f(A0))`.
//!
//! Everything except `Q2` is independent of the relay gain `b`, which
//! [`RankOneSearch`] exploits when a sweep revisits the same `a`.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::numerics::{
    find_root_relative, integrate_adaptive, minimize_simplex, QuadratureSpec, SimplexOptions,
};

/// Pairs closer to the `A_f / B_f = a²` boundary than this relative margin
/// are degenerate (`Q1 → 0`).
pub const BOUNDARY_MARGIN: f64 = 1e-9;

const BRACKET_LIMIT: f64 = 1e30;

/// Terminal values `(A_f, B_f)` of the two-dimensional `(A, B)` system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPair {
    #[serde(rename = "A_f")]
    pub a_f: f64,
    #[serde(rename = "B_f")]
    pub b_f: f64,
}

impl BoundaryPair {
    pub fn new(a_f: f64, b_f: f64) -> Result<Self> {
        if !(a_f > 0.0 && a_f.is_finite() && b_f > 0.0 && b_f.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "A_f and B_f must be finite and positive, got ({a_f}, {b_f})"
            )));
        }
        Ok(Self { a_f, b_f })
    }

    /// The pair with `A_f = rho · a² · B_f`.
    pub fn from_ratio(rho: f64, b_f: f64, channel: &ChannelParams) -> Result<Self> {
        Self::new(rho * channel.a * channel.a * b_f, b_f)
    }

    /// `A_f / (a² B_f)`; admissible pairs have this at most 1.
    pub fn relative_ratio(&self, channel: &ChannelParams) -> f64 {
        self.a_f / (self.b_f * channel.a * channel.a)
    }

    /// `1 - A_f / (a² B_f)`, the distance from the boundary. Every quantity
    /// that vanishes on the boundary is computed from this one value.
    pub fn boundary_gap(&self, channel: &ChannelParams) -> f64 {
        1.0 - self.relative_ratio(channel)
    }

    /// Fails with [`Error::InvalidInput`] when `A_f / B_f > a²`.
    pub fn check_admissible(&self, channel: &ChannelParams) -> Result<()> {
        let rho = self.relative_ratio(channel);
        if rho > 1.0 + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "A_f / B_f = {} exceeds a^2 = {}",
                self.a_f / self.b_f,
                channel.a * channel.a
            )));
        }
        Ok(())
    }
}

/// Tolerances used by the bound pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub quad: QuadratureSpec,
    /// Root bracket width relative to the root.
    pub root_rel_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quad: QuadratureSpec::default(),
            root_rel_tol: 1e-15,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            quad: self.quad.scaled(factor),
            root_rel_tol: self.root_rel_tol * factor,
        }
    }
}

/// `φ = A_f B_f + 1/A_f - 1/B_f`.
pub fn compute_phi(pair: &BoundaryPair) -> f64 {
    pair.a_f * pair.b_f + 1.0 / pair.a_f - 1.0 / pair.b_f
}

/// Positive root `B` of `wB + 1/w - 1/B = φ`.
///
/// For `φw < 1` the rationalized form `2w / (√((φw-1)² + 4w³) + 1 - φw)` is
/// used, which avoids cancellation as `w → 0`.
pub fn f_eval(w: f64, phi: f64) -> Result<f64> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::DomainError(format!("f requires w > 0, got {w}")));
    }
    if !phi.is_finite() {
        return Err(Error::DomainError(format!("phi must be finite, got {phi}")));
    }
    Ok(curve(w, phi))
}

#[inline]
pub(crate) fn curve(w: f64, phi: f64) -> f64 {
    let p = phi.mul_add(w, -1.0);
    let root = (p * p + 4.0 * w * w * w).sqrt();
    if p < 0.0 {
        2.0 * w / (root - p)
    } else {
        (p + root) / (2.0 * w * w)
    }
}

/// `f / (1 + w f²)`.
#[inline]
pub(crate) fn rate_integrand(w: f64, phi: f64) -> f64 {
    let f = curve(w, phi);
    f / (1.0 + w * f * f)
}

/// `f² / (1 + w f²)`.
#[inline]
pub(crate) fn log_integrand(w: f64, phi: f64) -> f64 {
    let f = curve(w, phi);
    f * f / (1.0 + w * f * f)
}

/// `1/w - f²/(1 + w f²)`, written without the subtraction.
#[inline]
pub(crate) fn decay_integrand(w: f64, phi: f64) -> f64 {
    let f = curve(w, phi);
    1.0 / (w * (1.0 + w * f * f))
}

/// `∫ h(w) dw` over `[base + d_lo, base + d_hi]`; see [`integrate_log`].
pub(crate) fn integrate_offset<H>(
    h: H,
    phi: f64,
    base: f64,
    d_lo: f64,
    d_hi: f64,
    spec: &QuadratureSpec,
) -> Result<f64>
where
    H: Fn(f64) -> f64,
{
    if d_lo == d_hi {
        return Ok(0.0);
    }
    let (s_lo, s_hi) = ((d_lo / base).ln_1p(), (d_hi / base).ln_1p());
    integrate_log(h, phi, base, s_lo, s_hi, spec)
}

/// `∫ h(w) dw` over `w = base · e^s`, `s ∈ [s_lo, s_hi]`. Working in `s`
/// keeps intervals spanning many decades well resolved and short intervals
/// at their full relative width.
///
/// `h` is one of the curve integrands for `phi`. When `φ` is large, `f`
/// switches from `w / (1 - φw)` to `w^(-1/2)` within a relative width of
/// about `2 w^(3/2)` around `w = 1/φ`; the range is split at geometrically
/// spaced points around that layer so the adaptive rule sees it.
pub(crate) fn integrate_log<H>(
    h: H,
    phi: f64,
    base: f64,
    s_lo: f64,
    s_hi: f64,
    spec: &QuadratureSpec,
) -> Result<f64>
where
    H: Fn(f64) -> f64,
{
    if s_lo == s_hi {
        return Ok(0.0);
    }
    let mut cuts = vec![s_lo];
    if phi > 0.0 {
        let knee = 1.0 / phi;
        let width = 2.0 * knee * knee.sqrt();
        if width < 0.05 {
            let centre = -phi.mul_add(base, -1.0).ln_1p();
            let mut offsets = vec![0.0];
            let mut step = width.max(8.0 * f64::EPSILON * centre.abs().max(1.0));
            while step < 1.0 {
                offsets.extend([-step, step]);
                step *= 4.0;
            }
            offsets.sort_by(f64::total_cmp);
            cuts.extend(
                offsets
                    .into_iter()
                    .map(|o| centre + o)
                    .filter(|&c| c > s_lo && c < s_hi),
            );
        }
    }
    cuts.push(s_hi);
    let integrand = |t: f64| {
        let w = base * t.exp();
        h(w) * w
    };
    let mut total = 0.0;
    for piece in cuts.windows(2) {
        total += integrate_adaptive(integrand, piece[0], piece[1], spec)?;
    }
    Ok(total)
}

// g from the two accumulated integrals. The constant part
// 1/B_f - a/√(A_f B_f) is written in terms of the boundary gap so that it
// vanishes exactly on the boundary.
fn g_from_integrals(pair: &BoundaryPair, channel: &ChannelParams, rate: f64, decay: f64) -> f64 {
    let root = (pair.a_f * pair.b_f).sqrt();
    let gap = pair.boundary_gap(channel);
    let start = -channel.a * gap / ((1.0 + (1.0 - gap).sqrt()) * root);
    start - channel.a / root * (-0.5 * decay).exp_m1() + rate
}

/// The zero function whose root is `A0`.
///
/// `g(A0) = 1/B_f + ∫ f/(1+wf²) - a/√(A_f B_f) · exp(-½ ∫ (1/w - f²/(1+wf²)))`
/// with both integrals over `[A_f, A0]`.
pub fn g_eval(a0: f64, pair: &BoundaryPair, channel: &ChannelParams) -> Result<f64> {
    g_eval_with(a0, pair, channel, &Tolerances::default())
}

pub fn g_eval_with(
    a0: f64,
    pair: &BoundaryPair,
    channel: &ChannelParams,
    tol: &Tolerances,
) -> Result<f64> {
    if !(a0 >= pair.a_f) || !a0.is_finite() {
        return Err(Error::DomainError(format!(
            "g requires A0 >= A_f = {}, got {a0}",
            pair.a_f
        )));
    }
    let phi = compute_phi(pair);
    let delta = a0 - pair.a_f;
    let rate = integrate_offset(
        |w| rate_integrand(w, phi),
        phi,
        pair.a_f,
        0.0,
        delta,
        &tol.quad,
    )?;
    let decay = integrate_offset(
        |w| decay_integrand(w, phi),
        phi,
        pair.a_f,
        0.0,
        delta,
        &tol.quad,
    )?;
    Ok(g_from_integrals(pair, channel, rate, decay))
}

/// Solution `(φ, A0, ψ, B0)` of the coupled integral equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndpointSolution {
    #[serde(flatten)]
    pub pair: BoundaryPair,
    pub phi: f64,
    #[serde(rename = "A0")]
    pub a0: f64,
    /// `A0 - A_f`, resolved to full relative precision.
    pub delta: f64,
    pub psi: f64,
    #[serde(rename = "B0")]
    pub b0: f64,
    /// `∫_{A_f}^{A0} f/(1+wf²) dw`.
    pub rate_integral: f64,
    /// `∫_{A_f}^{A0} f²/(1+wf²) dw`, which equals `ln(1 + a² Q1)`.
    pub log_integral: f64,
}

/// Relative residuals of the two integral equations at a solved endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndpointResiduals {
    /// `∫ f/(1+wf²) = A0/(aψ) - 1/B_f`.
    pub rate_equation: f64,
    /// `∫ f²/(1+wf²) = ln(A0³ B_f / (a⁴ ψ²))`, relative to the largest
    /// logarithmic term on the right.
    pub log_equation: f64,
    /// `A0 B0 + 1/A0 - 1/B0 = φ`, relative to the largest term.
    pub curve: f64,
}

impl EndpointResiduals {
    pub fn worst(&self) -> f64 {
        self.rate_equation.max(self.log_equation).max(self.curve)
    }
}

pub(crate) fn relative_gap(lhs: f64, rhs: f64, scale: f64) -> f64 {
    let denom = lhs.abs().max(rhs.abs()).max(scale.abs());
    if denom == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / denom
    }
}

/// Relative residual of `wB + 1/w - 1/B = φ`, scaled by the largest term.
pub fn curve_residual(w: f64, b: f64, phi: f64) -> f64 {
    let terms = [w * b, 1.0 / w, 1.0 / b, phi];
    let scale = terms.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    relative_gap(w * b + 1.0 / w - 1.0 / b, phi, scale)
}

impl EndpointSolution {
    /// Re-integrates both equations at `(A0, ψ)` and reports their residuals.
    pub fn residuals(
        &self,
        pair: &BoundaryPair,
        channel: &ChannelParams,
        tol: &Tolerances,
    ) -> Result<EndpointResiduals> {
        let a = channel.a;
        let (base, d) = (pair.a_f, self.delta);
        let rate = integrate_offset(
            |w| rate_integrand(w, self.phi),
            self.phi,
            base,
            0.0,
            d,
            &tol.quad,
        )?;
        let log = integrate_offset(
            |w| log_integrand(w, self.phi),
            self.phi,
            base,
            0.0,
            d,
            &tol.quad,
        )?;
        let rate_rhs = self.a0 / (a * self.psi) - 1.0 / pair.b_f;
        let log_terms = [
            3.0 * self.a0.ln(),
            pair.b_f.ln(),
            -4.0 * a.ln(),
            -2.0 * self.psi.ln(),
        ];
        let log_rhs: f64 = log_terms.iter().sum();
        let log_scale = log_terms.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
        Ok(EndpointResiduals {
            rate_equation: relative_gap(
                rate,
                rate_rhs,
                (self.a0 / (a * self.psi)).max(1.0 / pair.b_f),
            ),
            log_equation: relative_gap(log, log_rhs, log_scale),
            curve: curve_residual(self.a0, self.b0, self.phi),
        })
    }
}

/// Solves for `(A0, ψ)` with default tolerances.
pub fn solve_endpoint(pair: &BoundaryPair, channel: &ChannelParams) -> Result<EndpointSolution> {
    solve_endpoint_with(pair, channel, &Tolerances::default())
}

pub fn solve_endpoint_with(
    pair: &BoundaryPair,
    channel: &ChannelParams,
    tol: &Tolerances,
) -> Result<EndpointSolution> {
    channel.validate()?;
    pair.check_admissible(channel)?;
    let phi = compute_phi(pair);
    let base = pair.a_f;
    // g over [A_f, A_f + x] given the integrals already accumulated up to
    // A_f + from.
    let g_from = |from: f64, rate: f64, decay: f64, x: f64| -> Result<(f64, f64, f64)> {
        let rate =
            rate + integrate_offset(|w| rate_integrand(w, phi), phi, base, from, x, &tol.quad)?;
        let decay =
            decay + integrate_offset(|w| decay_integrand(w, phi), phi, base, from, x, &tol.quad)?;
        Ok((g_from_integrals(pair, channel, rate, decay), rate, decay))
    };

    // g(A_f) is non-negative only on the boundary.
    let delta = if g_from_integrals(pair, channel, 0.0, 0.0) >= 0.0 {
        0.0
    } else {
        let (mut lo, mut rate_lo, mut decay_lo) = (0.0, 0.0, 0.0);
        let mut hi = (2.0 * base).max(1.0) - base;
        loop {
            let (g_hi, rate_hi, decay_hi) = g_from(lo, rate_lo, decay_lo, hi)?;
            if g_hi > 0.0 {
                break;
            }
            (lo, rate_lo, decay_lo) = (hi, rate_hi, decay_hi);
            hi = 2.0 * (base + hi) - base;
            if base + hi > BRACKET_LIMIT {
                return Err(Error::BracketOverflow {
                    limit: BRACKET_LIMIT,
                });
            }
        }
        // The closure cannot return Result, so the first quadrature failure
        // is parked and re-raised after the solve.
        let failure = std::cell::RefCell::new(None);
        let root = find_root_relative(
            |x| match g_from(lo, rate_lo, decay_lo, x) {
                Ok((v, _, _)) => v,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            },
            lo,
            hi,
            tol.root_rel_tol,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        root?
    };

    let a0 = base + delta;
    let rate_integral =
        integrate_offset(|w| rate_integrand(w, phi), phi, base, 0.0, delta, &tol.quad)?;
    let log_integral =
        integrate_offset(|w| log_integrand(w, phi), phi, base, 0.0, delta, &tol.quad)?;
    let a4 = channel.a.powi(4);
    let psi = (a0.powi(3) * pair.b_f / (a4 * log_integral.exp())).sqrt();
    Ok(EndpointSolution {
        pair: *pair,
        phi,
        a0,
        delta,
        psi,
        b0: curve(a0, phi),
        rate_integral,
        log_integral,
    })
}

/// Everything the bound reports for one boundary pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundEvaluation {
    pub lambda: f64,
    pub c1: f64,
    #[serde(rename = "Q1")]
    pub q1: f64,
    #[serde(rename = "Q2")]
    pub q2: f64,
    pub log_arg: f64,
    pub energy_per_bit: f64,
    /// `energy_per_bit / (2 ln 2)`.
    pub normalized: f64,
}

/// Evaluates `E(A_f, B_f)`.
pub fn theorem_bound(pair: &BoundaryPair, channel: &ChannelParams) -> Result<BoundEvaluation> {
    theorem_bound_with(pair, channel, &Tolerances::default())
}

pub fn theorem_bound_with(
    pair: &BoundaryPair,
    channel: &ChannelParams,
    tol: &Tolerances,
) -> Result<BoundEvaluation> {
    channel.validate()?;
    pair.check_admissible(channel)?;
    check_interior(pair, channel)?;
    let endpoint = solve_endpoint_with(pair, channel, tol)?;
    evaluate_endpoint(&endpoint, pair, channel)
}

fn check_interior(pair: &BoundaryPair, channel: &ChannelParams) -> Result<()> {
    if pair.relative_ratio(channel) > 1.0 - BOUNDARY_MARGIN {
        return Err(Error::DegenerateBound(format!(
            "A_f / B_f = {} is on the boundary a^2 = {} where Q1 vanishes",
            pair.a_f / pair.b_f,
            channel.a * channel.a
        )));
    }
    Ok(())
}

/// Closed-form part of the bound, given a solved endpoint.
///
/// `Q1`, `Q2` and `log_arg - 1` all vanish on the boundary, so they are
/// evaluated from `A0 - A_f`, the two integrals and the boundary gap rather
/// than as differences of order-one terms. The results agree with
/// [`literal_energies`] wherever the latter is well conditioned.
pub fn evaluate_endpoint(
    endpoint: &EndpointSolution,
    pair: &BoundaryPair,
    channel: &ChannelParams,
) -> Result<BoundEvaluation> {
    let (a, b) = (channel.a, channel.b);
    let (a0, delta, b0) = (endpoint.a0, endpoint.delta, endpoint.b0);
    let (a_f, b_f) = (pair.a_f, pair.b_f);
    let a2 = a * a;
    let j = endpoint.log_integral;
    let grow = j.exp_m1();

    let q1 = grow / a2;
    let q2 = (grow + j.exp() * (endpoint.rate_integral / b_f - delta) / a0) / (b * b);
    // A0 B0 - A_f B_f from the conserved φ, then log_arg - 1.
    let product_gain = delta * (1.0 / b_f + 1.0 / a0) / (a_f + 1.0 / (b0 * b_f));
    let excess = -pair.boundary_gap(channel) + delta / (a2 * b_f) + a0 / a2 * product_gain;
    if !(q1 > 0.0) {
        return Err(Error::DegenerateBound(format!(
            "source energy Q1 = {q1} is not positive"
        )));
    }
    if !(excess > 0.0) {
        return Err(Error::DegenerateBound(format!(
            "rate argument 1 + {excess} does not exceed 1"
        )));
    }
    let c1 = b * endpoint.psi;
    let energy_per_bit = (q1 + q2) / (0.5 * excess.ln_1p() / LN_2);
    if !(energy_per_bit > 0.0) || !energy_per_bit.is_finite() {
        return Err(Error::DegenerateBound(format!(
            "energy per bit {energy_per_bit} is not positive"
        )));
    }
    Ok(BoundEvaluation {
        lambda: a2 * c1 * c1 / a0,
        c1,
        q1,
        q2,
        log_arg: 1.0 + excess,
        energy_per_bit,
        normalized: energy_per_bit / (2.0 * LN_2),
    })
}

/// `(Q1, Q2, log_arg)` exactly as written in terms of `(A0, ψ, B0)`.
pub fn literal_energies(
    endpoint: &EndpointSolution,
    pair: &BoundaryPair,
    channel: &ChannelParams,
) -> (f64, f64, f64) {
    let (a, b) = (channel.a, channel.b);
    let (a0, psi, b0) = (endpoint.a0, endpoint.psi, endpoint.b0);
    let (a_f, b_f) = (pair.a_f, pair.b_f);
    let (a2, b2, psi2) = (a * a, b * b, psi * psi);
    let q1 = -1.0 / a2 + a0.powi(3) * b_f / (a2 * a2 * a2 * psi2);
    let q2 = -1.0 / b2
        + a0.powi(3) / (a2 * a2 * a * b2 * psi2 * psi)
        + a0 * a0 * (a_f * b_f * b_f - 1.0) / (a2 * a2 * b2 * psi2 * b_f);
    let log_arg = a0 / a2 * (1.0 / b_f + a0 * b0 - a_f * b_f);
    (q1, q2, log_arg)
}

/// Outcome of [`optimize_bound`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizedBound {
    pub pair: BoundaryPair,
    pub endpoint: EndpointSolution,
    pub evaluation: BoundEvaluation,
    /// Set when the optimum sat on the `B_f` search cap and the range was
    /// widened.
    pub warnings: Vec<String>,
}

/// Grid and refinement settings for the outer minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSettings {
    pub rho_grid: Vec<f64>,
    pub b_f_min: f64,
    pub b_f_max: f64,
    pub b_f_points: usize,
    /// Number of best grid points refined by the simplex.
    pub refine_starts: usize,
    pub simplex: SimplexOptions,
    pub tol: Tolerances,
}

impl Default for SearchSettings {
    fn default() -> Self {
        // 12 points log-spaced in rho on [1e-3, 0.5], 12 log-spaced in 1 - rho
        // from 0.4 down to 1e-6.
        let mut rho_grid = log_space(1e-3, 0.5, 12);
        rho_grid.extend(log_space(0.4, 1e-6, 12).into_iter().map(|g| 1.0 - g));
        Self {
            rho_grid,
            b_f_min: 1e-3,
            b_f_max: 1e3,
            b_f_points: 25,
            refine_starts: 3,
            simplex: SimplexOptions::default(),
            tol: Tolerances::default(),
        }
    }
}

/// `n` points from `from` to `to`, evenly spaced in `log10`.
pub fn log_space(from: f64, to: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![from];
    }
    let (l0, l1) = (from.log10(), to.log10());
    (0..n)
        .map(|i| 10f64.powf(l0 + (l1 - l0) * i as f64 / (n - 1) as f64))
        .collect()
}

// Objective value for infeasible or degenerate simplex probes.
const PENALTY: f64 = 1e3;

/// Outer minimization over boundary pairs for a fixed source gain `a`.
///
/// The grid of endpoint solutions does not depend on `b`, so it is solved
/// once and reused by every call to [`RankOneSearch::optimize`].
pub struct RankOneSearch {
    a: f64,
    settings: SearchSettings,
    grid: Vec<(BoundaryPair, Option<EndpointSolution>)>,
}

impl RankOneSearch {
    pub fn new(a: f64, settings: SearchSettings) -> Result<Self> {
        ChannelParams::new(a, 1.0)?;
        let grid = solve_grid(a, &settings, settings.b_f_min, settings.b_f_max)?;
        Ok(Self { a, settings, grid })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn optimize(&self, b: f64) -> Result<OptimizedBound> {
        let channel = ChannelParams::new(self.a, b)?;
        let mut best = refine(&channel, &self.settings, &self.grid)?;
        let (lo, hi) = (self.settings.b_f_min, self.settings.b_f_max);
        if on_cap(best.pair.b_f, lo, hi) {
            let (wlo, whi) = (lo / 10.0, hi * 10.0);
            let wide = solve_grid(self.a, &self.settings, wlo, whi)?;
            let mut widened = refine(&channel, &self.settings, &wide)?;
            let mut warnings = vec![format!(
                "optimum B_f = {} hit the search cap [{lo}, {hi}]; widened to [{wlo}, {whi}]",
                best.pair.b_f
            )];
            if on_cap(widened.pair.b_f, wlo, whi) {
                warnings.push(format!(
                    "optimum B_f = {} still on the widened cap",
                    widened.pair.b_f
                ));
            }
            if widened.evaluation.normalized < best.evaluation.normalized {
                widened.warnings = warnings;
                best = widened;
            } else {
                best.warnings = warnings;
            }
        }
        Ok(best)
    }
}

fn on_cap(b_f: f64, lo: f64, hi: f64) -> bool {
    b_f <= lo * (1.0 + 1e-3) || b_f >= hi / (1.0 + 1e-3)
}

fn solve_grid(
    a: f64,
    settings: &SearchSettings,
    b_f_min: f64,
    b_f_max: f64,
) -> Result<Vec<(BoundaryPair, Option<EndpointSolution>)>> {
    // b only enters Q2, so any positive value works for the endpoint solve.
    let channel = ChannelParams::new(a, 1.0)?;
    let b_grid = log_space(b_f_min, b_f_max, settings.b_f_points);
    let mut pairs = Vec::with_capacity(settings.rho_grid.len() * b_grid.len());
    for &rho in &settings.rho_grid {
        for &b_f in &b_grid {
            pairs.push(BoundaryPair::from_ratio(rho, b_f, &channel)?);
        }
    }
    Ok(pairs
        .into_par_iter()
        .map(|pair| {
            let endpoint = check_interior(&pair, &channel)
                .and_then(|_| solve_endpoint_with(&pair, &channel, &settings.tol))
                .ok();
            (pair, endpoint)
        })
        .collect())
}

fn refine(
    channel: &ChannelParams,
    settings: &SearchSettings,
    grid: &[(BoundaryPair, Option<EndpointSolution>)],
) -> Result<OptimizedBound> {
    let mut scored: Vec<(usize, f64)> = grid
        .iter()
        .enumerate()
        .filter_map(|(i, (pair, endpoint))| {
            let endpoint = endpoint.as_ref()?;
            evaluate_endpoint(endpoint, pair, channel)
                .ok()
                .map(|e| (i, e.normalized))
        })
        .collect();
    if scored.is_empty() {
        return Err(Error::NoFeasiblePoint);
    }
    scored.sort_by(|x, y| x.1.total_cmp(&y.1));

    let a2 = channel.a * channel.a;
    let decode = |x: &[f64]| -> (f64, f64) {
        let rho = 1.0 / (1.0 + (-x[0]).exp());
        (rho, x[1].exp())
    };
    let objective = |x: &[f64]| -> f64 {
        let (rho, b_f) = decode(x);
        if rho > 1.0 - BOUNDARY_MARGIN || !(b_f > 0.0) || !b_f.is_finite() {
            return PENALTY + x[0].abs();
        }
        let pair = BoundaryPair {
            a_f: rho * a2 * b_f,
            b_f,
        };
        match theorem_bound_with(&pair, channel, &settings.tol) {
            Ok(e) => e.normalized,
            Err(_) => PENALTY + x[0].abs() + x[1].abs(),
        }
    };

    let mut best: Option<(BoundaryPair, f64)> = None;
    for &(i, value) in scored.iter().take(settings.refine_starts.max(1)) {
        let pair = grid[i].0;
        let rho = pair.relative_ratio(channel);
        let start = [(rho / (1.0 - rho)).ln(), pair.b_f.ln()];
        let (cand_pair, cand_value) = match minimize_simplex(objective, &start, &settings.simplex) {
            Ok(m) if m.value < value => {
                let (rho, b_f) = decode(&m.point);
                (
                    BoundaryPair {
                        a_f: rho * a2 * b_f,
                        b_f,
                    },
                    m.value,
                )
            }
            _ => (pair, value),
        };
        if best.is_none_or(|(_, v)| cand_value < v) {
            best = Some((cand_pair, cand_value));
        }
    }

    let (pair, _) = best.ok_or(Error::NoFeasiblePoint)?;
    let endpoint = solve_endpoint_with(&pair, channel, &settings.tol)?;
    let evaluation = evaluate_endpoint(&endpoint, &pair, channel)?;
    Ok(OptimizedBound {
        pair,
        endpoint,
        evaluation,
        warnings: Vec::new(),
    })
}

/// Minimizes `E(A_f, B_f)` over admissible pairs with default settings.
pub fn optimize_bound(channel: &ChannelParams) -> Result<OptimizedBound> {
    channel.validate()?;
    RankOneSearch::new(channel.a, SearchSettings::default())?.optimize(channel.b)
}

/// The bound at a fixed pair, packaged like an optimizer result.
pub fn bound_at_pair(pair: &BoundaryPair, channel: &ChannelParams) -> Result<OptimizedBound> {
    channel.validate()?;
    pair.check_admissible(channel)?;
    check_interior(pair, channel)?;
    let endpoint = solve_endpoint(pair, channel)?;
    let evaluation = evaluate_endpoint(&endpoint, pair, channel)?;
    Ok(OptimizedBound {
        pair: *pair,
        endpoint,
        evaluation,
        warnings: Vec::new(),
    })
}

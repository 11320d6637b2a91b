//! Closed-form reconstruction of the optimal relaying trajectory on `[0, Q1]`.
//!
//! With `S̄ = 1/a² + S` the barred variables follow from the two-dimensional
//! `(A, B)` system:
//!
//! ```text
//! T̄ = (S̄/c1) ∫_{A(S)}^{A0} f/(1+wf²)    R̄ = T̄²/S̄ - S̄A/c1²
//! Z̄ = c1⁴ B / S̄                          V̄ = (c1³ + T̄Z̄) / S̄
//! ```
//!
//! where `A(S)` inverts `∫_{A_f}^{A} f²/(1+wf²) = ln((1+a²Q1)/(1+a²S))` and
//! `B = f(A)`.

use serde::Serialize;

use crate::bound::{
    curve, curve_residual, integrate_log, integrate_offset, literal_energies, log_integrand,
    rate_integrand, relative_gap, EndpointSolution, Tolerances,
};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};

pub const DEFAULT_SAMPLES: usize = 512;

// Nodes of the cumulative log-integral table used to invert A(S).
const PROFILE_NODES: usize = 4096;

/// `A` sampled uniformly in `S` over `[0, Q1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AProfile {
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    /// `A - A_f` at each sample.
    pub offset: Vec<f64>,
}

/// Builds the `A(S)` profile by tabulating the cumulative log integral on
/// nodes log-spaced over `[A_f, A0]` and bisecting within the bracketing
/// node interval.
pub fn invert_a_profile(
    endpoint: &EndpointSolution,
    channel: &ChannelParams,
    q1: f64,
    n_samples: usize,
) -> Result<AProfile> {
    invert_a_profile_with(endpoint, channel, q1, n_samples, &Tolerances::default())
}

pub fn invert_a_profile_with(
    endpoint: &EndpointSolution,
    channel: &ChannelParams,
    q1: f64,
    n_samples: usize,
    tol: &Tolerances,
) -> Result<AProfile> {
    if !(q1 > 0.0) || !q1.is_finite() {
        return Err(Error::DegenerateBound(format!(
            "Q1 = {q1} must be positive"
        )));
    }
    if n_samples < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 samples, got {n_samples}"
        )));
    }
    let (a_f, phi) = (endpoint.pair.a_f, endpoint.phi);
    let a2 = channel.a * channel.a;
    let span = (endpoint.delta / a_f).ln_1p();
    let h = |w: f64| log_integrand(w, phi);

    let nodes: Vec<f64> = (0..=PROFILE_NODES)
        .map(|i| span * i as f64 / PROFILE_NODES as f64)
        .collect();
    let mut cumulative = Vec::with_capacity(nodes.len());
    cumulative.push(0.0);
    for pair in nodes.windows(2) {
        let piece = integrate_log(h, phi, a_f, pair[0], pair[1], &tol.quad)?;
        cumulative.push(cumulative.last().unwrap() + piece);
    }
    let total = *cumulative.last().unwrap();
    let expected = (a2 * q1).ln_1p();
    if (total - expected).abs() > 1e-6 {
        return Err(Error::ProfileMismatch {
            got: total,
            expected,
        });
    }

    let last = n_samples - 1;
    let mut profile = AProfile {
        s: Vec::with_capacity(n_samples),
        a: Vec::with_capacity(n_samples),
        offset: Vec::with_capacity(n_samples),
    };
    for j in 0..n_samples {
        let s_val = q1 * j as f64 / last as f64;
        let log_s = if j == 0 {
            span
        } else if j == last {
            0.0
        } else {
            let target = expected - (a2 * s_val).ln_1p();
            let k = cumulative
                .partition_point(|&c| c <= target)
                .clamp(1, PROFILE_NODES);
            let (mut lo, mut hi) = (nodes[k - 1], nodes[k]);
            let base_value = cumulative[k - 1];
            let start = nodes[k - 1];
            // Bracket width in w is about A · (hi - lo).
            while a_f * hi.exp() * (hi - lo) > 1e-12 * endpoint.a0 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let value = base_value + integrate_log(h, phi, a_f, start, mid, &tol.quad)?;
                if value < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        profile.s.push(s_val);
        if j == 0 {
            profile.a.push(endpoint.a0);
            profile.offset.push(endpoint.delta);
        } else {
            profile.a.push(a_f * log_s.exp());
            profile.offset.push(a_f * log_s.exp_m1());
        }
    }
    Ok(profile)
}

/// Barred variables on the profile samples.
#[derive(Debug, Clone, PartialEq)]
pub struct BarredSolution {
    pub s_bar: Vec<f64>,
    pub b: Vec<f64>,
    pub t_bar: Vec<f64>,
    pub r_bar: Vec<f64>,
    pub z_bar: Vec<f64>,
    pub v_bar: Vec<f64>,
    pub u: Vec<f64>,
    pub c1: f64,
}

pub fn reconstruct_barred(
    profile: &AProfile,
    endpoint: &EndpointSolution,
    channel: &ChannelParams,
) -> Result<BarredSolution> {
    reconstruct_barred_with(profile, endpoint, channel, &Tolerances::default())
}

pub fn reconstruct_barred_with(
    profile: &AProfile,
    endpoint: &EndpointSolution,
    channel: &ChannelParams,
    tol: &Tolerances,
) -> Result<BarredSolution> {
    let c1 = channel.b * endpoint.psi;
    let (c1_2, c1_3) = (c1 * c1, c1 * c1 * c1);
    let c1_4 = c1_2 * c1_2;
    let inv_a2 = 1.0 / (channel.a * channel.a);
    let (a_f, phi) = (endpoint.pair.a_f, endpoint.phi);
    let n = profile.s.len();
    let mut out = BarredSolution {
        s_bar: Vec::with_capacity(n),
        b: Vec::with_capacity(n),
        t_bar: Vec::with_capacity(n),
        r_bar: Vec::with_capacity(n),
        z_bar: Vec::with_capacity(n),
        v_bar: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        c1,
    };
    for j in 0..n {
        let s_bar = inv_a2 + profile.s[j];
        let a = profile.a[j];
        let b = if j + 1 == n {
            endpoint.pair.b_f
        } else {
            curve(a, phi)
        };
        let rate = integrate_offset(
            |w| rate_integrand(w, phi),
            phi,
            a_f,
            profile.offset[j],
            endpoint.delta,
            &tol.quad,
        )?;
        let u = rate / c1;
        let t_bar = s_bar * u;
        let z_bar = c1_4 * b / s_bar;
        out.s_bar.push(s_bar);
        out.b.push(b);
        out.t_bar.push(t_bar);
        out.r_bar.push(t_bar * t_bar / s_bar - s_bar * a / c1_2);
        out.z_bar.push(z_bar);
        out.v_bar.push((c1_3 + t_bar * z_bar) / s_bar);
        out.u.push(u);
    }
    Ok(out)
}

/// Unbarred `(T, R, Z, V)` from the barred variables.
pub fn unbar(
    barred: &BarredSolution,
    lambda: f64,
    channel: &ChannelParams,
) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let (a, b) = (channel.a, channel.b);
    let l2 = lambda * lambda;
    let t = barred.t_bar.iter().map(|x| lambda * x).collect();
    let r = barred.r_bar.iter().map(|x| l2 * x + lambda).collect();
    let z = barred
        .z_bar
        .iter()
        .map(|x| x / l2 - lambda / (b * b))
        .collect();
    let v = barred
        .v_bar
        .iter()
        .map(|x| x / (a * a * l2) - 1.0 / (a * b))
        .collect();
    (t, r, z, v)
}

/// `λ = a²c1²/A0` and `Q1 = -1/a² + b²A0³B_f/(a⁶c1²)` with `c1 = bψ`.
pub fn lambda_and_q1(endpoint: &EndpointSolution, channel: &ChannelParams) -> Result<(f64, f64)> {
    let (a, b) = (channel.a, channel.b);
    let a2 = a * a;
    let c1 = b * endpoint.psi;
    let lambda = a2 * c1 * c1 / endpoint.a0;
    let q1 = -1.0 / a2 + b * b * endpoint.a0.powi(3) * endpoint.pair.b_f / (a2 * a2 * a2 * c1 * c1);
    if !(q1 > 0.0) {
        return Err(Error::DegenerateBound(format!(
            "source energy Q1 = {q1} is not positive"
        )));
    }
    Ok((lambda, q1))
}

/// The full trajectory on `n_samples` points uniform in `S`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryGrid {
    pub n_samples: usize,
    #[serde(rename = "S")]
    pub s: Vec<f64>,
    #[serde(rename = "Sbar")]
    pub s_bar: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    #[serde(rename = "Tbar")]
    pub t_bar: Vec<f64>,
    #[serde(rename = "Rbar")]
    pub r_bar: Vec<f64>,
    #[serde(rename = "Zbar")]
    pub z_bar: Vec<f64>,
    #[serde(rename = "Vbar")]
    pub v_bar: Vec<f64>,
    #[serde(rename = "T")]
    pub t: Vec<f64>,
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    #[serde(rename = "Z")]
    pub z: Vec<f64>,
    #[serde(rename = "V")]
    pub v: Vec<f64>,
    #[serde(rename = "U")]
    pub u: Vec<f64>,
    pub c1: f64,
    pub lambda: f64,
    #[serde(rename = "Q1")]
    pub q1: f64,
}

/// Profile inversion, barred reconstruction and unbarring in one pass.
///
/// `lambda` is normally the value from [`lambda_and_q1`]; any other value
/// produces a trajectory that misses the boundary conditions.
pub fn build_trajectory(
    endpoint: &EndpointSolution,
    channel: &ChannelParams,
    lambda: f64,
    q1: f64,
    n_samples: usize,
) -> Result<TrajectoryGrid> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let profile = invert_a_profile(endpoint, channel, q1, n_samples)?;
    let barred = reconstruct_barred(&profile, endpoint, channel)?;
    let (t, r, z, v) = unbar(&barred, lambda, channel);
    Ok(TrajectoryGrid {
        n_samples,
        s: profile.s,
        s_bar: barred.s_bar,
        a: profile.a,
        b: barred.b,
        t_bar: barred.t_bar,
        r_bar: barred.r_bar,
        z_bar: barred.z_bar,
        v_bar: barred.v_bar,
        t,
        r,
        z,
        v,
        u: barred.u,
        c1: barred.c1,
        lambda,
        q1,
    })
}

/// One named check with its worst residual and tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: &str, worst: f64, tolerance: f64) {
        self.checks.push(IdentityCheck {
            name: name.to_string(),
            worst,
            tolerance,
            passed: worst <= tolerance,
        });
    }
}

/// Checks the energy and log-argument identities at `S = Q1`, the
/// conserved quantities at every sample and the boundary conditions.
///
/// Both energy identities are sums that can nearly cancel when the relay
/// is barely used, so their residuals are relative to the largest summand.
pub fn check_identities(
    traj: &TrajectoryGrid,
    endpoint: &EndpointSolution,
    channel: &ChannelParams,
    lambda: f64,
    q1: f64,
) -> IdentityReport {
    let (a, b) = (channel.a, channel.b);
    let pair = &endpoint.pair;
    let (_, q2, log_arg) = literal_energies(endpoint, pair, channel);
    let last = traj.n_samples - 1;
    let (t_end, r_end, z_start) = (traj.t[last], traj.r[last], traj.z[0]);
    let mut report = IdentityReport { checks: Vec::new() };

    let energy_terms = [a * t_end / (b * lambda), r_end / (b * b * lambda)];
    report.push(
        "relay_energy",
        relative_gap(
            energy_terms[0] - energy_terms[1],
            q2,
            energy_terms[0].abs().max(energy_terms[1].abs()),
        ),
        1e-8,
    );
    let log_terms = [
        1.0,
        z_start,
        a * a * q1,
        -2.0 * a * t_end / b,
        r_end / (b * b),
    ];
    let log_scale = log_terms.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    let log_lhs: f64 = log_terms.iter().sum();
    report.push(
        "log_argument",
        relative_gap(log_lhs, log_arg, log_scale),
        1e-8,
    );

    let c1_3 = traj.c1.powi(3);
    let conservation = (0..traj.n_samples)
        .map(|j| (traj.s_bar[j] * traj.v_bar[j] - traj.t_bar[j] * traj.z_bar[j] - c1_3).abs())
        .fold(0.0, f64::max);
    report.push("conservation", conservation / c1_3.abs(), 1e-6);
    let curve_worst = (0..traj.n_samples)
        .map(|j| curve_residual(traj.a[j], traj.b[j], endpoint.phi))
        .fold(0.0, f64::max);
    report.push("ab_invariant", curve_worst, 1e-8);

    report.push(
        "a_endpoints",
        relative_gap(traj.a[0], endpoint.a0, 0.0).max(relative_gap(traj.a[last], pair.a_f, 0.0)),
        1e-8,
    );
    let rises = traj
        .a
        .windows(2)
        .map(|w| (w[1] - w[0]).max(0.0) / w[0])
        .fold(0.0, f64::max);
    report.push("a_monotone", rises, 0.0);
    // R(0) = λ²R̄(0) + λ cancels two terms of size λ.
    let r_start = traj.r[0].abs() / lambda.max(1.0);
    report.push("initial_t_r", traj.t[0].abs().max(r_start), 1e-10);
    report.push(
        "terminal_z_v",
        traj.z[last].abs().max(traj.v[last].abs()),
        1e-8,
    );
    let negative_z = traj.z.iter().map(|&z| (-z).max(0.0)).fold(0.0, f64::max);
    report.push("z_nonnegative", negative_z, 1e-10);
    report
}

/// Endpoint residuals plus [`check_identities`] on a fresh trajectory.
///
/// `lambda_scale` multiplies the computed `λ` before the trajectory is
/// built; anything other than 1 should fail the identities.
pub fn verify_endpoint(
    endpoint: &EndpointSolution,
    channel: &ChannelParams,
    n_samples: usize,
    lambda_scale: f64,
) -> Result<IdentityReport> {
    let pair = &endpoint.pair;
    let residuals = endpoint.residuals(pair, channel, &Tolerances::default())?;
    let (lambda, q1) = lambda_and_q1(endpoint, channel)?;
    let lambda = lambda * lambda_scale;
    let traj = build_trajectory(endpoint, channel, lambda, q1, n_samples)?;
    let mut report = IdentityReport { checks: Vec::new() };
    report.push("rate_equation", residuals.rate_equation, 1e-8);
    report.push("log_equation", residuals.log_equation, 1e-8);
    report.push("endpoint_curve", residuals.curve, 1e-8);
    report
        .checks
        .extend(check_identities(&traj, endpoint, channel, lambda, q1).checks);
    Ok(report)
}

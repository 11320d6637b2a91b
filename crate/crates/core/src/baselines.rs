//! Reference bounds: block-Markov and cut-set in closed form, and the
//! two-symbol linear scheme optimized numerically.
//!
//! All values are normalized by `2 ln 2`, the point-to-point minimum.

use rayon::prelude::*;
use serde::Serialize;

use crate::bound::log_space;
use crate::channel::ChannelParams;
use crate::code::evaluate_rank1;
use crate::error::Result;
use crate::numerics::{minimize_simplex, SimplexOptions};

/// `min{1, (a² + b²) / (a²(1 + b²))}`.
pub fn block_markov_bound(channel: &ChannelParams) -> f64 {
    let (a2, b2) = (channel.a * channel.a, channel.b * channel.b);
    ((a2 + b2) / (a2 * (1.0 + b2))).min(1.0)
}

/// `(1 + a² + b²) / ((1 + a²)(1 + b²))`.
pub fn cutset_bound(channel: &ChannelParams) -> f64 {
    let (a2, b2) = (channel.a * channel.a, channel.b * channel.b);
    (1.0 + a2 + b2) / ((1.0 + a2) * (1.0 + b2))
}

/// Optimum of the two-symbol scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoByTwo {
    pub normalized: f64,
    pub beta: f64,
    #[serde(rename = "P1")]
    pub p1: f64,
    #[serde(rename = "P2")]
    pub p2: f64,
}

/// Search grid for [`two_by_two_bound`].
#[derive(Debug, Clone, PartialEq)]
pub struct TwoByTwoSettings {
    pub beta_points: usize,
    pub power_points: usize,
    pub power_min: f64,
    pub power_max: f64,
    pub refine_starts: usize,
    pub simplex: SimplexOptions,
}

impl Default for TwoByTwoSettings {
    fn default() -> Self {
        Self {
            beta_points: 41,
            power_points: 31,
            power_min: 1e-6,
            power_max: 10.0,
            refine_starts: 3,
            simplex: SimplexOptions::default(),
        }
    }
}

/// `s = √(2P1)(√β, √(1-β))` and the single relay coefficient
/// `d = √(2P2 / (2a²βP1 + 1))`, which spends exactly `2P2` at the relay.
pub fn two_by_two_code(
    channel: &ChannelParams,
    beta: f64,
    p1: f64,
    p2: f64,
) -> ([f64; 2], [f64; 4]) {
    let scale = (2.0 * p1).sqrt();
    let s = [scale * beta.sqrt(), scale * (1.0 - beta).sqrt()];
    let d = (2.0 * p2 / (2.0 * channel.a * channel.a * beta * p1 + 1.0)).sqrt();
    (s, [0.0, 0.0, d, 0.0])
}

/// Normalized energy-per-bit of the scheme at one point.
pub fn two_by_two_value(channel: &ChannelParams, beta: f64, p1: f64, p2: f64) -> Result<f64> {
    let (s, d) = two_by_two_code(channel, beta, p1, p2);
    Ok(evaluate_rank1(channel, &s, &d)?.normalized)
}

pub fn two_by_two_bound(channel: &ChannelParams) -> Result<TwoByTwo> {
    two_by_two_bound_with(channel, &TwoByTwoSettings::default())
}

/// Minimizes the finite-power ratio over `β ∈ [0, 1]` and
/// `P1, P2 ∈ [power_min, power_max]`, plus the limit `P2 → 0`: a log grid,
/// then simplex refinement in `(β, ln P1, ln P2)` with coordinates clipped
/// to the box.
pub fn two_by_two_bound_with(
    channel: &ChannelParams,
    settings: &TwoByTwoSettings,
) -> Result<TwoByTwo> {
    channel.validate()?;
    let betas: Vec<f64> = (0..settings.beta_points)
        .map(|i| i as f64 / (settings.beta_points - 1).max(1) as f64)
        .collect();
    let powers = log_space(
        settings.power_min,
        settings.power_max,
        settings.power_points,
    );
    let mut points = Vec::with_capacity(betas.len() * powers.len() * powers.len());
    for &beta in &betas {
        for &p1 in &powers {
            // P2 = 0 is the relay-silent limit of the P2 > 0 family.
            for &p2 in std::iter::once(&0.0).chain(&powers) {
                points.push((beta, p1, p2));
            }
        }
    }
    let mut scored: Vec<(f64, (f64, f64, f64))> = points
        .into_par_iter()
        .filter_map(|(beta, p1, p2)| {
            two_by_two_value(channel, beta, p1, p2)
                .ok()
                .map(|v| (v, (beta, p1, p2)))
        })
        .collect();
    scored.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1 .0.total_cmp(&y.1 .0)));

    let (ln_lo, ln_hi) = (settings.power_min.ln(), settings.power_max.ln());
    let clip = |x: &[f64]| {
        (
            x[0].clamp(0.0, 1.0),
            x[1].clamp(ln_lo, ln_hi).exp(),
            x[2].clamp(ln_lo, ln_hi).exp(),
        )
    };
    let objective = |x: &[f64]| {
        let (beta, p1, p2) = clip(x);
        two_by_two_value(channel, beta, p1, p2).unwrap_or(f64::MAX)
    };

    let mut best = TwoByTwo {
        normalized: f64::INFINITY,
        beta: 0.0,
        p1: 0.0,
        p2: 0.0,
    };
    for &(value, (beta, p1, p2)) in scored.iter().take(settings.refine_starts.max(1)) {
        let mut candidate = (value, (beta, p1, p2));
        if p2 == 0.0 {
            // Along the silent line the ratio only grows with P1, so the
            // grid point at the power floor is already optimal.
        } else if let Ok(m) =
            minimize_simplex(objective, &[beta, p1.ln(), p2.ln()], &settings.simplex)
        {
            if m.value < value {
                candidate = (m.value, clip(&m.point));
            }
        }
        if candidate.0 < best.normalized {
            let (normalized, (beta, p1, p2)) = candidate;
            best = TwoByTwo {
                normalized,
                beta,
                p1,
                p2,
            };
        }
    }
    Ok(best)
}

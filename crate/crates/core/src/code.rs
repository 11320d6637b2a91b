//! Finite-blocklength rank-1 relay codes and their energy-per-bit.
//!
//! [`build_code`] discretizes the relaying trajectory with the
//! component-sequential Euler rule, and [`evaluate_rank1`] scores any
//! `(s, D)` directly from the matrix formula
//!
//! ```text
//! E(s, D) = (‖s‖² + a²‖Ds‖² + tr(DDᵀ)) / (½ log₂(1 + yᵀ(I + b²DDᵀ)⁻¹ y)),   y = (I + abD)s
//! ```
//!
//! without touching the builder's sequences.

use std::cell::Cell;
use std::f64::consts::LN_2;
use std::fmt::Write as _;

use serde::Serialize;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::numerics::{gauss_seidel_euler, Cholesky, FnField};
use crate::trajectory::TrajectoryGrid;

/// Largest blocklength built without an explicit override.
pub const MAX_BLOCKLENGTH: usize = 4096;

// The builder refuses to divide by anything smaller.
const MIN_DENOMINATOR: f64 = 1e-12;

/// A blocklength-`k` code with source direction `s` and relay matrix `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayCode {
    pub k: usize,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub lambda: f64,
    pub q1: f64,
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    /// Running sums `(V_k, Z_k, T_k, R_k)` after the last step.
    pub final_state: [f64; 4],
    /// Row-major `k × k`, zero on and above the diagonal.
    pub d: Vec<f64>,
}

impl RelayCode {
    pub fn d_entry(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.k + j]
    }
}

/// Builds the code for blocklength `k`, starting the recursion from the
/// trajectory's `V(0)` and `Z(0)`.
///
/// The state `(V, Z, T, R)` advances one component at a time, so `Z` sees
/// the new `V`, and `T`, `R` see both. The per-step outputs are
/// `u_i = T s_i / den`, `z_i = λ(1 + a²S) s_i / den` from the state before
/// the step, with `den = (1 + a²S)(λ - R) + a²T²`, and
/// `r_i = λ(ab + a²b²V) s_i / (λ + b²Z)` from the freshly updated `V`, `Z`.
pub fn build_code(
    channel: &ChannelParams,
    traj: &TrajectoryGrid,
    lambda: f64,
    q1: f64,
    k: usize,
) -> Result<RelayCode> {
    build_code_capped(channel, traj, lambda, q1, k, MAX_BLOCKLENGTH)
}

pub fn build_code_capped(
    channel: &ChannelParams,
    traj: &TrajectoryGrid,
    lambda: f64,
    q1: f64,
    k: usize,
    max_k: usize,
) -> Result<RelayCode> {
    channel.validate()?;
    if k == 0 || k > max_k {
        return Err(Error::InvalidInput(format!(
            "blocklength must be in 1..={max_k}, got {k}"
        )));
    }
    if !(lambda > 0.0 && q1 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need lambda > 0 and Q1 > 0, got {lambda}, {q1}"
        )));
    }
    let (a, b) = (channel.a, channel.b);
    let a2 = a * a;
    let delta = q1 / k as f64;
    let s_i = delta.sqrt();

    let denominator = |s: f64, t: f64, r: f64| (1.0 + a2 * s) * (lambda - r) + a2 * t * t;
    let relay_gain = |v: f64, z: f64| lambda * (a * b + a2 * b * b * v) / (lambda + b * b * z);
    let collapse = Cell::new(None);
    let step_of = |s: f64| (s / delta).round() as usize + 1;
    // Components are (V, Z, T, R); each is a per-unit-S rate.
    let field = FnField::new(4, |j: usize, x: &[f64], s: f64| match j {
        0 | 1 => {
            let den = denominator(s, x[2], x[3]);
            if den < MIN_DENOMINATOR {
                if collapse.get().is_none() {
                    collapse.set(Some((step_of(s), den)));
                }
                return f64::NAN;
            }
            let z = lambda * (1.0 + a2 * s) / den;
            if j == 0 {
                -(x[2] / den) * z
            } else {
                -z * z
            }
        }
        2 => relay_gain(x[0], x[1]),
        _ => relay_gain(x[0], x[1]).powi(2),
    });
    let start = [traj.v[0], traj.z[0], 0.0, 0.0];
    let states = match gauss_seidel_euler(&field, &start, 0.0, q1, k) {
        Ok(states) => states,
        Err(e) => {
            return Err(match collapse.get() {
                Some((step, value)) => Error::DenominatorCollapse { step, value },
                None => e,
            })
        }
    };

    let mut code = RelayCode {
        k,
        a,
        b,
        delta,
        lambda,
        q1,
        s: vec![s_i; k],
        u: Vec::with_capacity(k),
        z: Vec::with_capacity(k),
        r: Vec::with_capacity(k),
        final_state: [states[k][0], states[k][1], states[k][2], states[k][3]],
        d: vec![0.0; k * k],
    };
    for i in 0..k {
        let before = &states[i];
        let after = &states[i + 1];
        let s_prev = i as f64 * delta;
        let den = denominator(s_prev, before[2], before[3]);
        code.u.push(before[2] * s_i / den);
        code.z.push(lambda * (1.0 + a2 * s_prev) * s_i / den);
        code.r.push(relay_gain(after[0], after[1]) * s_i);
    }
    for i in 0..k {
        for j in 0..i {
            code.d[i * k + j] = -a2 * code.u[i] * code.s[j] + code.z[i] * code.r[j] / lambda;
        }
    }
    Ok(code)
}

/// Energy and rate of a rank-1 code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CodeEvaluation {
    pub numerator_energy: f64,
    pub mutual_info_bits: f64,
    pub energy_per_bit: f64,
    pub normalized: f64,
}

/// Scores `(s, D)` by the matrix formula, with `D` row-major `k × k`.
pub fn evaluate_rank1(channel: &ChannelParams, s: &[f64], d: &[f64]) -> Result<CodeEvaluation> {
    let k = s.len();
    if k == 0 || d.len() != k * k {
        return Err(Error::InvalidInput(format!(
            "s has length {k} but D has {} entries",
            d.len()
        )));
    }
    if let Some((i, j)) = (0..k)
        .flat_map(|i| (i..k).map(move |j| (i, j)))
        .find(|&(i, j)| d[i * k + j] != 0.0)
    {
        return Err(Error::InvalidInput(format!(
            "D must be strictly lower triangular, D[{i}][{j}] = {}",
            d[i * k + j]
        )));
    }
    let (a, b) = (channel.a, channel.b);
    let row = |i: usize| &d[i * k..i * k + i];
    let ds: Vec<f64> = (0..k).map(|i| dot(row(i), &s[..i])).collect();

    let s_norm = dot(s, s);
    if s_norm == 0.0 {
        return Err(Error::InvalidInput("s must be nonzero".into()));
    }
    let numerator_energy = s_norm + a * a * dot(&ds, &ds) + dot(d, d);

    // M = I + b² D Dᵀ, lower triangle; rows of D are zero past the diagonal.
    let mut m = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let g = dot(&row(i)[..j], row(j));
            m[i * k + j] = b * b * g + if i == j { 1.0 } else { 0.0 };
        }
    }
    let chol = Cholesky::factor(&m, k)?;
    let y: Vec<f64> = s.iter().zip(&ds).map(|(si, di)| si + a * b * di).collect();
    let x = chol.solve(&y);
    let quad = dot(&y, &x);
    let mutual_info_bits = 0.5 * quad.ln_1p() / LN_2;
    let energy_per_bit = numerator_energy / mutual_info_bits;
    if !(energy_per_bit.is_finite() && energy_per_bit > 0.0) {
        return Err(Error::NonFinite(format!(
            "energy per bit {energy_per_bit} from energy {numerator_energy} and rate {mutual_info_bits}"
        )));
    }
    Ok(CodeEvaluation {
        numerator_energy,
        mutual_info_bits,
        energy_per_bit,
        normalized: energy_per_bit / (2.0 * LN_2),
    })
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| p * q).sum()
}

/// Writes the code as text: a header `k a b lambda Q1`, the entries of `s`
/// on one line, then one line per row of the strict lower triangle of `D`
/// (row `i` holds `i - 1` entries, so the first row is empty).
pub fn export_code(code: &RelayCode) -> String {
    let num = |x: f64| format!("{x:.16e}");
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {} {} {}",
        code.k,
        num(code.a),
        num(code.b),
        num(code.lambda),
        num(code.q1)
    );
    let join = |xs: &mut dyn Iterator<Item = f64>| xs.map(num).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "{}", join(&mut code.s.iter().copied()));
    for i in 0..code.k {
        let _ = writeln!(out, "{}", join(&mut (0..i).map(|j| code.d_entry(i, j))));
    }
    out
}

/// Code parsed back from [`export_code`] output.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCode {
    pub k: usize,
    pub channel: ChannelParams,
    pub lambda: f64,
    pub q1: f64,
    pub s: Vec<f64>,
    pub d: Vec<f64>,
}

pub fn parse_code(text: &str) -> Result<ParsedCode> {
    let bad = |msg: String| Error::InvalidInput(format!("malformed code file: {msg}"));
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| bad("empty input".into()))?
        .split_whitespace()
        .collect();
    if header.len() != 5 {
        return Err(bad(format!(
            "header has {} fields, expected 5",
            header.len()
        )));
    }
    let k: usize = header[0]
        .parse()
        .map_err(|e| bad(format!("blocklength {:?}: {e}", header[0])))?;
    let numbers = |line: &str| -> Result<Vec<f64>> {
        line.split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| bad(format!("{t:?}: {e}"))))
            .collect()
    };
    let head = numbers(&header[1..].join(" "))?;
    let channel = ChannelParams::new(head[0], head[1])?;
    let s = numbers(lines.next().ok_or_else(|| bad("missing s line".into()))?)?;
    if s.len() != k {
        return Err(bad(format!("s has {} entries, expected {k}", s.len())));
    }
    let mut d = vec![0.0; k * k];
    for i in 0..k {
        let row = numbers(
            lines
                .next()
                .ok_or_else(|| bad(format!("missing row {}", i + 1)))?,
        )?;
        if row.len() != i {
            return Err(bad(format!(
                "row {} has {} entries, expected {i}",
                i + 1,
                row.len()
            )));
        }
        d[i * k..i * k + i].copy_from_slice(&row);
    }
    Ok(ParsedCode {
        k,
        channel,
        lambda: head[2],
        q1: head[3],
        s,
        d,
    })
}

//! All four bounds over a range of relay gains, with CSV, JSON and SVG
//! output.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{block_markov_bound, cutset_bound, two_by_two_bound};
use crate::bound::{log_space, OptimizedBound, RankOneSearch, SearchSettings};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};

/// Smallest relay gain a sweep evaluates; `b = 0` removes the relay.
pub const MIN_RELAY_GAIN: f64 = 1e-3;

pub const CSV_HEADER: &str = "a,b,block_markov,cutset,two_by_two,rank1,A_f,B_f,A0,psi,lambda,Q1,Q2";

/// Normalized bounds at one channel, with the optimizers' arguments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsRecord {
    pub a: f64,
    pub b: f64,
    pub block_markov: f64,
    pub cutset: f64,
    pub two_by_two: f64,
    pub rank1: f64,
    pub beta: f64,
    #[serde(rename = "P1")]
    pub p1: f64,
    #[serde(rename = "P2")]
    pub p2: f64,
    #[serde(rename = "A_f")]
    pub a_f: f64,
    #[serde(rename = "B_f")]
    pub b_f: f64,
    #[serde(rename = "A0")]
    pub a0: f64,
    pub psi: f64,
    pub lambda: f64,
    #[serde(rename = "Q1")]
    pub q1: f64,
    #[serde(rename = "Q2")]
    pub q2: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Every bound at `channel`, reusing `search` for the rank-1 optimum.
pub fn bounds_record(channel: &ChannelParams, search: &RankOneSearch) -> Result<BoundsRecord> {
    let rank1 = search.optimize(channel.b)?;
    record_from(channel, &rank1)
}

pub fn record_from(channel: &ChannelParams, rank1: &OptimizedBound) -> Result<BoundsRecord> {
    let two = two_by_two_bound(channel)?;
    Ok(BoundsRecord {
        a: channel.a,
        b: channel.b,
        block_markov: block_markov_bound(channel),
        cutset: cutset_bound(channel),
        two_by_two: two.normalized,
        rank1: rank1.evaluation.normalized,
        beta: two.beta,
        p1: two.p1,
        p2: two.p2,
        a_f: rank1.pair.a_f,
        b_f: rank1.pair.b_f,
        a0: rank1.endpoint.a0,
        psi: rank1.endpoint.psi,
        lambda: rank1.evaluation.lambda,
        q1: rank1.evaluation.q1,
        q2: rank1.evaluation.q2,
        warnings: rank1.warnings.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub a: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub n_points: usize,
    pub spacing: Spacing,
}

impl SweepConfig {
    /// The relay gains to evaluate, plus a warning when `b_min` had to be
    /// raised to [`MIN_RELAY_GAIN`].
    pub fn gains(&self) -> Result<(Vec<f64>, Option<String>)> {
        if self.n_points < 2 {
            return Err(Error::InvalidInput(format!(
                "a sweep needs at least 2 points, got {}",
                self.n_points
            )));
        }
        if !(self.b_min.is_finite() && self.b_max.is_finite() && self.b_min >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "invalid gain range [{}, {}]",
                self.b_min, self.b_max
            )));
        }
        let mut warning = None;
        let lo = if self.b_min < MIN_RELAY_GAIN {
            warning = Some(format!(
                "b_min = {} raised to {MIN_RELAY_GAIN}; the relay needs a positive gain",
                self.b_min
            ));
            MIN_RELAY_GAIN
        } else {
            self.b_min
        };
        if !(self.b_max > lo) {
            return Err(Error::InvalidInput(format!(
                "b_max = {} must exceed b_min = {lo}",
                self.b_max
            )));
        }
        let n = self.n_points;
        let gains = match self.spacing {
            Spacing::Log => log_space(lo, self.b_max, n),
            Spacing::Linear => (0..n)
                .map(|i| lo + (self.b_max - lo) * i as f64 / (n - 1) as f64)
                .collect(),
        };
        Ok((gains, warning))
    }
}

/// Rows in the order of [`SweepConfig::gains`], whatever the worker count.
pub fn run_sweep(config: &SweepConfig) -> Result<(Vec<BoundsRecord>, Vec<String>)> {
    let (gains, warning) = config.gains()?;
    let search = RankOneSearch::new(config.a, SearchSettings::default())?;
    let rows = gains
        .par_iter()
        .map(|&b| bounds_record(&ChannelParams::new(config.a, b)?, &search))
        .collect::<Result<Vec<_>>>()?;
    let mut warnings: Vec<String> = warning.into_iter().collect();
    for row in &rows {
        warnings.extend(row.warnings.iter().map(|w| format!("b = {}: {w}", row.b)));
    }
    Ok((rows, warnings))
}

pub fn to_csv(rows: &[BoundsRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let fields = [
            r.a,
            r.b,
            r.block_markov,
            r.cutset,
            r.two_by_two,
            r.rank1,
            r.a_f,
            r.b_f,
            r.a0,
            r.psi,
            r.lambda,
            r.q1,
            r.q2,
        ];
        let line: Vec<String> = fields.iter().map(|x| format!("{x:e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn to_json(rows: &[BoundsRecord]) -> Result<String> {
    serde_json::to_string_pretty(rows)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))
}

type Series = (&'static str, &'static str, fn(&BoundsRecord) -> f64);

/// A static line chart of the four normalized bounds against `b`.
pub fn to_svg(rows: &[BoundsRecord]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const PAD: f64 = 56.0;
    let series: [Series; 4] = [
        ("block-Markov", "#1f77b4", |r| r.block_markov),
        ("2x2 linear", "#ff7f0e", |r| r.two_by_two),
        ("rank-1 linear", "#2ca02c", |r| r.rank1),
        ("cut-set", "#d62728", |r| r.cutset),
    ];
    let b_lo = rows.iter().map(|r| r.b).fold(f64::INFINITY, f64::min);
    let b_hi = rows.iter().map(|r| r.b).fold(f64::NEG_INFINITY, f64::max);
    let values = || {
        rows.iter()
            .flat_map(|r| series.iter().map(move |s| (s.2)(r)))
    };
    let y_lo = (values().fold(f64::INFINITY, f64::min) * 10.0).floor() / 10.0;
    let y_hi = (values().fold(f64::NEG_INFINITY, f64::max) * 10.0).ceil() / 10.0;
    let x_of = |b: f64| PAD + (b - b_lo) / (b_hi - b_lo).max(f64::MIN_POSITIVE) * (W - 2.0 * PAD);
    let y_of = |v: f64| H - PAD - (v - y_lo) / (y_hi - y_lo).max(1e-12) * (H - 2.0 * PAD);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    for (value, label) in [(y_lo, y_lo), (y_hi, y_hi)] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" font-size="12" text-anchor="end">{label:.1}</text>"#,
            PAD - 6.0,
            y_of(value) + 4.0
        );
    }
    for (b, anchor) in [(b_lo, "start"), (b_hi, "end")] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" font-size="12" text-anchor="{anchor}">{b}</text>"#,
            x_of(b),
            H - PAD + 18.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">b</text>"#,
        W / 2.0,
        H - 12.0
    );
    for (i, (name, colour, get)) in series.iter().enumerate() {
        let points: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", x_of(r.b), y_of(get(r))))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            points.join(" ")
        );
        let ly = PAD + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" font-size="12" fill="{colour}">{name}</text>"#,
            W - PAD - 110.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

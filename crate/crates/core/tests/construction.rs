use proptest::prelude::*;
use relay_energy::baselines::{
    block_markov_bound, cutset_bound, two_by_two_bound, two_by_two_bound_with, two_by_two_value,
    TwoByTwoSettings,
};
use relay_energy::bound::{optimize_bound, solve_endpoint, theorem_bound, BoundaryPair};
use relay_energy::code::{build_code, evaluate_rank1, export_code, parse_code};
use relay_energy::trajectory::{build_trajectory, check_identities, lambda_and_q1};
use relay_energy::{ChannelParams, Error};
use std::f64::consts::LN_2;

fn setup(
    a: f64,
    b: f64,
    rho: f64,
    b_f: f64,
) -> (ChannelParams, relay_energy::bound::EndpointSolution) {
    let channel = ChannelParams::new(a, b).unwrap();
    let pair = BoundaryPair::from_ratio(rho, b_f, &channel).unwrap();
    (channel, solve_endpoint(&pair, &channel).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn trajectory_invariants_hold(
        a in 0.6..2.5f64,
        b in 0.5..8.0f64,
        rho in 0.05..0.95f64,
        log_bf in -1.5..1.5f64,
        n in 64usize..600,
    ) {
        let (channel, endpoint) = setup(a, b, rho, 10f64.powf(log_bf));
        let (lambda, q1) = lambda_and_q1(&endpoint, &channel).unwrap();
        let traj = build_trajectory(&endpoint, &channel, lambda, q1, n).unwrap();
        let report = check_identities(&traj, &endpoint, &channel, lambda, q1);
        prop_assert!(report.passed(), "{:?}", report.failures().collect::<Vec<_>>());
        prop_assert!(traj.u.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn trajectory_is_grid_independent() {
    let (channel, endpoint) = setup(1.1, 2.0, 0.6, 0.8);
    let (lambda, q1) = lambda_and_q1(&endpoint, &channel).unwrap();
    let coarse = build_trajectory(&endpoint, &channel, lambda, q1, 256).unwrap();
    let fine = build_trajectory(&endpoint, &channel, lambda, q1, 512).unwrap();
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
    assert!(rel(*coarse.t.last().unwrap(), *fine.t.last().unwrap()) <= 1e-8);
    assert!(rel(*coarse.r.last().unwrap(), *fine.r.last().unwrap()) <= 1e-8);
    assert!(rel(coarse.z[0], fine.z[0]) <= 1e-8);
}

#[test]
fn built_code_satisfies_row_identities() {
    let (channel, endpoint) = setup(1.1, 2.0, 0.6, 0.8);
    let (lambda, q1) = lambda_and_q1(&endpoint, &channel).unwrap();
    let traj = build_trajectory(&endpoint, &channel, lambda, q1, 512).unwrap();
    let code = build_code(&channel, &traj, lambda, q1, 300).unwrap();
    let k = code.k;
    for i in 0..k {
        for j in i..k {
            assert_eq!(code.d[i * k + j], 0.0);
        }
        let ds: f64 = (0..i).map(|j| code.d[i * k + j] * code.s[j]).sum();
        let dr: f64 = (0..i).map(|j| code.d[i * k + j] * code.r[j]).sum();
        assert!(
            (ds - code.u[i]).abs() <= 1e-9 * (1.0 + code.u[i].abs()),
            "row {i}"
        );
        let want = code.z[i] - code.s[i];
        assert!((dr - want).abs() <= 1e-9 * (1.0 + want.abs()), "row {i}");
    }
}

#[test]
fn oracle_approaches_theorem_for_interior_pair() {
    let (channel, endpoint) = setup(1.1, 3.0, 0.5, 1.0);
    let theorem = theorem_bound(&endpoint.pair, &channel)
        .unwrap()
        .energy_per_bit;
    let (lambda, q1) = lambda_and_q1(&endpoint, &channel).unwrap();
    let traj = build_trajectory(&endpoint, &channel, lambda, q1, 512).unwrap();
    let gaps: Vec<f64> = [128, 256, 512, 1024, 2048]
        .iter()
        .map(|&k| {
            let code = build_code(&channel, &traj, lambda, q1, k).unwrap();
            let e = evaluate_rank1(&channel, &code.s, &code.d)
                .unwrap()
                .energy_per_bit;
            (e - theorem).abs() / theorem
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[4] < 0.05);
}

#[test]
fn exported_code_reevaluates_identically() {
    let channel = ChannelParams::new(1.1, 2.0).unwrap();
    let opt = optimize_bound(&channel).unwrap();
    let (lambda, q1) = lambda_and_q1(&opt.endpoint, &channel).unwrap();
    let traj = build_trajectory(&opt.endpoint, &channel, lambda, q1, 512).unwrap();
    let code = build_code(&channel, &traj, lambda, q1, 64).unwrap();
    let parsed = parse_code(&export_code(&code)).unwrap();
    assert_eq!(parsed.s, code.s);
    assert_eq!(parsed.d, code.d);
    let before = evaluate_rank1(&channel, &code.s, &code.d)
        .unwrap()
        .energy_per_bit;
    let after = evaluate_rank1(&parsed.channel, &parsed.s, &parsed.d)
        .unwrap()
        .energy_per_bit;
    assert!((before - after).abs() <= 1e-15 * before);
}

#[test]
fn oversized_blocklength_is_rejected() {
    let (channel, endpoint) = setup(1.1, 2.0, 0.6, 0.8);
    let (lambda, q1) = lambda_and_q1(&endpoint, &channel).unwrap();
    let traj = build_trajectory(&endpoint, &channel, lambda, q1, 128).unwrap();
    assert!(matches!(
        build_code(&channel, &traj, lambda, q1, 5000),
        Err(Error::InvalidInput(_))
    ));
}

/// `½ log2(1 + yᵀ M⁻¹ y)` through an explicit factor of `M⁻¹`.
fn mutual_info_by_factor(a: f64, b: f64, s: &[f64], d: &[f64]) -> f64 {
    let k = s.len();
    let mut m = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let g: f64 = (0..k).map(|l| d[i * k + l] * d[j * k + l]).sum();
            m[i * k + j] = b * b * g + if i == j { 1.0 } else { 0.0 };
        }
    }
    // Gauss-Jordan inverse.
    let mut aug = vec![0.0; k * 2 * k];
    for i in 0..k {
        for j in 0..k {
            aug[i * 2 * k + j] = m[i * k + j];
        }
        aug[i * 2 * k + k + i] = 1.0;
    }
    for c in 0..k {
        let p = aug[c * 2 * k + c];
        for x in 0..2 * k {
            aug[c * 2 * k + x] /= p;
        }
        for r in 0..k {
            if r != c {
                let f = aug[r * 2 * k + c];
                for x in 0..2 * k {
                    aug[r * 2 * k + x] -= f * aug[c * 2 * k + x];
                }
            }
        }
    }
    let inv = |i: usize, j: usize| aug[i * 2 * k + k + j];
    // G lower triangular with G Gᵀ = M⁻¹.
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let s: f64 = (0..j).map(|l| g[i * k + l] * g[j * k + l]).sum();
            g[i * k + j] = if i == j {
                (inv(i, i) - s).sqrt()
            } else {
                (inv(i, j) - s) / g[j * k + j]
            };
        }
    }
    let y: Vec<f64> = (0..k)
        .map(|i| s[i] + a * b * (0..k).map(|j| d[i * k + j] * s[j]).sum::<f64>())
        .collect();
    let v2: f64 = (0..k)
        .map(|j| (0..k).map(|i| g[i * k + j] * y[i]).sum::<f64>().powi(2))
        .sum();
    0.5 * v2.ln_1p() / LN_2
}

fn lower_triangle(k: usize, entries: &[f64]) -> Vec<f64> {
    let mut d = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..i {
            d[i * k + j] = entries[i * k + j];
        }
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mutual_info_matches_explicit_factor(
        k in 1usize..=8,
        a in 0.2..3.0f64,
        b in 0.2..3.0f64,
        s in proptest::collection::vec(-1.0..1.0f64, 8),
        entries in proptest::collection::vec(-1.0..1.0f64, 64),
    ) {
        let channel = ChannelParams::new(a, b).unwrap();
        let s = &s[..k];
        prop_assume!(s.iter().any(|x| x.abs() > 1e-3));
        let d = lower_triangle(k, &entries[..k * k]);
        let ours = evaluate_rank1(&channel, s, &d).unwrap().mutual_info_bits;
        let oracle = mutual_info_by_factor(a, b, s, &d);
        prop_assert!((ours - oracle).abs() <= 1e-9 * (1.0 + oracle), "{ours} vs {oracle}");
    }

    #[test]
    fn energy_is_invariant_under_sign_flip(
        k in 1usize..=8,
        s in proptest::collection::vec(-1.0..1.0f64, 8),
        entries in proptest::collection::vec(-1.0..1.0f64, 64),
    ) {
        let channel = ChannelParams::new(1.1, 2.0).unwrap();
        let s = &s[..k];
        prop_assume!(s.iter().any(|x| x.abs() > 1e-3));
        let d = lower_triangle(k, &entries[..k * k]);
        let flipped: Vec<f64> = s.iter().map(|x| -x).collect();
        let e = evaluate_rank1(&channel, s, &d).unwrap();
        let f = evaluate_rank1(&channel, &flipped, &d).unwrap();
        prop_assert_eq!(e.numerator_energy, f.numerator_energy);
        prop_assert!((e.energy_per_bit - f.energy_per_bit).abs() <= 1e-13 * e.energy_per_bit);
    }

    #[test]
    fn two_symbol_scheme_matches_closed_form(
        a in 0.2..3.0f64,
        b in 0.2..10.0f64,
        beta in 0.0..1.0f64,
        p1 in 1e-4..5.0f64,
        p2 in 0.0..5.0f64,
    ) {
        let channel = ChannelParams::new(a, b).unwrap();
        let (s1, s2) = ((2.0 * p1 * beta).sqrt(), (2.0 * p1 * (1.0 - beta)).sqrt());
        let d = (2.0 * p2 / (2.0 * a * a * beta * p1 + 1.0)).sqrt();
        let energy = s1 * s1 + s2 * s2 + a * a * d * d * s1 * s1 + d * d;
        let quad = s1 * s1 + (s2 + a * b * d * s1).powi(2) / (1.0 + b * b * d * d);
        let closed = energy / (0.5 * quad.ln_1p() / LN_2) / (2.0 * LN_2);
        let ours = two_by_two_value(&channel, beta, p1, p2).unwrap();
        prop_assert!((ours - closed).abs() <= 1e-12 * closed, "{ours} vs {closed}");
    }

    #[test]
    fn cutset_is_below_closed_form_baselines(a in 0.05..10.0f64, b in 0.05..10.0f64) {
        let channel = ChannelParams::new(a, b).unwrap();
        prop_assert!(cutset_bound(&channel) <= block_markov_bound(&channel) + 1e-9);
        prop_assert!(block_markov_bound(&channel) <= 1.0);
    }
}

#[test]
fn sandwich_holds_on_grid() {
    for a in [0.7, 1.1, 2.0] {
        for b in [0.3, 1.0, 3.0, 9.0] {
            let channel = ChannelParams::new(a, b).unwrap();
            let cutset = cutset_bound(&channel);
            let rank1 = optimize_bound(&channel).unwrap().evaluation.normalized;
            let two = two_by_two_bound(&channel).unwrap().normalized;
            for (name, v) in [
                ("rank1", rank1),
                ("2x2", two),
                ("bm", block_markov_bound(&channel)),
            ] {
                assert!(
                    cutset <= v + 1e-9,
                    "a={a} b={b}: cutset {cutset} > {name} {v}"
                );
            }
        }
    }
}

#[test]
fn two_by_two_is_insensitive_to_grid() {
    for b in [0.5, 2.0, 5.0, 10.0] {
        let channel = ChannelParams::new(1.1, b).unwrap();
        let base = two_by_two_bound(&channel).unwrap().normalized;
        let lower_cap = two_by_two_bound_with(
            &channel,
            &TwoByTwoSettings {
                power_min: 5e-7,
                ..TwoByTwoSettings::default()
            },
        )
        .unwrap()
        .normalized;
        let shifted = two_by_two_bound_with(
            &channel,
            &TwoByTwoSettings {
                beta_points: 37,
                power_points: 29,
                ..TwoByTwoSettings::default()
            },
        )
        .unwrap()
        .normalized;
        assert!(
            (base - lower_cap).abs() < 1e-6,
            "b={b}: {base} vs {lower_cap}"
        );
        assert!((base - shifted).abs() < 1e-6, "b={b}: {base} vs {shifted}");
    }
}

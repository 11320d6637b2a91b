//! Acceptance checks, one line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use proptest::test_runner::{RngAlgorithm, TestRng};
use relay_energy::baselines::{block_markov_bound, cutset_bound, two_by_two_bound};
use relay_energy::bound::{
    f_eval, solve_endpoint, BoundaryPair, OptimizedBound, RankOneSearch, SearchSettings, Tolerances,
};
use relay_energy::code::{build_code, evaluate_rank1};
use relay_energy::numerics::{gauss_seidel_euler, FnField};
use relay_energy::sweep::{run_sweep, to_csv, Spacing, SweepConfig};
use relay_energy::trajectory::{build_trajectory, lambda_and_q1, verify_endpoint};
use relay_energy::ChannelParams;

const A: f64 = 1.1;
const GRID: [f64; 7] = [0.5, 1.0, 2.0, 3.0, 5.0, 8.0, 10.0];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn rng() -> TestRng {
    TestRng::from_seed(RngAlgorithm::ChaCha, &[7; 32])
}

fn uniform(rng: &mut TestRng, lo: f64, hi: f64) -> f64 {
    use proptest::prelude::Rng;
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    lo + (hi - lo) * u
}

struct GridRow {
    b: f64,
    rank1: f64,
    two_by_two: f64,
    block_markov: f64,
    cutset: f64,
}

fn figure_grid() -> Vec<GridRow> {
    let search = RankOneSearch::new(A, SearchSettings::default()).unwrap();
    GRID.iter()
        .map(|&b| {
            let channel = ChannelParams::new(A, b).unwrap();
            GridRow {
                b,
                rank1: search.optimize(b).unwrap().evaluation.normalized,
                two_by_two: two_by_two_bound(&channel).unwrap().normalized,
                block_markov: block_markov_bound(&channel),
                cutset: cutset_bound(&channel),
            }
        })
        .collect()
}

fn rank1_below_two_by_two(rows: &[GridRow]) -> Outcome {
    let worst = rows
        .iter()
        .map(|r| (r.b, r.rank1 - r.two_by_two))
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap();
    outcome(
        worst.1 <= 1e-6,
        format!(
            "max rank1 - two_by_two = {:.3e} at b = {}",
            worst.1, worst.0
        ),
    )
}

fn sandwich(rows: &[GridRow]) -> Outcome {
    let worst = rows
        .iter()
        .map(|r| r.cutset - r.rank1.min(r.two_by_two).min(r.block_markov))
        .fold(f64::NEG_INFINITY, f64::max);
    outcome(
        worst <= 1e-9,
        format!("max cutset - achievable = {worst:.3e}"),
    )
}

fn linear_advantage(rows: &[GridRow]) -> Outcome {
    let best = rows
        .iter()
        .map(|r| (r.b, r.block_markov - r.two_by_two))
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap();
    outcome(
        best.1 > 1e-4,
        format!(
            "block_markov - two_by_two = {:.4} at b = {}",
            best.1, best.0
        ),
    )
}

fn endpoint_residuals() -> Outcome {
    let mut rng = rng();
    let tol = Tolerances::default();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..50 {
        let a = uniform(&mut rng, 0.5, 3.0);
        let rho = uniform(&mut rng, 0.01, 0.99);
        let b_f = 10f64.powf(uniform(&mut rng, -2.0, 2.0));
        let channel = ChannelParams::new(a, 1.0).unwrap();
        let pair = BoundaryPair::from_ratio(rho, b_f, &channel).unwrap();
        match solve_endpoint(&pair, &channel).and_then(|e| e.residuals(&pair, &channel, &tol)) {
            Ok(r) => worst = worst.max(r.rate_equation).max(r.log_equation),
            Err(_) => failures += 1,
        }
    }
    outcome(
        failures == 0 && worst <= 1e-8,
        format!("worst relative residual {worst:.3e} over 50 triples, {failures} solve failures"),
    )
}

fn trajectory_identities(search: &RankOneSearch) -> Outcome {
    let mut worst = String::new();
    let mut passed = true;
    for b in [1.0, 2.0, 5.0] {
        let channel = ChannelParams::new(A, b).unwrap();
        let opt = search.optimize(b).unwrap();
        let report = verify_endpoint(&opt.endpoint, &channel, 512, 1.0).unwrap();
        passed &= report.passed();
        let conservation = report
            .checks
            .iter()
            .find(|c| c.name == "conservation")
            .unwrap();
        worst.push_str(&format!(" b={b}: conservation {:.1e}", conservation.worst));
        for c in report.failures() {
            worst.push_str(&format!(" [{} failed: {:.3e}]", c.name, c.worst));
        }
    }
    outcome(passed, format!("all checks at 512 samples;{worst}"))
}

fn oracle_convergence(opt: &OptimizedBound) -> Outcome {
    let channel = ChannelParams::new(A, 2.0).unwrap();
    let (lambda, q1) = lambda_and_q1(&opt.endpoint, &channel).unwrap();
    let traj = build_trajectory(&opt.endpoint, &channel, lambda, q1, 512).unwrap();
    let theorem = opt.evaluation.energy_per_bit;
    let gaps: Vec<f64> = [128, 256, 512, 1024, 2048]
        .iter()
        .map(|&k| {
            let code = build_code(&channel, &traj, lambda, q1, k).unwrap();
            let oracle = evaluate_rank1(&channel, &code.s, &code.d).unwrap();
            (oracle.energy_per_bit - theorem).abs() / theorem
        })
        .collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let last = *gaps.last().unwrap();
    let list: Vec<String> = gaps.iter().map(|g| format!("{g:.2e}")).collect();
    outcome(
        decreasing && last < 0.05,
        format!("gaps for k = 128..2048: {}", list.join(", ")),
    )
}

fn euler_order() -> Outcome {
    let field = FnField::new(1, |_, theta: &[f64], _| theta[0]);
    let steps = [256usize, 512, 1024, 2048];
    let points: Vec<(f64, f64)> = steps
        .iter()
        .map(|&n| {
            let states = gauss_seidel_euler(&field, &[1.0], 0.0, 1.0, n).unwrap();
            let err = (states[n][0] - std::f64::consts::E).abs();
            ((1.0 / n as f64).ln(), err.ln())
        })
        .collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    outcome(
        (0.8..=1.2).contains(&slope),
        format!("log-log error slope {slope:.4}"),
    )
}

fn closed_forms() -> Outcome {
    let bm = block_markov_bound(&ChannelParams::new(1.1, 1.0).unwrap());
    let cs = cutset_bound(&ChannelParams::new(1.0, 1.0).unwrap());
    let expected_bm = 2.21 / 2.42;
    outcome(
        (bm - expected_bm).abs() <= 1e-12 && (cs - 0.75).abs() <= 1e-12,
        format!("block_markov(1.1, 1) = {bm:.12}, cutset(1, 1) = {cs}"),
    )
}

fn curve_consistency() -> Outcome {
    let mut rng = rng();
    let mut worst: f64 = 0.0;
    let mut small_w = 0;
    for i in 0..1000 {
        let w = 10f64.powf(uniform(&mut rng, -8.0, 6.0));
        let magnitude = 10f64.powf(uniform(&mut rng, -3.0, 3.0));
        let phi = if i % 2 == 0 { magnitude } else { -magnitude };
        if phi * w - 1.0 < 0.0 {
            small_w += 1;
        }
        let b = f_eval(w, phi).unwrap();
        let scale = (w * b).abs().max(1.0 / w).max(1.0 / b).max(phi.abs());
        worst = worst.max((w * b + 1.0 / w - 1.0 / b - phi).abs() / scale);
    }
    outcome(
        worst <= 1e-10 && small_w > 0,
        format!("worst relative residual {worst:.3e}, {small_w} points on the stable branch"),
    )
}

fn sweep_determinism() -> Outcome {
    let config = SweepConfig {
        a: A,
        b_min: 0.0,
        b_max: 10.0,
        n_points: 50,
        spacing: Spacing::Log,
    };
    let first = to_csv(&run_sweep(&config).unwrap().0);
    let second = to_csv(&run_sweep(&config).unwrap().0);
    outcome(
        first == second,
        format!("{} bytes, identical = {}", first.len(), first == second),
    )
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |n: usize, name: &str, start: Instant, o: Outcome| {
        all &= o.passed;
        println!(
            "criterion {n:>2} {}  {name}: {} ({:.2} s)",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    };

    let start = Instant::now();
    let rows = figure_grid();
    report(
        1,
        "rank-1 at or below 2x2",
        start,
        rank1_below_two_by_two(&rows),
    );
    report(
        2,
        "cut-set below every achievable bound",
        start,
        sandwich(&rows),
    );
    report(
        3,
        "2x2 beats block-Markov somewhere",
        start,
        linear_advantage(&rows),
    );

    let start = Instant::now();
    report(
        4,
        "endpoint equation residuals",
        start,
        endpoint_residuals(),
    );

    let start = Instant::now();
    let search = RankOneSearch::new(A, SearchSettings::default()).unwrap();
    report(
        5,
        "trajectory identities",
        start,
        trajectory_identities(&search),
    );

    let start = Instant::now();
    let opt = search.optimize(2.0).unwrap();
    report(6, "oracle convergence", start, oracle_convergence(&opt));

    let start = Instant::now();
    report(7, "integrator order", start, euler_order());

    let start = Instant::now();
    report(8, "closed-form baselines", start, closed_forms());

    let start = Instant::now();
    report(9, "curve root consistency", start, curve_consistency());

    let start = Instant::now();
    report(10, "sweep determinism", start, sweep_determinism());

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use relay_energy::baselines::{block_markov_bound, cutset_bound, two_by_two_bound};
use relay_energy::bound::{bound_at_pair, optimize_bound, BoundaryPair, OptimizedBound};
use relay_energy::code::{build_code_capped, evaluate_rank1, export_code, MAX_BLOCKLENGTH};
use relay_energy::sweep::{run_sweep, to_csv, to_json, to_svg, Spacing, SweepConfig};
use relay_energy::trajectory::{build_trajectory, lambda_and_q1, verify_endpoint, DEFAULT_SAMPLES};
use relay_energy::{ChannelParams, Error};

#[derive(Parser)]
#[command(
    name = "relay-energy",
    version,
    about = "Energy-per-bit bounds for the Gaussian relay channel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Point {
    /// Source to relay gain.
    #[arg(long)]
    a: f64,
    /// Relay to destination gain.
    #[arg(long)]
    b: f64,
    /// Boundary value A_f; skips the outer optimization together with --Bf.
    #[arg(long = "Af", requires = "b_f")]
    a_f: Option<f64>,
    /// Boundary value B_f.
    #[arg(long = "Bf", requires = "a_f")]
    b_f: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Grid {
    Linear,
    Log,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Rank-1 bound and the baselines at one channel, as JSON.
    Bound(Point),
    /// All bounds over a range of relay gains.
    Sweep {
        #[arg(long, default_value_t = 1.1)]
        a: f64,
        #[arg(long, default_value_t = 0.0)]
        b_min: f64,
        #[arg(long, default_value_t = 10.0)]
        b_max: f64,
        #[arg(long, default_value_t = 50)]
        n_points: usize,
        #[arg(long, value_enum, default_value_t = Grid::Log)]
        grid: Grid,
        /// Output file; standard output when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Also write a line chart of the four bounds.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Build and export a finite blocklength code, then score it.
    Code {
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
        /// Allow blocklengths above the default cap.
        #[arg(long)]
        force: bool,
    },
    /// Check the endpoint equations and the trajectory identities.
    Verify {
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 1.0, hide = true)]
        lambda_scale: f64,
    },
}

enum Failure {
    Core(Error),
    Io(String),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Verification => 1,
            Failure::Io(_) => 2,
            Failure::Core(e) => match e {
                Error::InvalidInput(_)
                | Error::DomainError(_)
                | Error::DegenerateBound(_)
                | Error::BracketOverflow { .. }
                | Error::NoFeasiblePoint => 2,
                _ => 3,
            },
        }
    }
}

fn solve_point(point: &Point) -> Result<(ChannelParams, OptimizedBound), Failure> {
    let channel = ChannelParams::new(point.a, point.b)?;
    let bound = match (point.a_f, point.b_f) {
        (Some(a_f), Some(b_f)) => bound_at_pair(&BoundaryPair::new(a_f, b_f)?, &channel)?,
        _ => optimize_bound(&channel)?,
    };
    for w in &bound.warnings {
        eprintln!("warning: {w}");
    }
    Ok((channel, bound))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("JSON values always serialize")
    );
}

fn cmd_bound(point: &Point) -> Result<(), Failure> {
    let (channel, bound) = solve_point(point)?;
    let two = two_by_two_bound(&channel)?;
    print_json(&json!({
        "a": channel.a,
        "b": channel.b,
        "pair": bound.pair,
        "endpoint": bound.endpoint,
        "evaluation": bound.evaluation,
        "rank1": bound.evaluation.normalized,
        "two_by_two": two,
        "block_markov": block_markov_bound(&channel),
        "cutset": cutset_bound(&channel),
        "warnings": bound.warnings,
    }));
    Ok(())
}

fn cmd_sweep(
    config: &SweepConfig,
    output: Option<&Path>,
    format: Format,
    svg: Option<&Path>,
) -> Result<(), Failure> {
    let (rows, warnings) = run_sweep(config)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let text = match format {
        Format::Csv => to_csv(&rows),
        Format::Json => to_json(&rows)?,
    };
    match output {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    if let Some(path) = svg {
        write_file(path, &to_svg(&rows))?;
    }
    Ok(())
}

fn cmd_code(point: &Point, k: usize, out: &Path, force: bool) -> Result<(), Failure> {
    let (channel, bound) = solve_point(point)?;
    let (lambda, q1) = lambda_and_q1(&bound.endpoint, &channel)?;
    let traj = build_trajectory(&bound.endpoint, &channel, lambda, q1, DEFAULT_SAMPLES)?;
    let cap = if force { usize::MAX } else { MAX_BLOCKLENGTH };
    let code = build_code_capped(&channel, &traj, lambda, q1, k, cap)?;
    write_file(out, &export_code(&code))?;
    let oracle = evaluate_rank1(&channel, &code.s, &code.d)?;
    let theorem = bound.evaluation.energy_per_bit;
    print_json(&json!({
        "k": k,
        "path": out.display().to_string(),
        "energy_per_bit": oracle.energy_per_bit,
        "normalized": oracle.normalized,
        "theorem_energy_per_bit": theorem,
        "relative_gap": (oracle.energy_per_bit - theorem).abs() / theorem,
    }));
    Ok(())
}

fn cmd_verify(point: &Point, samples: usize, lambda_scale: f64) -> Result<(), Failure> {
    let (channel, bound) = solve_point(point)?;
    let report = verify_endpoint(&bound.endpoint, &channel, samples, lambda_scale)?;
    for c in &report.checks {
        println!(
            "{:<16} worst {:.3e}  tolerance {:.0e}  {}",
            c.name,
            c.worst,
            c.tolerance,
            if c.passed { "ok" } else { "FAILED" }
        );
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Bound(point) => cmd_bound(point),
        Command::Sweep {
            a,
            b_min,
            b_max,
            n_points,
            grid,
            output,
            format,
            svg,
        } => {
            let config = SweepConfig {
                a: *a,
                b_min: *b_min,
                b_max: *b_max,
                n_points: *n_points,
                spacing: match grid {
                    Grid::Linear => Spacing::Linear,
                    Grid::Log => Spacing::Log,
                },
            };
            cmd_sweep(&config, output.as_deref(), *format, svg.as_deref())
        }
        Command::Code {
            point,
            k,
            out,
            force,
        } => cmd_code(point, *k, out, *force),
        Command::Verify {
            point,
            samples,
            lambda_scale,
        } => cmd_verify(point, *samples, *lambda_scale),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Core(e) => eprintln!("error: {e}"),
                Failure::Io(msg) => eprintln!("error: {msg}"),
                Failure::Verification => eprintln!("error: verification failed"),
            }
            ExitCode::from(failure.exit_code())
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use hybrid_games_cli::config::{load_scenario, prepare_scenario, InformationMode};
use hybrid_games_cli::run::{compare_structures, run_prepared};
use hybrid_games_cli::{bench, emit_plot, export_trajectory, write_report_json};

#[derive(Parser)]
#[command(
    name = "hybrid-games",
    about = "Dynamic game solver for driving scenarios with occlusion-dependent information"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and export the trajectory, report, and plot.
    Run(RunArgs),
    /// Solve a scenario under hybrid, open-loop, and feedback information
    /// from the same initialization and compare the outcomes.
    Compare(CompareArgs),
    /// Measure hybrid-solve wall clock against state dimension.
    Bench(BenchArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario TOML file.
    #[arg(long)]
    scenario: PathBuf,
    /// Information structure: hybrid, openloop, or feedback.
    #[arg(long)]
    mode: Option<InformationMode>,
    /// Output directory for trajectory.csv, report.json, and plot.svg.
    #[arg(long)]
    out: PathBuf,
    /// Override the iteration budget.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Override the update step size in (0, 1].
    #[arg(long)]
    eta: Option<f64>,
    /// Override both convergence tolerances.
    #[arg(long)]
    tol: Option<f64>,
    /// Also write an SVG rendering of the solved trajectory.
    #[arg(long)]
    svg: bool,
    /// Override the initialization jitter seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated state dimensions to time.
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64,128")]
    state_dims: Vec<usize>,
    /// Horizon of the timed games.
    #[arg(long, default_value_t = 32)]
    horizon: usize,
    /// Repetitions per dimension (best time wins).
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Optional output directory for bench.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_run(args: RunArgs) -> Result<bool> {
    let mut config = load_scenario(&args.scenario)?;
    if let Some(max_iters) = args.max_iters {
        config.solver.max_iterations = Some(max_iters);
    }
    if let Some(eta) = args.eta {
        anyhow::ensure!(eta > 0.0 && eta <= 1.0, "--eta must lie in (0, 1]");
        config.solver.eta = Some(eta);
    }
    if let Some(tol) = args.tol {
        anyhow::ensure!(tol > 0.0, "--tol must be positive");
        config.solver.state_tolerance = Some(tol);
        config.solver.control_tolerance = Some(tol);
    }
    let mode = args.mode.unwrap_or(config.game.mode);
    let seed = args.seed.unwrap_or(config.game.seed);

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let prepared = prepare_scenario(&config, seed, mode);
    let (report, trajectory) = run_prepared(&prepared);

    export_trajectory(&trajectory, config.game.dt, &args.out.join("trajectory.csv"))?;
    write_report_json(&report, &args.out.join("report.json"))?;
    if args.svg {
        emit_plot(&trajectory, &prepared, &args.out.join("plot.svg"))?;
    }

    println!("{}", report.summary_line());
    if let Some(err) = &report.error {
        eprintln!("solver error: {err}");
    }
    Ok(report.converged)
}

fn cmd_compare(args: CompareArgs) -> Result<bool> {
    let config = load_scenario(&args.scenario)?;
    let seed = args.seed.unwrap_or(config.game.seed);
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;

    let (comparison, trajectories) = compare_structures(&config, seed);
    for (mode, traj) in &trajectories {
        export_trajectory(traj, config.game.dt, &args.out.join(format!("trajectory_{mode}.csv")))?;
    }
    std::fs::write(
        args.out.join("comparison.json"),
        serde_json::to_string_pretty(&comparison)?,
    )?;

    for report in [&comparison.hybrid, &comparison.openloop, &comparison.feedback] {
        println!("{}", report.summary_line());
    }
    println!(
        "lane-deviation ordering (best first): {}",
        comparison.lane_deviation_ordering.join(" < ")
    );
    Ok(comparison.hybrid.converged && comparison.openloop.converged && comparison.feedback.converged)
}

fn cmd_bench(args: BenchArgs) -> Result<bool> {
    let report = bench::complexity_bench(&args.state_dims, args.horizon, args.reps, 7);
    println!("{:>10} {:>14}", "state_dim", "seconds");
    for s in &report.samples {
        println!("{:>10} {:>14.6}", s.state_dim, s.seconds);
    }
    println!("log-log slope: {:.3}", report.log_log_slope);
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("bench.json"), serde_json::to_string_pretty(&report)?)?;
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use racecraft::sim::{Behavior, PlannerKind};
use racecraft_cli::bench::{self, BenchMatrix};
use racecraft_cli::{cmd_plot, cmd_race, cmd_smax, load_config, CliError, Overrides};

#[derive(Parser)]
#[command(name = "racecraft", version, about = "Two-car overtaking races, speed-scaler campaigns and plots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one race and write its event log, metrics, trajectories and opponent model.
    Race(Common),
    /// Find the highest speed scaler at which the planner still overtakes without crashing.
    Smax(Common),
    /// Evaluate a planner × behavior matrix on a worker pool.
    Bench(Common),
    /// Render the opponent model and track map of a race directory written by `race`.
    Plot {
        /// Race output directory; the SVG files are written next to its artifacts.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// TOML or JSON experiment file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel races for `bench`.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// predictive, spliner or none.
    #[arg(long, value_parser = parse_planner)]
    planner: Option<PlannerKind>,
    /// racing_line, shortest_path, centerline or reactive.
    #[arg(long, value_parser = parse_behavior)]
    behavior: Option<Behavior>,
    /// Speed scaler of the opponent.
    #[arg(long = "s")]
    speed_scaler: Option<f64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            planner: self.planner,
            behavior: self.behavior,
            speed_scaler: self.speed_scaler,
        }
    }
}

fn parse_planner(name: &str) -> Result<PlannerKind, String> {
    PlannerKind::from_name(name).ok_or_else(|| format!("unknown planner `{name}` (expected predictive, spliner or none)"))
}

fn parse_behavior(name: &str) -> Result<Behavior, String> {
    Behavior::from_name(name).ok_or_else(|| format!("unknown behavior `{name}` (expected racing_line, shortest_path, centerline or reactive)"))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Race(c) => {
            let cfg = load_config(c.config.as_deref(), &c.overrides())?;
            let m = cmd_race(&cfg, &c.out)?;
            println!(
                "{} vs {} at S = {:.2}: {} overtakes, {} crashes, {} timeouts, {} aborts in {:.1} s",
                m.planner.name(),
                m.behavior.name(),
                m.speed_scaler,
                m.n_overtakes,
                m.n_crashes,
                m.n_timeouts,
                m.n_aborts,
                m.sim_time
            );
        }
        Command::Smax(c) => {
            let cfg = load_config(c.config.as_deref(), &c.overrides())?;
            let r = cmd_smax(&cfg, &c.out)?;
            match r.result.s_max {
                Some(s) => println!("{} vs {}: S_max = {s:.2}", r.planner.name(), r.behavior.name()),
                None => println!("{} vs {}: no successful speed scaler", r.planner.name(), r.behavior.name()),
            }
        }
        Command::Bench(c) => {
            let mut overrides = c.overrides();
            let mut matrix = match &c.config {
                Some(p) => BenchMatrix::load(p)?,
                None => BenchMatrix::default(),
            };
            matrix.restrict(&overrides);
            overrides.planner = None;
            overrides.behavior = None;
            let base = load_config(c.config.as_deref(), &overrides)?;
            let results = bench::run_bench(&base, &matrix, c.workers)?;
            let hash = bench::bench_hash(&base, &matrix);
            bench::write_bench(&c.out, &hash, &results)?;
            let cells: Vec<_> = results.iter().map(|r| r.0.clone()).collect();
            let timings: Vec<_> = results.iter().map(|r| r.1.clone()).collect();
            print!("{}", bench::render_table(&hash, &cells));
            println!();
            print!("{}", bench::render_timing(&timings));
        }
        Command::Plot { out } => cmd_plot(&out)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("racecraft: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

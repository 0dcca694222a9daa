//! Commands behind the `racecraft` binary.

pub mod artifacts;
pub mod bench;
pub mod plot;

use std::path::{Path, PathBuf};

use racecraft::sim::config::ConfigError;
use racecraft::sim::race::{Event, RaceOutcome, SimError, SmaxResult};
use racecraft::sim::{measure_smax, run_race, Behavior, PlannerKind, RaceConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use artifacts::RunFiles;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("missing artifact {path}: {source}")]
    MissingArtifact { path: PathBuf, source: std::io::Error },
    #[error("malformed artifact {path}: {message}")]
    BadArtifact { path: PathBuf, message: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("worker pool: {0}")]
    Pool(String),
}

impl CliError {
    /// 2 for bad input (configuration or missing artifacts), 3 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::MissingArtifact { .. } | CliError::BadArtifact { .. } => 2,
            CliError::Sim(SimError::Config(_)) => 2,
            CliError::Sim(_) | CliError::Write { .. } | CliError::Pool(_) => 3,
        }
    }
}

/// Command-line values that replace configuration fields.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub planner: Option<PlannerKind>,
    pub behavior: Option<Behavior>,
    pub speed_scaler: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RaceConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(p) = self.planner {
            cfg.planner = p;
        }
        if let Some(b) = self.behavior {
            cfg.behavior = b;
        }
        if let Some(s) = self.speed_scaler {
            cfg.speed_scaler = s;
        }
    }
}

/// Load a configuration file, or the defaults when no path is given, and apply overrides.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<RaceConfig, CliError> {
    let mut cfg = match path {
        Some(p) => RaceConfig::load(p)?,
        None => RaceConfig::default(),
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventLog {
    pub events: Vec<Event>,
}

/// Deterministic race metrics; the event list lives in its own file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub planner: PlannerKind,
    pub behavior: Behavior,
    pub seed: u64,
    pub speed_scaler: f64,
    pub opponent_scale: f64,
    pub n_overtakes: usize,
    pub n_crashes: usize,
    pub n_timeouts: usize,
    pub n_aborts: usize,
    pub success_rate: Option<f64>,
    pub lap_times_ego: Vec<f64>,
    pub lap_times_opp: Vec<f64>,
    pub sim_time: f64,
    pub plan_cycles: usize,
    pub max_tracking_error: f64,
}

impl Metrics {
    fn new(cfg: &RaceConfig, o: &RaceOutcome) -> Self {
        Self {
            planner: cfg.planner,
            behavior: cfg.behavior,
            seed: cfg.seed,
            speed_scaler: o.speed_scaler,
            opponent_scale: o.opponent_scale,
            n_overtakes: o.n_overtakes,
            n_crashes: o.n_crashes,
            n_timeouts: o.n_timeouts,
            n_aborts: o.n_aborts,
            success_rate: o.success_rate(),
            lap_times_ego: o.lap_times_ego.clone(),
            lap_times_opp: o.lap_times_opp.clone(),
            sim_time: o.sim_time,
            plan_cycles: o.plan_cycles,
            max_tracking_error: o.max_tracking_error,
        }
    }
}

/// Wall-clock cost of the planning cycles, kept apart from the reproducible metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanTiming {
    pub cycles: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
}

impl PlanTiming {
    pub fn from_samples(ms: &[f64]) -> Self {
        let n = ms.len();
        if n == 0 {
            return Self { cycles: 0, mean_ms: 0.0, std_ms: 0.0 };
        }
        let mean = ms.iter().sum::<f64>() / n as f64;
        let var = ms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        Self { cycles: n, mean_ms: mean, std_ms: var.sqrt() }
    }
}

/// Run one race and write its artifacts into `out`.
pub fn cmd_race(cfg: &RaceConfig, out: &Path) -> Result<Metrics, CliError> {
    let mut cfg = cfg.clone();
    cfg.sim.record_trace = true;
    let run = run_race(&cfg)?;
    let hash = artifacts::config_hash(&cfg);
    let files = RunFiles::in_dir(out);
    artifacts::ensure_dir(out)?;
    artifacts::write_plain_json(&files.config, &cfg)?;
    artifacts::write_json(&files.events, &hash, &EventLog { events: run.outcome.events.clone() })?;
    let metrics = Metrics::new(&cfg, &run.outcome);
    artifacts::write_json(&files.metrics, &hash, &metrics)?;
    artifacts::write_json(&files.timing, &hash, &PlanTiming::from_samples(&run.plan_times_ms))?;
    artifacts::write_csv(&files.trajectory, &hash, &run.trace)?;
    artifacts::write_csv(&files.observations, &hash, &run.observations)?;
    if let Some(gp) = &run.gp {
        artifacts::write_json(&files.gp, &hash, gp)?;
    }
    Ok(metrics)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmaxReport {
    pub planner: PlannerKind,
    pub behavior: Behavior,
    pub track: String,
    #[serde(flatten)]
    pub result: SmaxResult,
}

/// Speed-scaler search for the configured planner and behavior; writes `smax.json`.
pub fn cmd_smax(cfg: &RaceConfig, out: &Path) -> Result<SmaxReport, CliError> {
    let result = measure_smax(cfg)?;
    let report = SmaxReport { planner: cfg.planner, behavior: cfg.behavior, track: cfg.track.clone(), result };
    artifacts::ensure_dir(out)?;
    artifacts::write_json(&out.join("smax.json"), &artifacts::config_hash(cfg), &report)?;
    Ok(report)
}

/// Render the GP and track plots of a race directory written by [`cmd_race`].
pub fn cmd_plot(run_dir: &Path) -> Result<(), CliError> {
    let files = RunFiles::in_dir(run_dir);
    let inputs = plot::PlotInputs::load(&files)?;
    artifacts::write_text(&files.gp_plot, &plot::gp_svg(&inputs))?;
    artifacts::write_text(&files.track_plot, &plot::track_svg(&inputs)?)?;
    Ok(())
}

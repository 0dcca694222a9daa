//! Experiment configuration for races and speed-scaler campaigns.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lines::{LineKind, VehicleLimits};
use crate::planner::PlannerWeights;
use crate::sim::control::TrackingParams;
use crate::sim::ftg::FtgParams;
use crate::sim::observe::NoiseParams;
use crate::track::{TrackError, TrackModel};
use crate::tracks;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("track {name}: {source}")]
    Track { name: String, source: TrackError },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// How the opponent drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    RacingLine,
    ShortestPath,
    Centerline,
    Reactive,
}

impl Behavior {
    pub const ALL: [Behavior; 4] = [Behavior::RacingLine, Behavior::ShortestPath, Behavior::Centerline, Behavior::Reactive];

    pub fn name(self) -> &'static str {
        match self {
            Behavior::RacingLine => "racing_line",
            Behavior::ShortestPath => "shortest_path",
            Behavior::Centerline => "centerline",
            Behavior::Reactive => "reactive",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == name)
    }

    /// Line the opponent follows, or for the reactive driver the line its speed cap comes from.
    pub fn line_kind(self) -> LineKind {
        match self {
            Behavior::RacingLine => LineKind::MinCurvature,
            Behavior::ShortestPath => LineKind::ShortestPath,
            Behavior::Centerline | Behavior::Reactive => LineKind::Centerline,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Predictive,
    Spliner,
    None,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [PlannerKind::Predictive, PlannerKind::Spliner, PlannerKind::None];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Predictive => "predictive",
            PlannerKind::Spliner => "spliner",
            PlannerKind::None => "none",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    pub dt: f64,
    pub plan_hz: f64,
    /// Opponent distance ahead below which either planner may start a maneuver.
    pub activation_distance: f64,
    pub respawn_gap: f64,
    /// Time the ego must hold a lead of one car length for an overtake to count.
    pub hold_time: f64,
    pub attempt_timeout: f64,
    pub max_attempts: usize,
    pub target_overtakes: usize,
    pub learning_timeout: f64,
    pub min_coverage: f64,
    pub k_sigma: f64,
    /// Consecutive out-of-band observations that abort a maneuver.
    pub abort_after: usize,
    pub abort_holdoff: f64,
    /// End the race at the first crash or timeout.
    pub stop_on_failure: bool,
    pub record_trace: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt: 0.01,
            plan_hz: 20.0,
            activation_distance: 4.0,
            respawn_gap: 3.0,
            hold_time: 1.0,
            attempt_timeout: 40.0,
            max_attempts: 10,
            target_overtakes: 5,
            learning_timeout: 120.0,
            min_coverage: crate::gp::MIN_COVERAGE,
            k_sigma: crate::gp::DEFAULT_K_SIGMA,
            abort_after: 3,
            abort_holdoff: 1.0,
            stop_on_failure: false,
            record_trace: false,
        }
    }
}

/// Inclusive speed-scaler range searched on a grid of `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepRange {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for SweepRange {
    fn default() -> Self {
        Self { lo: 0.30, hi: 0.95, step: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RaceConfig {
    /// Shipped circuit name or path to a track file.
    pub track: String,
    pub behavior: Behavior,
    pub speed_scaler: f64,
    pub planner: PlannerKind,
    pub seed: u64,
    /// Distance every generated line keeps from the track boundary.
    pub line_margin: f64,
    pub limits: VehicleLimits,
    pub weights: Option<PlannerWeights>,
    pub noise: NoiseParams,
    pub tracking: TrackingParams,
    pub ftg: FtgParams,
    pub sim: SimParams,
    pub sweep: SweepRange,
}

impl Default for RaceConfig {
    fn default() -> Self {
        Self {
            track: tracks::SHIPPED[0].to_string(),
            behavior: Behavior::RacingLine,
            speed_scaler: 0.5,
            planner: PlannerKind::Predictive,
            seed: 0,
            line_margin: 0.3,
            limits: VehicleLimits::default(),
            weights: None,
            noise: NoiseParams::default(),
            tracking: TrackingParams::default(),
            ftg: FtgParams::default(),
            sim: SimParams::default(),
            sweep: SweepRange::default(),
        }
    }
}

impl RaceConfig {
    /// Read a `.toml` or `.json` file. Relative track paths resolve against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let parse_err = |message: String| ConfigError::Parse { path: path.into(), message };
        let mut cfg: RaceConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?
        };
        if tracks::shipped(&cfg.track).is_none() && Path::new(&cfg.track).is_relative() {
            if let Some(dir) = path.parent() {
                cfg.track = dir.join(&cfg.track).to_string_lossy().into_owned();
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn weights(&self) -> PlannerWeights {
        self.weights.unwrap_or_else(|| PlannerWeights::for_vehicle(&self.limits))
    }

    pub fn load_track(&self) -> Result<TrackModel, ConfigError> {
        let wrap = |source| ConfigError::Track { name: self.track.clone(), source };
        match tracks::shipped(&self.track) {
            Some(t) => t.map_err(wrap),
            None => TrackModel::load(&self.track).map_err(wrap),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        let s = &self.sim;
        if !(self.speed_scaler > 0.0 && self.speed_scaler <= 1.0) {
            return bad("speed_scaler must lie in (0, 1]");
        }
        if !(s.dt > 0.0 && s.dt <= 0.05) {
            return bad("sim.dt must lie in (0, 0.05]");
        }
        if !(s.plan_hz > 0.0 && s.plan_hz * s.dt <= 1.0) {
            return bad("sim.plan_hz must be positive and at most 1/dt");
        }
        if !(self.noise.rate_hz * s.dt <= 1.0) {
            return bad("noise.rate_hz must be at most 1/dt");
        }
        if s.activation_distance <= 0.0 || s.respawn_gap <= self.limits.length || s.hold_time < 0.0 || s.attempt_timeout <= 0.0 {
            return bad("sim distances and times must be positive; respawn_gap must exceed the car length");
        }
        if s.target_overtakes == 0 || s.max_attempts < s.target_overtakes {
            return bad("need 0 < target_overtakes <= max_attempts");
        }
        if !(s.min_coverage > 0.0 && s.min_coverage <= 1.0) {
            return bad("sim.min_coverage must lie in (0, 1]");
        }
        if self.line_margin < 0.0 {
            return bad("line_margin must be nonnegative");
        }
        let w = &self.sweep;
        if !(w.step > 0.0 && w.lo > 0.0 && w.lo <= w.hi && w.hi <= 1.0) {
            return bad("sweep needs 0 < lo <= hi <= 1 and step > 0");
        }
        self.noise.validate().map_err(ConfigError::Invalid)
    }
}

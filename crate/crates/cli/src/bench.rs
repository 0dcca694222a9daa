//! Planner × behavior campaigns: speed-scaler limit and success rate per cell.

use std::fmt::Write as _;
use std::path::Path;

use racecraft::sim::race::SimError;
use racecraft::sim::{Behavior, PlannerKind, RaceConfig, RaceSetup};
use racecraft::tracks;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts;
use crate::{CliError, Overrides, PlanTiming};

/// Cells to evaluate, read from the same file as the base configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchMatrix {
    pub planners: Vec<PlannerKind>,
    pub behaviors: Vec<Behavior>,
    /// Shipped circuit names or track files; empty means the base configuration's track.
    pub tracks: Vec<String>,
}

impl Default for BenchMatrix {
    fn default() -> Self {
        Self {
            planners: vec![PlannerKind::Predictive, PlannerKind::Spliner],
            behaviors: vec![Behavior::RacingLine, Behavior::ShortestPath, Behavior::Centerline],
            tracks: Vec::new(),
        }
    }
}

impl BenchMatrix {
    /// Matrix section of a configuration file; relative track paths resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::MissingArtifact { path: path.into(), source })?;
        let bad = |message: String| CliError::BadArtifact { path: path.into(), message };
        let mut m: BenchMatrix = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| bad(e.to_string()))?
        };
        let dir = path.parent().unwrap_or(Path::new(""));
        for t in &mut m.tracks {
            if tracks::shipped(t).is_none() && Path::new(t.as_str()).is_relative() {
                *t = dir.join(&*t).to_string_lossy().into_owned();
            }
        }
        Ok(m)
    }

    /// Restrict to a single planner or behavior given on the command line.
    pub fn restrict(&mut self, overrides: &Overrides) {
        if let Some(p) = overrides.planner {
            self.planners = vec![p];
        }
        if let Some(b) = overrides.behavior {
            self.behaviors = vec![b];
        }
    }

    /// Cell keys in row-major order: track, behavior, planner.
    pub fn cells(&self, base: &RaceConfig) -> Vec<(String, Behavior, PlannerKind)> {
        let tracks = if self.tracks.is_empty() { vec![base.track.clone()] } else { self.tracks.clone() };
        let mut out = Vec::new();
        for t in &tracks {
            for &b in &self.behaviors {
                for &p in &self.planners {
                    out.push((t.clone(), b, p));
                }
            }
        }
        out
    }
}

/// One row of the result matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub track: String,
    pub behavior: Behavior,
    pub planner: PlannerKind,
    pub s_max: Option<f64>,
    /// Overtakes over overtakes plus crashes at the planner's own limit, or at the
    /// sweep's lower bound when no limit was found.
    pub success_rate: Option<f64>,
    pub overtakes: usize,
    pub crashes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub track: String,
    pub behavior: Behavior,
    pub planner: PlannerKind,
    pub cycles: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
}

/// Speed-scaler limit of one cell followed by a full race at that limit.
pub fn run_cell(base: &RaceConfig, track: &str, behavior: Behavior, planner: PlannerKind) -> Result<(BenchCell, CellTiming), SimError> {
    let mut cfg = base.clone();
    cfg.track = track.to_string();
    cfg.behavior = behavior;
    cfg.planner = planner;
    let setup = RaceSetup::new(&cfg)?;
    let smax = racecraft::sim::race::measure_smax_with(&setup, &cfg)?;
    cfg.speed_scaler = smax.s_max.unwrap_or(cfg.sweep.lo);
    cfg.sim.stop_on_failure = false;
    let run = setup.run(&cfg)?;
    let o = &run.outcome;
    let timing = PlanTiming::from_samples(&run.plan_times_ms);
    let cell = BenchCell {
        track: track.to_string(),
        behavior,
        planner,
        s_max: smax.s_max,
        success_rate: o.success_rate(),
        overtakes: o.n_overtakes,
        crashes: o.n_crashes,
    };
    let timing = CellTiming {
        track: track.to_string(),
        behavior,
        planner,
        cycles: timing.cycles,
        mean_ms: timing.mean_ms,
        std_ms: timing.std_ms,
    };
    Ok((cell, timing))
}

/// Evaluate every cell on a pool of `workers` threads. Results keep the matrix order.
pub fn run_bench(base: &RaceConfig, matrix: &BenchMatrix, workers: usize) -> Result<Vec<(BenchCell, CellTiming)>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;
    let cells = matrix.cells(base);
    let results: Vec<_> = pool.install(|| cells.par_iter().map(|(t, b, p)| run_cell(base, t, *b, *p)).collect());
    results.into_iter().map(|r| r.map_err(CliError::from)).collect()
}

/// Hash over everything that determines the campaign outcome.
pub fn bench_hash(base: &RaceConfig, matrix: &BenchMatrix) -> String {
    artifacts::config_hash(&(base, matrix))
}

fn track_label(track: &str) -> String {
    Path::new(track).file_stem().map_or_else(|| track.to_string(), |s| s.to_string_lossy().into_owned())
}

/// Fixed-width table; text columns left aligned, numeric columns right aligned.
pub fn render_table(hash: &str, cells: &[BenchCell]) -> String {
    let header = ["track", "behavior", "planner", "S_max", "R_ot/c", "overtakes", "crashes"];
    let rows: Vec<[String; 7]> = cells
        .iter()
        .map(|c| {
            [
                track_label(&c.track),
                c.behavior.name().to_string(),
                c.planner.name().to_string(),
                c.s_max.map_or("-".into(), |s| format!("{s:.2}")),
                c.success_rate.map_or("-".into(), |r| format!("{:.1}%", 100.0 * r)),
                c.overtakes.to_string(),
                c.crashes.to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for r in &rows {
        for (w, v) in widths.iter_mut().zip(r) {
            *w = (*w).max(v.chars().count());
        }
    }
    let line = |vals: [&str; 7]| {
        let mut s = String::new();
        for (k, (v, w)) in vals.iter().zip(widths).enumerate() {
            if k > 0 {
                s.push_str("  ");
            }
            if k < 3 {
                let _ = write!(s, "{v:<w$}");
            } else {
                let _ = write!(s, "{v:>w$}");
            }
        }
        s.trim_end().to_string()
    };
    let mut out = artifacts::hash_line(hash);
    out.push('\n');
    out.push_str(&line(header));
    out.push('\n');
    let rule: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(rule));
    out.push('\n');
    for r in &rows {
        out.push_str(&line([&r[0], &r[1], &r[2], &r[3], &r[4], &r[5], &r[6]]));
        out.push('\n');
    }
    out
}

/// Timing summary in the same layout as [`render_table`].
pub fn render_timing(timings: &[CellTiming]) -> String {
    let mut out = String::new();
    let tw = timings.iter().map(|t| track_label(&t.track).len()).max().unwrap_or(5).max(5);
    let _ = writeln!(out, "{:<tw$}  {:<13}  {:<10}  {:>7}  {:>9}  {:>8}", "track", "behavior", "planner", "cycles", "mean [ms]", "std [ms]");
    for t in timings {
        let _ = writeln!(
            out,
            "{:<tw$}  {:<13}  {:<10}  {:>7}  {:>9.3}  {:>8.3}",
            track_label(&t.track),
            t.behavior.name(),
            t.planner.name(),
            t.cycles,
            t.mean_ms,
            t.std_ms
        );
    }
    out
}

/// Write `matrix.csv`, `table.txt` and `timing.csv` into `out`.
pub fn write_bench(out: &Path, hash: &str, results: &[(BenchCell, CellTiming)]) -> Result<(), CliError> {
    artifacts::ensure_dir(out)?;
    let cells: Vec<BenchCell> = results.iter().map(|r| r.0.clone()).collect();
    let timings: Vec<CellTiming> = results.iter().map(|r| r.1.clone()).collect();
    artifacts::write_csv(&out.join("matrix.csv"), hash, &cells)?;
    artifacts::write_text(&out.join("table.txt"), &render_table(hash, &cells))?;
    artifacts::write_csv(&out.join("timing.csv"), hash, &timings)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(behavior: Behavior, planner: PlannerKind, s_max: Option<f64>) -> BenchCell {
        BenchCell {
            track: "tracks/oval_chicane.txt".into(),
            behavior,
            planner,
            s_max,
            success_rate: s_max.map(|_| 1.0),
            overtakes: 5,
            crashes: 0,
        }
    }

    #[test]
    fn table_columns_line_up() {
        let cells = [cell(Behavior::RacingLine, PlannerKind::Predictive, Some(0.84)), cell(Behavior::ShortestPath, PlannerKind::Spliner, None)];
        let text = render_table("h", &cells);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# config-sha256: h");
        assert_eq!(lines.len(), 5);
        let end_of = |l: &str, pat: &str| l.find(pat).unwrap() + pat.len();
        assert_eq!(end_of(lines[1], "S_max"), end_of(lines[3], "0.84"));
        assert_eq!(end_of(lines[1], "S_max"), end_of(lines[4], "-"));
        assert!(lines[3].starts_with("oval_chicane  racing_line"));
    }

    #[test]
    fn matrix_shape_follows_lists() {
        let m = BenchMatrix {
            planners: vec![PlannerKind::Predictive, PlannerKind::Spliner],
            behaviors: vec![Behavior::RacingLine, Behavior::Centerline],
            tracks: vec![],
        };
        let cells = m.cells(&RaceConfig::default());
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[1], (RaceConfig::default().track, Behavior::RacingLine, PlannerKind::Spliner));
    }
}

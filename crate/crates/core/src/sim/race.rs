//! Race orchestration: opponent learning, maneuver state machine, counting and respawns.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{predict_roc, PropagationParams, RegionOfCollision};
use crate::gp::{BinnedData, GpError, OpponentObservation, OpponentTrajectoryGp, DEFAULT_BIN_WIDTH};
use crate::lines::{generate, LineError, LineKind, RacingLine};
use crate::planner::{baseline_spliner_on, EvasionTrajectory, OvertakePlanner, PlannerWeights};
use crate::sim::config::{Behavior, ConfigError, PlannerKind, RaceConfig};
use crate::sim::control::{follow_speed, pure_pursuit_control, pursue, CommandPath, ControlError, PathRef};
use crate::sim::crash::{detect_crash, CrashKind, Dims};
use crate::sim::ftg::{reactive_opponent_control, scan, Walls};
use crate::sim::observe::observe_opponent;
use crate::sim::vehicle::{step_vehicle, VehicleState};
use crate::track::{FrenetState, TrackModel};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("line generation failed: {0}")]
    Line(#[from] LineError),
    #[error("opponent model: {0}")]
    Gp(#[from] GpError),
    #[error("{agent} lost its path at t = {t:.2} s: {source}")]
    Control { agent: &'static str, t: f64, source: ControlError },
    #[error("opponent coverage {coverage:.2} still below {required:.2} after {time:.0} s of learning")]
    Learning { coverage: f64, required: f64, time: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    LearningComplete { coverage: f64 },
    Refit { coverage: f64 },
    ManeuverStart { c_start: Option<f64>, c_end: Option<f64> },
    Overtake,
    Crash { kind: CrashKind },
    /// The opponent left the track on its own and was put back on its line.
    OpponentReset,
    Abort,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub s_ego: f64,
    pub s_opp: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceOutcome {
    pub speed_scaler: f64,
    /// Speed factor applied to the opponent's line profile.
    pub opponent_scale: f64,
    pub n_overtakes: usize,
    pub n_crashes: usize,
    pub n_timeouts: usize,
    pub n_aborts: usize,
    pub lap_times_ego: Vec<f64>,
    pub lap_times_opp: Vec<f64>,
    pub events: Vec<Event>,
    pub sim_time: f64,
    pub plan_cycles: usize,
    /// Largest ego offset from its racing line while no maneuver was active.
    pub max_tracking_error: f64,
}

impl RaceOutcome {
    pub fn success_rate(&self) -> Option<f64> {
        let n = self.n_overtakes + self.n_crashes;
        (n > 0).then(|| self.n_overtakes as f64 / n as f64)
    }

    /// All overtakes completed without a crash.
    pub fn succeeded(&self, target: usize) -> bool {
        self.n_overtakes >= target && self.n_crashes == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Learning,
    Trail,
    Overtake,
    Rejoin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub mode: Mode,
    pub ego_x: f64,
    pub ego_y: f64,
    pub ego_s: f64,
    pub ego_d: f64,
    pub ego_v: f64,
    pub opp_x: f64,
    pub opp_y: f64,
    pub opp_s: f64,
    pub opp_d: f64,
    pub opp_v: f64,
}

/// Everything a race produces. Only `outcome` is covered by the determinism guarantee;
/// `plan_times_ms` is wall-clock time.
#[derive(Debug, Clone)]
pub struct RaceRun {
    pub outcome: RaceOutcome,
    pub plan_times_ms: Vec<f64>,
    pub observations: Vec<OpponentObservation>,
    pub gp: Option<OpponentTrajectoryGp>,
    pub trace: Vec<TraceSample>,
}

/// Track and lines shared by every race on one circuit and behavior.
#[derive(Debug, Clone)]
pub struct RaceSetup {
    pub track: TrackModel,
    pub ego_line: RacingLine,
    pub opp_line: RacingLine,
    pub behavior: Behavior,
    walls: Walls,
}

impl RaceSetup {
    pub fn new(cfg: &RaceConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let track = cfg.load_track()?;
        let ego_line = generate(LineKind::MinCurvature, &track, cfg.line_margin, &cfg.limits)?;
        let opp_line = if cfg.behavior.line_kind() == LineKind::MinCurvature {
            ego_line.clone()
        } else {
            generate(cfg.behavior.line_kind(), &track, cfg.line_margin, &cfg.limits)?
        };
        let walls = Walls::new(&track);
        Ok(Self { track, ego_line, opp_line, behavior: cfg.behavior, walls })
    }

    /// Opponent profile factor giving a lap time of `T_ego / speed_scaler`.
    pub fn opponent_scale(&self, speed_scaler: f64) -> f64 {
        speed_scaler * self.opp_line.lap_time() / self.ego_line.lap_time()
    }

    pub fn run(&self, cfg: &RaceConfig) -> Result<RaceRun, SimError> {
        cfg.validate()?;
        Race::new(self, cfg).run()
    }
}

pub fn run_race(cfg: &RaceConfig) -> Result<RaceRun, SimError> {
    RaceSetup::new(cfg)?.run(cfg)
}

/// Latest observation carried forward at its observed speed.
#[derive(Debug, Clone, Copy)]
struct Estimate {
    s: f64,
    d: f64,
    v_s: f64,
}

struct Race<'a> {
    setup: &'a RaceSetup,
    cfg: &'a RaceConfig,
    weights: PlannerWeights,
    dims: Dims,
    rng: ChaCha8Rng,
    lap: f64,
    t: f64,
    ego: VehicleState,
    opp: VehicleState,
    /// Ego and opponent positions on the ego line.
    ego_f: FrenetState,
    opp_f: FrenetState,
    /// Opponent position on its own line.
    opp_own_s: f64,
    track_s: (f64, f64),
    mode: Mode,
    command: Option<CommandPath>,
    planner: OvertakePlanner,
    binned: BinnedData,
    gp: Option<OpponentTrajectoryGp>,
    observations: Vec<OpponentObservation>,
    last_obs: Option<OpponentObservation>,
    learning_progress: f64,
    attempt_start: f64,
    lead_since: Option<f64>,
    holdoff_until: f64,
    misses: usize,
    settle_until: f64,
    ftg_cmd: (f64, f64),
    ego_lap_start: Option<f64>,
    opp_lap_start: Option<f64>,
    outcome: RaceOutcome,
    plan_times_ms: Vec<f64>,
    trace: Vec<TraceSample>,
}

const PROJECTION_WINDOW: f64 = 3.0;
const STALE_OBSERVATION: f64 = 0.5;

impl<'a> Race<'a> {
    fn new(setup: &'a RaceSetup, cfg: &'a RaceConfig) -> Self {
        let lap = setup.ego_line.lap_length();
        let opp_pose = setup.opp_line.frame().frenet_to_cartesian(0.0, 0.0);
        let opp_scale = setup.opponent_scale(cfg.speed_scaler);
        let opp = VehicleState::at_pose(opp_pose, opp_scale * setup.opp_line.speed_at(0.0));
        let opp_f = setup.ego_line.frame().cartesian_to_frenet(&opp_pose).expect("line start lies on the track");
        let ego_s = setup.ego_line.frame().wrap_s(opp_f.s - cfg.sim.respawn_gap);
        let ego = VehicleState::at_pose(setup.ego_line.frame().frenet_to_cartesian(ego_s, 0.0), opp.v);
        let weights = cfg.weights();
        let mut race = Self {
            setup,
            cfg,
            weights,
            dims: Dims { length: cfg.limits.length, width: cfg.limits.width },
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            lap,
            t: 0.0,
            ego,
            opp,
            ego_f: FrenetState::at(ego_s, 0.0),
            opp_f,
            opp_own_s: 0.0,
            track_s: (0.0, 0.0),
            mode: Mode::Learning,
            command: None,
            planner: OvertakePlanner::new(weights),
            binned: BinnedData::new(DEFAULT_BIN_WIDTH, lap).expect("positive bin width and lap"),
            gp: None,
            observations: Vec::new(),
            last_obs: None,
            learning_progress: 0.0,
            attempt_start: 0.0,
            lead_since: None,
            holdoff_until: 0.0,
            misses: 0,
            settle_until: 0.0,
            ftg_cmd: (0.0, 0.0),
            ego_lap_start: None,
            opp_lap_start: None,
            outcome: RaceOutcome {
                speed_scaler: cfg.speed_scaler,
                opponent_scale: opp_scale,
                n_overtakes: 0,
                n_crashes: 0,
                n_timeouts: 0,
                n_aborts: 0,
                lap_times_ego: Vec::new(),
                lap_times_opp: Vec::new(),
                events: Vec::new(),
                sim_time: 0.0,
                plan_cycles: 0,
                max_tracking_error: 0.0,
            },
            plan_times_ms: Vec::new(),
            trace: Vec::new(),
        };
        race.ego_f.v_s = ego.v;
        race.track_s = (race.project_track(&race.ego, 0.0, true), race.project_track(&race.opp, 0.0, true));
        race
    }

    fn project_track(&self, state: &VehicleState, hint: f64, global: bool) -> f64 {
        let t = &self.setup.track;
        let f = if global {
            t.cartesian_to_frenet(&state.pose())
        } else {
            t.cartesian_to_frenet_near(&state.pose(), hint, PROJECTION_WINDOW)
        };
        f.map_or(hint, |f| f.s)
    }

    fn log(&mut self, kind: EventKind) {
        self.outcome.events.push(Event { t: self.t, s_ego: self.ego_f.s, s_opp: self.opp_f.s, kind });
    }

    fn finished_attempts(&self) -> usize {
        self.outcome.n_overtakes + self.outcome.n_crashes + self.outcome.n_timeouts
    }

    fn done(&self) -> bool {
        let o = &self.outcome;
        let sim = &self.cfg.sim;
        o.n_overtakes >= sim.target_overtakes
            || self.finished_attempts() >= sim.max_attempts
            || (sim.stop_on_failure && o.n_crashes + o.n_timeouts > 0)
    }

    fn run(mut self) -> Result<RaceRun, SimError> {
        let sim = self.cfg.sim;
        let plan_every = ((1.0 / (sim.plan_hz * sim.dt)).round() as u64).max(1);
        let obs_rate = self.cfg.noise.rate_hz * sim.dt;
        let trace_every = ((0.05 / sim.dt).round() as u64).max(1);
        let mut k: u64 = 0;
        while !self.done() {
            self.t = k as f64 * sim.dt;
            if self.mode == Mode::Learning && self.t > sim.learning_timeout {
                return Err(SimError::Learning {
                    coverage: self.binned.coverage(),
                    required: sim.min_coverage,
                    time: self.t,
                });
            }
            if ((k + 1) as f64 * obs_rate + 1e-9).floor() > (k as f64 * obs_rate + 1e-9).floor() {
                self.observe();
            }
            if k % plan_every == 0 {
                self.plan_cycle();
                if self.setup.behavior == Behavior::Reactive {
                    self.ftg_cmd = self.reactive_command();
                }
            }
            if sim.record_trace && k % trace_every == 0 {
                self.record_trace();
            }
            self.step()?;
            k += 1;
        }
        self.outcome.sim_time = k as f64 * sim.dt;
        Ok(RaceRun {
            outcome: self.outcome,
            plan_times_ms: self.plan_times_ms,
            observations: self.observations,
            gp: self.gp,
            trace: self.trace,
        })
    }

    fn observe(&mut self) {
        let frame = self.setup.ego_line.frame();
        let Some(obs) = observe_opponent(&self.opp, &self.ego, frame, self.opp_f.s, self.t, &self.cfg.noise, &mut self.rng) else {
            return;
        };
        self.binned.push(&obs);
        self.observations.push(obs);
        self.last_obs = Some(obs);
        if self.cfg.planner != PlannerKind::Predictive || self.mode != Mode::Overtake {
            return;
        }
        let Some(gp) = &self.gp else { return };
        if gp.consistency_check(&obs, self.cfg.sim.k_sigma) {
            self.misses = 0;
            return;
        }
        self.misses += 1;
        // once alongside, dropping back onto the line is more dangerous than finishing the pass
        let committed = self
            .estimate()
            .is_none_or(|e| frame.signed_gap(self.ego_f.s, e.s) < 0.5 * self.cfg.sim.activation_distance);
        if self.misses >= self.cfg.sim.abort_after && !committed {
            self.misses = 0;
            self.command = None;
            self.planner.reset();
            self.mode = Mode::Trail;
            self.holdoff_until = self.t + self.cfg.sim.abort_holdoff;
            self.outcome.n_aborts += 1;
            self.log(EventKind::Abort);
        }
    }

    fn estimate(&self) -> Option<Estimate> {
        let o = self.last_obs?;
        let age = self.t - o.timestamp;
        (age <= STALE_OBSERVATION).then(|| Estimate {
            s: self.setup.ego_line.frame().wrap_s(o.s + o.v_s * age),
            d: o.d,
            v_s: o.v_s,
        })
    }

    fn plan_cycle(&mut self) {
        if matches!(self.mode, Mode::Learning | Mode::Rejoin) || self.cfg.planner == PlannerKind::None {
            return;
        }
        let Some(est) = self.estimate() else { return };
        let gap = self.setup.ego_line.frame().signed_gap(self.ego_f.s, est.s);
        match self.mode {
            Mode::Trail => {
                if self.t < self.holdoff_until || gap <= 0.0 || gap >= self.cfg.sim.activation_distance {
                    return;
                }
                if let Some((traj, roc)) = self.plan(&est) {
                    self.adopt(traj);
                    self.mode = Mode::Overtake;
                    self.misses = 0;
                    let (c_start, c_end) = roc.map_or((None, None), |r| (Some(r.c_start), Some(r.c_end)));
                    self.log(EventKind::ManeuverStart { c_start, c_end });
                }
            }
            Mode::Overtake => {
                if gap <= -PropagationParams::for_vehicle(&self.cfg.limits).delta {
                    self.mode = Mode::Rejoin;
                } else if let Some((traj, _)) = self.plan(&est) {
                    self.adopt(traj);
                }
            }
            Mode::Learning | Mode::Rejoin => {}
        }
    }

    fn adopt(&mut self, traj: EvasionTrajectory) {
        self.command = Some(CommandPath::new(traj, &self.setup.ego_line, &self.cfg.limits));
    }

    /// One planning cycle; returns a feasible trajectory and the region of collision it was built for.
    fn plan(&mut self, est: &Estimate) -> Option<(EvasionTrajectory, Option<RegionOfCollision>)> {
        let line = &self.setup.ego_line;
        let ego = FrenetState { s: self.ego_f.s, d: self.ego_f.d, v_s: self.ego.v, v_d: 0.0 };
        let opp = FrenetState { s: est.s, d: est.d, v_s: est.v_s, v_d: 0.0 };
        self.outcome.plan_cycles += 1;
        let start = Instant::now();
        let result = match self.cfg.planner {
            PlannerKind::Predictive => {
                let gp = self.gp.as_ref()?;
                let params = PropagationParams::for_vehicle(&self.cfg.limits);
                let roc = predict_roc(&ego, est.s, gp, &params, line).ok().filter(|r| r.valid);
                roc.and_then(|roc| self.planner.plan(&ego, &opp, &roc, gp, line).ok().map(|t| (t, Some(roc))))
            }
            PlannerKind::Spliner => {
                let side = self.command.as_ref().map(|c| c.traj.side);
                Some((baseline_spliner_on(&ego, &opp, line, &self.weights, side), None))
            }
            PlannerKind::None => None,
        };
        self.plan_times_ms.push(start.elapsed().as_secs_f64() * 1e3);
        result.filter(|(t, _)| t.feasible)
    }

    fn reactive_command(&self) -> (f64, f64) {
        let obstacles = [self.ego.corners(self.dims.length, self.dims.width)];
        let ranges = scan(&self.opp, &self.setup.walls, self.track_s.1, &obstacles, &self.cfg.ftg);
        let v_cap = self.outcome.opponent_scale * self.setup.opp_line.speed_at(self.opp_own_s);
        reactive_opponent_control(&self.opp, &ranges, &self.cfg.ftg, &self.cfg.limits, v_cap)
    }

    fn ego_command(&self) -> Result<(f64, f64), SimError> {
        let path = PathRef { line: &self.setup.ego_line, offset: self.command.as_ref(), speed_scale: 1.0 };
        let (mut accel, steer) = match pure_pursuit_control(&self.ego, self.ego_f.s, &path, &self.cfg.tracking, &self.cfg.limits) {
            Ok(cmd) => cmd,
            // a freshly replanned path may start with a sharp lateral step; steer at it regardless
            Err(_) if self.command.is_some() => pursue(&self.ego, self.ego_f.s, &path, &self.cfg.tracking, &self.cfg.limits),
            Err(source) => return Err(SimError::Control { agent: "ego", t: self.t, source }),
        };
        if matches!(self.mode, Mode::Learning | Mode::Trail) {
            if let Some(est) = self.estimate() {
                let gap = self.setup.ego_line.frame().signed_gap(self.ego_f.s, est.s);
                if gap > 0.0 {
                    let v = follow_speed(gap, est.v_s, &self.cfg.tracking, &self.cfg.limits);
                    accel = accel.min(self.cfg.tracking.speed_gain * (v - self.ego.v));
                }
            }
        }
        Ok((accel, steer))
    }

    fn opponent_command(&self) -> Result<(f64, f64), SimError> {
        if self.setup.behavior == Behavior::Reactive {
            return Ok(self.ftg_cmd);
        }
        let path = PathRef { line: &self.setup.opp_line, offset: None, speed_scale: self.outcome.opponent_scale };
        pure_pursuit_control(&self.opp, self.opp_own_s, &path, &self.cfg.tracking, &self.cfg.limits)
            .map_err(|source| SimError::Control { agent: "opponent", t: self.t, source })
    }

    fn step(&mut self) -> Result<(), SimError> {
        let dt = self.cfg.sim.dt;
        let limits = &self.cfg.limits;
        let (ea, es) = self.ego_command()?;
        let (oa, os) = self.opponent_command()?;
        self.ego = step_vehicle(&self.ego, ea, es, dt, limits);
        self.opp = step_vehicle(&self.opp, oa, os, dt, limits);
        self.t += dt;

        let ego_frame = self.setup.ego_line.frame();
        let prev = (self.ego_f.s, self.opp_f.s, self.opp_own_s);
        if let Ok(f) = ego_frame.cartesian_to_frenet_near(&self.ego.pose(), self.ego_f.s, PROJECTION_WINDOW) {
            self.ego_f = FrenetState { v_s: self.ego.v, ..f };
        }
        if let Ok(f) = ego_frame.cartesian_to_frenet_near(&self.opp.pose(), self.opp_f.s, PROJECTION_WINDOW) {
            self.opp_f = f;
        }
        if let Ok(f) = self.setup.opp_line.frame().cartesian_to_frenet_near(&self.opp.pose(), self.opp_own_s, PROJECTION_WINDOW) {
            self.opp_own_s = f.s;
        }
        self.track_s = (self.project_track(&self.ego, self.track_s.0, false), self.project_track(&self.opp, self.track_s.1, false));

        let half = 0.5 * self.lap;
        if self.ego_f.s < prev.0 - half {
            if let Some(t0) = self.ego_lap_start {
                self.outcome.lap_times_ego.push(self.t - t0);
            }
            self.ego_lap_start = Some(self.t);
        }
        let opp_lap = self.setup.opp_line.lap_length();
        if self.opp_own_s < prev.2 - 0.5 * opp_lap {
            if let Some(t0) = self.opp_lap_start {
                self.outcome.lap_times_opp.push(self.t - t0);
            }
            self.opp_lap_start = Some(self.t);
        }
        let opp_wrapped = self.opp_f.s < prev.1 - half;
        self.learning_progress += ego_frame.signed_gap(prev.1, self.opp_f.s);

        if self.command.as_ref().is_some_and(|c| c.finished(self.ego_f.s)) {
            self.command = None;
            self.planner.reset();
            self.mode = if self.mode == Mode::Learning { Mode::Learning } else { Mode::Trail };
            self.settle_until = self.t + 1.0;
        }
        if self.command.is_none() && self.t >= self.settle_until {
            self.outcome.max_tracking_error = self.outcome.max_tracking_error.max(self.ego_f.d.abs());
        }

        if self.mode == Mode::Learning {
            self.try_finish_learning()?;
        } else if opp_wrapped {
            self.refit()?;
        }

        match detect_crash(&self.ego, &self.opp, &self.setup.track, self.track_s, self.dims) {
            Some(CrashKind::OpponentWall) => {
                self.log(EventKind::OpponentReset);
                self.reset_opponent();
            }
            Some(kind) => {
                self.outcome.n_crashes += 1;
                self.log(EventKind::Crash { kind });
                self.respawn();
                return Ok(());
            }
            None => {}
        }
        if self.mode == Mode::Learning {
            return Ok(());
        }
        let lead = ego_frame.signed_gap(self.opp_f.s, self.ego_f.s);
        if lead > self.dims.length {
            let since = *self.lead_since.get_or_insert(self.t);
            if self.t - since >= self.cfg.sim.hold_time - 1e-9 {
                self.outcome.n_overtakes += 1;
                self.log(EventKind::Overtake);
                self.respawn();
                return Ok(());
            }
        } else {
            self.lead_since = None;
        }
        if self.t - self.attempt_start > self.cfg.sim.attempt_timeout {
            self.outcome.n_timeouts += 1;
            self.log(EventKind::Timeout);
            self.respawn();
        }
        Ok(())
    }

    fn try_finish_learning(&mut self) -> Result<(), SimError> {
        let required = self.cfg.sim.min_coverage;
        if self.learning_progress < self.lap || self.binned.coverage() < required {
            return Ok(());
        }
        self.gp = Some(OpponentTrajectoryGp::fit_with_coverage(&self.binned, required)?);
        self.mode = Mode::Trail;
        self.attempt_start = self.t;
        self.log(EventKind::LearningComplete { coverage: self.binned.coverage() });
        Ok(())
    }

    fn refit(&mut self) -> Result<(), SimError> {
        self.gp = Some(OpponentTrajectoryGp::fit_with_coverage(&self.binned, self.cfg.sim.min_coverage)?);
        self.log(EventKind::Refit { coverage: self.binned.coverage() });
        Ok(())
    }

    /// Put the ego back on its line behind the opponent, matching the opponent's speed.
    fn respawn(&mut self) {
        let frame = self.setup.ego_line.frame();
        let s = frame.wrap_s(self.opp_f.s - self.cfg.sim.respawn_gap);
        self.ego = VehicleState::at_pose(frame.frenet_to_cartesian(s, 0.0), self.opp.v);
        self.ego_f = FrenetState { s, d: 0.0, v_s: self.ego.v, v_d: 0.0 };
        self.track_s.0 = self.project_track(&self.ego, self.track_s.0, true);
        self.command = None;
        self.planner.reset();
        if self.mode != Mode::Learning {
            self.mode = Mode::Trail;
        }
        self.lead_since = None;
        self.misses = 0;
        self.holdoff_until = self.t;
        self.attempt_start = self.t;
        self.ego_lap_start = None;
    }

    fn reset_opponent(&mut self) {
        let frame = self.setup.opp_line.frame();
        let s = frame.cartesian_to_frenet_near(&self.opp.pose(), self.opp_own_s, PROJECTION_WINDOW).map_or(self.opp_own_s, |f| f.s);
        let v = self.outcome.opponent_scale * self.setup.opp_line.speed_at(s);
        self.opp = VehicleState::at_pose(frame.frenet_to_cartesian(s, 0.0), v);
        self.opp_own_s = s;
        self.track_s.1 = self.project_track(&self.opp, self.track_s.1, true);
        self.opp_lap_start = None;
    }

    fn record_trace(&mut self) {
        self.trace.push(TraceSample {
            t: self.t,
            mode: self.mode,
            ego_x: self.ego.x,
            ego_y: self.ego.y,
            ego_s: self.ego_f.s,
            ego_d: self.ego_f.d,
            ego_v: self.ego.v,
            opp_x: self.opp.x,
            opp_y: self.opp.y,
            opp_s: self.opp_f.s,
            opp_d: self.opp_f.d,
            opp_v: self.opp.v,
        });
    }
}

/// Result of a speed-scaler search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmaxResult {
    /// Largest successful speed scaler, `None` when even the lower bound fails.
    pub s_max: Option<f64>,
    /// Every probe in evaluation order: `(speed_scaler, succeeded)`.
    pub probes: Vec<(f64, bool)>,
}

/// Bisection on the grid `lo, lo + step, ..., hi` for the largest value accepted by `succeeds`,
/// assuming acceptance is monotone (accepted values below rejected ones).
pub fn bisect_grid(lo: f64, hi: f64, step: f64, mut succeeds: impl FnMut(f64) -> bool) -> SmaxResult {
    let per_unit = (1.0 / step).round();
    let first = (lo * per_unit).round() as i64;
    let n = (hi * per_unit).round() as i64 - first;
    let at = |i: i64| (first + i) as f64 / per_unit;
    let mut probes = Vec::new();
    let mut probe = |i: i64, probes: &mut Vec<(f64, bool)>| {
        let ok = succeeds(at(i));
        probes.push((at(i), ok));
        ok
    };
    if !probe(0, &mut probes) {
        return SmaxResult { s_max: None, probes };
    }
    if probe(n, &mut probes) {
        return SmaxResult { s_max: Some(at(n)), probes };
    }
    let (mut good, mut bad) = (0, n);
    while bad - good > 1 {
        let mid = (good + bad) / 2;
        if probe(mid, &mut probes) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    SmaxResult { s_max: Some(at(good)), probes }
}

/// Highest speed scaler at which the configured planner completes its overtakes without a crash.
pub fn measure_smax(cfg: &RaceConfig) -> Result<SmaxResult, SimError> {
    let setup = RaceSetup::new(cfg)?;
    measure_smax_with(&setup, cfg)
}

pub fn measure_smax_with(setup: &RaceSetup, cfg: &RaceConfig) -> Result<SmaxResult, SimError> {
    let mut error = None;
    let target = cfg.sim.target_overtakes;
    let result = bisect_grid(cfg.sweep.lo, cfg.sweep.hi, cfg.sweep.step, |s| {
        if error.is_some() {
            return false;
        }
        let mut c = cfg.clone();
        c.speed_scaler = s;
        c.sim.stop_on_failure = true;
        match setup.run(&c) {
            Ok(run) => run.outcome.succeeded(target),
            Err(e) => {
                error = Some(e);
                false
            }
        }
    });
    match error {
        Some(e) => Err(e),
        None => Ok(result),
    }
}

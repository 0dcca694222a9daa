//! Forward propagation of ego and opponent along the lap to find where they would overlap.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gp::OpponentTrajectoryGp;
use crate::lines::{RacingLine, VehicleLimits};
use crate::track::{signed_wrap, wrap, FrenetState};

#[derive(Debug, Error, PartialEq)]
pub enum CollisionError {
    #[error("invalid propagation parameters: {0}")]
    Params(&'static str),
    #[error("propagation produced a non-finite state at t = {0}")]
    NonFinite(f64),
    #[error("region of collision is empty")]
    InvalidRoc,
    #[error("trace csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationParams {
    pub dt: f64,
    pub horizon: f64,
    /// Longitudinal overlap threshold.
    pub delta: f64,
    /// Gain pulling the predicted ego speed toward its line profile, 1/s.
    pub speed_gain: f64,
    pub accel_limit: f64,
}

impl Default for PropagationParams {
    fn default() -> Self {
        Self::for_car_length(0.5)
    }
}

impl PropagationParams {
    pub fn for_car_length(car_length: f64) -> Self {
        Self {
            dt: 0.02,
            horizon: 5.0,
            delta: car_length + 0.1,
            speed_gain: 3.0,
            accel_limit: 4.0,
        }
    }

    pub fn for_vehicle(limits: &VehicleLimits) -> Self {
        Self {
            accel_limit: limits.a_lon_max,
            ..Self::for_car_length(limits.length)
        }
    }

    pub fn validate(&self) -> Result<(), CollisionError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CollisionError::Params("dt must be positive"));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(CollisionError::Params("horizon must be at least dt"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(CollisionError::Params("delta must be positive"));
        }
        if !(self.speed_gain >= 0.0 && self.accel_limit > 0.0) {
            return Err(CollisionError::Params("speed gain must be nonnegative and the acceleration limit positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionOfCollision {
    pub c_start: f64,
    pub c_end: f64,
    pub t_s: f64,
    pub t_e: f64,
    pub valid: bool,
    /// The horizon ended while the cars still overlapped; `c_end` is the last propagated ego position.
    pub open_ended: bool,
}

impl RegionOfCollision {
    pub fn none() -> Self {
        Self {
            c_start: 0.0,
            c_end: 0.0,
            t_s: 0.0,
            t_e: 0.0,
            valid: false,
            open_ended: false,
        }
    }

    /// Forward arc length from `c_start` to `c_end`.
    pub fn length(&self, lap_length: f64) -> f64 {
        wrap(self.c_end - self.c_start, lap_length)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub s_ego: f64,
    pub s_opp: f64,
    pub gap: f64,
}

/// Propagate with arbitrary speed and acceleration sources.
///
/// `opp_speed(s)` gives the opponent speed at its current position, `ego_accel(s, v)`
/// the ego acceleration. Positions passed to the callbacks are wrapped into the lap.
#[allow(clippy::too_many_arguments)]
pub fn propagate(
    ego_s: f64,
    ego_v: f64,
    opp_s0: f64,
    lap_length: f64,
    mut opp_speed: impl FnMut(f64) -> f64,
    mut ego_accel: impl FnMut(f64, f64) -> f64,
    params: &PropagationParams,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<RegionOfCollision, CollisionError> {
    params.validate()?;
    let dt = params.dt;
    let steps = (params.horizon / dt).round() as usize;
    // unwrapped coordinates around the ego
    let mut s_ego = ego_s;
    let mut v_ego = ego_v.max(0.0);
    let mut s_opp = ego_s + signed_wrap(opp_s0 - ego_s, lap_length);
    let mut roc = RegionOfCollision::none();
    let mut inside = false;
    let record = |t: f64, se: f64, so: f64, trace: &mut Option<&mut Vec<TraceRow>>| {
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(TraceRow {
                t,
                s_ego: wrap(se, lap_length),
                s_opp: wrap(so, lap_length),
                gap: so - se,
            });
        }
    };
    record(0.0, s_ego, s_opp, &mut trace);
    for k in 1..=steps {
        let t = k as f64 * dt;
        let v_opp = opp_speed(wrap(s_opp, lap_length)).max(0.0);
        s_opp += v_opp * dt;
        let a = ego_accel(wrap(s_ego, lap_length), v_ego);
        s_ego += v_ego * dt + 0.5 * a * dt * dt;
        v_ego = (v_ego + a * dt).max(0.0);
        if !(s_ego.is_finite() && s_opp.is_finite() && v_ego.is_finite()) {
            return Err(CollisionError::NonFinite(t));
        }
        record(t, s_ego, s_opp, &mut trace);
        let gap = s_opp - s_ego;
        if gap.abs() < params.delta && !inside {
            inside = true;
            roc.valid = true;
            roc.c_start = wrap(s_ego, lap_length);
            roc.t_s = t;
        } else if gap.abs() > params.delta && inside {
            roc.c_end = wrap(s_ego, lap_length);
            roc.t_e = t;
            return Ok(roc);
        }
    }
    if inside {
        roc.c_end = wrap(s_ego, lap_length);
        roc.t_e = steps as f64 * dt;
        roc.open_ended = true;
    }
    Ok(roc)
}

/// Region of collision with the opponent moving at the GP mean speed and the ego
/// tracking the speed profile of its racing line.
pub fn predict_roc(
    ego: &FrenetState,
    opp_s0: f64,
    gp: &OpponentTrajectoryGp,
    params: &PropagationParams,
    ego_line: &RacingLine,
) -> Result<RegionOfCollision, CollisionError> {
    propagate(
        ego.s,
        ego.v_s,
        opp_s0,
        ego_line.lap_length(),
        |s| gp.mean_vs(s),
        |s, v| profile_accel(ego_line, params, s, v),
        params,
        None,
    )
}

fn profile_accel(line: &RacingLine, params: &PropagationParams, s: f64, v: f64) -> f64 {
    let a = line.accel_at(s) + params.speed_gain * (line.speed_at(s) - v);
    a.clamp(-params.accel_limit, params.accel_limit)
}

/// As [`predict_roc`] with opponent speeds drawn from the predictive distribution.
pub fn predict_roc_sampled<R: Rng + ?Sized>(
    ego: &FrenetState,
    opp_s0: f64,
    gp: &OpponentTrajectoryGp,
    params: &PropagationParams,
    ego_line: &RacingLine,
    rng: &mut R,
) -> Result<RegionOfCollision, CollisionError> {
    propagate(
        ego.s,
        ego.v_s,
        opp_s0,
        ego_line.lap_length(),
        |s| gp.sample_vs(s, rng),
        |s, v| profile_accel(ego_line, params, s, v),
        params,
        None,
    )
}

/// Padded planning window around a region of collision, wrapped into the lap.
pub fn roc_window(roc: &RegionOfCollision, pad: f64, lap_length: f64) -> Result<(f64, f64), CollisionError> {
    if !roc.valid {
        return Err(CollisionError::InvalidRoc);
    }
    Ok((wrap(roc.c_start - pad, lap_length), wrap(roc.c_end + pad, lap_length)))
}

pub fn write_trace_csv<W: Write>(trace: &[TraceRow], out: W) -> Result<(), CollisionError> {
    let mut w = csv::Writer::from_writer(out);
    for row in trace {
        w.serialize(row).map_err(|e| CollisionError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| CollisionError::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const L: f64 = 100.0;

    fn run(ego_v: f64, gap: f64, opp_v: f64, delta: f64) -> RegionOfCollision {
        let p = PropagationParams {
            delta,
            ..Default::default()
        };
        propagate(10.0, ego_v, 10.0 + gap, L, |_| opp_v, |_, _| 0.0, &p, None).unwrap()
    }

    #[test]
    fn equal_speeds_never_meet() {
        let roc = run(3.0, 1.2, 3.0, 0.6);
        assert!(!roc.valid);
        let roc = run(2.0, 1.2, 3.0, 0.6);
        assert!(!roc.valid);
    }

    #[test]
    fn constant_speed_intercept() {
        let dt = PropagationParams::default().dt;
        let roc = run(4.0, 1.0, 2.0, 0.6);
        assert!(roc.valid && !roc.open_ended);
        let t_star = (1.0 - 0.6) / 2.0;
        assert!((roc.c_start - (10.0 + 4.0 * t_star)).abs() <= 4.0 * dt + 1e-9);
        assert!((roc.t_s - t_star).abs() <= dt + 1e-9);
        let t_exit = (1.0 + 0.6) / 2.0;
        assert!((roc.c_end - (10.0 + 4.0 * t_exit)).abs() <= 4.0 * dt + 1e-9);
        assert!(roc.t_s < roc.t_e);
    }

    #[test]
    fn open_ended_when_horizon_runs_out() {
        let p = PropagationParams {
            horizon: 1.0,
            ..Default::default()
        };
        let roc = propagate(0.0, 2.1, 0.65, L, |_| 2.0, |_, _| 0.0, &p, None).unwrap();
        assert!(roc.valid && roc.open_ended);
        assert!((roc.c_end - 2.1).abs() < 1e-9);
    }

    #[test]
    fn wraps_across_the_seam() {
        let roc = propagate(98.0, 4.0, 0.0, L, |_| 1.0, |_, _| 0.0, &PropagationParams::default(), None).unwrap();
        assert!(roc.valid);
        assert!(roc.c_start < L && roc.c_end < roc.c_start);
        assert!(roc.length(L) > 0.0 && roc.length(L) < L);
    }

    #[test]
    fn window_padding() {
        let mut roc = RegionOfCollision::none();
        assert_eq!(roc_window(&roc, 1.0, L), Err(CollisionError::InvalidRoc));
        roc.valid = true;
        roc.c_start = 10.0;
        roc.c_end = 14.0;
        assert_eq!(roc_window(&roc, 1.0, L).unwrap(), (9.0, 15.0));
        assert_eq!(roc_window(&roc, 0.0, L).unwrap(), (10.0, 14.0));
        roc.c_start = 99.0;
        roc.c_end = 2.0;
        assert_eq!(roc_window(&roc, 0.5, L).unwrap(), (98.5, 2.5));
    }

    #[test]
    fn rejects_bad_params() {
        let p = PropagationParams { dt: 0.0, ..Default::default() };
        assert!(propagate(0.0, 1.0, 2.0, L, |_| 1.0, |_, _| 0.0, &p, None).is_err());
        let p = PropagationParams { horizon: 0.001, ..Default::default() };
        assert!(propagate(0.0, 1.0, 2.0, L, |_| 1.0, |_, _| 0.0, &p, None).is_err());
    }

    #[test]
    fn trace_has_one_row_per_step() {
        let mut trace = Vec::new();
        let p = PropagationParams::default();
        let roc = propagate(0.0, 3.0, 2.0, L, |_| 1.0, |_, _| 0.0, &p, Some(&mut trace)).unwrap();
        // propagation stops at the exit
        assert_eq!(trace.len(), (roc.t_e / p.dt).round() as usize + 1);
        assert_eq!(trace.last().unwrap().t, roc.t_e);
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,s_ego,s_opp,gap\n"));
        assert_eq!(text.lines().count(), trace.len() + 1);
    }

    #[test]
    fn halving_dt_moves_boundaries_less_than_one_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let v0: f64 = rng.random_range(2.0..6.0);
            let vo: f64 = rng.random_range(0.5..3.0);
            let gap: f64 = rng.random_range(1.0..4.0);
            let amp: f64 = rng.random_range(0.0..0.8);
            let opp = |s: f64| vo * (1.0 + 0.3 * (s * 0.2).sin());
            let acc = |s: f64, _v: f64| amp * (s * 0.3).cos();
            let coarse = PropagationParams::default();
            let fine = PropagationParams { dt: coarse.dt / 2.0, ..coarse };
            let a = propagate(5.0, v0, 5.0 + gap, L, opp, acc, &coarse, None).unwrap();
            let b = propagate(5.0, v0, 5.0 + gap, L, opp, acc, &fine, None).unwrap();
            assert_eq!(a.valid, b.valid);
            if a.valid {
                let vmax = v0 + amp * coarse.horizon;
                assert!((a.c_start - b.c_start).abs() < vmax * coarse.dt);
                if !a.open_ended && !b.open_ended {
                    assert!((a.c_end - b.c_end).abs() < vmax * coarse.dt);
                }
            }
        }
    }
}

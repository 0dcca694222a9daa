//! Path tracking: pure pursuit steering, profile speed tracking and gap keeping.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lines::{RacingLine, VehicleLimits};
use crate::planner::EvasionTrajectory;
use crate::sim::vehicle::VehicleState;
use crate::track::wrap;

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("no path point within {limit:.2} m (nearest target {distance:.2} m away)")]
    NoPathPoint { distance: f64, limit: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackingParams {
    pub lookahead_min: f64,
    /// Lookahead growth with speed, seconds.
    pub lookahead_time: f64,
    pub speed_gain: f64,
    /// Desired bumper-to-bumper time gap when following.
    pub follow_time: f64,
    /// Standstill gap between car centers when following.
    pub follow_distance: f64,
    pub follow_gain: f64,
}

impl Default for TrackingParams {
    fn default() -> Self {
        Self {
            lookahead_min: 0.6,
            lookahead_time: 0.2,
            speed_gain: 3.0,
            follow_time: 0.15,
            follow_distance: 0.9,
            follow_gain: 1.5,
        }
    }
}

impl TrackingParams {
    pub fn lookahead(&self, v: f64) -> f64 {
        self.lookahead_min.max(self.lookahead_time * v)
    }
}

/// A path to track: a racing line with an optional lateral offset profile and a speed scale.
#[derive(Debug, Clone, Copy)]
pub struct PathRef<'a> {
    pub line: &'a RacingLine,
    pub offset: Option<&'a CommandPath>,
    pub speed_scale: f64,
}

impl PathRef<'_> {
    pub fn offset_at(&self, s: f64) -> f64 {
        self.offset.map_or(0.0, |c| c.traj.d_at(s))
    }

    /// Speed reference at line position `s`.
    pub fn speed_at(&self, s: f64) -> f64 {
        let v = self.speed_scale * self.line.speed_at(s);
        match self.offset {
            Some(c) => v.min(c.speed_cap(s)),
            None => v,
        }
    }

    /// Acceleration of the scaled line profile at `s`, or zero where an offset speed cap binds.
    pub fn accel_at(&self, s: f64) -> f64 {
        let capped = self.offset.is_some_and(|c| c.speed_cap(s) < self.speed_scale * self.line.speed_at(s));
        if capped {
            0.0
        } else {
            self.speed_scale * self.speed_scale * self.line.accel_at(s)
        }
    }
}

/// An evasion trajectory together with the speed caps its curvature imposes.
#[derive(Debug, Clone)]
pub struct CommandPath {
    pub traj: EvasionTrajectory,
    /// Per trajectory point, already reduced so braking at `a_lon_max` reaches every later cap.
    /// The first point is the measured ego offset, so curvature through it is not capped.
    caps: Vec<f64>,
}

impl CommandPath {
    pub fn new(traj: EvasionTrajectory, line: &RacingLine, limits: &VehicleLimits) -> Self {
        let pts = &traj.points;
        let n = pts.len();
        let mut caps = vec![limits.v_max; n];
        let l = traj.lap_length;
        for i in 2..n.saturating_sub(1) {
            let (a, b, c) = (pts[i - 1], pts[i], pts[i + 1]);
            let h = 0.5 * (c.s - a.s);
            let k_frenet = (c.d - 2.0 * b.d + a.d) / (h * h) / (1.0 + ((c.d - a.d) / (2.0 * h)).powi(2)).powf(1.5);
            let k_line = line.curvature_at(wrap(b.s, l));
            let k = (k_line / (1.0 - k_line * b.d).max(0.2) + k_frenet).abs();
            if k > 1e-9 {
                caps[i] = (limits.a_lat_max / k).sqrt().min(limits.v_max);
            }
        }
        for i in (0..n.saturating_sub(1)).rev() {
            let ds = pts[i + 1].s - pts[i].s;
            caps[i] = caps[i].min((caps[i + 1] * caps[i + 1] + 2.0 * limits.a_lon_max * ds).sqrt());
        }
        Self { traj, caps }
    }

    pub fn speed_cap(&self, s: f64) -> f64 {
        if !self.traj.covers(s) {
            return f64::INFINITY;
        }
        let u = wrap(s - self.traj.start(), self.traj.lap_length);
        let pts = &self.traj.points;
        let i = pts.partition_point(|p| p.s - pts[0].s <= u).clamp(1, pts.len() - 1);
        self.caps[i - 1].min(self.caps[i])
    }

    /// True once `s` is past the end of the trajectory.
    pub fn finished(&self, s: f64) -> bool {
        !self.traj.covers(s)
    }
}

/// Pure pursuit toward the path point one lookahead ahead of `s_now`, plus a speed command.
/// Returns `(accel_cmd, steer_cmd)`.
pub fn pure_pursuit_control(
    state: &VehicleState,
    s_now: f64,
    path: &PathRef,
    params: &TrackingParams,
    limits: &VehicleLimits,
) -> Result<(f64, f64), ControlError> {
    let ld = params.lookahead(state.v);
    let s_la = s_now + ld;
    let target = path.line.frame().frenet_to_cartesian(s_la, path.offset_at(s_la));
    let dist = (target.x - state.x).hypot(target.y - state.y);
    if dist > 2.0 * ld {
        return Err(ControlError::NoPathPoint { distance: dist, limit: 2.0 * ld });
    }
    Ok(pursue(state, s_now, path, params, limits))
}

/// The pure pursuit law without the distance check.
pub fn pursue(state: &VehicleState, s_now: f64, path: &PathRef, params: &TrackingParams, limits: &VehicleLimits) -> (f64, f64) {
    let ld = params.lookahead(state.v);
    let s_la = s_now + ld;
    let target = path.line.frame().frenet_to_cartesian(s_la, path.offset_at(s_la));
    let (dx, dy) = (target.x - state.x, target.y - state.y);
    let dist = dx.hypot(dy);
    let alpha = dy.atan2(dx) - state.heading;
    let curvature = 2.0 * alpha.sin() / dist.max(1e-6);
    let steer = (curvature * limits.wheelbase).atan();
    let v_ref = path.speed_at(s_now);
    let accel = path.accel_at(s_now) + params.speed_gain * (v_ref - state.v);
    (accel, steer)
}

/// Speed that keeps a safe following distance behind a leader `gap` meters ahead (center to center).
pub fn follow_speed(gap: f64, v_lead: f64, params: &TrackingParams, limits: &VehicleLimits) -> f64 {
    let desired = params.follow_distance + params.follow_time * v_lead;
    let v = v_lead + params.follow_gain * (gap - desired);
    let room = (gap - params.follow_distance).max(0.0);
    let stop = (v_lead * v_lead + 2.0 * limits.a_lon_max * room).sqrt();
    v.min(stop).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lines::centerline_line;
    use crate::sim::vehicle::step_vehicle;
    use crate::tracks;

    #[test]
    fn tracks_circle_with_bicycle_steer() {
        let limits = VehicleLimits::default();
        let r = 3.0;
        let track = tracks::circle(r, 400, 1.0).unwrap();
        let line = centerline_line(&track, &limits);
        let path = PathRef { line: &line, offset: None, speed_scale: 0.5 };
        let params = TrackingParams::default();
        let pose = line.frame().frenet_to_cartesian(0.0, 0.0);
        let mut st = VehicleState::at_pose(pose, path.speed_at(0.0));
        let mut s = 0.0;
        let mut steer = 0.0;
        for _ in 0..1000 {
            let (a, d) = pure_pursuit_control(&st, s, &path, &params, &limits).unwrap();
            steer = d;
            st = step_vehicle(&st, a, d, 0.01, &limits);
            let f = line.frame().cartesian_to_frenet_near(&st.pose(), s, 1.0).unwrap();
            s = f.s;
            assert!(f.d.abs() < 0.02, "{}", f.d);
        }
        let expected = (limits.wheelbase / r).atan();
        assert!((steer - expected).abs() < 0.05 * expected, "{steer} vs {expected}");
    }

    #[test]
    fn offset_on_straight_converges() {
        let limits = VehicleLimits::default();
        let track = tracks::rounded_rectangle(60.0, 12.0, 4.0, 0.1, 1.0).unwrap();
        let line = centerline_line(&track, &limits);
        let path = PathRef { line: &line, offset: None, speed_scale: 0.4 };
        let params = TrackingParams::default();
        let pose = line.frame().frenet_to_cartesian(1.0, 0.2);
        let mut st = VehicleState::at_pose(pose, 2.0);
        let mut s = 1.0;
        let mut d = 0.2;
        for _ in 0..300 {
            let (a, u) = pure_pursuit_control(&st, s, &path, &params, &limits).unwrap();
            st = step_vehicle(&st, a, u, 0.01, &limits);
            let f = line.frame().cartesian_to_frenet_near(&st.pose(), s, 1.0).unwrap();
            s = f.s;
            d = f.d;
        }
        assert!(s < 26.0);
        assert!(d.abs() < 0.02, "{d}");
    }

    #[test]
    fn on_line_needs_no_correction() {
        let limits = VehicleLimits::default();
        let track = tracks::rounded_rectangle(60.0, 12.0, 4.0, 0.1, 1.0).unwrap();
        let line = centerline_line(&track, &limits);
        let path = PathRef { line: &line, offset: None, speed_scale: 0.5 };
        let pose = line.frame().frenet_to_cartesian(2.0, 0.0);
        let st = VehicleState::at_pose(pose, path.speed_at(2.0));
        let (a, u) = pure_pursuit_control(&st, 2.0, &path, &TrackingParams::default(), &limits).unwrap();
        assert!((a - path.accel_at(2.0)).abs() < 1e-6 && u.abs() < 1e-6);
    }

    #[test]
    fn far_path_is_an_error() {
        let limits = VehicleLimits::default();
        let track = tracks::rounded_rectangle(60.0, 12.0, 4.0, 0.1, 1.0).unwrap();
        let line = centerline_line(&track, &limits);
        let path = PathRef { line: &line, offset: None, speed_scale: 0.5 };
        let st = VehicleState { x: 0.0, y: 5.0, ..Default::default() };
        assert!(pure_pursuit_control(&st, 2.0, &path, &TrackingParams::default(), &limits).is_err());
    }

    #[test]
    fn following_speed_matches_leader_at_desired_gap() {
        let p = TrackingParams::default();
        let l = VehicleLimits::default();
        let desired = p.follow_distance + p.follow_time * 3.0;
        assert!((follow_speed(desired, 3.0, &p, &l) - 3.0).abs() < 1e-12);
        assert!(follow_speed(desired + 1.0, 3.0, &p, &l) > 3.0);
        assert!(follow_speed(desired - 0.5, 3.0, &p, &l) < 3.0);
        assert_eq!(follow_speed(0.5, 0.0, &p, &l), 0.0);
    }
}

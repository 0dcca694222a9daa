//! Kinematic bicycle with actuator limits.

use serde::{Deserialize, Serialize};

use crate::lines::VehicleLimits;
use crate::track::{normalize_angle, CartesianPose};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    pub steering: f64,
}

impl VehicleState {
    pub fn at_pose(pose: CartesianPose, v: f64) -> Self {
        Self {
            x: pose.x,
            y: pose.y,
            heading: pose.heading,
            v,
            steering: 0.0,
        }
    }

    pub fn pose(&self) -> CartesianPose {
        CartesianPose::new(self.x, self.y, self.heading)
    }

    /// Footprint corners (front left, front right, rear right, rear left) around the vehicle center.
    pub fn corners(&self, length: f64, width: f64) -> [[f64; 2]; 4] {
        let (c, s) = (self.heading.cos(), self.heading.sin());
        let (hl, hw) = (0.5 * length, 0.5 * width);
        let at = |a: f64, b: f64| [self.x + a * c - b * s, self.y + a * s + b * c];
        [at(hl, hw), at(hl, -hw), at(-hl, -hw), at(-hl, hw)]
    }
}

/// Advance the vehicle by `dt` with a midpoint (second-order Runge-Kutta) step.
/// Steering moves toward the command at most `steer_rate_max` and saturates at
/// `steer_max`; acceleration saturates at `a_lon_max`; speed never goes negative.
pub fn step_vehicle(state: &VehicleState, accel_cmd: f64, steer_cmd: f64, dt: f64, limits: &VehicleLimits) -> VehicleState {
    let max_delta = limits.steer_rate_max * dt;
    let target = steer_cmd.clamp(-limits.steer_max, limits.steer_max);
    let steering = (state.steering + (target - state.steering).clamp(-max_delta, max_delta)).clamp(-limits.steer_max, limits.steer_max);
    let mut a = accel_cmd.clamp(-limits.a_lon_max, limits.a_lon_max);
    // braking stops at zero speed within the step
    let mut h = dt;
    if state.v + a * dt < 0.0 {
        if a < 0.0 {
            h = state.v / -a;
        } else {
            a = 0.0;
        }
    }
    let yaw_rate = |v: f64| v * steering.tan() / limits.wheelbase;
    let v_mid = state.v + 0.5 * a * h;
    let th_mid = state.heading + 0.5 * h * yaw_rate(state.v);
    let x = state.x + h * v_mid * th_mid.cos();
    let y = state.y + h * v_mid * th_mid.sin();
    let heading = normalize_angle(state.heading + h * yaw_rate(v_mid));
    let v = (state.v + a * h).max(0.0);
    VehicleState { x, y, heading, v, steering }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limits() -> VehicleLimits {
        VehicleLimits::default()
    }

    #[test]
    fn coasting_goes_straight() {
        let mut s = VehicleState { v: 2.0, heading: 0.3, ..Default::default() };
        for _ in 0..100 {
            s = step_vehicle(&s, 0.0, 0.0, 0.01, &limits());
        }
        assert!((s.x - 2.0 * 0.3f64.cos()).abs() < 1e-9);
        assert!((s.y - 2.0 * 0.3f64.sin()).abs() < 1e-9);
        assert_eq!(s.v, 2.0);
    }

    #[test]
    fn constant_steer_traces_bicycle_circle() {
        let l = limits();
        let steer = 0.25;
        let mut s = VehicleState { v: 2.0, steering: steer, ..Default::default() };
        let mut pts = Vec::new();
        for _ in 0..2000 {
            s = step_vehicle(&s, 0.0, steer, 0.01, &l);
            pts.push([s.x, s.y]);
        }
        let r = l.wheelbase / steer.tan();
        // center sits r to the left of the start, which faces +x from the origin
        for p in pts {
            let rad = p[0].hypot(p[1] - r);
            assert!((rad - r).abs() < 0.01 * r, "{rad} vs {r}");
        }
    }

    #[test]
    fn full_brake_distance() {
        let l = limits();
        for v0 in [1.0, 3.0, 6.0] {
            let mut s = VehicleState { v: v0, ..Default::default() };
            while s.v > 0.0 {
                s = step_vehicle(&s, -100.0, 0.0, 0.01, &l);
            }
            let expected = v0 * v0 / (2.0 * l.a_lon_max);
            assert!((s.x - expected).abs() < 0.02 * expected, "{} vs {expected}", s.x);
        }
    }

    #[test]
    fn steering_is_rate_limited() {
        let l = limits();
        let s = step_vehicle(&VehicleState::default(), 0.0, 1.0, 0.01, &l);
        assert!((s.steering - l.steer_rate_max * 0.01).abs() < 1e-12);
        let mut s = s;
        for _ in 0..100 {
            s = step_vehicle(&s, 0.0, 1.0, 0.01, &l);
        }
        assert_eq!(s.steering, l.steer_max);
    }
}

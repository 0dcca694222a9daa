//! Footprint overlap tests between the cars and against the track walls.

use serde::{Deserialize, Serialize};

use crate::sim::vehicle::VehicleState;
use crate::track::TrackModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrashKind {
    Vehicle,
    EgoWall,
    OpponentWall,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dims {
    pub length: f64,
    pub width: f64,
}

/// Separating-axis test between two oriented rectangles.
pub fn footprints_overlap(a: &VehicleState, b: &VehicleState, dims: Dims) -> bool {
    let ca = a.corners(dims.length, dims.width);
    let cb = b.corners(dims.length, dims.width);
    let axes = [a.heading, a.heading + std::f64::consts::FRAC_PI_2, b.heading, b.heading + std::f64::consts::FRAC_PI_2];
    for th in axes {
        let (ux, uy) = (th.cos(), th.sin());
        let proj = |c: &[[f64; 2]; 4]| {
            c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                let v = p[0] * ux + p[1] * uy;
                (lo.min(v), hi.max(v))
            })
        };
        let (a0, a1) = proj(&ca);
        let (b0, b1) = proj(&cb);
        if a1 < b0 || b1 < a0 {
            return false;
        }
    }
    true
}

/// True when any footprint corner lies outside the drivable corridor.
pub fn off_track(state: &VehicleState, track: &TrackModel, s_hint: f64, dims: Dims) -> bool {
    state.corners(dims.length, dims.width).iter().any(|c| {
        let pose = crate::track::CartesianPose::new(c[0], c[1], state.heading);
        match track.cartesian_to_frenet_near(&pose, s_hint, dims.length + 2.0) {
            Ok(f) => {
                let (wl, wr) = track.width_at(f.s);
                f.d > wl || f.d < -wr
            }
            Err(_) => true,
        }
    })
}

/// Vehicle contact takes precedence over wall contact; the ego wall is checked before the opponent's.
pub fn detect_crash(
    ego: &VehicleState,
    opp: &VehicleState,
    track: &TrackModel,
    hints: (f64, f64),
    dims: Dims,
) -> Option<CrashKind> {
    if footprints_overlap(ego, opp, dims) {
        Some(CrashKind::Vehicle)
    } else if off_track(ego, track, hints.0, dims) {
        Some(CrashKind::EgoWall)
    } else if off_track(opp, track, hints.1, dims) {
        Some(CrashKind::OpponentWall)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracks;

    const DIMS: Dims = Dims { length: 0.5, width: 0.3 };

    fn track() -> TrackModel {
        tracks::rounded_rectangle(60.0, 12.0, 4.0, 0.1, 1.0).unwrap()
    }

    #[test]
    fn identical_poses_collide() {
        let t = track();
        let a = VehicleState::at_pose(t.frenet_to_cartesian(3.0, 0.0), 1.0);
        assert_eq!(detect_crash(&a, &a, &t, (3.0, 3.0), DIMS), Some(CrashKind::Vehicle));
    }

    #[test]
    fn far_apart_is_clear() {
        let t = track();
        let a = VehicleState::at_pose(t.frenet_to_cartesian(3.0, 0.0), 1.0);
        let b = VehicleState::at_pose(t.frenet_to_cartesian(3.0 + DIMS.length.hypot(DIMS.width) + 0.01, 0.0), 1.0);
        assert_eq!(detect_crash(&a, &b, &t, (3.0, 3.6), DIMS), None);
    }

    #[test]
    fn rotated_near_miss_and_touch() {
        let a = VehicleState::default();
        // b rotated 90 degrees, its long side parallel to a's front face
        let mut b = VehicleState { heading: std::f64::consts::FRAC_PI_2, ..Default::default() };
        b.x = 0.25 + 0.15 + 1e-3;
        assert!(!footprints_overlap(&a, &b, DIMS));
        b.x = 0.25 + 0.15 - 1e-3;
        assert!(footprints_overlap(&a, &b, DIMS));
    }

    #[test]
    fn corner_past_the_wall() {
        let t = track();
        let inside = 1.0 - 0.5 * DIMS.width;
        // on the bottom straight the normal is +y; left wall at d = 1
        for (d, expect) in [(inside - 1e-3, None), (inside + 1e-3, Some(CrashKind::EgoWall))] {
            let ego = VehicleState::at_pose(t.frenet_to_cartesian(5.0, d), 1.0);
            let opp = VehicleState::at_pose(t.frenet_to_cartesian(12.0, 0.0), 1.0);
            assert_eq!(detect_crash(&ego, &opp, &t, (5.0, 12.0), DIMS), expect, "d = {d}");
        }
        let opp = VehicleState::at_pose(t.frenet_to_cartesian(12.0, -(inside + 1e-3)), 1.0);
        let ego = VehicleState::at_pose(t.frenet_to_cartesian(5.0, 0.0), 1.0);
        assert_eq!(detect_crash(&ego, &opp, &t, (5.0, 12.0), DIMS), Some(CrashKind::OpponentWall));
    }
}

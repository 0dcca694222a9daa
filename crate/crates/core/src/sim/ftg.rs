//! Reactive follow-the-gap driver fed by a simulated range scan.

use serde::{Deserialize, Serialize};

use crate::lines::VehicleLimits;
use crate::sim::vehicle::VehicleState;
use crate::track::TrackModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FtgParams {
    pub fov_deg: f64,
    pub resolution_deg: f64,
    pub max_range: f64,
    /// Rays shorter than this are blocked.
    pub gap_threshold: f64,
    pub steer_gain: f64,
    /// Fraction of speed removed at full steering lock.
    pub steer_slowdown: f64,
    pub speed_gain: f64,
}

impl Default for FtgParams {
    fn default() -> Self {
        Self {
            fov_deg: 270.0,
            resolution_deg: 1.0,
            max_range: 8.0,
            gap_threshold: 1.5,
            steer_gain: 0.8,
            steer_slowdown: 0.5,
            speed_gain: 3.0,
        }
    }
}

impl FtgParams {
    pub fn ray_count(&self) -> usize {
        (self.fov_deg / self.resolution_deg).round() as usize + 1
    }

    /// Bearing of ray `i` relative to the heading; ray 0 is the rightmost.
    pub fn ray_angle(&self, i: usize) -> f64 {
        (-0.5 * self.fov_deg + i as f64 * self.resolution_deg).to_radians()
    }
}

/// Track walls as polylines indexed by arc length for local ray casting.
#[derive(Debug, Clone)]
pub struct Walls {
    left: Vec<[f64; 2]>,
    right: Vec<[f64; 2]>,
    spacing: f64,
}

impl Walls {
    pub fn new(track: &TrackModel) -> Self {
        let (left, right) = track.boundaries();
        Self { left, right, spacing: track.spacing() }
    }

    fn segments_near(&self, s: f64, reach: f64) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let m = self.left.len();
        let k = (reach / self.spacing).ceil() as usize + 2;
        let k = k.min(m / 2);
        let c = (s / self.spacing).round() as usize % m;
        let idx = move |off: usize| (c + m + off - k) % m;
        (0..2 * k).flat_map(move |off| {
            let (i, j) = (idx(off), idx(off + 1));
            [(self.left[i], self.left[j]), (self.right[i], self.right[j])]
        })
    }
}

fn ray_hit(o: [f64; 2], dir: [f64; 2], a: [f64; 2], b: [f64; 2]) -> Option<f64> {
    let e = [b[0] - a[0], b[1] - a[1]];
    let den = dir[0] * e[1] - dir[1] * e[0];
    if den.abs() < 1e-12 {
        return None;
    }
    let w = [a[0] - o[0], a[1] - o[1]];
    let t = (w[0] * e[1] - w[1] * e[0]) / den;
    let u = (w[0] * dir[1] - w[1] * dir[0]) / den;
    (t >= 0.0 && (0.0..=1.0).contains(&u)).then_some(t)
}

/// Ranges from the vehicle center against the walls near `s` and the given obstacle footprints.
pub fn scan(state: &VehicleState, walls: &Walls, s: f64, obstacles: &[[[f64; 2]; 4]], params: &FtgParams) -> Vec<f64> {
    let o = [state.x, state.y];
    let segs: Vec<_> = walls
        .segments_near(s, params.max_range)
        .chain(obstacles.iter().flat_map(|c| (0..4).map(move |i| (c[i], c[(i + 1) % 4]))))
        .collect();
    (0..params.ray_count())
        .map(|i| {
            let th = state.heading + params.ray_angle(i);
            let dir = [th.cos(), th.sin()];
            segs.iter()
                .filter_map(|&(a, b)| ray_hit(o, dir, a, b))
                .fold(params.max_range, f64::min)
        })
        .collect()
}

/// Bearing of the widest run of open rays. Equal widths resolve to the leftmost run.
pub fn widest_gap(ranges: &[f64], params: &FtgParams) -> Option<f64> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for i in 0..=ranges.len() {
        let open = i < ranges.len() && ranges[i] > params.gap_threshold;
        match (open, start) {
            (true, None) => start = Some(i),
            (false, Some(a)) => {
                if best.is_none_or(|(b0, b1)| i - a >= b1 - b0) {
                    best = Some((a, i));
                }
                start = None;
            }
            _ => {}
        }
    }
    best.map(|(a, b)| 0.5 * (params.ray_angle(a) + params.ray_angle(b - 1)))
}

/// Steering toward the widest gap, slowing with steering magnitude and never exceeding `v_cap`.
/// With no open gap the car brakes at full rate and holds its wheel straight.
pub fn reactive_opponent_control(
    state: &VehicleState,
    ranges: &[f64],
    params: &FtgParams,
    limits: &VehicleLimits,
    v_cap: f64,
) -> (f64, f64) {
    match widest_gap(ranges, params) {
        None => (-limits.a_lon_max, 0.0),
        Some(angle) => {
            let steer = (params.steer_gain * angle).clamp(-limits.steer_max, limits.steer_max);
            let v_target = v_cap * (1.0 - params.steer_slowdown * steer.abs() / limits.steer_max);
            (params.speed_gain * (v_target - state.v), steer)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracks;

    #[test]
    fn straight_corridor_steers_ahead() {
        let track = tracks::rounded_rectangle(60.0, 12.0, 4.0, 0.1, 1.0).unwrap();
        let walls = Walls::new(&track);
        let p = FtgParams::default();
        let st = VehicleState::at_pose(track.frenet_to_cartesian(5.0, 0.0), 2.0);
        let ranges = scan(&st, &walls, 5.0, &[], &p);
        assert_eq!(ranges.len(), 271);
        // straight side ray meets the wall one half-width away
        assert!((ranges[45] - 1.0).abs() < 1e-6 && (ranges[225] - 1.0).abs() < 1e-6);
        let (_, steer) = reactive_opponent_control(&st, &ranges, &p, &VehicleLimits::default(), 3.0);
        assert!(steer.abs() < 1e-3, "{steer}");
    }

    #[test]
    fn blocked_left_half_turns_right() {
        let track = tracks::rounded_rectangle(60.0, 12.0, 4.0, 0.1, 2.0).unwrap();
        let walls = Walls::new(&track);
        let p = FtgParams::default();
        let st = VehicleState::at_pose(track.frenet_to_cartesian(5.0, 0.0), 2.0);
        let body = VehicleState::at_pose(track.frenet_to_cartesian(6.0, 0.8), 2.0);
        let blocker = body.corners(1.5, 1.4);
        let ranges = scan(&st, &walls, 5.0, &[blocker], &p);
        let g = widest_gap(&ranges, &p).unwrap();
        assert!(g < 0.0, "{g}");
    }

    #[test]
    fn symmetric_dead_end_breaks_left() {
        let p = FtgParams::default();
        let mut ranges = vec![0.5; p.ray_count()];
        for r in &mut ranges[40..80] {
            *r = 5.0;
        }
        for r in &mut ranges[191..231] {
            *r = 5.0;
        }
        let g = widest_gap(&ranges, &p).unwrap();
        assert!(g > 0.0);
        assert!((g - (p.ray_angle(191) + p.ray_angle(230)) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn fully_blocked_brakes() {
        let p = FtgParams::default();
        let l = VehicleLimits::default();
        let ranges = vec![0.5; p.ray_count()];
        let st = VehicleState { v: 2.0, ..Default::default() };
        assert_eq!(reactive_opponent_control(&st, &ranges, &p, &l, 3.0), (-l.a_lon_max, 0.0));
    }
}

//! Shipped circuits and simple analytic track shapes.

use std::f64::consts::PI;

use crate::track::{TrackError, TrackModel};

pub const OVAL_CHICANE: &str = include_str!("../../../tracks/oval_chicane.txt");
pub const TREFOIL: &str = include_str!("../../../tracks/trefoil.txt");

pub const SHIPPED: [&str; 2] = ["oval_chicane", "trefoil"];

/// Look up a shipped circuit by name.
pub fn shipped(name: &str) -> Option<Result<TrackModel, TrackError>> {
    let text = match name {
        "oval_chicane" => OVAL_CHICANE,
        "trefoil" => TREFOIL,
        _ => return None,
    };
    Some(TrackModel::parse(text))
}

/// Closed polyline with the first point repeated at the end.
fn closed(mut pts: Vec<[f64; 2]>, left: f64, right: f64) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    pts.push(pts[0]);
    let w = vec![[left, right]; pts.len()];
    (pts, w)
}

/// Counter-clockwise circle sampled at `n` points.
pub fn circle(radius: f64, n: usize, half_width: f64) -> Result<TrackModel, TrackError> {
    let pts = (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            [radius * a.cos(), radius * a.sin()]
        })
        .collect();
    let (p, w) = closed(pts, half_width, half_width);
    TrackModel::build(&p, &w)
}

/// Counter-clockwise rectangle `length x height` with corner radius `radius`,
/// sampled roughly every `step` meters.
pub fn rounded_rectangle(length: f64, height: f64, radius: f64, step: f64, half_width: f64) -> Result<TrackModel, TrackError> {
    let (p, w) = closed(rounded_rectangle_points(length, height, radius, step), half_width, half_width);
    TrackModel::build(&p, &w)
}

pub fn rounded_rectangle_points(length: f64, height: f64, radius: f64, step: f64) -> Vec<[f64; 2]> {
    let (hx, hy) = (length / 2.0, height / 2.0);
    let (cx, cy) = (hx - radius, hy - radius);
    let mut pts = Vec::new();
    let line = |from: [f64; 2], to: [f64; 2], pts: &mut Vec<[f64; 2]>| {
        let len = (to[0] - from[0]).hypot(to[1] - from[1]);
        let n = (len / step).ceil().max(1.0) as usize;
        for i in 0..n {
            let f = i as f64 / n as f64;
            pts.push([from[0] + f * (to[0] - from[0]), from[1] + f * (to[1] - from[1])]);
        }
    };
    let arc = |center: [f64; 2], a0: f64, pts: &mut Vec<[f64; 2]>| {
        let n = ((PI / 2.0 * radius) / step).ceil().max(2.0) as usize;
        for i in 0..n {
            let a = a0 + PI / 2.0 * i as f64 / n as f64;
            pts.push([center[0] + radius * a.cos(), center[1] + radius * a.sin()]);
        }
    };
    line([0.0, -hy], [cx, -hy], &mut pts);
    arc([cx, -cy], -PI / 2.0, &mut pts);
    line([hx, -cy], [hx, cy], &mut pts);
    arc([cx, cy], 0.0, &mut pts);
    line([cx, hy], [-cx, hy], &mut pts);
    arc([-cx, cy], PI / 2.0, &mut pts);
    line([-hx, cy], [-hx, -cy], &mut pts);
    arc([-cx, -cy], PI, &mut pts);
    line([-cx, -hy], [0.0, -hy], &mut pts);
    pts.dedup_by(|a, b| (a[0] - b[0]).hypot(a[1] - b[1]) < 1e-9);
    pts
}

pub fn rounded_rectangle_perimeter(length: f64, height: f64, radius: f64) -> f64 {
    2.0 * (length - 2.0 * radius) + 2.0 * (height - 2.0 * radius) + 2.0 * PI * radius
}

/// Straight, clothoid entry, arc, clothoid exit and so on: a closed circuit
/// made of `turns` identical left corners, each with linear curvature ramps.
/// Returns the track and the arc length of the first ramp `(start, end, end curvature)`.
pub fn clothoid_circuit(straight: f64, ramp: f64, radius: f64, turns: usize, half_width: f64) -> Result<(TrackModel, (f64, f64, f64)), TrackError> {
    let k_arc = 1.0 / radius;
    let turn_angle = 2.0 * PI / turns as f64;
    // heading change of the two ramps = k_arc * ramp; rest in the arc
    let arc_len = (turn_angle - k_arc * ramp) / k_arc;
    assert!(arc_len > 0.0, "ramps too long for the turn angle");
    let ds = 0.01;
    let mut segs: Vec<(f64, f64, f64)> = Vec::new(); // (length, k0, k1)
    for _ in 0..turns {
        segs.push((straight, 0.0, 0.0));
        segs.push((ramp, 0.0, k_arc));
        segs.push((arc_len, k_arc, k_arc));
        segs.push((ramp, k_arc, 0.0));
    }
    let mut pts = Vec::new();
    let (mut x, mut y, mut th) = (0.0f64, 0.0f64, 0.0f64);
    let mut sample_every = 0usize;
    for (len, k0, k1) in segs {
        let n = (len / ds).round() as usize;
        let h = len / n as f64;
        for i in 0..n {
            if sample_every % 10 == 0 {
                pts.push([x, y]);
            }
            sample_every += 1;
            let f = (i as f64 + 0.5) / n as f64;
            let k = k0 + (k1 - k0) * f;
            // midpoint heading
            let th_mid = th + 0.5 * k * h;
            x += h * th_mid.cos();
            y += h * th_mid.sin();
            th += k * h;
        }
    }
    // small closure residual from integration is absorbed by snapping the last point
    let (p, w) = closed(pts, half_width, half_width);
    let ramp_start = straight;
    Ok((TrackModel::build(&p, &w)?, (ramp_start, ramp_start + ramp, k_arc)))
}

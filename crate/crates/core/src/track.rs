//! Closed track geometry, arc-length parameterization and Frenet conversion.
//!
//! Sign convention: `d > 0` is to the left of the direction of travel.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spline::{periodic_lerp, PeriodicSpline};

/// Maximum spacing of the resampled reference grid.
pub const GRID_SPACING: f64 = 0.1;
const CLOSURE_TOL: f64 = 1e-6;
const MIN_POINTS: usize = 20;
const CURVATURE_WINDOW: usize = 5;

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("centerline is not closed: first and last points differ by {0:.3e} m")]
    NotClosed(f64),
    #[error("need at least {MIN_POINTS} centerline points, got {0}")]
    TooFewPoints(usize),
    #[error("widths must be given per point ({points} points, {widths} widths)")]
    WidthMismatch { points: usize, widths: usize },
    #[error("track widths must be strictly positive (point {0})")]
    NonPositiveWidth(usize),
    #[error("duplicate consecutive centerline points at index {0}")]
    DuplicatePoint(usize),
    #[error("centerline self-intersects (segments {0} and {1})")]
    SelfIntersection(usize, usize),
    #[error("pose ({x:.3}, {y:.3}) is {distance:.3} m from the reference line, beyond {limit:.3} m")]
    OutOfDomain { x: f64, y: f64, distance: f64, limit: f64 },
    #[error("track file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct FrenetState {
    pub s: f64,
    pub d: f64,
    pub v_s: f64,
    pub v_d: f64,
}

impl FrenetState {
    pub fn at(s: f64, d: f64) -> Self {
        Self { s, d, v_s: 0.0, v_d: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct CartesianPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl CartesianPose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading: normalize_angle(heading) }
    }
}

/// Normalize an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

/// Closed reference line resampled to a uniform arc-length grid, with the
/// lateral extent of the drivable area on either side.
#[derive(Debug, Clone)]
pub struct TrackModel {
    points: Vec<[f64; 2]>,
    widths: Vec<[f64; 2]>,
    heading: Vec<f64>,
    curvature: Vec<f64>,
    spacing: f64,
    total_length: f64,
    ref_x: PeriodicSpline,
    ref_y: PeriodicSpline,
}

impl TrackModel {
    /// Build from an ordered closed centerline (first point repeated at the
    /// end) and `[left, right]` widths per point.
    pub fn build(centerline: &[[f64; 2]], widths: &[[f64; 2]]) -> Result<Self, TrackError> {
        if centerline.len() != widths.len() {
            return Err(TrackError::WidthMismatch { points: centerline.len(), widths: widths.len() });
        }
        let first = *centerline.first().ok_or(TrackError::TooFewPoints(0))?;
        let last = centerline[centerline.len() - 1];
        let gap = dist(first, last);
        if centerline.len() < 2 || gap > CLOSURE_TOL {
            return Err(TrackError::NotClosed(gap));
        }
        let pts = &centerline[..centerline.len() - 1];
        let wds = &widths[..widths.len() - 1];
        if pts.len() < MIN_POINTS {
            return Err(TrackError::TooFewPoints(pts.len()));
        }
        if let Some(i) = wds.iter().position(|w| !(w[0] > 0.0 && w[1] > 0.0)) {
            return Err(TrackError::NonPositiveWidth(i));
        }
        let n = pts.len();
        for i in 0..n {
            if dist(pts[i], pts[(i + 1) % n]) <= 1e-9 {
                return Err(TrackError::DuplicatePoint(i));
            }
        }
        check_simple_polygon(pts)?;

        // Chord-length parameterization of the input polyline.
        let mut knots = Vec::with_capacity(n + 1);
        knots.push(0.0);
        for i in 0..n {
            let next = knots[i] + dist(pts[i], pts[(i + 1) % n]);
            knots.push(next);
        }
        let xs: Vec<f64> = pts.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p[1]).collect();
        let sx = PeriodicSpline::new(&knots, &xs);
        let sy = PeriodicSpline::new(&knots, &ys);

        // Arc length per input segment by Gauss-Legendre quadrature.
        let speed = |u: f64| {
            let (_, dx, _) = sx.eval_all(u);
            let (_, dy, _) = sy.eval_all(u);
            dx.hypot(dy)
        };
        let mut arc = Vec::with_capacity(n + 1);
        arc.push(0.0);
        for i in 0..n {
            let l = gauss_legendre(&speed, knots[i], knots[i + 1]);
            arc.push(arc[i] + l);
        }
        let total_length = arc[n];
        let m = (total_length / GRID_SPACING).ceil() as usize;
        let spacing = total_length / m as f64;

        // Uniform-arc-length resampling.
        let mut grid_pts = Vec::with_capacity(m);
        let mut grid_w = Vec::with_capacity(m);
        let mut seg = 0usize;
        for k in 0..m {
            let target = k as f64 * spacing;
            while seg + 1 < n && arc[seg + 1] <= target {
                seg += 1;
            }
            let (a, b) = (knots[seg], knots[seg + 1]);
            let mut u = a + (b - a) * (target - arc[seg]) / (arc[seg + 1] - arc[seg]);
            for _ in 0..20 {
                let f = arc[seg] + gauss_legendre(&speed, a, u) - target;
                let step = f / speed(u);
                u = (u - step).clamp(a, b);
                if step.abs() < 1e-13 {
                    break;
                }
            }
            grid_pts.push([sx.eval(u), sy.eval(u)]);
            let frac = (u - a) / (b - a);
            let w0 = wds[seg];
            let w1 = wds[(seg + 1) % n];
            grid_w.push([
                w0[0] * (1.0 - frac) + w1[0] * frac,
                w0[1] * (1.0 - frac) + w1[1] * frac,
            ]);
        }
        Ok(Self::from_uniform_grid(grid_pts, grid_w, spacing))
    }

    /// Build from points already on a uniform arc-length grid (no closing duplicate).
    fn from_uniform_grid(points: Vec<[f64; 2]>, widths: Vec<[f64; 2]>, spacing: f64) -> Self {
        let m = points.len();
        let knots: Vec<f64> = (0..=m).map(|k| k as f64 * spacing).collect();
        let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
        let ref_x = PeriodicSpline::new(&knots, &xs);
        let ref_y = PeriodicSpline::new(&knots, &ys);

        let mut heading = Vec::with_capacity(m);
        for k in 0..m {
            let s = k as f64 * spacing;
            let (_, dx, _) = ref_x.eval_all(s);
            let (_, dy, _) = ref_y.eval_all(s);
            heading.push(dy.atan2(dx));
        }
        // Heading differences over arc length, then a centered moving average.
        let raw: Vec<f64> = (0..m)
            .map(|k| {
                let prev = heading[(k + m - 1) % m];
                let next = heading[(k + 1) % m];
                normalize_angle(next - prev) / (2.0 * spacing)
            })
            .collect();
        let half = CURVATURE_WINDOW / 2;
        let curvature = (0..m)
            .map(|k| {
                (0..CURVATURE_WINDOW)
                    .map(|j| raw[(k + m + j - half) % m])
                    .sum::<f64>()
                    / CURVATURE_WINDOW as f64
            })
            .collect();

        Self {
            points,
            widths,
            heading,
            curvature,
            spacing,
            total_length: spacing * m as f64,
            ref_x,
            ref_y,
        }
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Resampled reference points; index `k` sits at `s = k * spacing()`.
    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    /// `[left, right]` extent at each reference point.
    pub fn widths(&self) -> &[[f64; 2]] {
        &self.widths
    }

    pub fn s_at(&self, index: usize) -> f64 {
        index as f64 * self.spacing
    }

    pub fn heading_at_index(&self, index: usize) -> f64 {
        self.heading[index]
    }

    pub fn curvature_at_index(&self, index: usize) -> f64 {
        self.curvature[index]
    }

    /// Wrap into `[0, total_length)`.
    pub fn wrap_s(&self, s: f64) -> f64 {
        wrap(s, self.total_length)
    }

    /// Signed difference `to - from` wrapped into `(-L/2, L/2]`.
    pub fn signed_gap(&self, from: f64, to: f64) -> f64 {
        signed_wrap(to - from, self.total_length)
    }

    /// Left/right extent at `s`, linearly interpolated.
    pub fn width_at(&self, s: f64) -> (f64, f64) {
        let (i, frac) = self.bracket(s);
        let j = (i + 1) % self.points.len();
        let w = |c: usize| self.widths[i][c] * (1.0 - frac) + self.widths[j][c] * frac;
        (w(0), w(1))
    }

    /// Signed curvature from smoothed heading differences, interpolated in `s`.
    pub fn curvature_at(&self, s: f64) -> f64 {
        periodic_lerp(&self.curvature, self.spacing, s)
    }

    fn bracket(&self, s: f64) -> (usize, f64) {
        let u = self.wrap_s(s) / self.spacing;
        let i = (u.floor() as usize).min(self.points.len() - 1);
        (i, u - i as f64)
    }

    fn reference(&self, s: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
        let (x, dx, ddx) = self.ref_x.eval_all(s);
        let (y, dy, ddy) = self.ref_y.eval_all(s);
        ([x, y], [dx, dy], [ddx, ddy])
    }

    pub fn frenet_to_cartesian(&self, s: f64, d: f64) -> CartesianPose {
        let (p, t, _) = self.reference(s);
        let norm = t[0].hypot(t[1]);
        let (tx, ty) = (t[0] / norm, t[1] / norm);
        CartesianPose::new(p[0] - d * ty, p[1] + d * tx, ty.atan2(tx))
    }

    /// Project a pose onto the reference line (positional fields only).
    pub fn cartesian_to_frenet(&self, pose: &CartesianPose) -> Result<FrenetState, TrackError> {
        let p = [pose.x, pose.y];
        let k = self
            .points
            .iter()
            .enumerate()
            .map(|(i, q)| (i, dist2(*q, p)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        self.refine_projection(p, k)
    }

    /// Projection searching only grid points within `window` meters of `s_hint`.
    pub fn cartesian_to_frenet_near(
        &self,
        pose: &CartesianPose,
        s_hint: f64,
        window: f64,
    ) -> Result<FrenetState, TrackError> {
        let p = [pose.x, pose.y];
        let m = self.points.len();
        let reach = ((window / self.spacing).ceil() as usize).min(m / 2);
        let center = (self.wrap_s(s_hint) / self.spacing).round() as usize;
        let mut best = (center % m, f64::INFINITY);
        for off in 0..=2 * reach {
            let i = (center + m + off - reach) % m;
            let dd = dist2(self.points[i], p);
            if dd < best.1 {
                best = (i, dd);
            }
        }
        self.refine_projection(p, best.0)
    }

    fn refine_projection(&self, p: [f64; 2], start: usize) -> Result<FrenetState, TrackError> {
        let mut s = start as f64 * self.spacing;
        for _ in 0..30 {
            let (r, t, a) = self.reference(s);
            let e = [p[0] - r[0], p[1] - r[1]];
            let f = e[0] * t[0] + e[1] * t[1];
            let df = -(t[0] * t[0] + t[1] * t[1]) + e[0] * a[0] + e[1] * a[1];
            let step = if df < -1e-12 { f / df } else { -f };
            let step = step.clamp(-self.spacing, self.spacing);
            s -= step;
            if step.abs() < 1e-13 {
                break;
            }
        }
        let (r, t, _) = self.reference(s);
        let norm = t[0].hypot(t[1]);
        let e = [p[0] - r[0], p[1] - r[1]];
        let d = (t[0] * e[1] - t[1] * e[0]) / norm;
        let s = self.wrap_s(s);
        let (wl, wr) = self.width_at(s);
        let limit = 2.0 * wl.max(wr);
        if d.abs() > limit {
            return Err(TrackError::OutOfDomain { x: p[0], y: p[1], distance: d.abs(), limit });
        }
        Ok(FrenetState::at(s, d))
    }

    /// Left and right boundary polylines, one point per reference sample.
    pub fn boundaries(&self) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
        let mut left = Vec::with_capacity(self.points.len());
        let mut right = Vec::with_capacity(self.points.len());
        for (k, w) in self.widths.iter().enumerate() {
            let s = self.s_at(k);
            let l = self.frenet_to_cartesian(s, w[0]);
            let r = self.frenet_to_cartesian(s, -w[1]);
            left.push([l.x, l.y]);
            right.push([r.x, r.y]);
        }
        (left, right)
    }

    /// Parse the `x y w_left w_right` text format. The closing point must repeat the first.
    pub fn parse(text: &str) -> Result<Self, TrackError> {
        let mut pts = Vec::new();
        let mut wds = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let vals: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
            let vals = vals.map_err(|e| TrackError::Parse { line: no + 1, msg: e.to_string() })?;
            if vals.len() != 4 {
                return Err(TrackError::Parse {
                    line: no + 1,
                    msg: format!("expected 4 columns, found {}", vals.len()),
                });
            }
            pts.push([vals[0], vals[1]]);
            wds.push([vals[2], vals[3]]);
        }
        Self::build(&pts, &wds)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TrackError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Serialize the resampled grid in the text format, closing point included.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# x y w_left w_right\n");
        for (p, w) in self.points.iter().zip(&self.widths).chain(std::iter::once((&self.points[0], &self.widths[0]))) {
            let _ = writeln!(out, "{:.6} {:.6} {:.6} {:.6}", p[0], p[1], w[0], w[1]);
        }
        out
    }
}

pub(crate) fn wrap(s: f64, length: f64) -> f64 {
    let w = s.rem_euclid(length);
    if w >= length {
        0.0
    } else {
        w
    }
}

pub(crate) fn signed_wrap(delta: f64, length: f64) -> f64 {
    let mut g = delta.rem_euclid(length);
    if g > length / 2.0 {
        g -= length;
    }
    g
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    dist2(a, b).sqrt()
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn gauss_legendre(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const NODES: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const WEIGHTS: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    NODES.iter().zip(WEIGHTS).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: [f64; 2], b: [f64; 2], c: [f64; 2], o: f64| {
        o == 0.0 && c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Segment-pair intersection test over all non-adjacent edges of the closed polygon.
fn check_simple_polygon(pts: &[[f64; 2]]) -> Result<(), TrackError> {
    let n = pts.len();
    let boxes: Vec<[f64; 4]> = (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            [a[0].min(b[0]), a[0].max(b[0]), a[1].min(b[1]), a[1].max(b[1])]
        })
        .collect();
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (bi, bj) = (boxes[i], boxes[j]);
            if bi[1] < bj[0] || bj[1] < bi[0] || bi[3] < bj[2] || bj[3] < bi[2] {
                continue;
            }
            if segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                return Err(TrackError::SelfIntersection(i, j));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn circle(radius: f64, n: usize, width: f64) -> TrackModel {
        let mut pts: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / n as f64;
                [radius * a.cos(), radius * a.sin()]
            })
            .collect();
        pts.push(pts[0]);
        let w = vec![[width, width]; pts.len()];
        TrackModel::build(&pts, &w).unwrap()
    }

    #[test]
    fn circle_circumference() {
        let t = circle(1.0, 100, 0.5);
        assert!((t.total_length() - 2.0 * PI).abs() < 1e-3, "{}", t.total_length());
        assert!(t.spacing() <= GRID_SPACING);
    }

    #[test]
    fn three_points_are_not_closed() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        let w = [[0.5, 0.5]; 3];
        assert!(matches!(TrackModel::build(&pts, &w), Err(TrackError::NotClosed(_))));
    }

    #[test]
    fn figure_eight_is_rejected() {
        let n = 80;
        let mut pts: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / n as f64;
                [3.0 * a.sin(), 3.0 * a.sin() * a.cos()]
            })
            .collect();
        pts.push(pts[0]);
        let w = vec![[0.3, 0.3]; pts.len()];
        assert!(matches!(TrackModel::build(&pts, &w), Err(TrackError::SelfIntersection(..))));
    }

    #[test]
    fn wrap_examples() {
        let t = circle(2.0, 200, 0.5);
        let l = t.total_length();
        assert!((t.wrap_s(l + 1.0) - 1.0).abs() < 1e-12);
        assert!((t.wrap_s(-0.5) - (l - 0.5)).abs() < 1e-12);
        assert_eq!(t.wrap_s(0.0), 0.0);
    }

    #[test]
    fn point_on_line_has_zero_offset() {
        let t = circle(2.0, 200, 0.5);
        for k in [0usize, 17, 60] {
            let s = t.s_at(k) + 0.037;
            let pose = t.frenet_to_cartesian(s, 0.0);
            let f = t.cartesian_to_frenet(&pose).unwrap();
            assert!(f.d.abs() < 1e-9);
        }
    }

    #[test]
    fn counter_clockwise_circle_offset_sign() {
        // Travel is counter-clockwise, so left is toward the center.
        let r = 2.0;
        let t = circle(r, 200, 0.5);
        for k in 0..12 {
            let a = 0.5 * k as f64;
            let outer = CartesianPose::new((r + 0.2) * a.cos(), (r + 0.2) * a.sin(), 0.0);
            let inner = CartesianPose::new((r - 0.2) * a.cos(), (r - 0.2) * a.sin(), 0.0);
            assert!((t.cartesian_to_frenet(&outer).unwrap().d + 0.2).abs() < 1e-6);
            assert!((t.cartesian_to_frenet(&inner).unwrap().d - 0.2).abs() < 1e-6);
        }
    }

    #[test]
    fn far_pose_is_out_of_domain() {
        let t = circle(5.0, 200, 0.5);
        let pose = CartesianPose::new(7.0, 0.0, 0.0);
        assert!(matches!(t.cartesian_to_frenet(&pose), Err(TrackError::OutOfDomain { .. })));
    }

    #[test]
    fn circle_curvature_is_constant() {
        for r in [1.0, 2.0, 5.0] {
            let t = circle(r, 400, 0.3);
            for k in 0..t.len() {
                let kappa = t.curvature_at_index(k);
                assert!((kappa - 1.0 / r).abs() < 0.05 / r, "R={r} k={k} kappa={kappa}");
            }
        }
    }

    #[test]
    fn text_format_roundtrip() {
        let t = circle(3.0, 120, 0.6);
        let back = TrackModel::parse(&t.to_text()).unwrap();
        assert!((back.total_length() - t.total_length()).abs() < 1e-4);
        let err = TrackModel::parse("0 0 1\n").unwrap_err();
        assert!(matches!(err, TrackError::Parse { line: 1, .. }));
    }

    #[test]
    fn near_projection_matches_global() {
        let t = circle(4.0, 300, 0.8);
        let pose = t.frenet_to_cartesian(7.3, 0.31);
        let a = t.cartesian_to_frenet(&pose).unwrap();
        let b = t.cartesian_to_frenet_near(&pose, 7.0, 1.5).unwrap();
        assert!((a.s - b.s).abs() < 1e-9 && (a.d - b.d).abs() < 1e-9);
    }
}

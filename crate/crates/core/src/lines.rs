//! Reference lines the agents follow, each with a curvature-limited speed profile.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qp::{QpError, QpProblem};
use crate::spline::{periodic_lerp, PeriodicSpline};
use crate::track::{TrackError, TrackModel};

/// Spacing of the offset variables optimized by the line generators.
const OPT_SPACING: f64 = 0.5;

#[derive(Debug, Error)]
pub enum LineError {
    #[error("margin {margin} m leaves no room (narrowest half-width {half_width} m)")]
    InfeasibleMargin { margin: f64, half_width: f64 },
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error("line optimization failed: {0}")]
    Solver(#[from] QpError),
    #[error("racing line csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for LineError {
    fn from(e: csv::Error) -> Self {
        LineError::Csv(e.to_string())
    }
}

/// Vehicle limits for a 1:10 scale car.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleLimits {
    pub v_max: f64,
    pub a_lat_max: f64,
    pub a_lon_max: f64,
    pub length: f64,
    pub width: f64,
    pub wheelbase: f64,
    pub steer_max: f64,
    /// rad/s
    pub steer_rate_max: f64,
}

impl Default for VehicleLimits {
    fn default() -> Self {
        Self {
            v_max: 7.0,
            a_lat_max: 6.0,
            a_lon_max: 4.0,
            length: 0.50,
            width: 0.30,
            wheelbase: 0.33,
            steer_max: 0.4,
            steer_rate_max: 4.0,
        }
    }
}

impl VehicleLimits {
    pub fn min_turning_radius(&self) -> f64 {
        self.wheelbase / self.steer_max.tan()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineKind {
    MinCurvature,
    ShortestPath,
    Centerline,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub kappa: f64,
    pub v: f64,
    pub d_left: f64,
    pub d_right: f64,
}

/// A closed reference line. Its geometry doubles as a Frenet frame whose
/// widths are the distances to the track boundaries.
#[derive(Debug, Clone)]
pub struct RacingLine {
    frame: TrackModel,
    speed: Vec<f64>,
}

impl RacingLine {
    pub fn frame(&self) -> &TrackModel {
        &self.frame
    }

    pub fn lap_length(&self) -> f64 {
        self.frame.total_length()
    }

    pub fn len(&self) -> usize {
        self.frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame.is_empty()
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speed
    }

    pub fn waypoints(&self) -> Vec<Waypoint> {
        let f = &self.frame;
        (0..f.len())
            .map(|k| Waypoint {
                s: f.s_at(k),
                x: f.points()[k][0],
                y: f.points()[k][1],
                heading: f.heading_at_index(k),
                kappa: f.curvature_at_index(k),
                v: self.speed[k],
                d_left: f.widths()[k][0],
                d_right: f.widths()[k][1],
            })
            .collect()
    }

    pub fn speed_at(&self, s: f64) -> f64 {
        periodic_lerp(&self.speed, self.frame.spacing(), s)
    }

    /// Longitudinal acceleration `v dv/ds` of the profile on the segment containing `s`.
    pub fn accel_at(&self, s: f64) -> f64 {
        let n = self.speed.len();
        let h = self.frame.spacing();
        let k = ((self.frame.wrap_s(s) / h).floor() as usize).min(n - 1);
        let (v0, v1) = (self.speed[k], self.speed[(k + 1) % n]);
        (v1 * v1 - v0 * v0) / (2.0 * h)
    }

    pub fn curvature_at(&self, s: f64) -> f64 {
        self.frame.curvature_at(s)
    }

    /// Distance to the left and right boundary at `s`.
    pub fn bounds_at(&self, s: f64) -> (f64, f64) {
        self.frame.width_at(s)
    }

    /// Unobstructed lap time of the speed profile.
    pub fn lap_time(&self) -> f64 {
        let h = self.frame.spacing();
        let n = self.speed.len();
        (0..n).map(|k| 2.0 * h / (self.speed[k] + self.speed[(k + 1) % n])).sum()
    }

    /// Replace the profile by a scaled copy (used for slower opponents).
    pub fn with_speed_scale(&self, factor: f64) -> Self {
        Self { frame: self.frame.clone(), speed: self.speed.iter().map(|v| v * factor).collect() }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), LineError> {
        let mut w = csv::Writer::from_writer(out);
        for wp in self.waypoints() {
            w.serialize(wp)?;
        }
        w.flush().map_err(|e| LineError::Csv(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, LineError> {
        let mut r = csv::Reader::from_reader(input);
        let mut wps: Vec<Waypoint> = Vec::new();
        for rec in r.deserialize() {
            wps.push(rec?);
        }
        if wps.is_empty() {
            return Err(LineError::Csv("no waypoints".into()));
        }
        let mut pts: Vec<[f64; 2]> = wps.iter().map(|w| [w.x, w.y]).collect();
        let mut wds: Vec<[f64; 2]> = wps.iter().map(|w| [w.d_left.max(1e-9), w.d_right.max(1e-9)]).collect();
        pts.push(pts[0]);
        wds.push(wds[0]);
        let frame = TrackModel::build(&pts, &wds)?;
        let lap = wps.len() as f64 * (wps[1].s - wps[0].s);
        let knots: Vec<f64> = wps.iter().map(|w| w.s).chain(std::iter::once(lap)).collect();
        let vs: Vec<f64> = wps.iter().map(|w| w.v).collect();
        let scale = frame.total_length() / lap;
        let speed = (0..frame.len())
            .map(|k| lerp_knots(&knots, &vs, frame.s_at(k) / scale))
            .collect();
        Ok(Self { frame, speed })
    }
}

fn lerp_knots(knots: &[f64], values: &[f64], t: f64) -> f64 {
    let n = values.len();
    let i = match knots.binary_search_by(|k| k.partial_cmp(&t).unwrap()) {
        Ok(i) => i.min(n - 1),
        Err(i) => i.saturating_sub(1).min(n - 1),
    };
    let (a, b) = (knots[i], knots[i + 1]);
    let f = ((t - a) / (b - a)).clamp(0.0, 1.0);
    values[i] * (1.0 - f) + values[(i + 1) % n] * f
}

pub fn generate(kind: LineKind, track: &TrackModel, margin: f64, limits: &VehicleLimits) -> Result<RacingLine, LineError> {
    match kind {
        LineKind::Centerline => Ok(centerline_line(track, limits)),
        LineKind::ShortestPath => shortest_path_line(track, margin, limits),
        LineKind::MinCurvature => min_curvature_line(track, margin, limits),
    }
}

pub fn centerline_line(track: &TrackModel, limits: &VehicleLimits) -> RacingLine {
    let frame = track.clone();
    let speed = velocity_profile(&frame, limits);
    RacingLine { frame, speed }
}

pub fn shortest_path_line(track: &TrackModel, margin: f64, limits: &VehicleLimits) -> Result<RacingLine, LineError> {
    let nodes = OffsetNodes::new(track, margin)?;
    let mut alpha = vec![0.0; nodes.len()];
    // Iteratively reweighted squared segment lengths converge to the minimum total length.
    for _ in 0..10 {
        let pts = nodes.points(&alpha);
        let n = nodes.len();
        let mut h = DMatrix::zeros(n, n);
        let mut g = DVector::zeros(n);
        for j in 0..n {
            let k = (j + 1) % n;
            let w = 1.0 / dist(pts[j], pts[k]).max(1e-6);
            // residual = (c_k - c_j) + alpha_k n_k - alpha_j n_j
            let base = [nodes.base[k][0] - nodes.base[j][0], nodes.base[k][1] - nodes.base[j][1]];
            let (nj, nk) = (nodes.normal[j], nodes.normal[k]);
            let njj = dot(nj, nj);
            let nkk = dot(nk, nk);
            let njk = dot(nj, nk);
            h[(j, j)] += 2.0 * w * njj;
            h[(k, k)] += 2.0 * w * nkk;
            h[(j, k)] -= 2.0 * w * njk;
            h[(k, j)] -= 2.0 * w * njk;
            g[j] -= 2.0 * w * dot(base, nj);
            g[k] += 2.0 * w * dot(base, nk);
        }
        let next = nodes.solve_boxed(h, g, &alpha)?;
        let change = max_abs_diff(&next, &alpha);
        alpha = next;
        if change < 1e-8 {
            break;
        }
    }
    nodes.into_line(track, &alpha, limits)
}

pub fn min_curvature_line(track: &TrackModel, margin: f64, limits: &VehicleLimits) -> Result<RacingLine, LineError> {
    let nodes = OffsetNodes::new(track, margin)?;
    let alpha = minimize_curvature(&nodes, vec![0.0; nodes.len()])?;
    nodes.into_line(track, &alpha, limits)
}

/// Damped Gauss-Newton on the sum of squared discrete curvatures, each step a box QP.
fn minimize_curvature(nodes: &OffsetNodes, mut alpha: Vec<f64>) -> Result<Vec<f64>, LineError> {
    let n = nodes.len();
    let mut cost = curvature_cost(nodes, &alpha);
    let mut damping = 1e-3;
    for _ in 0..60 {
        let kappa = nodes.curvatures(&alpha);
        let eps = 1e-6;
        // d kappa_j / d alpha_{j-1, j, j+1}
        let mut jac = vec![[0.0f64; 3]; n];
        for j in 0..n {
            for (c, off) in [n - 1, 0, 1].into_iter().enumerate() {
                let idx = (j + off) % n;
                let mut a = alpha.clone();
                a[idx] += eps;
                let plus = nodes.curvature_one(&a, j);
                a[idx] -= 2.0 * eps;
                let minus = nodes.curvature_one(&a, j);
                jac[j][c] = (plus - minus) / (2.0 * eps);
            }
        }
        let mut h = DMatrix::zeros(n, n);
        let mut g = DVector::zeros(n);
        for j in 0..n {
            let idx = [(j + n - 1) % n, j, (j + 1) % n];
            for a in 0..3 {
                g[idx[a]] += 2.0 * jac[j][a] * kappa[j];
                for b in 0..3 {
                    h[(idx[a], idx[b])] += 2.0 * jac[j][a] * jac[j][b];
                }
            }
        }
        // Model around alpha: g'(a - alpha) + 1/2 (a - alpha)'(H + damping I)(a - alpha).
        let cur = DVector::from_column_slice(&alpha);
        loop {
            let mut hd = h.clone();
            for i in 0..n {
                hd[(i, i)] += damping;
            }
            let lin = &g - &hd * &cur;
            let candidate = nodes.box_qp(hd, lin)?;
            let new_cost = curvature_cost(nodes, &candidate);
            if new_cost <= cost {
                let improvement = cost - new_cost;
                let step = max_abs_diff(&candidate, &alpha);
                alpha = candidate;
                cost = new_cost;
                damping = (damping * 0.3).max(1e-9);
                if step < 1e-7 || improvement < 1e-12 * cost.max(1e-12) {
                    return Ok(alpha);
                }
                break;
            }
            damping *= 10.0;
            if damping > 1e6 {
                return Ok(alpha);
            }
        }
    }
    Ok(alpha)
}

fn curvature_cost(nodes: &OffsetNodes, alpha: &[f64]) -> f64 {
    nodes.curvatures(alpha).iter().map(|k| k * k).sum()
}

/// Offset variables at roughly uniform spacing along the track.
struct OffsetNodes {
    s: Vec<f64>,
    base: Vec<[f64; 2]>,
    normal: Vec<[f64; 2]>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    margin: f64,
    length: f64,
}

impl OffsetNodes {
    fn new(track: &TrackModel, margin: f64) -> Result<Self, LineError> {
        let half_width = track
            .widths()
            .iter()
            .flat_map(|w| [w[0], w[1]])
            .fold(f64::INFINITY, f64::min);
        if !(margin >= 0.0 && margin < half_width) {
            return Err(LineError::InfeasibleMargin { margin, half_width });
        }
        let length = track.total_length();
        let n = ((length / OPT_SPACING).round() as usize).max(8);
        let mut nodes = Self {
            s: Vec::with_capacity(n),
            base: Vec::with_capacity(n),
            normal: Vec::with_capacity(n),
            lo: Vec::with_capacity(n),
            hi: Vec::with_capacity(n),
            margin,
            length,
        };
        for j in 0..n {
            let s = length * j as f64 / n as f64;
            let pose = track.frenet_to_cartesian(s, 0.0);
            let (wl, wr) = track.width_at(s);
            nodes.s.push(s);
            nodes.base.push([pose.x, pose.y]);
            nodes.normal.push([-pose.heading.sin(), pose.heading.cos()]);
            nodes.lo.push(-(wr - margin));
            nodes.hi.push(wl - margin);
        }
        Ok(nodes)
    }

    fn len(&self) -> usize {
        self.s.len()
    }

    fn points(&self, alpha: &[f64]) -> Vec<[f64; 2]> {
        (0..self.len())
            .map(|j| [self.base[j][0] + alpha[j] * self.normal[j][0], self.base[j][1] + alpha[j] * self.normal[j][1]])
            .collect()
    }

    fn point(&self, alpha: &[f64], j: usize) -> [f64; 2] {
        [self.base[j][0] + alpha[j] * self.normal[j][0], self.base[j][1] + alpha[j] * self.normal[j][1]]
    }

    fn curvature_one(&self, alpha: &[f64], j: usize) -> f64 {
        let n = self.len();
        menger(self.point(alpha, (j + n - 1) % n), self.point(alpha, j), self.point(alpha, (j + 1) % n))
    }

    fn curvatures(&self, alpha: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|j| self.curvature_one(alpha, j)).collect()
    }

    /// Minimize `1/2 a'Ha + g'a + prox/2 |a - center|^2` inside the bounds.
    fn solve_boxed(&self, h: DMatrix<f64>, g: DVector<f64>, center: &[f64]) -> Result<Vec<f64>, LineError> {
        let n = self.len();
        let prox = 1e-6 * (h.diagonal().amax().max(1e-12));
        let mut hp = h;
        let mut gp = g;
        for i in 0..n {
            hp[(i, i)] += prox;
            gp[i] -= prox * center[i];
        }
        self.box_qp(hp, gp)
    }

    fn box_qp(&self, h: DMatrix<f64>, g: DVector<f64>) -> Result<Vec<f64>, LineError> {
        let n = self.len();
        let mut a = DMatrix::zeros(2 * n, n);
        let mut b = DVector::zeros(2 * n);
        for i in 0..n {
            a[(2 * i, i)] = 1.0;
            b[2 * i] = self.lo[i];
            a[(2 * i + 1, i)] = -1.0;
            b[2 * i + 1] = -self.hi[i];
        }
        let sol = QpProblem::new(h, g).with_inequalities(a, b).solve()?;
        Ok((0..n).map(|i| sol.x[i].clamp(self.lo[i], self.hi[i])).collect())
    }

    fn into_line(&self, track: &TrackModel, alpha: &[f64], limits: &VehicleLimits) -> Result<RacingLine, LineError> {
        let mut knots = self.s.clone();
        knots.push(self.length);
        let spline = PeriodicSpline::new(&knots, alpha);
        let m = track.len();
        let mut pts = Vec::with_capacity(m + 1);
        let mut wds = Vec::with_capacity(m + 1);
        for k in 0..m {
            let s = track.s_at(k);
            let (wl, wr) = track.width_at(s);
            let off = spline.eval(s).clamp(-(wr - self.margin), wl - self.margin);
            let p = track.frenet_to_cartesian(s, off);
            pts.push([p.x, p.y]);
            wds.push([(wl - off).max(1e-9), (wr + off).max(1e-9)]);
        }
        pts.push(pts[0]);
        wds.push(wds[0]);
        let frame = TrackModel::build(&pts, &wds)?;
        let speed = velocity_profile(&frame, limits);
        Ok(RacingLine { frame, speed })
    }
}

/// Signed curvature of the circle through three points.
fn menger(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
    let denom = dist(a, b) * dist(b, c) * dist(a, c);
    if denom < 1e-15 {
        0.0
    } else {
        2.0 * cross / denom
    }
}

/// Curvature-limited speed with forward/backward acceleration passes, periodic over the lap.
pub fn velocity_profile(frame: &TrackModel, limits: &VehicleLimits) -> Vec<f64> {
    let n = frame.len();
    let kappa: Vec<f64> = (0..n).map(|k| frame.curvature_at_index(k)).collect();
    limit_speeds(&kappa, frame.spacing(), limits, true)
}

/// Speed limits for curvature samples spaced `h` apart; `closed` treats the samples as a loop.
pub fn limit_speeds(kappa: &[f64], h: f64, limits: &VehicleLimits, closed: bool) -> Vec<f64> {
    let mut v: Vec<f64> = kappa
        .iter()
        .map(|k| {
            if k.abs() < 1e-12 {
                limits.v_max
            } else {
                limits.v_max.min((limits.a_lat_max / k.abs()).sqrt())
            }
        })
        .collect();
    apply_accel_passes(&mut v, h, limits.a_lon_max, closed);
    v
}

/// Enforce `v_{k+1}^2 <= v_k^2 + 2 a h` forward and the mirrored bound backward.
pub fn apply_accel_passes(v: &mut [f64], h: f64, a_lon: f64, closed: bool) {
    let n = v.len();
    if n < 2 {
        return;
    }
    let reach = 2.0 * a_lon * h;
    if closed {
        let start = (0..n).min_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap()).unwrap();
        for step in 0..n {
            let k = (start + step) % n;
            let next = (k + 1) % n;
            v[next] = v[next].min((v[k] * v[k] + reach).sqrt());
        }
        for step in 0..n {
            let k = (start + n - step) % n;
            let prev = (k + n - 1) % n;
            v[prev] = v[prev].min((v[k] * v[k] + reach).sqrt());
        }
    } else {
        for k in 0..n - 1 {
            v[k + 1] = v[k + 1].min((v[k] * v[k] + reach).sqrt());
        }
        for k in (1..n).rev() {
            v[k - 1] = v[k - 1].min((v[k] * v[k] + reach).sqrt());
        }
    }
}

/// Re-run the periodic passes on an existing line (idempotent on a valid profile).
pub fn reapply_profile(line: &RacingLine, limits: &VehicleLimits) -> Vec<f64> {
    let n = line.speed.len();
    let mut v: Vec<f64> = (0..n)
        .map(|k| {
            let k_abs = line.frame.curvature_at_index(k).abs();
            let cap = if k_abs < 1e-12 { limits.v_max } else { limits.v_max.min((limits.a_lat_max / k_abs).sqrt()) };
            line.speed[k].min(cap)
        })
        .collect();
    apply_accel_passes(&mut v, line.frame.spacing(), limits.a_lon_max, true);
    v
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

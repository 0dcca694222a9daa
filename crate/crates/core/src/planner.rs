//! Evasion trajectories in the Frenet frame of the ego racing line: the single-spline
//! baseline and the optimizing planner that keeps clear of the predicted opponent.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::RegionOfCollision;
use crate::gp::OpponentTrajectoryGp;
use crate::lines::{RacingLine, VehicleLimits};
use crate::qp::{QpError, QpProblem};
use crate::spline::ClampedSpline;
use crate::track::{wrap, FrenetState};

/// Sampling step of the baseline spline.
pub const SPLINE_STEP: f64 = 0.1;
const PROX: f64 = 1e-6;
const PROX_EPIGRAPH: f64 = 1e-3;
const ELASTIC_PENALTY: f64 = 1e3;
const ELASTIC_CURVATURE: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("region of collision is empty")]
    EmptyRoc,
    #[error("planning window has fewer than four points")]
    ShortWindow,
    #[error("duplicate consecutive points at index {0}")]
    DuplicatePoint(usize),
    #[error("trajectory csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// How the deviation term of the cost treats the offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationMode {
    /// `Q_d * sum |d_i|`
    Absolute,
    /// `Q_d * sum d_i`
    Signed,
}

/// Exponent of the denominator in the parametric curvature formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureExponent {
    /// 3/2
    Standard,
    /// 2/3
    Printed,
}

impl CurvatureExponent {
    pub fn value(self) -> f64 {
        match self {
            CurvatureExponent::Standard => 1.5,
            CurvatureExponent::Printed => 2.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerWeights {
    pub q_d: f64,
    pub q_ds: f64,
    pub q_ddelta: f64,
    /// Minimum lateral clearance between the two car centers.
    pub delta_min: f64,
    pub kappa_max: f64,
    /// Distance the ego center keeps from the track boundary.
    pub wall_margin: f64,
    pub deviation: DeviationMode,
    pub exponent: CurvatureExponent,
    /// Length after the region of collision used to return to the racing line.
    pub rejoin_length: f64,
    pub max_points: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Baseline spline: distance from the opponent to the rejoin point.
    pub post_apex: f64,
    /// Baseline spline: shortest distance from the spline start to the apex.
    pub min_pre_apex: f64,
}

impl Default for PlannerWeights {
    fn default() -> Self {
        Self::for_vehicle(&VehicleLimits::default())
    }
}

impl PlannerWeights {
    pub fn for_vehicle(limits: &VehicleLimits) -> Self {
        Self {
            q_d: 1.0,
            q_ds: 20.0,
            q_ddelta: 10.0,
            delta_min: limits.width + 0.2,
            kappa_max: 1.0 / limits.min_turning_radius(),
            wall_margin: 0.5 * limits.width + 0.1,
            deviation: DeviationMode::Absolute,
            exponent: CurvatureExponent::Standard,
            rejoin_length: 6.0,
            max_points: 40,
            max_iterations: 50,
            tolerance: 1e-6,
            post_apex: 6.0,
            min_pre_apex: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajPoint {
    /// Arc length on the ego line, increasing from the first point (not wrapped).
    pub s: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvasionTrajectory {
    pub points: Vec<TrajPoint>,
    pub side: Side,
    pub cost: f64,
    pub feasible: bool,
    /// Ego arc-length interval `(start, end)` in which the clearance must hold, as forward positions.
    pub window: Option<(f64, f64)>,
    pub lap_length: f64,
}

impl EvasionTrajectory {
    pub fn start(&self) -> f64 {
        self.points[0].s
    }

    pub fn span(&self) -> f64 {
        self.points[self.points.len() - 1].s - self.points[0].s
    }

    /// Offset at lap position `s`; zero outside the trajectory.
    pub fn d_at(&self, s: f64) -> f64 {
        let u = wrap(s - self.start(), self.lap_length);
        self.d_at_forward(u)
    }

    /// Offset at forward distance `u` from the first point.
    pub fn d_at_forward(&self, u: f64) -> f64 {
        let s = self.start() + u;
        let pts = &self.points;
        if u < 0.0 || s > pts[pts.len() - 1].s {
            return 0.0;
        }
        let i = pts.partition_point(|p| p.s <= s).clamp(1, pts.len() - 1);
        let (a, b) = (pts[i - 1], pts[i]);
        let f = if b.s > a.s { (s - a.s) / (b.s - a.s) } else { 0.0 };
        a.d + f * (b.d - a.d)
    }

    /// True when lap position `s` lies on the trajectory.
    pub fn covers(&self, s: f64) -> bool {
        wrap(s - self.start(), self.lap_length) <= self.span()
    }

    pub fn write_csv<W: Write>(&self, line: &RacingLine, out: W) -> Result<(), PlanError> {
        #[derive(Serialize)]
        struct Row {
            s: f64,
            d: f64,
            x: f64,
            y: f64,
        }
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            let s = wrap(p.s, self.lap_length);
            let pose = line.frame().frenet_to_cartesian(s, p.d);
            w.serialize(Row { s, d: p.d, x: pose.x, y: pose.y }).map_err(|e| PlanError::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| PlanError::Csv(e.to_string()))
    }
}

/// Cost of offsets sampled every `h` meters.
pub fn trajectory_cost(d: &[f64], h: f64, w: &PlannerWeights) -> f64 {
    let dev: f64 = match w.deviation {
        DeviationMode::Absolute => d.iter().map(|v| v.abs()).sum(),
        DeviationMode::Signed => d.iter().sum(),
    };
    let smooth: f64 = d.windows(3).map(|x| ((x[0] - 2.0 * x[1] + x[2]) / (h * h)).powi(2)).sum();
    let jump = if d.len() > 1 { (d[1] - d[0]).powi(2) } else { 0.0 };
    w.q_d * dev * h + w.q_ds * smooth * h + w.q_ddelta * jump
}

/// Curvature of the planar curve `(s_i, d_i)` with derivatives taken by central
/// differences in the sample index. End values are copied from their neighbors.
pub fn frenet_curvature(d: &[f64], s: &[f64], exponent: CurvatureExponent) -> Result<Vec<f64>, PlanError> {
    let n = d.len();
    assert_eq!(n, s.len());
    if n < 3 {
        return Err(PlanError::ShortWindow);
    }
    for i in 1..n {
        if s[i] == s[i - 1] && d[i] == d[i - 1] {
            return Err(PlanError::DuplicatePoint(i));
        }
    }
    let p = exponent.value();
    let mut k = vec![0.0; n];
    for i in 1..n - 1 {
        let sd = 0.5 * (s[i + 1] - s[i - 1]);
        let dd = 0.5 * (d[i + 1] - d[i - 1]);
        let sdd = s[i + 1] - 2.0 * s[i] + s[i - 1];
        let ddd = d[i + 1] - 2.0 * d[i] + d[i - 1];
        k[i] = (sd * ddd - dd * sdd) / (sd * sd + dd * dd).powf(p);
    }
    k[0] = k[1];
    k[n - 1] = k[n - 2];
    Ok(k)
}

/// Curvature at interior point `i` of a uniform grid and its gradient
/// with respect to `(d[i-1], d[i], d[i+1])`.
fn grid_curvature(d: &[f64], i: usize, h: f64, p: f64) -> (f64, [f64; 3]) {
    let a = d[i + 1] - 2.0 * d[i] + d[i - 1];
    let b = 0.5 * (d[i + 1] - d[i - 1]);
    let den = h * h + b * b;
    let k = h * a / den.powf(p);
    let dk_da = h / den.powf(p);
    let dk_db = -p * h * a * 2.0 * b / den.powf(p + 1.0);
    (k, [dk_da - 0.5 * dk_db, -2.0 * dk_da, dk_da + 0.5 * dk_db])
}

/// Largest boundary-shrunk offsets `(lo, hi)` at `s`.
fn offset_bounds(line: &RacingLine, s: f64, w: &PlannerWeights) -> (f64, f64) {
    let (wl, wr) = line.bounds_at(wrap(s, line.lap_length()));
    (-(wr - w.wall_margin), wl - w.wall_margin)
}

/// Single lateral-shift spline around the opponent's current position, passing on the side
/// with more free width.
pub fn baseline_spliner(ego: &FrenetState, opp: &FrenetState, line: &RacingLine, w: &PlannerWeights) -> EvasionTrajectory {
    baseline_spliner_on(ego, opp, line, w, None)
}

/// As [`baseline_spliner`], trying `side` first when given.
pub fn baseline_spliner_on(ego: &FrenetState, opp: &FrenetState, line: &RacingLine, w: &PlannerWeights, side: Option<Side>) -> EvasionTrajectory {
    let l = line.lap_length();
    let gap = wrap(opp.s - ego.s, l);
    let (lo, hi) = offset_bounds(line, opp.s, w);
    let (wl, wr) = line.bounds_at(wrap(opp.s, l));
    let free_left = wl - opp.d;
    let free_right = opp.d + wr;
    let wider = if free_left >= free_right { Side::Left } else { Side::Right };
    let preferred = side.unwrap_or(wider);
    let apex_for = |side: Side| opp.d + side.sign() * w.delta_min;
    let fits = |a: f64| a >= lo - 1e-12 && a <= hi + 1e-12;
    let (side, feasible) = if fits(apex_for(preferred)) {
        (preferred, true)
    } else if fits(apex_for(preferred.other())) {
        (preferred.other(), true)
    } else {
        (preferred, false)
    };
    let apex = apex_for(side).clamp(lo, hi);

    let pre = gap.max(w.min_pre_apex);
    let knots = [gap - pre, gap, gap + w.post_apex];
    let spline = ClampedSpline::new(&knots, &[ego.d, apex, 0.0], 0.0, 0.0);
    let end = gap + w.post_apex;
    let n = (end / SPLINE_STEP).ceil().max(1.0) as usize;
    let h = end / n as f64;
    let mut d: Vec<f64> = (0..=n)
        .map(|i| {
            let u = i as f64 * h;
            let (lo_u, hi_u) = offset_bounds(line, ego.s + u, w);
            if i == 0 {
                ego.d
            } else {
                spline.eval(u).clamp(lo_u.min(0.0), hi_u.max(0.0))
            }
        })
        .collect();
    d.push(0.0);
    let points: Vec<TrajPoint> = d.iter().enumerate().map(|(i, &d)| TrajPoint { s: ego.s + i as f64 * h, d }).collect();
    let cost = trajectory_cost(&d, h, w);
    let half = 0.5 * w.delta_min;
    EvasionTrajectory {
        points,
        side,
        cost,
        feasible,
        window: Some((ego.s + gap - half, ego.s + gap + half)),
        lap_length: l,
    }
}

/// Per-constraint maximum violations (zero when satisfied).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Violations {
    pub clearance: f64,
    pub curvature: f64,
    pub bounds: f64,
    pub terminal: f64,
}

impl Violations {
    pub fn max(&self) -> f64 {
        self.clearance.max(self.curvature).max(self.bounds).max(self.terminal)
    }
}

/// Check a trajectory against clearance, curvature, boundary and terminal constraints.
pub fn validate(traj: &EvasionTrajectory, gp: &OpponentTrajectoryGp, line: &RacingLine, w: &PlannerWeights) -> Violations {
    let mut v = Violations::default();
    let n = traj.points.len();
    if n < 3 {
        v.terminal = f64::INFINITY;
        return v;
    }
    let s: Vec<f64> = traj.points.iter().map(|p| p.s).collect();
    let d: Vec<f64> = traj.points.iter().map(|p| p.d).collect();
    v.terminal = d[n - 1].abs().max(d[n - 2].abs());
    for p in traj.points.iter().skip(1) {
        let (lo, hi) = offset_bounds(line, p.s, w);
        v.bounds = v.bounds.max(lo - p.d).max(p.d - hi);
        if let Some((a, b)) = traj.window {
            if p.s >= a && p.s <= b {
                let d_opp = gp.mean_d(wrap(p.s, traj.lap_length));
                let gap = traj.side.sign() * (p.d - d_opp);
                v.clearance = v.clearance.max(w.delta_min - gap);
            }
        }
    }
    match frenet_curvature(&d, &s, w.exponent) {
        Ok(k) => {
            for i in 1..n - 1 {
                let total = k[i] + line.curvature_at(wrap(s[i], traj.lap_length));
                v.curvature = v.curvature.max(total.abs() - w.kappa_max);
            }
        }
        Err(_) => v.curvature = f64::INFINITY,
    }
    v.clearance = v.clearance.max(0.0);
    v.curvature = v.curvature.max(0.0);
    v.bounds = v.bounds.max(0.0);
    v
}

/// Uniform planning grid from the ego position to the end of the region of
/// collision plus the rejoin length: returns `(spacing, number of points)`.
fn planning_grid(span: f64, w: &PlannerWeights) -> (f64, usize) {
    let n = ((span / SPLINE_STEP).floor() as usize + 1).clamp(4, w.max_points.max(4));
    (span / (n - 1) as f64, n)
}

/// Problem data of the optimizer on a fixed grid.
struct Layout {
    n: usize,
    h: f64,
    abs: bool,
}

impl Layout {
    fn vars(&self) -> usize {
        self.n + if self.abs { self.n } else { 0 } + 1
    }
    fn t(&self, i: usize) -> usize {
        self.n + i
    }
    fn e(&self) -> usize {
        self.vars() - 1
    }
}

/// Quadratic cost `1/2 x'Hx + g'x` over `d` (and the epigraph variables).
fn cost_terms(lay: &Layout, w: &PlannerWeights) -> (DMatrix<f64>, DVector<f64>) {
    let nv = lay.vars();
    let n = lay.n;
    let h = lay.h;
    let mut hess = DMatrix::zeros(nv, nv);
    let mut g = DVector::zeros(nv);
    let ws = w.q_ds / (h * h * h);
    for i in 1..n - 1 {
        let idx = [i - 1, i, i + 1];
        let a = [1.0, -2.0, 1.0];
        for r in 0..3 {
            for c in 0..3 {
                hess[(idx[r], idx[c])] += 2.0 * ws * a[r] * a[c];
            }
        }
    }
    hess[(0, 0)] += 2.0 * w.q_ddelta;
    hess[(1, 1)] += 2.0 * w.q_ddelta;
    hess[(0, 1)] -= 2.0 * w.q_ddelta;
    hess[(1, 0)] -= 2.0 * w.q_ddelta;
    for i in 0..n {
        if lay.abs {
            g[lay.t(i)] = w.q_d * h;
        } else {
            g[i] = w.q_d * h;
        }
    }
    g[lay.e()] = ELASTIC_PENALTY;
    hess[(lay.e(), lay.e())] += ELASTIC_CURVATURE;
    (hess, g)
}

struct Sqp<'a> {
    lay: Layout,
    w: &'a PlannerWeights,
    d0: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Required signed clearance row: `side * d_i >= need_i` where present.
    need: Vec<Option<f64>>,
    side: Side,
    kappa_global: Vec<f64>,
    hess: DMatrix<f64>,
    g: DVector<f64>,
}

impl Sqp<'_> {
    fn curvature_violation(&self, d: &[f64]) -> f64 {
        let p = self.w.exponent.value();
        (1..self.lay.n - 1)
            .map(|i| (grid_curvature(d, i, self.lay.h, p).0 + self.kappa_global[i]).abs() - self.w.kappa_max)
            .fold(0.0, f64::max)
    }

    fn merit(&self, d: &[f64]) -> f64 {
        trajectory_cost(d, self.lay.h, self.w) + ELASTIC_PENALTY * self.curvature_violation(d)
    }

    /// One quadratic subproblem linearized at `d`, optionally within a box of radius `radius`.
    fn subproblem(&self, d: &[f64], radius: Option<f64>) -> Result<DVector<f64>, QpError> {
        let lay = &self.lay;
        let n = lay.n;
        let nv = lay.vars();
        let p = self.w.exponent.value();
        let mut hess = self.hess.clone();
        let mut g = self.g.clone();
        for i in 0..n {
            hess[(i, i)] += PROX;
            g[i] -= PROX * d[i];
            if lay.abs {
                let t = lay.t(i);
                hess[(t, t)] += PROX_EPIGRAPH;
                g[t] -= PROX_EPIGRAPH * d[i].abs();
            }
        }

        let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
        if lay.abs {
            for i in 0..n {
                rows.push((vec![(lay.t(i), 1.0), (i, -1.0)], 0.0));
                rows.push((vec![(lay.t(i), 1.0), (i, 1.0)], 0.0));
            }
        }
        for i in 1..n - 2 {
            rows.push((vec![(i, 1.0)], self.lo[i]));
            rows.push((vec![(i, -1.0)], -self.hi[i]));
            if let Some(need) = self.need[i] {
                rows.push((vec![(i, self.side.sign())], need));
            }
        }
        let e = lay.e();
        rows.push((vec![(e, 1.0)], 0.0));
        for i in 1..n - 1 {
            let (k, grad) = grid_curvature(d, i, lay.h, p);
            // k(d) ~ k + grad.(x - d)
            let lin = k - grad[0] * d[i - 1] - grad[1] * d[i] - grad[2] * d[i + 1] + self.kappa_global[i];
            let cols = [i - 1, i, i + 1];
            let up: Vec<(usize, f64)> = cols.iter().zip(grad).map(|(&c, gv)| (c, -gv)).chain([(e, 1.0)]).collect();
            rows.push((up, lin - self.w.kappa_max));
            let down: Vec<(usize, f64)> = cols.iter().zip(grad).map(|(&c, gv)| (c, gv)).chain([(e, 1.0)]).collect();
            rows.push((down, -self.w.kappa_max - lin));
        }
        if let Some(r) = radius {
            for i in 1..n - 2 {
                rows.push((vec![(i, 1.0)], d[i] - r));
                rows.push((vec![(i, -1.0)], -d[i] - r));
            }
        }
        let mut a_in = DMatrix::zeros(rows.len(), nv);
        let mut b_in = DVector::zeros(rows.len());
        for (r, (coef, rhs)) in rows.iter().enumerate() {
            for &(c, v) in coef {
                a_in[(r, c)] += v;
            }
            b_in[r] = *rhs;
        }
        let mut a_eq = DMatrix::zeros(3, nv);
        a_eq[(0, 0)] = 1.0;
        a_eq[(1, n - 2)] = 1.0;
        a_eq[(2, n - 1)] = 1.0;
        let b_eq = DVector::from_vec(vec![self.d0, 0.0, 0.0]);
        let sol = QpProblem::new(hess, g).with_equalities(a_eq, b_eq).with_inequalities(a_in, b_in).solve()?;
        Ok(sol.x)
    }

    fn run(&self, start: Vec<f64>) -> Result<(Vec<f64>, usize), QpError> {
        let n = self.lay.n;
        let mut d = start;
        let mut radius: Option<f64> = None;
        let mut first = true;
        let mut merit = self.merit(&d);
        let mut iterations = 0;
        while iterations < self.w.max_iterations {
            iterations += 1;
            let x = match self.subproblem(&d, radius) {
                Ok(x) => x,
                Err(e) if first => return Err(e),
                Err(_) => break,
            };
            let cand: Vec<f64> = (0..n).map(|i| x[i]).collect();
            let step = cand.iter().zip(&d).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let cand_merit = self.merit(&cand);
            if first || cand_merit <= merit {
                d = cand;
                merit = cand_merit;
                first = false;
                if step <= self.w.tolerance {
                    break;
                }
                radius = radius.map(|r| (2.0 * r).max(step));
            } else {
                let r = 0.5 * step;
                if r <= self.w.tolerance {
                    break;
                }
                radius = Some(r);
            }
        }
        Ok((d, iterations))
    }
}

/// Optimized evasion trajectory over the region of collision, warm-started from `warm_start`.
pub fn plan_sqp(
    ego: &FrenetState,
    roc: &RegionOfCollision,
    gp: &OpponentTrajectoryGp,
    line: &RacingLine,
    w: &PlannerWeights,
    warm_start: &EvasionTrajectory,
) -> Result<EvasionTrajectory, PlanError> {
    if !roc.valid {
        return Err(PlanError::EmptyRoc);
    }
    let l = line.lap_length();
    let c_start = wrap(roc.c_start - ego.s, l);
    let c_end = c_start + roc.length(l);
    let span = c_end + w.rejoin_length;
    let (h, n) = planning_grid(span, w);
    let lay = Layout {
        n,
        h,
        abs: w.deviation == DeviationMode::Absolute,
    };
    let side = warm_start.side;
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    let mut need = Vec::with_capacity(n);
    let mut kappa_global = Vec::with_capacity(n);
    for i in 0..n {
        let u = i as f64 * h;
        let s = wrap(ego.s + u, l);
        let (a, b) = offset_bounds(line, s, w);
        lo.push(a);
        hi.push(b);
        kappa_global.push(line.curvature_at(s));
        need.push(if u >= c_start && u <= c_end {
            Some(side.sign() * gp.mean_d(s) + w.delta_min)
        } else {
            None
        });
    }
    let (hess, g) = cost_terms(&lay, w);
    let sqp = Sqp {
        lay,
        w,
        d0: ego.d,
        lo,
        hi,
        need,
        side,
        kappa_global,
        hess,
        g,
    };
    let mut start: Vec<f64> = (0..n).map(|i| warm_start.d_at_forward(wrap(ego.s - warm_start.start(), l) + i as f64 * h)).collect();
    start[0] = ego.d;
    start[n - 2] = 0.0;
    start[n - 1] = 0.0;
    let to_traj = |d: &[f64], feasible: bool| EvasionTrajectory {
        points: d.iter().enumerate().map(|(i, &d)| TrajPoint { s: ego.s + i as f64 * h, d }).collect(),
        side,
        cost: trajectory_cost(d, h, w),
        feasible,
        window: Some((ego.s + c_start, ego.s + c_end)),
        lap_length: l,
    };
    let warm_on_grid = to_traj(&start, false);
    let warm_ok = validate(&warm_on_grid, gp, line, w).max() <= w.tolerance;
    let fallback = EvasionTrajectory {
        feasible: false,
        ..warm_start.clone()
    };
    let Ok((mut d, _)) = sqp.run(start.clone()) else {
        return Ok(fallback);
    };
    d[0] = ego.d;
    d[n - 2] = 0.0;
    d[n - 1] = 0.0;
    let mut traj = to_traj(&d, false);
    traj.feasible = validate(&traj, gp, line, w).max() <= w.tolerance;
    if warm_ok && (!traj.feasible || traj.cost > warm_on_grid.cost) {
        return Ok(EvasionTrajectory {
            feasible: true,
            ..warm_on_grid
        });
    }
    if !traj.feasible {
        return Ok(fallback);
    }
    Ok(traj)
}

/// Planner that keeps its previous solution as the next warm start while a maneuver is active.
#[derive(Debug, Clone)]
pub struct OvertakePlanner {
    pub weights: PlannerWeights,
    previous: Option<EvasionTrajectory>,
}

impl OvertakePlanner {
    pub fn new(weights: PlannerWeights) -> Self {
        Self { weights, previous: None }
    }

    pub fn reset(&mut self) {
        self.previous = None;
    }

    pub fn previous(&self) -> Option<&EvasionTrajectory> {
        self.previous.as_ref()
    }

    pub fn plan(
        &mut self,
        ego: &FrenetState,
        opp: &FrenetState,
        roc: &RegionOfCollision,
        gp: &OpponentTrajectoryGp,
        line: &RacingLine,
    ) -> Result<EvasionTrajectory, PlanError> {
        let warm = match &self.previous {
            Some(p) if p.feasible && p.covers(ego.s) => p.clone(),
            _ => baseline_spliner(ego, opp, line, &self.weights),
        };
        let traj = plan_sqp(ego, roc, gp, line, &self.weights, &warm)?;
        self.previous = if traj.feasible { Some(traj.clone()) } else { None };
        Ok(traj)
    }
}

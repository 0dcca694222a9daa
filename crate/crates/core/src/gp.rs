//! Gaussian-process model of an opponent's lateral offset and speed along the lap.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_BIN_WIDTH: f64 = 0.1;
pub const MIN_COVERAGE: f64 = 0.6;
pub const DEFAULT_K_SIGMA: f64 = 2.0;

const LENGTH_SCALES: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];
const NOISE_RATIOS: [f64; 8] = [1e-6, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0];
const JITTER: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];
const SIGNAL_FLOOR: f64 = 1e-10;
/// Hyperparameter search runs on at most this many evenly strided training points.
const SEARCH_POINTS: usize = 160;

#[derive(Debug, Error, PartialEq)]
pub enum GpError {
    #[error("no observations")]
    Empty,
    #[error("bin width must be positive, got {0}")]
    BinWidth(f64),
    #[error("lap coverage {coverage:.2} below required {required:.2}")]
    InsufficientCoverage { coverage: f64, required: f64 },
    #[error("kernel matrix not positive definite even with jitter")]
    IllConditioned,
    #[error("training data has {inputs} inputs but {targets} targets")]
    Shape { inputs: usize, targets: usize },
}

/// One noisy sighting of the opponent, in the ego line's Frenet frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpponentObservation {
    pub s: f64,
    pub d: f64,
    pub v_s: f64,
    pub timestamp: f64,
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub count: usize,
    pub mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub d: RunningStats,
    pub v_s: RunningStats,
}

impl Bin {
    pub fn count(&self) -> usize {
        self.d.count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedData {
    pub bin_width: f64,
    pub lap_length: f64,
    pub bins: Vec<Bin>,
}

impl BinnedData {
    pub fn new(bin_width: f64, lap_length: f64) -> Result<Self, GpError> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(GpError::BinWidth(bin_width));
        }
        let n = (lap_length / bin_width).ceil().max(1.0) as usize;
        Ok(Self {
            bin_width,
            lap_length,
            bins: vec![Bin::default(); n],
        })
    }

    pub fn index(&self, s: f64) -> usize {
        let s = s.rem_euclid(self.lap_length);
        ((s / self.bin_width).floor() as usize).min(self.bins.len() - 1)
    }

    pub fn push(&mut self, obs: &OpponentObservation) {
        let k = self.index(obs.s);
        self.bins[k].d.push(obs.d);
        self.bins[k].v_s.push(obs.v_s);
    }

    /// Center of bin `k` in meters along the lap.
    pub fn center(&self, k: usize) -> f64 {
        let lo = k as f64 * self.bin_width;
        let hi = ((k + 1) as f64 * self.bin_width).min(self.lap_length);
        0.5 * (lo + hi)
    }

    pub fn occupied(&self) -> usize {
        self.bins.iter().filter(|b| b.count() > 0).count()
    }

    /// Fraction of non-empty bins.
    pub fn coverage(&self) -> f64 {
        self.occupied() as f64 / self.bins.len() as f64
    }

    /// Within-bin sample variances of `d` and `v_s` pooled over bins holding two or more observations.
    pub fn pooled_variance(&self) -> (f64, f64) {
        let (mut sd, mut sv, mut dof) = (0.0, 0.0, 0usize);
        for b in self.bins.iter().filter(|b| b.count() > 1) {
            sd += b.d.m2;
            sv += b.v_s.m2;
            dof += b.count() - 1;
        }
        if dof == 0 {
            (0.0, 0.0)
        } else {
            (sd / dof as f64, sv / dof as f64)
        }
    }

    /// Bin centers and per-bin means of `d` and `v_s` for the non-empty bins.
    pub fn training_data(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut s = Vec::new();
        let mut d = Vec::new();
        let mut v = Vec::new();
        for (k, b) in self.bins.iter().enumerate() {
            if b.count() > 0 {
                s.push(self.center(k));
                d.push(b.d.mean);
                v.push(b.v_s.mean);
            }
        }
        (s, d, v)
    }
}

pub fn bin_observations(obs: &[OpponentObservation], bin_width: f64, lap_length: f64) -> Result<BinnedData, GpError> {
    if obs.is_empty() {
        return Err(GpError::Empty);
    }
    let mut binned = BinnedData::new(bin_width, lap_length)?;
    for o in obs {
        binned.push(o);
    }
    Ok(binned)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Matern52,
    Rbf,
}

impl Kernel {
    /// Unit-variance correlation at distance `r`.
    pub fn correlation(self, r: f64, length_scale: f64) -> f64 {
        let u = r / length_scale;
        match self {
            Kernel::Matern52 => {
                let a = 5f64.sqrt() * u;
                (1.0 + a + a * a / 3.0) * (-a).exp()
            }
            Kernel::Rbf => (-0.5 * u * u).exp(),
        }
    }
}

/// Chord length between two points of the lap mapped onto a circle of circumference `period`.
pub fn periodic_distance(a: f64, b: f64, period: f64) -> f64 {
    (period / PI) * (PI * (a - b) / period).sin().abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub length_scale: f64,
    pub signal_var: f64,
    pub noise_var: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GpRecord {
    kernel: Kernel,
    hyper: Hyperparams,
    period: f64,
    mean: f64,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

/// Exact GP regression over a periodic one-dimensional input with a constant mean.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GpRecord", into = "GpRecord")]
pub struct PeriodicGp {
    kernel: Kernel,
    hyper: Hyperparams,
    period: f64,
    mean: f64,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

impl TryFrom<GpRecord> for PeriodicGp {
    type Error = GpError;
    fn try_from(r: GpRecord) -> Result<Self, GpError> {
        PeriodicGp::with_mean(r.kernel, r.hyper, r.period, r.mean, r.inputs, r.targets)
    }
}

impl From<PeriodicGp> for GpRecord {
    fn from(g: PeriodicGp) -> Self {
        GpRecord {
            kernel: g.kernel,
            hyper: g.hyper,
            period: g.period,
            mean: g.mean,
            inputs: g.inputs,
            targets: g.targets,
        }
    }
}

fn correlation_matrix(kernel: Kernel, xs: &[f64], length_scale: f64, period: f64) -> DMatrix<f64> {
    let n = xs.len();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        c[(i, i)] = 1.0;
        for j in 0..i {
            let v = kernel.correlation(periodic_distance(xs[i], xs[j], period), length_scale);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}

/// Cholesky of `c + ratio I`, escalating a relative jitter when needed.
fn factor(mut c: DMatrix<f64>, ratio: f64) -> Result<(Cholesky<f64, Dyn>, f64), GpError> {
    for i in 0..c.nrows() {
        c[(i, i)] += ratio;
    }
    if let Some(ch) = Cholesky::new(c.clone()) {
        return Ok((ch, 0.0));
    }
    for &j in &JITTER {
        let mut m = c.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += j;
        }
        if let Some(ch) = Cholesky::new(m) {
            return Ok((ch, j));
        }
    }
    Err(GpError::IllConditioned)
}

impl PeriodicGp {
    /// Fit with fixed hyperparameters and the target average as the prior mean.
    pub fn new(kernel: Kernel, hyper: Hyperparams, period: f64, inputs: Vec<f64>, targets: Vec<f64>) -> Result<Self, GpError> {
        if targets.is_empty() {
            return Err(GpError::Empty);
        }
        let mean = targets.iter().sum::<f64>() / targets.len() as f64;
        Self::with_mean(kernel, hyper, period, mean, inputs, targets)
    }

    pub fn with_mean(kernel: Kernel, hyper: Hyperparams, period: f64, mean: f64, inputs: Vec<f64>, targets: Vec<f64>) -> Result<Self, GpError> {
        if inputs.len() != targets.len() {
            return Err(GpError::Shape {
                inputs: inputs.len(),
                targets: targets.len(),
            });
        }
        if inputs.is_empty() {
            return Err(GpError::Empty);
        }
        let c = correlation_matrix(kernel, &inputs, hyper.length_scale, period);
        let (chol, jitter) = factor(c, hyper.noise_var / hyper.signal_var)?;
        let y = DVector::from_iterator(targets.len(), targets.iter().map(|t| t - mean));
        // chol factors K / signal_var
        let alpha = chol.solve(&y) / hyper.signal_var;
        Ok(Self {
            kernel,
            hyper,
            period,
            mean,
            inputs,
            targets,
            chol,
            alpha,
            jitter,
        })
    }

    /// Fit with hyperparameters chosen on a coarse grid by maximum marginal likelihood.
    /// The signal variance is profiled out in closed form for each grid point.
    pub fn fit(kernel: Kernel, period: f64, inputs: Vec<f64>, targets: Vec<f64>) -> Result<Self, GpError> {
        if targets.is_empty() {
            return Err(GpError::Empty);
        }
        if inputs.len() != targets.len() {
            return Err(GpError::Shape {
                inputs: inputs.len(),
                targets: targets.len(),
            });
        }
        let mean = targets.iter().sum::<f64>() / targets.len() as f64;
        let stride = targets.len().div_ceil(SEARCH_POINTS);
        let xs: Vec<f64> = inputs.iter().step_by(stride).copied().collect();
        let y = DVector::from_iterator(xs.len(), targets.iter().step_by(stride).map(|t| t - mean));
        let n = xs.len() as f64;
        let mut best: Option<(f64, Hyperparams)> = None;
        for &ell in &LENGTH_SCALES {
            let c = correlation_matrix(kernel, &xs, ell, period);
            for &ratio in &NOISE_RATIOS {
                let Ok((ch, _)) = factor(c.clone(), ratio) else {
                    continue;
                };
                let quad = y.dot(&ch.solve(&y));
                let signal = (quad / n).max(SIGNAL_FLOOR);
                let log_det: f64 = ch.l_dirty().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
                let lml = -0.5 * (quad / signal + log_det + n * signal.ln());
                if best.as_ref().is_none_or(|(b, _)| lml > *b) {
                    best = Some((
                        lml,
                        Hyperparams {
                            length_scale: ell,
                            signal_var: signal,
                            noise_var: ratio * signal,
                        },
                    ));
                }
            }
        }
        let (_, hyper) = best.ok_or(GpError::IllConditioned)?;
        Self::with_mean(kernel, hyper, period, mean, inputs, targets)
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn hyperparams(&self) -> Hyperparams {
        self.hyper
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn prior_mean(&self) -> f64 {
        self.mean
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Jitter that had to be added to the correlation matrix diagonal.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    fn cross(&self, s: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.inputs.len(),
            self.inputs
                .iter()
                .map(|&x| self.hyper.signal_var * self.kernel.correlation(periodic_distance(s, x, self.period), self.hyper.length_scale)),
        )
    }

    /// Posterior mean only, without the cost of the variance solve.
    pub fn mean_at(&self, s: f64) -> f64 {
        self.mean + self.cross(s).dot(&self.alpha)
    }

    /// Posterior mean and variance of the latent function at `s`.
    pub fn latent(&self, s: f64) -> (f64, f64) {
        let k = self.cross(s);
        let mean = self.mean + k.dot(&self.alpha);
        let v = self.chol.solve(&k);
        let var = (self.hyper.signal_var - k.dot(&v) / self.hyper.signal_var).max(0.0);
        (mean, var)
    }

    /// Posterior mean and predictive standard deviation (latent plus observation noise).
    pub fn predict(&self, s: f64) -> (f64, f64) {
        let (m, var) = self.latent(s);
        (m, (var + self.hyper.noise_var).sqrt())
    }
}

/// Lateral offset and longitudinal speed models of one opponent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OpponentTrajectoryGp {
    pub gp_d: PeriodicGp,
    pub gp_vs: PeriodicGp,
    pub lap_length: f64,
    pub coverage: f64,
    /// Spread of single observations around their bin mean, for `d` and `v_s`.
    #[serde(default)]
    pub observation_var: (f64, f64),
}

impl OpponentTrajectoryGp {
    pub fn fit(binned: &BinnedData) -> Result<Self, GpError> {
        Self::fit_with_coverage(binned, MIN_COVERAGE)
    }

    pub fn fit_with_coverage(binned: &BinnedData, required: f64) -> Result<Self, GpError> {
        let coverage = binned.coverage();
        if binned.occupied() < 2 || coverage < required {
            return Err(GpError::InsufficientCoverage { coverage, required });
        }
        let (s, d, v) = binned.training_data();
        let gp_d = PeriodicGp::fit(Kernel::Matern52, binned.lap_length, s.clone(), d)?;
        let gp_vs = PeriodicGp::fit(Kernel::Rbf, binned.lap_length, s, v)?;
        Ok(Self {
            gp_d,
            gp_vs,
            lap_length: binned.lap_length,
            coverage,
            observation_var: binned.pooled_variance(),
        })
    }

    pub fn predict_d(&self, s: f64) -> (f64, f64) {
        self.gp_d.predict(s)
    }

    pub fn predict_vs(&self, s: f64) -> (f64, f64) {
        self.gp_vs.predict(s)
    }

    pub fn mean_d(&self, s: f64) -> f64 {
        self.gp_d.mean_at(s)
    }

    pub fn mean_vs(&self, s: f64) -> f64 {
        self.gp_vs.mean_at(s)
    }

    /// One draw of the speed at `s` from the predictive distribution.
    pub fn sample_vs<R: Rng + ?Sized>(&self, s: f64, rng: &mut R) -> f64 {
        let (m, sd) = self.predict_vs(s);
        let z: f64 = rng.sample(StandardNormal);
        m + sd * z
    }

    /// True when the observation lies inside the `k_sigma` band of both models. The band
    /// width uses the larger of the fitted noise and the observed single-sample spread,
    /// since the models are trained on bin means.
    pub fn consistency_check(&self, obs: &OpponentObservation, k_sigma: f64) -> bool {
        let band = |gp: &PeriodicGp, obs_var: f64, y: f64| {
            let (m, var) = gp.latent(obs.s);
            (y - m).abs() <= k_sigma * (var + gp.hyperparams().noise_var.max(obs_var)).sqrt()
        };
        band(&self.gp_d, self.observation_var.0, obs.d) && band(&self.gp_vs, self.observation_var.1, obs.v_s)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

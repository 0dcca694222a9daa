//! Cubic spline helpers shared by the track model and the planners.

/// Closed (periodic) cubic spline through `values` at knots `knots[0..n]`,
/// with the period closing at `knots[n]`.
#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
    period: f64,
}

impl PeriodicSpline {
    /// `knots` has one more entry than `values`; the last knot is where the
    /// curve returns to `values[0]`.
    pub fn new(knots: &[f64], values: &[f64]) -> Self {
        let n = values.len();
        assert!(n >= 3, "periodic spline needs at least three samples");
        assert_eq!(knots.len(), n + 1);
        let h: Vec<f64> = (0..n).map(|i| knots[i + 1] - knots[i]).collect();

        // Cyclic tridiagonal system for the second derivatives:
        // h[i-1] M[i-1] + 2(h[i-1]+h[i]) M[i] + h[i] M[i+1] = rhs[i]
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let hp = h[(i + n - 1) % n];
            let hi = h[i];
            let yp = values[(i + n - 1) % n];
            let yi = values[i];
            let yn = values[(i + 1) % n];
            sub[i] = hp;
            diag[i] = 2.0 * (hp + hi);
            sup[i] = hi;
            rhs[i] = 6.0 * ((yn - yi) / hi - (yi - yp) / hp);
        }
        let second = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs);
        Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            second,
            period: knots[n] - knots[0],
        }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let t0 = self.knots[0];
        let mut u = (t - t0).rem_euclid(self.period) + t0;
        if u >= self.knots[self.values.len()] {
            u = t0;
        }
        // last knot index i with knots[i] <= u
        let idx = match self.knots.binary_search_by(|k| k.partial_cmp(&u).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        (idx.min(self.values.len() - 1), u)
    }

    /// Value, first and second derivative at `t` (wrapped into the period).
    pub fn eval_all(&self, t: f64) -> (f64, f64, f64) {
        let n = self.values.len();
        let (i, u) = self.locate(t);
        let j = (i + 1) % n;
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - u) / h;
        let b = (u - self.knots[i]) / h;
        let (yi, yj) = (self.values[i], self.values[j]);
        let (mi, mj) = (self.second[i], self.second[j]);
        let value = a * yi + b * yj + ((a * a * a - a) * mi + (b * b * b - b) * mj) * h * h / 6.0;
        let first = (yj - yi) / h - (3.0 * a * a - 1.0) / 6.0 * h * mi + (3.0 * b * b - 1.0) / 6.0 * h * mj;
        let second = a * mi + b * mj;
        (value, first, second)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_all(t).0
    }
}

/// Solve a cyclic tridiagonal system with Sherman-Morrison.
/// Row `i` reads `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`, indices mod n.
pub fn solve_cyclic_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let alpha = sup[n - 1]; // couples x[n-1] -> x[0]
    let beta = sub[0]; // couples x[0] -> x[n-1]
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;
    let x = solve_tridiagonal(sub, &d, sup, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(sub, &d, sup, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

/// Thomas algorithm; `sub[0]` and `sup[n-1]` are ignored.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Open cubic spline with prescribed end slopes ("clamped").
#[derive(Debug, Clone)]
pub struct ClampedSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl ClampedSpline {
    pub fn new(knots: &[f64], values: &[f64], start_slope: f64, end_slope: f64) -> Self {
        let n = knots.len();
        assert!(n >= 2 && values.len() == n);
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 2.0 * h[0];
        sup[0] = h[0];
        rhs[0] = 6.0 * ((values[1] - values[0]) / h[0] - start_slope);
        for i in 1..n - 1 {
            sub[i] = h[i - 1];
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            sup[i] = h[i];
            rhs[i] = 6.0 * ((values[i + 1] - values[i]) / h[i] - (values[i] - values[i - 1]) / h[i - 1]);
        }
        sub[n - 1] = h[n - 2];
        diag[n - 1] = 2.0 * h[n - 2];
        rhs[n - 1] = 6.0 * (end_slope - (values[n - 1] - values[n - 2]) / h[n - 2]);
        let second = solve_tridiagonal(&sub, &diag, &sup, &rhs);
        Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            second,
        }
    }

    /// Evaluate; outside the knot range the end values are held.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.knots.len();
        if t <= self.knots[0] {
            return self.values[0];
        }
        if t >= self.knots[n - 1] {
            return self.values[n - 1];
        }
        let i = match self.knots.binary_search_by(|k| k.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        };
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - t) / h;
        let b = (t - self.knots[i]) / h;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h / 6.0
    }
}

/// Linear interpolation over uniformly spaced periodic samples.
pub fn periodic_lerp(samples: &[f64], spacing: f64, t: f64) -> f64 {
    let n = samples.len();
    let period = spacing * n as f64;
    let u = t.rem_euclid(period) / spacing;
    let i = (u.floor() as usize).min(n - 1);
    let frac = u - i as f64;
    samples[i] * (1.0 - frac) + samples[(i + 1) % n] * frac
}

//! Dense strictly convex quadratic programming (Goldfarb-Idnani dual active set).
//!
//! Solves
//!
//! ```text
//! min  1/2 x' H x + g' x
//! s.t. A_eq x  = b_eq
//!      A_in x >= b_in
//! ```
//!
//! `H` must be symmetric positive definite. Constraints are rows of the
//! matrices. The result is exact up to round-off, so callers can rely on
//! active constraints holding to ~1e-12.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QpError {
    #[error("hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("constraints are infeasible")]
    Infeasible,
    #[error("dimension mismatch: {0}")]
    Dimension(&'static str),
    #[error("iteration limit reached")]
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Indices of active constraints; equalities are `0..m_eq`, inequalities follow.
    pub active: Vec<usize>,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub a_in: DMatrix<f64>,
    pub b_in: DVector<f64>,
}

impl QpProblem {
    pub fn new(hessian: DMatrix<f64>, linear: DVector<f64>) -> Self {
        let n = linear.len();
        Self {
            hessian,
            linear,
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            a_in: DMatrix::zeros(0, n),
            b_in: DVector::zeros(0),
        }
    }

    pub fn with_equalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.a_eq = a;
        self.b_eq = b;
        self
    }

    pub fn with_inequalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.a_in = a;
        self.b_in = b;
        self
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) + self.linear.dot(x)
    }

    pub fn solve(&self) -> Result<QpSolution, QpError> {
        solve(self)
    }
}

/// Constraint rows stored sparsely, equalities first.
struct Constraints {
    m_eq: usize,
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    n: usize,
}

impl Constraints {
    fn new(p: &QpProblem) -> Self {
        let n = p.linear.len();
        let mut rows = Vec::with_capacity(p.a_eq.nrows() + p.a_in.nrows());
        let mut rhs = Vec::with_capacity(rows.capacity());
        for (a, b) in [(&p.a_eq, &p.b_eq), (&p.a_in, &p.b_in)] {
            for i in 0..a.nrows() {
                rows.push(Vec::new());
                rhs.push(b[i]);
            }
            let base = rows.len() - a.nrows();
            // column-major traversal
            for c in 0..n {
                for (i, &v) in a.column(c).iter().enumerate() {
                    if v != 0.0 {
                        rows[base + i].push((c, v));
                    }
                }
            }
        }
        Self {
            m_eq: p.a_eq.nrows(),
            rows,
            rhs,
            n,
        }
    }

    fn m_eq(&self) -> usize {
        self.m_eq
    }

    fn len(&self) -> usize {
        self.rows.len()
    }

    fn row(&self, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.n);
        for &(c, a) in &self.rows[i] {
            v[c] = a;
        }
        v
    }

    fn norm(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|(_, a)| a * a).sum::<f64>().sqrt()
    }

    fn rhs(&self, i: usize) -> f64 {
        self.rhs[i]
    }

    fn slack(&self, i: usize, x: &DVector<f64>) -> f64 {
        self.rows[i].iter().map(|&(c, a)| a * x[c]).sum::<f64>() - self.rhs[i]
    }
}

fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    // returns (c, s, r) with [c s; -s c] [a; b] = [r; 0]
    if b == 0.0 {
        (1.0, 0.0, a)
    } else {
        let r = a.hypot(b);
        (a / r, b / r, r)
    }
}

fn solve(p: &QpProblem) -> Result<QpSolution, QpError> {
    let n = p.linear.len();
    if p.hessian.nrows() != n || p.hessian.ncols() != n {
        return Err(QpError::Dimension("hessian"));
    }
    if p.a_eq.ncols() != n || p.a_eq.nrows() != p.b_eq.len() {
        return Err(QpError::Dimension("equalities"));
    }
    if p.a_in.ncols() != n || p.a_in.nrows() != p.b_in.len() {
        return Err(QpError::Dimension("inequalities"));
    }
    let cons = Constraints::new(p);
    let m_eq = cons.m_eq();
    let m = cons.len();

    let chol = p.hessian.clone().cholesky().ok_or(QpError::NotPositiveDefinite)?;
    // J = L^{-T}, so that J' H J = I.
    let l = chol.l();
    let lt = l.transpose();
    let mut j = lt
        .solve_upper_triangular(&DMatrix::identity(n, n))
        .ok_or(QpError::NotPositiveDefinite)?;
    let mut x = -chol.solve(&p.linear);

    let mut r = DMatrix::<f64>::zeros(n, n);
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let mut is_active = vec![false; m];

    let scale: Vec<f64> = (0..m).map(|i| cons.norm(i).max(1e-300)).collect();
    let tol = 1e-11;
    let max_iter = 50 * (m + n) + 100;
    let mut iterations = 0;

    loop {
        // Pick the next constraint: pending equalities first, then the most violated inequality.
        let mut pick: Option<(usize, f64)> = None;
        for i in 0..m_eq {
            if !is_active[i] {
                pick = Some((i, cons.slack(i, &x)));
                break;
            }
        }
        if pick.is_none() {
            let mut worst = 0.0;
            for i in m_eq..m {
                if is_active[i] {
                    continue;
                }
                let s = cons.slack(i, &x);
                let thresh = tol * (1.0 + cons.rhs(i).abs()) * scale[i].max(1.0);
                if s < -thresh && s / scale[i] < worst {
                    worst = s / scale[i];
                    pick = Some((i, s));
                }
            }
        }
        let Some((pidx, _)) = pick else { break };

        let mut normal = cons.row(pidx);
        let mut rhs = cons.rhs(pidx);
        let mut sign = 1.0;
        if pidx < m_eq && cons.slack(pidx, &x) > 0.0 {
            normal = -normal;
            rhs = -rhs;
            sign = -1.0;
        }
        let mut u_plus = 0.0;

        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(QpError::IterationLimit);
            }
            let q = active.len();
            let mut d = DVector::zeros(n);
            for &(k, a) in &cons.rows[pidx] {
                d.axpy(sign * a, &j.row(k).transpose(), 1.0);
            }
            let mut z = DVector::zeros(n);
            for c in q..n {
                z.axpy(d[c], &j.column(c), 1.0);
            }
            let rv = if q > 0 {
                r.view((0, 0), (q, q))
                    .solve_upper_triangular(&d.rows(0, q).into_owned())
                    .ok_or(QpError::Infeasible)?
            } else {
                DVector::zeros(0)
            };

            // Dual step bound from inequality multipliers that would go negative.
            let mut t1 = f64::INFINITY;
            let mut drop_k = None;
            for k in 0..q {
                if active[k] >= m_eq && rv[k] > 1e-14 {
                    let ratio = u[k] / rv[k];
                    if ratio < t1 {
                        t1 = ratio;
                        drop_k = Some(k);
                    }
                }
            }
            let zn = z.dot(&normal);
            let slack = normal.dot(&x) - rhs;
            let primal_step = zn.abs() > 1e-14 * normal.norm_squared().max(1.0);

            if !primal_step {
                if pidx < m_eq && slack.abs() <= 1e-10 * (1.0 + rhs.abs()) {
                    // redundant but consistent equality
                    is_active[pidx] = true;
                    break;
                }
                let Some(k) = drop_k else {
                    return Err(QpError::Infeasible);
                };
                for (kk, uk) in u.iter_mut().enumerate() {
                    *uk -= t1 * rv[kk];
                }
                u_plus += t1;
                drop_constraint(&mut j, &mut r, &mut active, &mut u, &mut is_active, k, n);
                continue;
            }

            let t2 = -slack / zn;
            let t = t1.min(t2);
            x.axpy(t, &z, 1.0);
            for (kk, uk) in u.iter_mut().enumerate() {
                *uk -= t * rv[kk];
            }
            u_plus += t;

            if t2 <= t1 {
                add_constraint(&mut j, &mut r, &d, q, n);
                active.push(pidx);
                u.push(u_plus);
                is_active[pidx] = true;
                break;
            }
            let k = drop_k.expect("finite t1 has a blocking constraint");
            drop_constraint(&mut j, &mut r, &mut active, &mut u, &mut is_active, k, n);
        }
    }

    Ok(QpSolution { objective: p.objective(&x), x, active, iterations })
}

fn add_constraint(j: &mut DMatrix<f64>, r: &mut DMatrix<f64>, d: &DVector<f64>, q: usize, n: usize) {
    let mut d = d.clone();
    for c in (q + 1..n).rev() {
        let (cs, sn, h) = givens(d[c - 1], d[c]);
        d[c - 1] = h;
        d[c] = 0.0;
        for row in 0..n {
            let a = j[(row, c - 1)];
            let b = j[(row, c)];
            j[(row, c - 1)] = cs * a + sn * b;
            j[(row, c)] = -sn * a + cs * b;
        }
    }
    for row in 0..=q {
        r[(row, q)] = d[row];
    }
}

fn drop_constraint(
    j: &mut DMatrix<f64>,
    r: &mut DMatrix<f64>,
    active: &mut Vec<usize>,
    u: &mut Vec<f64>,
    is_active: &mut [bool],
    k: usize,
    n: usize,
) {
    let q = active.len();
    is_active[active[k]] = false;
    active.remove(k);
    u.remove(k);
    // Remove column k of R, shifting the rest left.
    for c in k..q - 1 {
        for row in 0..q {
            r[(row, c)] = r[(row, c + 1)];
        }
    }
    for row in 0..q {
        r[(row, q - 1)] = 0.0;
    }
    // Restore triangular form with Givens on rows c, c+1.
    for c in k..q - 1 {
        let (cs, sn, h) = givens(r[(c, c)], r[(c + 1, c)]);
        r[(c, c)] = h;
        r[(c + 1, c)] = 0.0;
        for col in c + 1..q - 1 {
            let a = r[(c, col)];
            let b = r[(c + 1, col)];
            r[(c, col)] = cs * a + sn * b;
            r[(c + 1, col)] = -sn * a + cs * b;
        }
        for row in 0..n {
            let a = j[(row, c)];
            let b = j[(row, c + 1)];
            j[(row, c)] = cs * a + sn * b;
            j[(row, c + 1)] = -sn * a + cs * b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Enumerate active sets of a tiny problem and keep the KKT point.
    fn brute_force(p: &QpProblem) -> Option<DVector<f64>> {
        let n = p.linear.len();
        let me = p.a_eq.nrows();
        let mi = p.a_in.nrows();
        let mut best: Option<(f64, DVector<f64>)> = None;
        for mask in 0u32..(1 << mi) {
            let act: Vec<usize> = (0..mi).filter(|i| mask & (1 << i) != 0).collect();
            let k = me + act.len();
            if k > n {
                continue;
            }
            let mut kkt = DMatrix::zeros(n + k, n + k);
            let mut rhs = DVector::zeros(n + k);
            kkt.view_mut((0, 0), (n, n)).copy_from(&p.hessian);
            rhs.rows_mut(0, n).copy_from(&(-&p.linear));
            for (row, i) in (0..me).map(|i| (i, i)).chain(act.iter().enumerate().map(|(c, &i)| (me + c, me + i))) {
                let a = if i < me { p.a_eq.row(i).into_owned() } else { p.a_in.row(i - me).into_owned() };
                let b = if i < me { p.b_eq[i] } else { p.b_in[i - me] };
                for c in 0..n {
                    kkt[(n + row, c)] = a[c];
                    kkt[(c, n + row)] = -a[c];
                }
                rhs[n + row] = b;
            }
            let Some(sol) = kkt.clone().lu().solve(&rhs) else { continue };
            if (&kkt * &sol - &rhs).norm() > 1e-9 {
                continue;
            }
            let x = sol.rows(0, n).into_owned();
            let ok_primal = (0..mi).all(|i| p.a_in.row(i).dot(&x.transpose()) >= p.b_in[i] - 1e-9);
            let ok_dual = (0..act.len()).all(|c| sol[n + me + c] >= -1e-9);
            if ok_primal && ok_dual {
                let f = p.objective(&x);
                if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                    best = Some((f, x));
                }
            }
        }
        best.map(|b| b.1)
    }

    fn lcg(state: &mut u64) -> f64 {
        *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    #[test]
    fn unconstrained_minimum() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let g = DVector::from_vec(vec![-2.0, -4.0]);
        let s = QpProblem::new(h, g).solve().unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn box_and_equality() {
        // min (x-3)^2 + (y-3)^2, x + y = 1, x >= 0.8
        let h = DMatrix::identity(2, 2) * 2.0;
        let g = DVector::from_vec(vec![-6.0, -6.0]);
        let s = QpProblem::new(h, g)
            .with_equalities(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::from_vec(vec![1.0]))
            .with_inequalities(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), DVector::from_vec(vec![0.8]))
            .solve()
            .unwrap();
        assert!((s.x[0] - 0.8).abs() < 1e-12 && (s.x[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn infeasible_is_reported() {
        let h = DMatrix::identity(1, 1);
        let g = DVector::zeros(1);
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let b = DVector::from_vec(vec![1.0, 0.0]); // x >= 1 and x <= 0
        assert_eq!(QpProblem::new(h, g).with_inequalities(a, b).solve().unwrap_err(), QpError::Infeasible);
    }

    #[test]
    fn matches_active_set_enumeration() {
        let mut seed = 7u64;
        for _ in 0..200 {
            let n = 3;
            let m = DMatrix::from_fn(n, n, |_, _| lcg(&mut seed));
            let h = &m * m.transpose() + DMatrix::identity(n, n) * 0.5;
            let g = DVector::from_fn(n, |_, _| 2.0 * lcg(&mut seed));
            let a_in = DMatrix::from_fn(5, n, |_, _| lcg(&mut seed));
            let b_in = DVector::from_fn(5, |_, _| lcg(&mut seed) - 0.5);
            let a_eq = DMatrix::from_fn(1, n, |_, _| lcg(&mut seed));
            let b_eq = DVector::from_fn(1, |_, _| lcg(&mut seed));
            let p = QpProblem::new(h, g).with_equalities(a_eq, b_eq).with_inequalities(a_in, b_in);
            match (p.solve(), brute_force(&p)) {
                (Ok(sol), Some(x)) => assert!((sol.x - x).norm() < 1e-8),
                (Err(QpError::Infeasible), None) => {}
                (a, b) => panic!("solver {a:?} vs enumeration {b:?}"),
            }
        }
    }
}

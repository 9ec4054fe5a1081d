//! Small convex quadratic programs over boxes and linear rows.
//!
//! Minimizes `x'Qx` for PSD `Q` with accelerated projected gradient descent.
//! The feasible set is the intersection of the variable box with the linear
//! rows; projections onto that intersection use Dykstra's alternating scheme,
//! where each component set (box, hyperplane, halfspace) projects in closed
//! form. Deterministic throughout.

use crate::error::{Error, Result};
use crate::linalg::{dot, symmetric_eigen, Matrix};
use crate::lp::{Rel, Row, SolveResult, Status};

/// A convex quadratic program: minimize `x'Qx` subject to rows and bounds.
#[derive(Debug, Clone)]
pub struct QuadraticProgram {
    pub q: Matrix,
    pub rows: Vec<Row>,
    pub bounds: Vec<(f64, f64)>,
}

impl QuadraticProgram {
    pub fn new(q: Matrix) -> Self {
        let n = q.rows();
        QuadraticProgram { q, rows: Vec::new(), bounds: vec![(0.0, f64::INFINITY); n] }
    }

    pub fn num_vars(&self) -> usize {
        self.q.rows()
    }

    pub fn add_le(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(Row { coeffs, rel: Rel::Le, rhs });
    }

    pub fn add_eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(Row { coeffs, rel: Rel::Eq, rhs });
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        dot(x, &self.q.matvec(x))
    }

    fn violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, v)| v * x[j]).sum();
            match row.rel {
                Rel::Le => worst = worst.max(lhs - row.rhs),
                Rel::Eq => worst = worst.max((lhs - row.rhs).abs()),
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            worst = worst.max(lo - x[j]).max(x[j] - hi);
        }
        worst
    }
}

/// Tolerances and limits for the QP solver.
#[derive(Debug, Clone)]
pub struct QpOptions {
    /// Projected-gradient (KKT surrogate) residual target.
    pub tol: f64,
    pub max_iter: usize,
    /// Dykstra cycle displacement target.
    pub projection_tol: f64,
    pub projection_max_cycles: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions { tol: 1e-8, max_iter: 400_000, projection_tol: 1e-13, projection_max_cycles: 20_000 }
    }
}

/// Solve a convex QP. `Q` must be symmetric within `1e-10`; eigenvalues down
/// to `-1e-8` are clamped to zero, anything lower is rejected.
pub fn solve_qp(qp: &QuadraticProgram, opts: &QpOptions) -> Result<SolveResult> {
    let n = qp.num_vars();
    if qp.bounds.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: qp.bounds.len() });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (qp.q[(i, j)] - qp.q[(j, i)]).abs() > 1e-10 {
                return Err(Error::InvalidInput(format!(
                    "Q not symmetric at ({i},{j}): {} vs {}",
                    qp.q[(i, j)],
                    qp.q[(j, i)]
                )));
            }
        }
    }
    for (j, &(lo, hi)) in qp.bounds.iter().enumerate() {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidInput(format!("bad bounds for variable {j}: [{lo}, {hi}]")));
        }
    }
    upfront_bound_check(qp)?;

    // Clamp tolerated numerical negativity; reject anything beyond it.
    let eig = symmetric_eigen(&qp.q)?;
    if let Some(min) = eig.values.last() {
        if *min < -1e-8 {
            return Err(Error::InvalidInput(format!("Q is not PSD: min eigenvalue {min}")));
        }
    }
    let q = clamp_psd(&qp.q, &eig.values, &eig.vectors);
    let lipschitz = 2.0 * eig.values.first().copied().unwrap_or(0.0).max(0.0);

    // Feasible starting point: project the box midpoint.
    let mut x: Vec<f64> = qp
        .bounds
        .iter()
        .map(|&(lo, hi)| {
            if lo.is_finite() && hi.is_finite() {
                0.5 * (lo + hi)
            } else if lo.is_finite() {
                lo
            } else if hi.is_finite() {
                hi
            } else {
                0.0
            }
        })
        .collect();
    let proj = Projector::new(qp, opts);
    if !proj.project(&mut x) || qp.violation(&x) > 1e-7 {
        return Ok(finish(qp, x, 0, Status::Infeasible));
    }

    if lipschitz == 0.0 {
        return Ok(finish(qp, x, 0, Status::Optimal));
    }
    let step = 1.0 / lipschitz;

    // FISTA with adaptive restart.
    let mut momentum = x.clone();
    let mut t = 1.0f64;
    let mut f_prev = dot(&x, &q.matvec(&x));
    let mut iterations = 0;
    let mut status = Status::IterationLimit;
    while iterations < opts.max_iter {
        iterations += 1;
        let grad = q.matvec(&momentum);
        let mut x_new: Vec<f64> = momentum.iter().zip(&grad).map(|(v, g)| v - 2.0 * step * g).collect();
        if !proj.project(&mut x_new) {
            return Ok(finish(qp, x, iterations, Status::Infeasible));
        }
        let f_new = dot(&x_new, &q.matvec(&x_new));
        if f_new > f_prev {
            // Momentum overshot; restart from the last good point.
            momentum = x.clone();
            t = 1.0;
            if iterations % 16 == 0 && converged(&q, &proj, &x, opts.tol) {
                status = Status::Optimal;
                break;
            }
            continue;
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_new;
        momentum = x_new
            .iter()
            .zip(&x)
            .map(|(new, old)| new + beta * (new - old))
            .collect();
        x = x_new;
        t = t_new;
        f_prev = f_new;
        if iterations % 16 == 0 && converged(&q, &proj, &x, opts.tol) {
            status = Status::Optimal;
            break;
        }
    }
    if status != Status::Optimal && converged(&q, &proj, &x, opts.tol) {
        status = Status::Optimal;
    }
    Ok(finish(qp, x, iterations, status))
}

/// Projected-gradient displacement with unit step, the KKT surrogate.
fn converged(q: &Matrix, proj: &Projector, x: &[f64], tol: f64) -> bool {
    let grad = q.matvec(x);
    let mut probe: Vec<f64> = x.iter().zip(&grad).map(|(v, g)| v - 2.0 * g).collect();
    if !proj.project(&mut probe) {
        return false;
    }
    x.iter().zip(&probe).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) <= tol
}

fn finish(qp: &QuadraticProgram, x: Vec<f64>, iterations: usize, status: Status) -> SolveResult {
    let objective = qp.objective_at(&x);
    let max_violation = qp.violation(&x);
    SolveResult { status, x, objective, iterations, max_violation }
}

fn clamp_psd(q: &Matrix, values: &[f64], vectors: &Matrix) -> Matrix {
    if values.iter().all(|&v| v >= 0.0) {
        return q.clone();
    }
    let n = q.rows();
    let mut vl = vectors.clone();
    for j in 0..n {
        let v = values[j].max(0.0);
        for i in 0..n {
            vl[(i, j)] *= v;
        }
    }
    vl.matmul(&vectors.transpose())
}

/// Detect bound conflicts that make a row unreachable, e.g. a unit budget
/// over too few capped variables.
fn upfront_bound_check(qp: &QuadraticProgram) -> Result<()> {
    for row in &qp.rows {
        let mut lo_sum = 0.0f64;
        let mut hi_sum = 0.0f64;
        for &(j, v) in &row.coeffs {
            let (lo, hi) = qp.bounds[j];
            let (a, b) = if v >= 0.0 { (v * lo, v * hi) } else { (v * hi, v * lo) };
            lo_sum += a;
            hi_sum += b;
        }
        let reach_ok = match row.rel {
            Rel::Le => lo_sum <= row.rhs + 1e-12,
            Rel::Eq => lo_sum <= row.rhs + 1e-12 && hi_sum >= row.rhs - 1e-12,
        };
        if !reach_ok {
            return Err(Error::InfeasibleBounds(format!(
                "row range [{lo_sum}, {hi_sum}] cannot reach rhs {}",
                row.rhs
            )));
        }
    }
    Ok(())
}

/// Dykstra projection onto box ∩ rows.
struct Projector<'a> {
    qp: &'a QuadraticProgram,
    opts: &'a QpOptions,
    row_norms: Vec<f64>,
}

impl<'a> Projector<'a> {
    fn new(qp: &'a QuadraticProgram, opts: &'a QpOptions) -> Self {
        let row_norms = qp
            .rows
            .iter()
            .map(|r| r.coeffs.iter().map(|&(_, v)| v * v).sum::<f64>())
            .collect();
        Projector { qp, opts, row_norms }
    }

    /// Project `x` in place; false when the cycle fails to settle (empty or
    /// ill-posed intersection).
    fn project(&self, x: &mut Vec<f64>) -> bool {
        let n = x.len();
        let sets = 1 + self.qp.rows.len();
        if sets == 1 {
            clip_box(x, &self.qp.bounds);
            return true;
        }
        let mut increments = vec![vec![0.0; n]; sets];
        for _cycle in 0..self.opts.projection_max_cycles {
            let mut displacement = 0.0f64;
            for (s, inc) in increments.iter_mut().enumerate() {
                let mut y: Vec<f64> = x.iter().zip(inc.iter()).map(|(a, b)| a + b).collect();
                if s == 0 {
                    clip_box(&mut y, &self.qp.bounds);
                } else {
                    let row = &self.qp.rows[s - 1];
                    let norm = self.row_norms[s - 1];
                    if norm > 0.0 {
                        let lhs: f64 = row.coeffs.iter().map(|&(j, v)| v * y[j]).sum();
                        let excess = lhs - row.rhs;
                        let push = match row.rel {
                            Rel::Eq => excess,
                            Rel::Le => excess.max(0.0),
                        };
                        if push != 0.0 {
                            let f = push / norm;
                            for &(j, v) in &row.coeffs {
                                y[j] -= f * v;
                            }
                        }
                    }
                }
                for j in 0..n {
                    let next_inc = x[j] + inc[j] - y[j];
                    inc[j] = next_inc;
                    displacement = displacement.max((y[j] - x[j]).abs());
                    x[j] = y[j];
                }
            }
            if displacement <= self.opts.projection_tol {
                return true;
            }
        }
        // Accept the point anyway when it is essentially feasible.
        self.qp.violation(x) <= 1e-9
    }
}

fn clip_box(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

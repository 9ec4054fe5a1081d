//! Dense linear programming with box-bounded variables.
//!
//! The solver is a two-phase primal simplex over bounded variables with an
//! explicit dense basis inverse. Pricing is Dantzig's rule with a switch to
//! Bland's rule after a run of degenerate pivots; scenario-tail LPs carry many
//! identical rows and cycle otherwise. Everything is deterministic: ties in
//! pricing and in the ratio test resolve to the lowest variable index.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Relation of a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Le,
    Eq,
}

/// One constraint row with sparse coefficients.
#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub rel: Rel,
    pub rhs: f64,
}

/// A linear program: maximize `c'x` subject to rows and per-variable bounds.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    /// Per-variable `[lo, hi]`; `hi` may be `f64::INFINITY`.
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_le(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(Row { coeffs, rel: Rel::Le, rhs });
    }

    pub fn add_eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(Row { coeffs, rel: Rel::Eq, rhs });
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: self.bounds.len() });
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::InvalidInput(format!("bad bounds for variable {j}: [{lo}, {hi}]")));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite objective coefficient".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite rhs in row {i}")));
            }
            for &(j, v) in &row.coeffs {
                if j >= n || !v.is_finite() {
                    return Err(Error::InvalidInput(format!("bad coefficient ({j}, {v}) in row {i}")));
                }
            }
        }
        Ok(())
    }

    /// Max absolute constraint/bound violation of a candidate point.
    pub fn violation(&self, x: &[f64]) -> f64 {
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

    /// Dump in fixed MPS format for cross-checking against external solvers.
    pub fn write_mps(&self, name: &str, out: &mut impl std::io::Write) -> Result<()> {
        writeln!(out, "NAME          {name}")?;
        writeln!(out, "ROWS")?;
        // MPS convention minimizes; emit the negated objective.
        writeln!(out, " N  COST")?;
        for (i, row) in self.rows.iter().enumerate() {
            let kind = match row.rel {
                Rel::Le => 'L',
                Rel::Eq => 'E',
            };
            writeln!(out, " {kind}  R{i}")?;
        }
        writeln!(out, "COLUMNS")?;
        for j in 0..self.num_vars() {
            if self.objective[j] != 0.0 {
                writeln!(out, "    X{j:<9} COST      {:<12}", fmt_mps(-self.objective[j]))?;
            }
            for (i, row) in self.rows.iter().enumerate() {
                for &(col, v) in &row.coeffs {
                    if col == j && v != 0.0 {
                        writeln!(out, "    X{j:<9} R{i:<8} {:<12}", fmt_mps(v))?;
                    }
                }
            }
        }
        writeln!(out, "RHS")?;
        for (i, row) in self.rows.iter().enumerate() {
            if row.rhs != 0.0 {
                writeln!(out, "    RHS       R{i:<8} {:<12}", fmt_mps(row.rhs))?;
            }
        }
        writeln!(out, "BOUNDS")?;
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo == hi {
                writeln!(out, " FX BND       X{j:<8} {:<12}", fmt_mps(lo))?;
                continue;
            }
            if lo != 0.0 {
                writeln!(out, " LO BND       X{j:<8} {:<12}", fmt_mps(lo))?;
            }
            if hi.is_finite() {
                writeln!(out, " UP BND       X{j:<8} {:<12}", fmt_mps(hi))?;
            }
        }
        writeln!(out, "ENDATA")?;
        Ok(())
    }
}

fn fmt_mps(v: f64) -> String {
    format!("{v:.10}")
}

/// Outcome classification of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Solution together with solver diagnostics.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: Status,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub max_violation: f64,
}

impl SolveResult {
    /// Convert a non-optimal status into the matching error.
    pub fn into_optimal(self) -> Result<SolveResult> {
        match self.status {
            Status::Optimal => Ok(self),
            Status::Infeasible => Err(Error::Infeasible(None)),
            Status::Unbounded => Err(Error::Unbounded),
            Status::IterationLimit => Err(Error::IterationLimit(self.iterations)),
        }
    }
}

/// Solver tolerances and limits, centralized.
#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Reduced-cost and feasibility tolerance.
    pub tol: f64,
    /// Pivot magnitude below which a column entry is treated as zero.
    pub pivot_tol: f64,
    /// Maximum simplex pivots across both phases.
    pub max_iter: usize,
    /// Consecutive degenerate pivots before Bland's rule engages.
    pub degeneracy_threshold: usize,
    /// Optional starting point; variables begin at the nearest bound.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            tol: 1e-9,
            pivot_tol: 1e-9,
            max_iter: 200_000,
            degeneracy_threshold: 50,
            warm_start: None,
        }
    }
}

/// Solve a linear program with the bounded-variable simplex method.
pub fn solve_lp(lp: &LinearProgram, opts: &SimplexOptions) -> Result<SolveResult> {
    lp.validate()?;
    let mut s = Simplex::new(lp, opts);
    let status = s.run();
    let x = s.structural_solution();
    let objective: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    let max_violation = lp.violation(&x);
    Ok(SolveResult { status, x, objective, iterations: s.iterations, max_violation })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Free variable resting at zero.
    Free,
}

struct Simplex<'a> {
    lp: &'a LinearProgram,
    opts: &'a SimplexOptions,
    n_struct: usize,
    n_total: usize,
    m: usize,
    /// Sparse columns of the equality-form constraint matrix.
    cols: Vec<Vec<(usize, f64)>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    rhs: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    binv: Matrix,
    cost: Vec<f64>,
    artificial_start: usize,
    iterations: usize,
    degenerate_run: usize,
    bland: bool,
}

enum RunOutcome {
    Optimal,
    Unbounded,
    OutOfIterations,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LinearProgram, opts: &'a SimplexOptions) -> Self {
        let n_struct = lp.num_vars();
        let m = lp.rows.len();
        let n_slack = lp.rows.iter().filter(|r| r.rel == Rel::Le).count();
        let n_total = n_struct + n_slack + m; // structural + slacks + one artificial per row

        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_total];
        let mut lo = vec![0.0; n_total];
        let mut hi = vec![f64::INFINITY; n_total];
        let mut rhs = vec![0.0; m];

        for (j, &(l, h)) in lp.bounds.iter().enumerate() {
            lo[j] = l;
            hi[j] = h;
        }
        for (i, row) in lp.rows.iter().enumerate() {
            rhs[i] = row.rhs;
            for &(j, v) in &row.coeffs {
                if v != 0.0 {
                    cols[j].push((i, v));
                }
            }
        }
        let mut slack_of_row = vec![usize::MAX; m];
        let mut next = n_struct;
        for (i, row) in lp.rows.iter().enumerate() {
            if row.rel == Rel::Le {
                cols[next].push((i, 1.0));
                slack_of_row[i] = next;
                next += 1;
            }
        }
        let artificial_start = next;

        // Every nonbasic variable starts exactly at a bound (or zero if free);
        // a warm start only chooses which bound.
        let mut x = vec![0.0; n_total];
        let mut state = vec![VarState::AtLower; n_total];
        for j in 0..artificial_start {
            if !lo[j].is_finite() && !hi[j].is_finite() {
                x[j] = 0.0;
                state[j] = VarState::Free;
                continue;
            }
            let prefer_upper = match &opts.warm_start {
                Some(ws) if j < n_struct && ws[j].is_finite() => {
                    hi[j].is_finite() && (ws[j] - hi[j]).abs() < (ws[j] - lo[j]).abs()
                }
                _ => !lo[j].is_finite(),
            };
            if prefer_upper && hi[j].is_finite() {
                x[j] = hi[j];
                state[j] = VarState::AtUpper;
            } else if lo[j].is_finite() {
                x[j] = lo[j];
                state[j] = VarState::AtLower;
            } else {
                x[j] = hi[j];
                state[j] = VarState::AtUpper;
            }
        }

        let mut residual = rhs.clone();
        for j in 0..artificial_start {
            if x[j] != 0.0 {
                for &(i, v) in &cols[j] {
                    residual[i] -= v * x[j];
                }
            }
        }

        // Basis: the row's slack when it can absorb the residual (keeping the
        // basis matrix diagonal), otherwise an artificial of matching sign.
        let mut basis = vec![0usize; m];
        let mut binv = Matrix::identity(m);
        for i in 0..m {
            let s = slack_of_row[i];
            let art = artificial_start + i;
            if s != usize::MAX && residual[i] >= 0.0 {
                // Slack was initialized nonbasic at lower (0); promote it.
                x[s] = residual[i];
                state[s] = VarState::Basic(i);
                basis[i] = s;
                // Unused artificial: pin at zero.
                cols[art].push((i, 1.0));
                lo[art] = 0.0;
                hi[art] = 0.0;
                x[art] = 0.0;
                state[art] = VarState::AtLower;
            } else {
                let sign = if residual[i] >= 0.0 { 1.0 } else { -1.0 };
                cols[art].push((i, sign));
                x[art] = residual[i].abs();
                state[art] = VarState::Basic(i);
                basis[i] = art;
                binv[(i, i)] = sign;
            }
        }

        Simplex {
            lp,
            opts,
            n_struct,
            n_total,
            m,
            cols,
            lo,
            hi,
            rhs,
            x,
            state,
            basis,
            binv,
            cost: vec![0.0; n_total],
            artificial_start,
            iterations: 0,
            degenerate_run: 0,
            bland: false,
        }
    }

    fn run(&mut self) -> Status {
        // Phase 1: drive the artificial variables to zero.
        for j in 0..self.n_total {
            self.cost[j] = if j >= self.artificial_start { -1.0 } else { 0.0 };
        }
        match self.iterate(true) {
            RunOutcome::Optimal => {}
            RunOutcome::Unbounded => return Status::Unbounded, // phase-1 objective is bounded; defensive only
            RunOutcome::OutOfIterations => return Status::IterationLimit,
        }
        let scale = self.rhs.iter().fold(1.0_f64, |a, b| a.max(b.abs()));
        let infeas: f64 = (self.artificial_start..self.n_total).map(|j| self.x[j].abs()).sum();
        if infeas > self.opts.tol * scale * 10.0 {
            return Status::Infeasible;
        }

        // Pin artificials at zero for phase 2; basic ones leave on first touch.
        for j in self.artificial_start..self.n_total {
            self.hi[j] = 0.0;
            if !matches!(self.state[j], VarState::Basic(_)) {
                self.x[j] = 0.0;
            }
        }

        for j in 0..self.n_total {
            self.cost[j] = if j < self.n_struct { self.lp.objective[j] } else { 0.0 };
        }
        self.bland = false;
        self.degenerate_run = 0;
        match self.iterate(false) {
            RunOutcome::Optimal => Status::Optimal,
            RunOutcome::Unbounded => Status::Unbounded,
            RunOutcome::OutOfIterations => Status::IterationLimit,
        }
    }

    fn iterate(&mut self, phase1: bool) -> RunOutcome {
        loop {
            if self.iterations >= self.opts.max_iter {
                return RunOutcome::OutOfIterations;
            }
            if self.iterations % 256 == 255 {
                self.refresh_basic_values();
            }
            match self.pivot_once(phase1) {
                Some(outcome) => return outcome,
                None => {}
            }
        }
    }

    /// One pricing + ratio-test + update step. `Some` on termination.
    fn pivot_once(&mut self, phase1: bool) -> Option<RunOutcome> {
        let tol = self.opts.tol;
        // BTRAN: y = c_B' B^-1
        let mut y = vec![0.0; self.m];
        for (r, &bj) in self.basis.iter().enumerate() {
            let cb = self.cost[bj];
            if cb != 0.0 {
                let row = self.binv.row(r);
                for i in 0..self.m {
                    y[i] += cb * row[i];
                }
            }
        }

        // Pricing: Dantzig (largest |reduced cost|) or Bland (lowest index).
        let mut entering: Option<(usize, f64, f64)> = None;
        for j in 0..self.n_total {
            if matches!(self.state[j], VarState::Basic(_)) || self.hi[j] - self.lo[j] <= 0.0 {
                continue;
            }
            if !phase1 && j >= self.artificial_start {
                continue;
            }
            let mut d = self.cost[j];
            for &(i, v) in &self.cols[j] {
                d -= y[i] * v;
            }
            let eligible = match self.state[j] {
                VarState::AtLower => d > tol,
                VarState::AtUpper => d < -tol,
                VarState::Free => d.abs() > tol,
                VarState::Basic(_) => false,
            };
            if !eligible {
                continue;
            }
            if self.bland {
                entering = Some((j, d, 0.0));
                break;
            }
            let score = d.abs();
            if entering.map_or(true, |(_, _, best)| score > best) {
                entering = Some((j, d, score));
            }
        }

        let (enter, d) = match entering {
            None => return Some(RunOutcome::Optimal),
            Some((j, d, _)) => (j, d),
        };
        let dir = if d > 0.0 { 1.0 } else { -1.0 };

        // FTRAN: w = B^-1 a_enter
        let mut w = vec![0.0; self.m];
        for &(i, v) in &self.cols[enter] {
            if v != 0.0 {
                for r in 0..self.m {
                    w[r] += self.binv[(r, i)] * v;
                }
            }
        }

        // Ratio test: blocking basic variables and the entering variable's
        // own opposite bound.
        let own_range = self.hi[enter] - self.lo[enter]; // infinite for free/unbounded vars
        let mut theta = own_range;
        let mut leaving: Option<(usize, f64)> = None; // (row, basic step sign)
        for r in 0..self.m {
            let delta = -dir * w[r];
            if delta.abs() <= self.opts.pivot_tol {
                continue;
            }
            let bj = self.basis[r];
            let limit = if delta > 0.0 {
                if !self.hi[bj].is_finite() {
                    continue;
                }
                (self.hi[bj] - self.x[bj]).max(0.0) / delta
            } else {
                if !self.lo[bj].is_finite() {
                    continue;
                }
                (self.x[bj] - self.lo[bj]).max(0.0) / (-delta)
            };
            let take = match leaving {
                None => limit < theta,
                Some((lr, _)) => {
                    limit < theta - 1e-12
                        || ((limit - theta).abs() <= 1e-12
                            && if self.bland {
                                self.basis[r] < self.basis[lr]
                            } else {
                                w[r].abs() > w[lr].abs()
                            })
                }
            };
            if take {
                theta = limit.max(0.0);
                leaving = Some((r, delta));
            }
        }

        if theta.is_infinite() {
            return Some(RunOutcome::Unbounded);
        }

        // A long run of zero-length pivots engages Bland's rule; any real
        // step disengages it.
        if theta <= 1e-12 {
            self.degenerate_run += 1;
            if self.degenerate_run > self.opts.degeneracy_threshold {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }

        let step = dir * theta;
        self.x[enter] += step;
        for r in 0..self.m {
            if w[r] != 0.0 {
                let bj = self.basis[r];
                self.x[bj] -= step * w[r];
            }
        }

        match leaving {
            None => {
                // Bound flip: the entering variable reached its other bound.
                if dir > 0.0 {
                    self.state[enter] = VarState::AtUpper;
                    self.x[enter] = self.hi[enter];
                } else {
                    self.state[enter] = VarState::AtLower;
                    self.x[enter] = self.lo[enter];
                }
            }
            Some((r, delta)) => {
                let out = self.basis[r];
                if delta > 0.0 {
                    self.x[out] = self.hi[out];
                    self.state[out] = VarState::AtUpper;
                } else {
                    self.x[out] = self.lo[out];
                    self.state[out] = VarState::AtLower;
                }
                self.basis[r] = enter;
                self.state[enter] = VarState::Basic(r);
                let pivot = w[r];
                let inv = 1.0 / pivot;
                for c in 0..self.m {
                    self.binv[(r, c)] *= inv;
                }
                for i in 0..self.m {
                    if i != r && w[i] != 0.0 {
                        let f = w[i];
                        for c in 0..self.m {
                            let sub = f * self.binv[(r, c)];
                            self.binv[(i, c)] -= sub;
                        }
                    }
                }
            }
        }

        self.iterations += 1;
        None
    }

    /// Recompute basic values from the nonbasic point to cancel drift.
    fn refresh_basic_values(&mut self) {
        let mut b_eff = self.rhs.clone();
        for j in 0..self.n_total {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            if self.x[j] != 0.0 {
                for &(i, v) in &self.cols[j] {
                    b_eff[i] -= v * self.x[j];
                }
            }
        }
        for (r, &bj) in self.basis.iter().enumerate() {
            let row = self.binv.row(r);
            let mut v = 0.0;
            for i in 0..self.m {
                v += row[i] * b_eff[i];
            }
            self.x[bj] = v;
        }
    }

    fn structural_solution(&self) -> Vec<f64> {
        self.x[..self.n_struct].to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(lp: &LinearProgram) -> SolveResult {
        solve_lp(lp, &SimplexOptions::default()).unwrap()
    }

    #[test]
    fn box_only_maximum() {
        // max x, 0 <= x <= 0.3
        let mut lp = LinearProgram::new(1);
        lp.objective[0] = 1.0;
        lp.bounds[0] = (0.0, 0.3);
        let r = solve(&lp);
        assert_eq!(r.status, Status::Optimal);
        assert!((r.x[0] - 0.3).abs() < 1e-12);
        assert!((r.objective - 0.3).abs() < 1e-12);
    }

    #[test]
    fn simple_capacity() {
        // max x1 + x2, x1 + x2 <= 1, x >= 0
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add_le(vec![(0, 1.0), (1, 1.0)], 1.0);
        let r = solve(&lp);
        assert_eq!(r.status, Status::Optimal);
        assert!((r.objective - 1.0).abs() < 1e-9);
        assert!(r.max_violation <= 1e-9);
    }

    #[test]
    fn equality_budget_with_caps() {
        // max c'x, sum x = 1, 0 <= x <= 0.3: fill best coefficients at cap.
        let mut lp = LinearProgram::new(4);
        lp.objective = vec![4.0, 3.0, 2.0, 1.0];
        for b in lp.bounds.iter_mut() {
            *b = (0.0, 0.3);
        }
        lp.add_eq(vec![(0, 1.0), (1, 1.0), (2, 1.0), (3, 1.0)], 1.0);
        let r = solve(&lp);
        assert_eq!(r.status, Status::Optimal);
        let expect = 0.3 * 4.0 + 0.3 * 3.0 + 0.3 * 2.0 + 0.1 * 1.0;
        assert!((r.objective - expect).abs() < 1e-9);
        assert!((r.x[0] - 0.3).abs() < 1e-9);
        assert!((r.x[3] - 0.1).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        // x <= 0.6 total but budget needs 1.
        let mut lp = LinearProgram::new(2);
        lp.bounds = vec![(0.0, 0.3), (0.0, 0.3)];
        lp.add_eq(vec![(0, 1.0), (1, 1.0)], 1.0);
        let r = solve(&lp);
        assert_eq!(r.status, Status::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 0.0];
        lp.add_le(vec![(1, 1.0)], 5.0);
        let r = solve(&lp);
        assert_eq!(r.status, Status::Unbounded);
    }

    #[test]
    fn negative_rhs_rows() {
        // max -x1 - x2 with x1 + x2 >= 1 written as -x1 - x2 <= -1.
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-1.0, -1.0];
        lp.add_le(vec![(0, -1.0), (1, -1.0)], -1.0);
        let r = solve(&lp);
        assert_eq!(r.status, Status::Optimal);
        assert!((r.objective + 1.0).abs() < 1e-9);
    }

    #[test]
    fn free_variable_equality() {
        // max -y with y free, y = x - 0.7, 0 <= x <= 1.
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![0.0, -1.0];
        lp.bounds = vec![(0.0, 1.0), (f64::NEG_INFINITY, f64::INFINITY)];
        lp.add_eq(vec![(0, 1.0), (1, -1.0)], 0.7);
        let r = solve(&lp);
        assert_eq!(r.status, Status::Optimal);
        assert!((r.x[1] + 0.7).abs() < 1e-9, "y should drop to -0.7, got {}", r.x[1]);
    }

    #[test]
    fn warm_start_reproduces_objective() {
        let mut lp = LinearProgram::new(3);
        lp.objective = vec![1.0, 2.0, -1.0];
        for b in lp.bounds.iter_mut() {
            *b = (0.0, 0.5);
        }
        lp.add_le(vec![(0, 1.0), (1, 1.0), (2, 1.0)], 0.8);
        let cold = solve(&lp);
        assert_eq!(cold.status, Status::Optimal);
        let opts = SimplexOptions { warm_start: Some(cold.x.clone()), ..Default::default() };
        let warm = solve_lp(&lp, &opts).unwrap();
        assert_eq!(warm.status, Status::Optimal);
        assert!((warm.objective - cold.objective).abs() <= 1e-10);
    }

    #[test]
    fn iteration_limit_reported() {
        let mut lp = LinearProgram::new(3);
        lp.objective = vec![1.0, 1.0, 1.0];
        for b in lp.bounds.iter_mut() {
            *b = (0.0, 1.0);
        }
        lp.add_le(vec![(0, 1.0), (1, 1.0), (2, 1.0)], 2.0);
        let opts = SimplexOptions { max_iter: 0, ..Default::default() };
        let r = solve_lp(&lp, &opts).unwrap();
        assert_eq!(r.status, Status::IterationLimit);
        assert!(r.into_optimal().is_err());
    }

    #[test]
    fn mps_dump_contains_sections() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, -2.0];
        lp.bounds = vec![(0.0, 0.3), (0.5, 0.5)];
        lp.add_le(vec![(0, 1.0), (1, 2.0)], 1.0);
        lp.add_eq(vec![(0, 1.0)], 0.2);
        let mut buf = Vec::new();
        lp.write_mps("test", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for section in ["NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"] {
            assert!(text.contains(section), "missing {section} in:\n{text}");
        }
        assert!(text.contains(" L  R0"));
        assert!(text.contains(" E  R1"));
        assert!(text.contains(" FX BND"));
    }

    /// Brute-force oracle: intersect every n-subset of constraint/bound
    /// hyperplanes, keep feasible vertices, return the best objective.
    fn vertex_enumeration_best(lp: &LinearProgram) -> Option<f64> {
        let n = lp.num_vars();
        let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
        for row in &lp.rows {
            let mut a = vec![0.0; n];
            for &(j, v) in &row.coeffs {
                a[j] = v;
            }
            planes.push((a, row.rhs));
        }
        for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            if lo.is_finite() {
                planes.push((a.clone(), lo));
            }
            if hi.is_finite() {
                planes.push((a, hi));
            }
        }
        fn combos(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
            if k == 0 {
                return vec![vec![]];
            }
            if pool.len() < k {
                return vec![];
            }
            let mut out = Vec::new();
            for (i, &p) in pool.iter().enumerate() {
                for mut rest in combos(&pool[i + 1..], k - 1) {
                    let mut v = vec![p];
                    v.append(&mut rest);
                    out.push(v);
                }
            }
            out
        }
        let idx: Vec<usize> = (0..planes.len()).collect();
        let mut best: Option<f64> = None;
        for combo in combos(&idx, n) {
            let mut a: Vec<Vec<f64>> = combo.iter().map(|&i| planes[i].0.clone()).collect();
            let mut b: Vec<f64> = combo.iter().map(|&i| planes[i].1).collect();
            let mut ok = true;
            for col in 0..n {
                let piv = (col..n)
                    .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                    .unwrap();
                if a[piv][col].abs() < 1e-10 {
                    ok = false;
                    break;
                }
                a.swap(col, piv);
                b.swap(col, piv);
                for r in 0..n {
                    if r != col {
                        let f = a[r][col] / a[col][col];
                        for c in 0..n {
                            a[r][c] -= f * a[col][c];
                        }
                        b[r] -= f * b[col];
                    }
                }
            }
            if !ok {
                continue;
            }
            let x: Vec<f64> = (0..n).map(|i| b[i] / a[i][i]).collect();
            if lp.violation(&x) <= 1e-7 {
                let obj: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(best.map_or(obj, |cur: f64| cur.max(obj)));
            }
        }
        best
    }

    #[test]
    fn random_lps_match_vertex_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for case in 0..40 {
            let n = rng.gen_range(2..=4usize);
            let m = rng.gen_range(1..=4usize);
            let mut lp = LinearProgram::new(n);
            for j in 0..n {
                lp.objective[j] = rng.gen_range(-2.0..2.0);
                lp.bounds[j] = (0.0, rng.gen_range(0.4..1.5));
            }
            for _ in 0..m {
                let coeffs: Vec<(usize, f64)> =
                    (0..n).map(|j| (j, rng.gen_range(-1.0..2.0))).collect();
                lp.add_le(coeffs, rng.gen_range(0.2..2.0));
            }
            let r = solve(&lp);
            let oracle = vertex_enumeration_best(&lp);
            match r.status {
                Status::Optimal => {
                    let best = oracle.expect("oracle found no vertex but solver says optimal");
                    assert!(
                        (r.objective - best).abs() < 1e-7,
                        "case {case}: solver {} vs oracle {best}",
                        r.objective
                    );
                    assert!(r.max_violation <= 1e-7);
                }
                Status::Infeasible => assert!(oracle.is_none(), "case {case}: oracle found a vertex"),
                other => panic!("unexpected status {other:?} in case {case}"),
            }
        }
    }
}

//! Bounded-variable primal revised simplex.
//!
//! Every row `i` gets a logical variable `r_i` with `a_i·x − r_i = 0`; the
//! row's sense and right-hand side become bounds on `r_i`. Phase 1 starts from
//! a basis of logicals and artificials and minimizes the artificial sum.
//! Pricing is Dantzig's rule on the scaled problem; after a run of degenerate
//! pivots Bland's rule takes over until progress resumes.

use crate::lu::{BasisFactor, SparseColumn};
use crate::problem::{LpProblem, Sense};
use crate::LpError;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Primal feasibility and optimality tolerance in the scaled problem.
    pub tol: f64,
    /// Defaults to `100·(rows + cols) + 1000`.
    pub max_iters: Option<usize>,
    /// Pivots between refactorizations.
    pub refactor_interval: usize,
    /// Consecutive degenerate pivots before Bland's rule engages.
    pub degenerate_streak: usize,
    pub scale: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: None,
            refactor_interval: 50,
            degenerate_streak: 50,
            scale: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::IterationLimit => "iteration-limit",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: Status,
    /// Column values.
    pub x: Vec<f64>,
    /// Row duals; nonnegative on active `>=` rows, nonpositive on `<=` rows.
    pub duals: Vec<f64>,
    /// `c_j − yᵀA_j` per column.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub phase1_iterations: usize,
    pub bland_pivots: usize,
    pub refactorizations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
    Free,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Simplex {
    m: usize,
    n: usize,
    /// Scaled structural columns.
    cols: Vec<Vec<(usize, f64)>>,
    art_row: Vec<usize>,
    art_sign: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    phase_cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    factor: Option<BasisFactor>,
    tol: f64,
    refactor_interval: usize,
    degenerate_streak: usize,
    iterations: usize,
    max_iters: usize,
    bland_pivots: usize,
    refactorizations: usize,
}

const PIVOT_TOL: f64 = 1e-9;

fn pow2_round(v: f64) -> f64 {
    if !v.is_finite() || v <= 0.0 {
        return 1.0;
    }
    2f64.powi(v.log2().round() as i32)
}

/// Geometric-mean row and column scale factors, rounded to powers of two.
fn scale_factors(m: usize, cols: &[Vec<(usize, f64)>]) -> (Vec<f64>, Vec<f64>) {
    let n = cols.len();
    let mut rs = vec![1.0; m];
    let mut cs = vec![1.0; n];
    for _ in 0..6 {
        let mut rmin = vec![f64::INFINITY; m];
        let mut rmax = vec![0.0f64; m];
        for (j, col) in cols.iter().enumerate() {
            for &(i, v) in col {
                let a = (v * cs[j]).abs();
                rmin[i] = rmin[i].min(a);
                rmax[i] = rmax[i].max(a);
            }
        }
        for i in 0..m {
            if rmax[i] > 0.0 {
                rs[i] = 1.0 / (rmin[i] * rmax[i]).sqrt();
            }
        }
        for (j, col) in cols.iter().enumerate() {
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for &(i, v) in col {
                let a = (v * rs[i]).abs();
                lo = lo.min(a);
                hi = hi.max(a);
            }
            if hi > 0.0 {
                cs[j] = 1.0 / (lo * hi).sqrt();
            }
        }
    }
    (
        rs.into_iter().map(pow2_round).collect(),
        cs.into_iter().map(pow2_round).collect(),
    )
}

/// Solves `problem` to optimality, infeasibility, unboundedness or the
/// iteration limit. Deterministic for identical inputs.
pub fn solve(problem: &LpProblem, opts: &SolveOptions) -> Result<LpResult, LpError> {
    problem.validate()?;
    let m = problem.num_rows();
    let n = problem.num_cols();
    let raw_cols = problem.column_entries();
    let (row_scale, col_scale) = if opts.scale {
        scale_factors(m, &raw_cols)
    } else {
        (vec![1.0; m], vec![1.0; n])
    };
    let cols: Vec<Vec<(usize, f64)>> = raw_cols
        .iter()
        .enumerate()
        .map(|(j, col)| {
            col.iter()
                .map(|&(i, v)| (i, v * row_scale[i] * col_scale[j]))
                .collect()
        })
        .collect();

    let mut lower = Vec::with_capacity(n + 2 * m);
    let mut upper = Vec::with_capacity(n + 2 * m);
    let mut cost = Vec::with_capacity(n + 2 * m);
    for (j, c) in problem.columns().iter().enumerate() {
        lower.push(c.lower / col_scale[j]);
        upper.push(c.upper / col_scale[j]);
        cost.push(c.cost * col_scale[j]);
    }
    for (i, r) in problem.rows().iter().enumerate() {
        let b = r.rhs * row_scale[i];
        let (lo, up) = match r.sense {
            Sense::Le => (f64::NEG_INFINITY, b),
            Sense::Ge => (b, f64::INFINITY),
            Sense::Eq => (b, b),
        };
        lower.push(lo);
        upper.push(up);
        cost.push(0.0);
    }

    let max_iters = opts.max_iters.unwrap_or(100 * (m + n) + 1000);
    let mut s = Simplex {
        m,
        n,
        cols,
        art_row: Vec::new(),
        art_sign: Vec::new(),
        lower,
        upper,
        cost,
        phase_cost: Vec::new(),
        x: Vec::new(),
        state: Vec::new(),
        basis: Vec::new(),
        factor: None,
        tol: opts.tol,
        refactor_interval: opts.refactor_interval.max(1),
        degenerate_streak: opts.degenerate_streak,
        iterations: 0,
        max_iters,
        bland_pivots: 0,
        refactorizations: 0,
    };
    s.initial_basis();
    s.refactor()?;

    // phase 1
    s.phase_cost = (0..s.num_vars())
        .map(|j| if s.is_artificial(j) { 1.0 } else { 0.0 })
        .collect();
    let outcome = if s.art_row.is_empty() {
        PhaseOutcome::Optimal
    } else {
        s.run_phase()?
    };
    let phase1_iterations = s.iterations;
    if let PhaseOutcome::IterationLimit = outcome {
        return Ok(s.finish(Status::IterationLimit, &row_scale, &col_scale, problem, phase1_iterations));
    }
    let infeasibility: f64 = (s.n + s.m..s.num_vars()).map(|j| s.x[j]).sum();
    let rhs_scale = s.lower[s.n..s.n + s.m]
        .iter()
        .chain(&s.upper[s.n..s.n + s.m])
        .filter(|v| v.is_finite())
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    if infeasibility > 1e-8 * rhs_scale {
        return Ok(s.finish(Status::Infeasible, &row_scale, &col_scale, problem, phase1_iterations));
    }
    for j in s.n + s.m..s.num_vars() {
        s.upper[j] = 0.0;
        if s.state[j] != VarState::Basic {
            s.state[j] = VarState::AtLower;
            s.x[j] = 0.0;
        }
    }

    // phase 2
    s.phase_cost = s.cost.clone();
    let status = match s.run_phase()? {
        PhaseOutcome::Optimal => Status::Optimal,
        PhaseOutcome::Unbounded => Status::Unbounded,
        PhaseOutcome::IterationLimit => Status::IterationLimit,
    };
    if status == Status::Optimal {
        s.canonicalize()?;
    }
    Ok(s.finish(status, &row_scale, &col_scale, problem, phase1_iterations))
}

impl Simplex {
    fn num_vars(&self) -> usize {
        self.n + self.m + self.art_row.len()
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n + self.m
    }

    fn column(&self, j: usize) -> SparseColumn {
        let mut c = SparseColumn::default();
        self.for_each_entry(j, |i, v| {
            c.idx.push(i);
            c.val.push(v);
        });
        c
    }

    fn for_each_entry(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for &(i, v) in &self.cols[j] {
                f(i, v);
            }
        } else if j < self.n + self.m {
            f(j - self.n, -1.0);
        } else {
            let k = j - self.n - self.m;
            f(self.art_row[k], self.art_sign[k]);
        }
    }

    fn dot(&self, y: &[f64], j: usize) -> f64 {
        let mut acc = 0.0;
        self.for_each_entry(j, |i, v| acc += y[i] * v);
        acc
    }

    fn initial_basis(&mut self) {
        let (m, n) = (self.m, self.n);
        self.x = vec![0.0; n + m];
        self.state = vec![VarState::AtLower; n + m];
        for j in 0..n {
            let (lo, up) = (self.lower[j], self.upper[j]);
            if lo.is_finite() {
                self.x[j] = lo;
                self.state[j] = VarState::AtLower;
            } else if up.is_finite() {
                self.x[j] = up;
                self.state[j] = VarState::AtUpper;
            } else {
                self.x[j] = 0.0;
                self.state[j] = VarState::Free;
            }
        }
        let mut act = vec![0.0; m];
        for j in 0..n {
            let xj = self.x[j];
            if xj != 0.0 {
                for &(i, v) in &self.cols[j] {
                    act[i] += v * xj;
                }
            }
        }
        self.basis = vec![0; m];
        for (i, &ai) in act.iter().enumerate() {
            let r = n + i;
            let (lo, up) = (self.lower[r], self.upper[r]);
            if ai >= lo && ai <= up {
                self.x[r] = ai;
                self.state[r] = VarState::Basic;
                self.basis[i] = r;
                continue;
            }
            let (bound, st) = if ai < lo {
                (lo, VarState::AtLower)
            } else {
                (up, VarState::AtUpper)
            };
            self.x[r] = bound;
            self.state[r] = st;
            // act - r + sign*z = 0
            let diff = bound - ai;
            let sign = if diff >= 0.0 { 1.0 } else { -1.0 };
            self.art_row.push(i);
            self.art_sign.push(sign);
            self.lower.push(0.0);
            self.upper.push(f64::INFINITY);
            self.cost.push(0.0);
            self.x.push(diff.abs());
            self.state.push(VarState::Basic);
            self.basis[i] = self.num_vars() - 1;
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        for _attempt in 0..3 {
            let cols: Vec<SparseColumn> = self.basis.iter().map(|&j| self.column(j)).collect();
            self.refactorizations += 1;
            match BasisFactor::new(self.m, &cols) {
                Ok(f) => {
                    self.factor = Some(f);
                    self.recompute_basics();
                    return Ok(());
                }
                Err(sing) => {
                    for (&pos, &row) in sing.positions.iter().zip(&sing.rows) {
                        let out = self.basis[pos];
                        self.make_nonbasic_at_nearest_bound(out);
                        let logical = self.n + row;
                        self.basis[pos] = logical;
                        self.state[logical] = VarState::Basic;
                    }
                }
            }
        }
        Err(LpError::Numerical(
            "basis remained singular after repair".into(),
        ))
    }

    fn make_nonbasic_at_nearest_bound(&mut self, j: usize) {
        let (lo, up, v) = (self.lower[j], self.upper[j], self.x[j]);
        if lo.is_finite() && (!up.is_finite() || (v - lo).abs() <= (up - v).abs()) {
            self.x[j] = lo;
            self.state[j] = VarState::AtLower;
        } else if up.is_finite() {
            self.x[j] = up;
            self.state[j] = VarState::AtUpper;
        } else {
            self.x[j] = 0.0;
            self.state[j] = VarState::Free;
        }
    }

    fn recompute_basics(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.num_vars() {
            if self.state[j] == VarState::Basic {
                continue;
            }
            let xj = self.x[j];
            if xj != 0.0 {
                self.for_each_entry(j, |i, v| rhs[i] -= v * xj);
            }
        }
        let factor = self.factor.as_mut().expect("factorized");
        factor.ftran(&mut rhs);
        for (p, &j) in self.basis.iter().enumerate() {
            self.x[j] = rhs[p];
        }
    }

    fn duals(&mut self) -> Vec<f64> {
        let mut y: Vec<f64> = self.basis.iter().map(|&j| self.phase_cost[j]).collect();
        self.factor.as_mut().expect("factorized").btran(&mut y);
        y
    }

    /// Chooses the entering variable and its direction (+1 increase, −1 decrease).
    fn price(&self, y: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.num_vars() {
            let st = self.state[j];
            if st == VarState::Basic || self.lower[j] == self.upper[j] {
                continue;
            }
            let d = self.phase_cost[j] - self.dot(y, j);
            let dir = match st {
                VarState::AtLower if d < -self.tol => 1.0,
                VarState::AtUpper if d > self.tol => -1.0,
                VarState::Free if d.abs() > self.tol => -d.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn run_phase(&mut self) -> Result<PhaseOutcome, LpError> {
        let mut streak = 0usize;
        let mut alpha = vec![0.0; self.m];
        loop {
            if self.factor.as_ref().map_or(0, |f| f.num_updates()) >= self.refactor_interval {
                self.refactor()?;
            }
            let bland = streak >= self.degenerate_streak;
            let y = self.duals();
            let Some((q, dir)) = self.price(&y, bland) else {
                let fresh = self.factor.as_ref().map_or(0, |f| f.num_updates()) == 0;
                if fresh {
                    return Ok(PhaseOutcome::Optimal);
                }
                self.refactor()?;
                continue;
            };
            if self.iterations >= self.max_iters {
                return Ok(PhaseOutcome::IterationLimit);
            }

            alpha.iter_mut().for_each(|a| *a = 0.0);
            self.for_each_entry(q, |i, v| alpha[i] = v);
            self.factor.as_mut().expect("factorized").ftran(&mut alpha);

            // Harris pass 1: largest step keeping every basic within its
            // tolerance-relaxed bounds.
            let tol = self.tol;
            let mut relaxed = f64::INFINITY;
            for (p, &a) in alpha.iter().enumerate() {
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                let j = self.basis[p];
                let rate = -dir * a;
                let t = if rate < 0.0 {
                    (self.x[j] - self.lower[j] + tol) / -rate
                } else {
                    (self.upper[j] - self.x[j] + tol) / rate
                };
                relaxed = relaxed.min(t);
            }
            let span = self.upper[q] - self.lower[q];
            if relaxed == f64::INFINITY && !span.is_finite() {
                return Ok(PhaseOutcome::Unbounded);
            }

            // pass 2: among ratios within the relaxed step, the largest pivot
            // (or the lowest variable index under Bland's rule)
            let mut leave: Option<(usize, f64)> = None;
            let mut leave_key = 0.0;
            let mut min_ratio = f64::INFINITY;
            if bland {
                for (p, &a) in alpha.iter().enumerate() {
                    if a.abs() < PIVOT_TOL {
                        continue;
                    }
                    min_ratio = min_ratio.min(self.exact_ratio(p, -dir * a));
                }
            }
            for (p, &a) in alpha.iter().enumerate() {
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                let t = self.exact_ratio(p, -dir * a);
                if bland {
                    if t <= min_ratio + 1e-12 * (1.0 + min_ratio) {
                        let key = -(self.basis[p] as f64);
                        if leave.is_none() || key > leave_key {
                            leave = Some((p, t));
                            leave_key = key;
                        }
                    }
                } else if t <= relaxed && (leave.is_none() || a.abs() > leave_key) {
                    leave = Some((p, t));
                    leave_key = a.abs();
                }
            }

            self.iterations += 1;
            if bland {
                self.bland_pivots += 1;
            }
            let step = match leave {
                Some((_, t)) if span.is_finite() && span <= t => None,
                Some((p, t)) => Some((p, t)),
                None => None,
            };
            match step {
                None => {
                    // bound flip of the entering variable
                    for (p, &a) in alpha.iter().enumerate() {
                        if a != 0.0 {
                            let j = self.basis[p];
                            self.x[j] -= dir * span * a;
                        }
                    }
                    if dir > 0.0 {
                        self.x[q] = self.upper[q];
                        self.state[q] = VarState::AtUpper;
                    } else {
                        self.x[q] = self.lower[q];
                        self.state[q] = VarState::AtLower;
                    }
                    streak = 0;
                }
                Some((p_out, theta)) => {
                    if theta > 1e-12 {
                        streak = 0;
                        for (p, &a) in alpha.iter().enumerate() {
                            if a != 0.0 {
                                let j = self.basis[p];
                                self.x[j] -= dir * theta * a;
                            }
                        }
                        self.x[q] += dir * theta;
                    } else {
                        streak += 1;
                    }
                    let out = self.basis[p_out];
                    let rate = -dir * alpha[p_out];
                    if rate < 0.0 {
                        self.x[out] = self.lower[out];
                        self.state[out] = VarState::AtLower;
                    } else {
                        self.x[out] = self.upper[out];
                        self.state[out] = if self.lower[out] == self.upper[out] {
                            VarState::AtLower
                        } else {
                            VarState::AtUpper
                        };
                    }
                    self.basis[p_out] = q;
                    self.state[q] = VarState::Basic;
                    self.factor.as_mut().expect("factorized").update(p_out, &alpha);
                }
            }
        }
    }

    fn exact_ratio(&self, p: usize, rate: f64) -> f64 {
        let j = self.basis[p];
        let t = if rate < 0.0 {
            (self.x[j] - self.lower[j]) / -rate
        } else {
            (self.upper[j] - self.x[j]) / rate
        };
        if t.is_nan() {
            f64::INFINITY
        } else {
            t.max(0.0)
        }
    }

    /// Orders the basis by variable index and refactorizes, so the reported
    /// point depends only on the final basis, not on the pivot history.
    fn canonicalize(&mut self) -> Result<(), LpError> {
        self.basis.sort_unstable();
        self.refactor()
    }

    fn finish(
        mut self,
        status: Status,
        row_scale: &[f64],
        col_scale: &[f64],
        problem: &LpProblem,
        phase1_iterations: usize,
    ) -> LpResult {
        let (n, m) = (self.n, self.m);
        let x: Vec<f64> = (0..n).map(|j| self.x[j] * col_scale[j]).collect();
        let (duals, reduced_costs) = if status == Status::Optimal {
            self.phase_cost = self.cost.clone();
            let y = self.duals();
            let d: Vec<f64> = (0..n)
                .map(|j| (self.cost[j] - self.dot(&y, j)) / col_scale[j])
                .collect();
            let duals: Vec<f64> = (0..m).map(|i| y[i] * row_scale[i]).collect();
            (duals, d)
        } else {
            (vec![0.0; m], vec![0.0; n])
        };
        LpResult {
            status,
            objective: problem.objective_value(&x),
            x,
            duals,
            reduced_costs,
            iterations: self.iterations,
            phase1_iterations,
            bland_pivots: self.bland_pivots,
            refactorizations: self.refactorizations,
        }
    }
}

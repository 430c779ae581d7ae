use crate::problem::{LpProblem, Sense};
use crate::simplex::LpResult;

/// Scaled KKT residuals of a claimed optimal solution.
///
/// Primal violations are divided by `1 + |rhs|` (rows) or `1 + |bound|`
/// (columns), dual residuals by `1 + |cost|`. Complementarity products are
/// divided by both factor magnitudes.
#[derive(Debug, Clone, Default)]
pub struct ResidualReport {
    pub primal_row: f64,
    pub primal_bound: f64,
    pub dual: f64,
    pub complementarity: f64,
    /// `|cᵀx − (bᵀy + bound terms)| / (1 + |cᵀx|)`.
    pub duality_gap: f64,
    pub tolerance: f64,
    /// Names of rows and columns whose residual exceeds the tolerance.
    pub flagged: Vec<String>,
}

impl ResidualReport {
    pub fn max_residual(&self) -> f64 {
        self.primal_row
            .max(self.primal_bound)
            .max(self.dual)
            .max(self.complementarity)
            .max(self.duality_gap)
    }

    pub fn passed(&self) -> bool {
        self.flagged.is_empty() && self.max_residual() <= self.tolerance
    }
}

pub const DEFAULT_CHECK_TOL: f64 = 1e-7;

/// Recomputes residuals from the problem data, the primal point and the row
/// duals in `result`. Reduced costs are derived from the duals, not taken
/// from the solver.
pub fn check_solution(problem: &LpProblem, result: &LpResult, tol: Option<f64>) -> ResidualReport {
    let tol = tol.unwrap_or(DEFAULT_CHECK_TOL);
    let x = &result.x;
    let y = &result.duals;
    let mut rep = ResidualReport {
        tolerance: tol,
        ..Default::default()
    };
    let flag = |rep: &mut ResidualReport, name: &str| {
        if !rep.flagged.iter().any(|f| f == name) {
            rep.flagged.push(name.to_string());
        }
    };

    let act = problem.row_activities(x);
    let mut dual_obj = problem.objective_offset;
    for (i, row) in problem.rows().iter().enumerate() {
        let scale = 1.0 + row.rhs.abs();
        let viol = match row.sense {
            Sense::Le => (act[i] - row.rhs).max(0.0),
            Sense::Ge => (row.rhs - act[i]).max(0.0),
            Sense::Eq => (act[i] - row.rhs).abs(),
        } / scale;
        // dual sign: y >= 0 on >=, y <= 0 on <=
        let sign_viol = match row.sense {
            Sense::Le => y[i].max(0.0),
            Sense::Ge => (-y[i]).max(0.0),
            Sense::Eq => 0.0,
        };
        let comp = (y[i] * (act[i] - row.rhs)).abs() / (scale * (1.0 + y[i].abs()));
        rep.primal_row = rep.primal_row.max(viol);
        rep.dual = rep.dual.max(sign_viol);
        rep.complementarity = rep.complementarity.max(comp);
        if viol > tol || sign_viol > tol || comp > tol {
            flag(&mut rep, &row.name);
        }
        dual_obj += y[i] * row.rhs;
    }

    let mut d: Vec<f64> = problem.columns().iter().map(|c| c.cost).collect();
    for (i, row) in problem.rows().iter().enumerate() {
        for &(j, a) in &row.terms {
            d[j] -= y[i] * a;
        }
    }
    for (j, col) in problem.columns().iter().enumerate() {
        let lo_viol = if col.lower.is_finite() {
            (col.lower - x[j]).max(0.0) / (1.0 + col.lower.abs())
        } else {
            0.0
        };
        let up_viol = if col.upper.is_finite() {
            (x[j] - col.upper).max(0.0) / (1.0 + col.upper.abs())
        } else {
            0.0
        };
        let bviol = lo_viol.max(up_viol);
        let cscale = 1.0 + col.cost.abs();
        let xscale = 1.0 + x[j].abs();
        // a positive reduced cost must be held at a finite lower bound, a
        // negative one at a finite upper bound
        let (dviol, comp) = if d[j] > 0.0 {
            if col.lower.is_finite() {
                dual_obj += d[j] * col.lower;
                (0.0, d[j] * (x[j] - col.lower).abs() / (cscale * xscale))
            } else {
                (d[j] / cscale, 0.0)
            }
        } else if d[j] < 0.0 {
            if col.upper.is_finite() {
                dual_obj += d[j] * col.upper;
                (0.0, -d[j] * (col.upper - x[j]).abs() / (cscale * xscale))
            } else {
                (-d[j] / cscale, 0.0)
            }
        } else {
            (0.0, 0.0)
        };
        rep.primal_bound = rep.primal_bound.max(bviol);
        rep.dual = rep.dual.max(dviol);
        rep.complementarity = rep.complementarity.max(comp);
        if bviol > tol || dviol > tol || comp > tol {
            flag(&mut rep, &col.name);
        }
    }

    let primal_obj = problem.objective_value(x);
    rep.duality_gap = (primal_obj - dual_obj).abs() / (1.0 + primal_obj.abs());
    rep
}

//! Reading decisions and cost components back out of a solved model.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use alm_lp::{LpResult, Status};
use thiserror::Error;

use crate::instance::AlmInstance;
use crate::model::{AlmModel, Role, VariableRegistry};
use crate::tree::ScenarioTree;

#[derive(Debug, Clone, PartialEq)]
pub struct NodeDecision {
    pub node: usize,
    pub time: usize,
    pub holdings: Vec<f64>,
    pub buys: Vec<f64>,
    pub sells: Vec<f64>,
    pub cash: f64,
    pub rate: f64,
    pub remedial: f64,
    pub wealth: f64,
}

/// Expected discounted cost components. `regular + remedial` is money paid
/// in; the penalties only exist in the objective.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CostBreakdown {
    pub regular: f64,
    pub remedial: f64,
    pub remedial_penalty: f64,
    pub rate_change_penalty: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.regular + self.remedial
    }

    /// Remedial share of the total cost; zero when nothing is paid in.
    pub fn remedial_share(&self) -> f64 {
        let total = self.total();
        if total.abs() < 1e-12 {
            0.0
        } else {
            self.remedial / total
        }
    }

    pub fn objective(&self) -> f64 {
        self.regular + self.remedial_penalty + self.rate_change_penalty
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    pub objective: f64,
    pub iterations: usize,
    /// Indexed by node id; `None` for leaves.
    pub decisions: Vec<Option<NodeDecision>>,
    pub costs: CostBreakdown,
}

fn decisions_from(tree: &ScenarioTree, reg: &VariableRegistry, x: &[f64]) -> Vec<Option<NodeDecision>> {
    let d = reg.num_assets();
    tree.nodes
        .iter()
        .map(|n| {
            if n.is_leaf() {
                return None;
            }
            let v = |role| x[reg.col(n.id, role)];
            Some(NodeDecision {
                node: n.id,
                time: n.time,
                holdings: (0..d).map(|k| v(Role::Hold(k))).collect(),
                buys: (0..d).map(|k| v(Role::Buy(k))).collect(),
                sells: (0..d).map(|k| v(Role::Sell(k))).collect(),
                cash: v(Role::Cash),
                rate: v(Role::Rate),
                remedial: v(Role::Remedial),
                wealth: v(Role::Wealth),
            })
        })
        .collect()
}

/// Cost components computed directly from the decisions.
pub fn cost_breakdown(tree: &ScenarioTree, inst: &AlmInstance, decisions: &[Option<NodeDecision>]) -> CostBreakdown {
    let p = &inst.params;
    let mut c = CostBreakdown::default();
    for n in tree.non_leaves() {
        let dn = decisions[n.id].as_ref().expect("non-leaf decision");
        let v_next = p.discount(n.time + 1);
        for &ch in &n.children {
            let child = &tree.nodes[ch];
            c.regular += child.path_prob * v_next * dn.rate * child.state.wages;
            if let Some(dc) = &decisions[ch] {
                c.rate_change_penalty +=
                    p.lambda_dcr * child.path_prob * v_next * child.state.wages * (dc.rate - dn.rate).abs();
            }
        }
        let remedial = n.path_prob * p.discount(n.time) * dn.remedial;
        c.remedial += remedial;
        c.remedial_penalty += p.lambda_z * remedial;
    }
    c
}

impl Solution {
    pub fn from_values(
        tree: &ScenarioTree,
        inst: &AlmInstance,
        model: &AlmModel,
        result: &LpResult,
    ) -> Self {
        let decisions = if result.status == Status::Optimal {
            decisions_from(tree, &model.registry, &result.x)
        } else {
            vec![None; tree.num_nodes()]
        };
        let costs = if result.status == Status::Optimal {
            cost_breakdown(tree, inst, &decisions)
        } else {
            CostBreakdown::default()
        };
        Self {
            status: result.status,
            objective: result.objective,
            iterations: result.iterations,
            decisions,
            costs,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn root(&self) -> Option<&NodeDecision> {
        self.decisions.first().and_then(|d| d.as_ref())
    }

    /// Root cash and asset holdings as fractions of `Σ H_0 + C_0`; the
    /// first entry is cash.
    pub fn root_fractions(&self) -> Option<Vec<f64>> {
        let r = self.root()?;
        let total: f64 = r.holdings.iter().sum::<f64>() + r.cash;
        let mut out = vec![r.cash / total];
        out.extend(r.holdings.iter().map(|h| h / total));
        Some(out)
    }

    /// `A*_child = Σ ξ H_parent + (1+r_f) C_parent + W_child cr_parent − Ben_child`,
    /// evaluated from the parent's decisions.
    pub fn pre_remedial_wealth(&self, tree: &ScenarioTree, inst: &AlmInstance, child: usize) -> f64 {
        let c = &tree.nodes[child];
        let p = c.parent.expect("child node");
        let dp = self.decisions[p].as_ref().expect("parent decision");
        let held: f64 = dp
            .holdings
            .iter()
            .zip(&c.state.gross_returns)
            .map(|(h, xi)| h * xi)
            .sum();
        held + (1.0 + inst.params.risk_free) * dp.cash + c.state.wages * dp.rate - c.state.benefits
    }
}

#[derive(Debug, Error)]
pub enum SolutionFileError {
    #[error("solution file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("solution file does not match the model: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Writes status, primal values by column name and duals by row name.
pub fn write_solution_file<W: Write>(model: &AlmModel, result: &LpResult, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "status {}", result.status)?;
    writeln!(out, "risk {}", model.risk)?;
    writeln!(out, "objective {}", result.objective)?;
    writeln!(out, "iterations {}", result.iterations)?;
    for (c, v) in model.lp.columns().iter().zip(&result.x) {
        writeln!(out, "col {} {}", c.name, v)?;
    }
    for (r, y) in model.lp.rows().iter().zip(&result.duals) {
        writeln!(out, "row {} {}", r.name, y)?;
    }
    Ok(())
}

/// Parsed solution file: the risk mode it was solved under and a result
/// aligned with `model`'s columns and rows.
pub fn read_solution_file<R: BufRead>(model: &AlmModel, input: R) -> Result<(String, LpResult), SolutionFileError> {
    let err = |line: usize, msg: &str| SolutionFileError::Parse {
        line,
        msg: msg.to_string(),
    };
    let col_index: HashMap<&str, usize> = model
        .lp
        .columns()
        .iter()
        .enumerate()
        .map(|(i, c)| (c.name.as_str(), i))
        .collect();
    let row_index: HashMap<&str, usize> = model
        .lp
        .rows()
        .iter()
        .enumerate()
        .map(|(i, r)| (r.name.as_str(), i))
        .collect();
    let mut x = vec![f64::NAN; model.lp.num_cols()];
    let mut duals = vec![f64::NAN; model.lp.num_rows()];
    let mut status = None;
    let mut risk = String::new();
    let mut iterations = 0;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let no = i + 1;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        let value = |s: &str| s.parse::<f64>().map_err(|_| err(no, "bad number"));
        match (f[0], f.len()) {
            ("status", 2) => {
                status = Some(match f[1] {
                    "optimal" => Status::Optimal,
                    "infeasible" => Status::Infeasible,
                    "unbounded" => Status::Unbounded,
                    "iteration-limit" => Status::IterationLimit,
                    _ => return Err(err(no, "unknown status")),
                })
            }
            ("risk", 2) => risk = f[1].to_string(),
            ("objective", 2) => {}
            ("iterations", 2) => iterations = f[1].parse().map_err(|_| err(no, "bad count"))?,
            ("col", 3) => {
                let j = *col_index
                    .get(f[1])
                    .ok_or_else(|| SolutionFileError::Mismatch(format!("unknown column {}", f[1])))?;
                x[j] = value(f[2])?;
            }
            ("row", 3) => {
                let r = *row_index
                    .get(f[1])
                    .ok_or_else(|| SolutionFileError::Mismatch(format!("unknown row {}", f[1])))?;
                duals[r] = value(f[2])?;
            }
            _ => return Err(err(no, "unrecognized line")),
        }
    }
    if let Some(j) = x.iter().position(|v| v.is_nan()) {
        return Err(SolutionFileError::Mismatch(format!(
            "missing column {}",
            model.lp.columns()[j].name
        )));
    }
    if let Some(r) = duals.iter().position(|v| v.is_nan()) {
        return Err(SolutionFileError::Mismatch(format!("missing row {}", model.lp.rows()[r].name)));
    }
    let status = status.ok_or_else(|| err(0, "missing status line"))?;
    let objective = model.lp.objective_value(&x);
    let n = x.len();
    Ok((
        risk,
        LpResult {
            status,
            x,
            duals,
            reduced_costs: vec![0.0; n],
            objective,
            iterations,
            phase1_iterations: 0,
            bland_pivots: 0,
            refactorizations: 0,
        },
    ))
}

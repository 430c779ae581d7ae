//! Deterministic-equivalent LP over a scenario tree.
//!
//! One decision vector per non-leaf node (holdings `H`, buys `B`, sells `S`,
//! cash `C`, contribution rate `cr`, remedial contribution `Z`, total asset
//! `A`), so non-anticipativity holds by construction. Arcs between non-leaf
//! nodes carry the signed rate change `δcr` and its absolute value `Δcr`;
//! arcs out of non-leaf nodes carry the shortfall auxiliary `y` when a risk
//! constraint is active. Leaves have no columns: their wealth is the
//! pre-remedial expression in the parent's decisions.
//!
//! Column and row names are at most 8 characters: a role prefix and the node
//! id in base 36, e.g. `H2_1A3` or `LIQ_7`.

use std::collections::HashMap;

use alm_lp::{LpError, LpProblem, Sense};
use thiserror::Error;

use crate::icc::RiskConstraint;
use crate::instance::{AlmInstance, InstanceError};
use crate::tree::ScenarioTree;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("tree carries {tree} asset returns but the instance has {instance} asset classes")]
    AssetMismatch { tree: usize, instance: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Hold(usize),
    Buy(usize),
    Sell(usize),
    Cash,
    Rate,
    Remedial,
    Wealth,
    /// Signed change `cr_child − cr_parent`, keyed by the child.
    RateChange,
    /// `|δcr|`, keyed by the child.
    RateChangeAbs,
    /// ICC shortfall auxiliary, keyed by the child.
    Shortfall,
}

impl Role {
    fn prefix(self) -> String {
        let k36 = |k: usize| to_base36(k + 1);
        match self {
            Role::Hold(k) => format!("H{}", k36(k)),
            Role::Buy(k) => format!("B{}", k36(k)),
            Role::Sell(k) => format!("S{}", k36(k)),
            Role::Cash => "C".into(),
            Role::Rate => "CR".into(),
            Role::Remedial => "Z".into(),
            Role::Wealth => "A".into(),
            Role::RateChange => "DC".into(),
            Role::RateChangeAbs => "DA".into(),
            Role::Shortfall => "Y".into(),
        }
    }
}

pub fn to_base36(mut v: usize) -> String {
    const DIGITS: &[u8] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    if v == 0 {
        return "0".into();
    }
    let mut out = Vec::new();
    while v > 0 {
        out.push(DIGITS[v % 36]);
        v /= 36;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii digits")
}

/// Row or column name for `prefix` at `node`.
pub fn node_name(prefix: &str, node: usize) -> String {
    format!("{prefix}_{}", to_base36(node))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarKey {
    pub node: usize,
    pub role: Role,
}

#[derive(Debug, Clone)]
pub struct ColumnSpec {
    pub key: VarKey,
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

/// Injective map from `(node, role)` to LP column.
#[derive(Debug, Clone, Default)]
pub struct VariableRegistry {
    columns: Vec<ColumnSpec>,
    index: HashMap<VarKey, usize>,
    num_assets: usize,
}

impl VariableRegistry {
    pub fn new(tree: &ScenarioTree, inst: &AlmInstance, with_shortfall: bool) -> Self {
        let d = inst.num_assets();
        let p = &inst.params;
        let mut reg = Self {
            num_assets: d,
            ..Self::default()
        };
        let inf = f64::INFINITY;
        for n in tree.non_leaves() {
            for k in 0..d {
                reg.push(n.id, Role::Hold(k), 0.0, inf);
            }
            for k in 0..d {
                reg.push(n.id, Role::Buy(k), 0.0, inf);
            }
            for k in 0..d {
                reg.push(n.id, Role::Sell(k), 0.0, inf);
            }
            reg.push(n.id, Role::Cash, 0.0, inf);
            reg.push(n.id, Role::Rate, p.cr_lower, p.cr_upper);
            reg.push(n.id, Role::Remedial, 0.0, inf);
            reg.push(n.id, Role::Wealth, 0.0, inf);
        }
        for n in tree.non_leaves().filter(|n| n.parent.is_some()) {
            reg.push(n.id, Role::RateChange, p.dcr_lower, p.dcr_upper);
            reg.push(n.id, Role::RateChangeAbs, 0.0, inf);
        }
        if with_shortfall {
            for n in tree.nodes.iter().filter(|n| n.parent.is_some()) {
                reg.push(n.id, Role::Shortfall, 0.0, inf);
            }
        }
        reg
    }

    fn push(&mut self, node: usize, role: Role, lower: f64, upper: f64) {
        let key = VarKey { node, role };
        let idx = self.columns.len();
        self.columns.push(ColumnSpec {
            key,
            name: node_name(&role.prefix(), node),
            lower,
            upper,
        });
        let prev = self.index.insert(key, idx);
        debug_assert!(prev.is_none(), "duplicate registry key {key:?}");
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn num_assets(&self) -> usize {
        self.num_assets
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn get(&self, node: usize, role: Role) -> Option<usize> {
        self.index.get(&VarKey { node, role }).copied()
    }

    /// Column for `(node, role)`; panics if it was never registered, which
    /// means a builder asked for a variable the layout does not have.
    pub fn col(&self, node: usize, role: Role) -> usize {
        self.get(node, role)
            .unwrap_or_else(|| panic!("no column for node {node} role {role:?}"))
    }

    pub fn has_shortfall(&self) -> bool {
        self.columns.last().is_some_and(|c| c.key.role == Role::Shortfall)
    }
}

/// A constraint row in column-index form.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSpec {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl RowSpec {
    pub fn new(name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Self {
        Self {
            name,
            terms,
            sense,
            rhs,
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, v)| v * x[j]).sum()
    }

    /// Amount by which `x` violates the row; zero when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

/// Terms of the pre-remedial wealth `A*_child` in the parent's columns;
/// the full value is `terms · x − Ben_child`.
pub fn pre_remedial_terms(
    tree: &ScenarioTree,
    inst: &AlmInstance,
    reg: &VariableRegistry,
    child: usize,
) -> Vec<(usize, f64)> {
    let c = &tree.nodes[child];
    let p = c.parent.expect("pre-remedial wealth is defined on arcs");
    let mut terms = Vec::with_capacity(inst.num_assets() + 2);
    for (k, xi) in c.state.gross_returns.iter().enumerate() {
        terms.push((reg.col(p, Role::Hold(k)), *xi));
    }
    terms.push((reg.col(p, Role::Cash), 1.0 + inst.params.risk_free));
    terms.push((reg.col(p, Role::Rate), c.state.wages));
    terms
}

fn transaction_cost_terms(inst: &AlmInstance, reg: &VariableRegistry, n: usize) -> Vec<(usize, f64)> {
    let mut terms = Vec::new();
    for (k, a) in inst.assets.iter().enumerate() {
        terms.push((reg.col(n, Role::Buy(k)), a.buy_cost));
        terms.push((reg.col(n, Role::Sell(k)), a.sell_cost));
    }
    terms
}

/// Defines `A_n`. Root: `A_0 − Z_0 + Σ(c̄ᴮB + c̄ˢS) = Σ H̄ + C̄_0`. Other
/// non-leaf nodes: `A_n − A*_n − Z_n + Σ(c̄ᴮB + c̄ˢS) = 0` with `A*_n`
/// expanded (its `−Ben_n` moves to the right-hand side).
pub fn budget_rows(tree: &ScenarioTree, inst: &AlmInstance, reg: &VariableRegistry) -> Vec<RowSpec> {
    let mut rows = Vec::new();
    for n in tree.non_leaves() {
        let mut terms = vec![
            (reg.col(n.id, Role::Wealth), 1.0),
            (reg.col(n.id, Role::Remedial), -1.0),
        ];
        terms.extend(transaction_cost_terms(inst, reg, n.id));
        let rhs = if n.parent.is_none() {
            inst.initial_asset()
        } else {
            terms.extend(
                pre_remedial_terms(tree, inst, reg, n.id)
                    .into_iter()
                    .map(|(j, v)| (j, -v)),
            );
            -n.state.benefits
        };
        rows.push(RowSpec::new(node_name("BUD", n.id), terms, Sense::Eq, rhs));
    }
    rows
}

/// `H_{k,n} − ξ_{k,n} H_{k,parent} − B_{k,n} + S_{k,n} = 0`; at the root the
/// parent holding is the constant `H̄_k`.
pub fn holding_rows(tree: &ScenarioTree, inst: &AlmInstance, reg: &VariableRegistry) -> Vec<RowSpec> {
    let mut rows = Vec::new();
    for n in tree.non_leaves() {
        for k in 0..inst.num_assets() {
            let mut terms = vec![
                (reg.col(n.id, Role::Hold(k)), 1.0),
                (reg.col(n.id, Role::Buy(k)), -1.0),
                (reg.col(n.id, Role::Sell(k)), 1.0),
            ];
            let rhs = match n.parent {
                None => inst.assets[k].initial,
                Some(p) => {
                    terms.push((reg.col(p, Role::Hold(k)), -n.state.gross_returns[k]));
                    0.0
                }
            };
            let prefix = format!("HL{}", to_base36(k + 1));
            rows.push(RowSpec::new(node_name(&prefix, n.id), terms, Sense::Eq, rhs));
        }
    }
    rows
}

/// `C_n − (1+r_f)C_p − W_n cr_p − Z_n + Σ(1+c̄ᴮ)B − Σ(1−c̄ˢ)S = −Ben_n`;
/// at the root the carried cash is the constant `C̄_0` and there are no
/// flows.
pub fn cash_rows(tree: &ScenarioTree, inst: &AlmInstance, reg: &VariableRegistry) -> Vec<RowSpec> {
    let p = &inst.params;
    let mut rows = Vec::new();
    for n in tree.non_leaves() {
        let mut terms = vec![
            (reg.col(n.id, Role::Cash), 1.0),
            (reg.col(n.id, Role::Remedial), -1.0),
        ];
        for (k, a) in inst.assets.iter().enumerate() {
            terms.push((reg.col(n.id, Role::Buy(k)), 1.0 + a.buy_cost));
            terms.push((reg.col(n.id, Role::Sell(k)), -(1.0 - a.sell_cost)));
        }
        let rhs = match n.parent {
            None => p.initial_cash,
            Some(par) => {
                terms.push((reg.col(par, Role::Cash), -(1.0 + p.risk_free)));
                terms.push((reg.col(par, Role::Rate), -n.state.wages));
                -n.state.benefits
            }
        };
        rows.push(RowSpec::new(node_name("CSH", n.id), terms, Sense::Eq, rhs));
    }
    rows
}

/// `(1+r_f) C_n + cr_n E_n[W] ≥ E_n[Ben]` at every non-leaf node.
pub fn liquidity_rows(tree: &ScenarioTree, inst: &AlmInstance, reg: &VariableRegistry) -> Vec<RowSpec> {
    let mut rows = Vec::new();
    for n in tree.non_leaves() {
        let ew = tree
            .conditional_expectation(n.id, |c| c.state.wages)
            .expect("non-leaf");
        let eben = tree
            .conditional_expectation(n.id, |c| c.state.benefits)
            .expect("non-leaf");
        let terms = vec![
            (reg.col(n.id, Role::Cash), 1.0 + inst.params.risk_free),
            (reg.col(n.id, Role::Rate), ew),
        ];
        rows.push(RowSpec::new(node_name("LIQ", n.id), terms, Sense::Ge, eben));
    }
    rows
}

/// `l A ≤ H ≤ u A` per asset and for cash. Rows implied by nonnegativity
/// (`l = 0`) or by the budget identity (`u ≥ 1`) are not posted.
pub fn portfolio_rows(tree: &ScenarioTree, inst: &AlmInstance, reg: &VariableRegistry) -> Vec<RowSpec> {
    let mut rows = Vec::new();
    let p = &inst.params;
    let mut bounded: Vec<(String, Role, f64, f64)> = inst
        .assets
        .iter()
        .enumerate()
        .map(|(k, a)| (to_base36(k + 1), Role::Hold(k), a.lower, a.upper))
        .collect();
    bounded.push(("C".into(), Role::Cash, p.cash_lower, p.cash_upper));
    for n in tree.non_leaves() {
        let a = reg.col(n.id, Role::Wealth);
        for (tag, role, lo, up) in &bounded {
            let h = reg.col(n.id, *role);
            if *lo > 0.0 {
                rows.push(RowSpec::new(
                    node_name(&format!("PL{tag}"), n.id),
                    vec![(h, 1.0), (a, -lo)],
                    Sense::Ge,
                    0.0,
                ));
            }
            if *up < 1.0 {
                rows.push(RowSpec::new(
                    node_name(&format!("PU{tag}"), n.id),
                    vec![(h, 1.0), (a, -up)],
                    Sense::Le,
                    0.0,
                ));
            }
        }
    }
    rows
}

/// Per arc between non-leaf nodes: `δ − cr_c + cr_p = 0`, `Δ − δ ≥ 0`,
/// `Δ + δ ≥ 0`. The rate and rate-change bounds live on the columns.
pub fn contribution_rows(tree: &ScenarioTree, reg: &VariableRegistry) -> Vec<RowSpec> {
    let mut rows = Vec::new();
    for n in tree.non_leaves() {
        let Some(p) = n.parent else { continue };
        let delta = reg.col(n.id, Role::RateChange);
        let abs = reg.col(n.id, Role::RateChangeAbs);
        rows.push(RowSpec::new(
            node_name("DCR", n.id),
            vec![
                (delta, 1.0),
                (reg.col(n.id, Role::Rate), -1.0),
                (reg.col(p, Role::Rate), 1.0),
            ],
            Sense::Eq,
            0.0,
        ));
        rows.push(RowSpec::new(node_name("DAP", n.id), vec![(abs, 1.0), (delta, -1.0)], Sense::Ge, 0.0));
        rows.push(RowSpec::new(node_name("DAN", n.id), vec![(abs, 1.0), (delta, 1.0)], Sense::Ge, 0.0));
    }
    rows
}

/// `A_T ≥ F̄ L_T` at every leaf, with `A_T = A*_T` expanded in the parent's
/// decisions.
pub fn terminal_rows(tree: &ScenarioTree, inst: &AlmInstance, reg: &VariableRegistry) -> Vec<RowSpec> {
    tree.leaves()
        .map(|leaf| {
            RowSpec::new(
                node_name("TRM", leaf.id),
                pre_remedial_terms(tree, inst, reg, leaf.id),
                Sense::Ge,
                inst.params.target_funding * leaf.state.liability + leaf.state.benefits,
            )
        })
        .collect()
}

/// Objective coefficients (column, cost). Regular contributions `cr_n`
/// pay `v_{t+1} Σ_c p_c W_c`; every `Z_n` costs `λ_z v_t p_n`; `Δcr` on the
/// arc into `c` costs `λ_Δ v_{t_c} p_c W_c`.
pub fn objective(tree: &ScenarioTree, inst: &AlmInstance, reg: &VariableRegistry) -> Vec<(usize, f64)> {
    let p = &inst.params;
    let mut obj = Vec::new();
    for n in tree.non_leaves() {
        let v_next = p.discount(n.time + 1);
        let expected_wages: f64 = n
            .children
            .iter()
            .map(|&c| tree.nodes[c].path_prob * tree.nodes[c].state.wages)
            .sum();
        obj.push((reg.col(n.id, Role::Rate), v_next * expected_wages));
        obj.push((reg.col(n.id, Role::Remedial), p.lambda_z * p.discount(n.time) * n.path_prob));
        if n.parent.is_some() {
            obj.push((
                reg.col(n.id, Role::RateChangeAbs),
                p.lambda_dcr * p.discount(n.time) * n.path_prob * n.state.wages,
            ));
        }
    }
    obj
}

/// Row and column counts of a built model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSize {
    pub columns: usize,
    pub rows: usize,
}

/// Closed-form LP size. With `N` nodes of which `M` are non-leaf, `L`
/// leaves and `d` assets:
///
/// * columns: `M(3d + 4) + 2(M − 1)`, plus `N − 1` shortfall columns when
///   the risk constraint uses them;
/// * rows: `M(d + 3)` dynamics and liquidity rows, `M·q` portfolio rows
///   where `q` counts bounds with `l > 0` or `u < 1` (assets and cash),
///   `3(M − 1)` contribution rows, `L` terminal rows, plus the risk
///   constraint's own rows.
pub fn expected_size(tree: &ScenarioTree, inst: &AlmInstance, risk: &dyn RiskConstraint) -> ModelSize {
    let n = tree.num_nodes();
    let m = tree.non_leaves().count();
    let leaves = n - m;
    let d = inst.num_assets();
    let p = &inst.params;
    let q = inst
        .assets
        .iter()
        .map(|a| (a.lower, a.upper))
        .chain(std::iter::once((p.cash_lower, p.cash_upper)))
        .map(|(lo, up)| usize::from(lo > 0.0) + usize::from(up < 1.0))
        .sum::<usize>();
    let mut columns = m * (3 * d + 4) + 2 * (m - 1);
    if risk.uses_shortfall() {
        columns += n - 1;
    }
    let rows = m * (d + 3) + m * q + 3 * (m - 1) + leaves + risk.row_count(tree);
    ModelSize { columns, rows }
}

/// A built LP together with the layout needed to read its solution back.
#[derive(Debug, Clone)]
pub struct AlmModel {
    pub lp: LpProblem,
    pub registry: VariableRegistry,
    pub risk: String,
}

impl AlmModel {
    pub fn size(&self) -> ModelSize {
        ModelSize {
            columns: self.lp.num_cols(),
            rows: self.lp.num_rows(),
        }
    }
}

/// All rows of the model in builder order.
pub fn all_rows(
    tree: &ScenarioTree,
    inst: &AlmInstance,
    reg: &VariableRegistry,
    risk: &dyn RiskConstraint,
) -> Vec<RowSpec> {
    let mut rows = budget_rows(tree, inst, reg);
    rows.extend(holding_rows(tree, inst, reg));
    rows.extend(cash_rows(tree, inst, reg));
    rows.extend(liquidity_rows(tree, inst, reg));
    rows.extend(portfolio_rows(tree, inst, reg));
    rows.extend(contribution_rows(tree, reg));
    rows.extend(terminal_rows(tree, inst, reg));
    rows.extend(risk.rows(tree, inst, reg));
    rows
}

pub fn build_model(
    tree: &ScenarioTree,
    inst: &AlmInstance,
    risk: &dyn RiskConstraint,
) -> Result<AlmModel, ModelError> {
    inst.validate()?;
    if tree.num_assets() != inst.num_assets() {
        return Err(ModelError::AssetMismatch {
            tree: tree.num_assets(),
            instance: inst.num_assets(),
        });
    }
    let reg = VariableRegistry::new(tree, inst, risk.uses_shortfall());
    let mut cost = vec![0.0; reg.len()];
    for (j, c) in objective(tree, inst, &reg) {
        cost[j] += c;
    }
    let mut lp = LpProblem::new(format!("alm-{}", risk.name()));
    for (spec, c) in reg.columns().iter().zip(&cost) {
        lp.add_col(spec.name.clone(), spec.lower, spec.upper, *c)?;
    }
    for row in all_rows(tree, inst, &reg, risk) {
        lp.add_row(row.name, row.terms, row.sense, row.rhs)?;
    }
    Ok(AlmModel {
        lp,
        registry: reg,
        risk: risk.name().to_string(),
    })
}

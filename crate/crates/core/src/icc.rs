//! Integrated chance constraints on the one-period expected shortfall
//! `E_n[(A*_c − γ L_c)⁻] ≤ β(n)`.
//!
//! Each variant is a [`RiskConstraint`]; [`RiskRegistry`] maps names to
//! constructors so the mode can be chosen from configuration. All variants
//! that bound shortfall share one auxiliary `y_c ≥ γL_c − A*_c` per arc and
//! differ only in the right-hand side `β(n)` of the aggregation row
//! `Σ_c p(c|n) y_c ≤ β(n)`:
//!
//! * `oicc`: `β(n) = α L_n`;
//! * `micc`: `β(n) = α min_{a ⪯ n} L_a`, the running minimum along the root
//!   path, which is equivalent to requiring the shortfall at `n` to respect
//!   the bound set at every ancestor;
//! * `micc-naive`: posts that requirement literally, one row per ancestor.

use std::io::Write;

use alm_lp::Sense;
use thiserror::Error;

use crate::instance::{AlmInstance, FundParameters};
use crate::model::{node_name, pre_remedial_terms, Role, RowSpec, VariableRegistry};
use crate::solution::Solution;
use crate::tree::{ScenarioTree, TreeError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IccConfig {
    pub alpha: f64,
    pub gamma: f64,
    /// Replaces every `β(n)` by this constant when set.
    pub constant_beta: Option<f64>,
}

impl IccConfig {
    pub fn from_params(p: &FundParameters) -> Self {
        Self {
            alpha: p.alpha,
            gamma: p.gamma,
            constant_beta: None,
        }
    }
}

pub trait RiskConstraint: Send + Sync {
    fn name(&self) -> &str;

    /// Whether the model needs the per-arc shortfall columns.
    fn uses_shortfall(&self) -> bool;

    /// Rows this constraint adds, given a registry built with shortfall
    /// columns when [`uses_shortfall`](Self::uses_shortfall) is true.
    fn rows(&self, tree: &ScenarioTree, inst: &AlmInstance, reg: &VariableRegistry) -> Vec<RowSpec>;

    /// Closed-form count of [`rows`](Self::rows).
    fn row_count(&self, tree: &ScenarioTree) -> usize;

    /// Effective bound on the expected shortfall over `node`'s children, or
    /// `None` if unconstrained.
    fn shortfall_bound(&self, tree: &ScenarioTree, node: usize) -> Option<f64>;

    fn gamma(&self) -> f64;
}

/// `α · min` of the liabilities on the path from the root to `node`.
pub fn running_min_beta(tree: &ScenarioTree, node: usize, alpha: f64) -> Result<f64, TreeError> {
    let mut cur = tree.node(node)?;
    let mut min = cur.state.liability;
    while let Some(p) = cur.parent {
        cur = &tree.nodes[p];
        min = min.min(cur.state.liability);
    }
    Ok(alpha * min)
}

/// `A*_c + y_c ≥ γ L_c` for every arc out of a non-leaf node.
pub fn shortfall_rows(tree: &ScenarioTree, inst: &AlmInstance, reg: &VariableRegistry, gamma: f64) -> Vec<RowSpec> {
    tree.nodes
        .iter()
        .filter(|c| c.parent.is_some())
        .map(|c| {
            let mut terms = pre_remedial_terms(tree, inst, reg, c.id);
            terms.push((reg.col(c.id, Role::Shortfall), 1.0));
            RowSpec::new(
                node_name("ICY", c.id),
                terms,
                Sense::Ge,
                gamma * c.state.liability + c.state.benefits,
            )
        })
        .collect()
}

fn aggregation_terms(tree: &ScenarioTree, reg: &VariableRegistry, node: usize) -> Vec<(usize, f64)> {
    tree.nodes[node]
        .children
        .iter()
        .map(|&c| (reg.col(c, Role::Shortfall), tree.nodes[c].cond_prob))
        .collect()
}

pub struct NoRisk;

impl RiskConstraint for NoRisk {
    fn name(&self) -> &str {
        "none"
    }
    fn uses_shortfall(&self) -> bool {
        false
    }
    fn rows(&self, _: &ScenarioTree, _: &AlmInstance, _: &VariableRegistry) -> Vec<RowSpec> {
        Vec::new()
    }
    fn row_count(&self, _: &ScenarioTree) -> usize {
        0
    }
    fn shortfall_bound(&self, _: &ScenarioTree, _: usize) -> Option<f64> {
        None
    }
    fn gamma(&self) -> f64 {
        0.0
    }
}

/// One aggregation row per non-leaf node with a per-node bound.
struct PerNodeBound {
    name: &'static str,
    cfg: IccConfig,
    beta: fn(&ScenarioTree, usize, f64) -> f64,
}

impl RiskConstraint for PerNodeBound {
    fn name(&self) -> &str {
        self.name
    }
    fn uses_shortfall(&self) -> bool {
        true
    }
    fn rows(&self, tree: &ScenarioTree, inst: &AlmInstance, reg: &VariableRegistry) -> Vec<RowSpec> {
        let mut rows = shortfall_rows(tree, inst, reg, self.cfg.gamma);
        for n in tree.non_leaves() {
            rows.push(RowSpec::new(
                node_name("ICA", n.id),
                aggregation_terms(tree, reg, n.id),
                Sense::Le,
                self.shortfall_bound(tree, n.id).expect("bounded"),
            ));
        }
        rows
    }
    fn row_count(&self, tree: &ScenarioTree) -> usize {
        tree.num_nodes() - 1 + tree.non_leaves().count()
    }
    fn shortfall_bound(&self, tree: &ScenarioTree, node: usize) -> Option<f64> {
        Some(
            self.cfg
                .constant_beta
                .unwrap_or_else(|| (self.beta)(tree, node, self.cfg.alpha)),
        )
    }
    fn gamma(&self) -> f64 {
        self.cfg.gamma
    }
}

pub fn oicc(cfg: &IccConfig) -> Box<dyn RiskConstraint> {
    Box::new(PerNodeBound {
        name: "oicc",
        cfg: *cfg,
        beta: |tree, n, alpha| alpha * tree.nodes[n].state.liability,
    })
}

pub fn micc(cfg: &IccConfig) -> Box<dyn RiskConstraint> {
    Box::new(PerNodeBound {
        name: "micc",
        cfg: *cfg,
        beta: |tree, n, alpha| running_min_beta(tree, n, alpha).expect("node in tree"),
    })
}

/// Multiperiod constraint posted literally: for every non-leaf node and
/// every ancestor-or-self `a`, `Σ p y ≤ β(a)`.
pub struct MiccNaive {
    cfg: IccConfig,
}

impl MiccNaive {
    fn beta_at(&self, tree: &ScenarioTree, a: usize) -> f64 {
        self.cfg
            .constant_beta
            .unwrap_or(self.cfg.alpha * tree.nodes[a].state.liability)
    }
}

impl RiskConstraint for MiccNaive {
    fn name(&self) -> &str {
        "micc-naive"
    }
    fn uses_shortfall(&self) -> bool {
        true
    }
    fn rows(&self, tree: &ScenarioTree, inst: &AlmInstance, reg: &VariableRegistry) -> Vec<RowSpec> {
        let mut rows = shortfall_rows(tree, inst, reg, self.cfg.gamma);
        for n in tree.non_leaves() {
            let terms = aggregation_terms(tree, reg, n.id);
            for (depth, a) in tree.path_to(n.id).expect("node in tree").into_iter().enumerate() {
                rows.push(RowSpec::new(
                    node_name(&format!("IN{}", crate::model::to_base36(depth)), n.id),
                    terms.clone(),
                    Sense::Le,
                    self.beta_at(tree, a),
                ));
            }
        }
        rows
    }
    fn row_count(&self, tree: &ScenarioTree) -> usize {
        tree.num_nodes() - 1 + tree.non_leaves().map(|n| n.time + 1).sum::<usize>()
    }
    fn shortfall_bound(&self, tree: &ScenarioTree, node: usize) -> Option<f64> {
        tree.path_to(node)
            .expect("node in tree")
            .into_iter()
            .map(|a| self.beta_at(tree, a))
            .reduce(f64::min)
    }
    fn gamma(&self) -> f64 {
        self.cfg.gamma
    }
}

pub fn micc_naive(cfg: &IccConfig) -> Box<dyn RiskConstraint> {
    Box::new(MiccNaive { cfg: *cfg })
}

pub fn no_risk(_: &IccConfig) -> Box<dyn RiskConstraint> {
    Box::new(NoRisk)
}

pub type RiskFactory = fn(&IccConfig) -> Box<dyn RiskConstraint>;

#[derive(Debug, Error, PartialEq)]
#[error("unknown risk mode {name:?}; available: {}", available.join(", "))]
pub struct UnknownRiskMode {
    pub name: String,
    pub available: Vec<String>,
}

/// Named risk-constraint constructors.
pub struct RiskRegistry {
    entries: Vec<(String, String, RiskFactory)>,
}

impl Default for RiskRegistry {
    fn default() -> Self {
        let mut r = Self { entries: Vec::new() };
        r.register("none", "no shortfall constraint", no_risk);
        r.register("oicc", "one-period bound alpha * L at each node", oicc);
        r.register("micc", "multiperiod bound via running minimum of alpha * L", micc);
        r.register("micc-naive", "multiperiod bound with one row per ancestor", micc_naive);
        r
    }
}

impl RiskRegistry {
    /// Adds or replaces the constructor registered under `name`.
    pub fn register(&mut self, name: &str, description: &str, factory: RiskFactory) {
        self.entries.retain(|(n, _, _)| n != name);
        self.entries
            .push((name.to_string(), description.to_string(), factory));
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|(n, _, _)| n.as_str()).collect()
    }

    pub fn describe(&self) -> Vec<(&str, &str)> {
        self.entries
            .iter()
            .map(|(n, d, _)| (n.as_str(), d.as_str()))
            .collect()
    }

    pub fn create(&self, name: &str, cfg: &IccConfig) -> Result<Box<dyn RiskConstraint>, UnknownRiskMode> {
        self.entries
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(_, _, f)| f(cfg))
            .ok_or_else(|| UnknownRiskMode {
                name: name.to_string(),
                available: self.names().iter().map(|s| s.to_string()).collect(),
            })
    }
}

/// `Σ_c p(c|n) (γ L_c − A*_c)⁺` from the solution's decisions.
pub fn expected_shortfall(
    tree: &ScenarioTree,
    inst: &AlmInstance,
    sol: &Solution,
    node: usize,
    gamma: f64,
) -> Result<f64, TreeError> {
    let n = tree.node(node)?;
    if n.is_leaf() {
        return Err(TreeError::LeafNode(node));
    }
    Ok(n.children
        .iter()
        .map(|&c| {
            let child = &tree.nodes[c];
            let gap = gamma * child.state.liability - sol.pre_remedial_wealth(tree, inst, c);
            child.cond_prob * gap.max(0.0)
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShortfallCheck {
    pub node: usize,
    pub time: usize,
    pub bound: f64,
    pub shortfall: f64,
}

impl ShortfallCheck {
    pub fn slack(&self) -> f64 {
        self.bound - self.shortfall
    }
}

/// Oracle shortfall and bound at every non-leaf node. Nodes without a bound
/// report an infinite one.
pub fn shortfall_audit(
    tree: &ScenarioTree,
    inst: &AlmInstance,
    sol: &Solution,
    risk: &dyn RiskConstraint,
    gamma: f64,
) -> Vec<ShortfallCheck> {
    tree.non_leaves()
        .map(|n| ShortfallCheck {
            node: n.id,
            time: n.time,
            bound: risk.shortfall_bound(tree, n.id).unwrap_or(f64::INFINITY),
            shortfall: expected_shortfall(tree, inst, sol, n.id, gamma).expect("non-leaf"),
        })
        .collect()
}

/// Largest `shortfall − bound` over the audit; nonpositive when every bound
/// holds.
pub fn worst_excess(audit: &[ShortfallCheck]) -> f64 {
    audit
        .iter()
        .map(|c| c.shortfall - c.bound)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn write_audit_csv<W: Write>(audit: &[ShortfallCheck], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "time", "beta", "expected_shortfall", "slack"])?;
    for c in audit {
        w.write_record([
            c.node.to_string(),
            c.time.to_string(),
            c.bound.to_string(),
            c.shortfall.to_string(),
            c.slack().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

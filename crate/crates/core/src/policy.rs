//! Forward simulation of fixed decision rules through the tree. The result
//! is a full LP column vector that satisfies every budget, holding, cash and
//! contribution row by construction, independent of the row builders.

use crate::instance::AlmInstance;
use crate::model::{Role, VariableRegistry};
use crate::tree::ScenarioTree;

/// Rebalancing rule applied identically at every non-leaf node.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPolicy {
    /// Target asset fractions of pre-trade wealth; `None` never trades.
    pub targets: Option<Vec<f64>>,
    /// Contribution rate per node time `t`; the last entry repeats.
    pub rates: Vec<f64>,
    /// Remedial contribution paid on top of whatever keeps cash nonnegative.
    pub extra_remedial: f64,
}

impl FixedPolicy {
    pub fn buy_and_hold(rate: f64) -> Self {
        Self {
            targets: None,
            rates: vec![rate],
            extra_remedial: 0.0,
        }
    }

    fn rate_at(&self, t: usize) -> f64 {
        self.rates[t.min(self.rates.len() - 1)]
    }
}

/// Simulates `policy` and returns values for every registered column.
/// Shortfall columns get `(γ L − A*)⁺`.
pub fn simulate_policy(
    tree: &ScenarioTree,
    inst: &AlmInstance,
    reg: &VariableRegistry,
    policy: &FixedPolicy,
    gamma: f64,
) -> Vec<f64> {
    let d = inst.num_assets();
    let rf = inst.params.risk_free;
    let mut x = vec![0.0; reg.len()];
    for n in &tree.nodes {
        // pre-trade holdings and cash
        let (held, cash_in): (Vec<f64>, f64) = match n.parent {
            None => (
                inst.assets.iter().map(|a| a.initial).collect(),
                inst.params.initial_cash,
            ),
            Some(p) => {
                let held = (0..d)
                    .map(|k| n.state.gross_returns[k] * x[reg.col(p, Role::Hold(k))])
                    .collect();
                let cash = (1.0 + rf) * x[reg.col(p, Role::Cash)]
                    + n.state.wages * x[reg.col(p, Role::Rate)]
                    - n.state.benefits;
                (held, cash)
            }
        };
        if let Some(y) = reg.get(n.id, Role::Shortfall) {
            let a_star: f64 = held.iter().sum::<f64>() + cash_in;
            x[y] = (gamma * n.state.liability - a_star).max(0.0);
        }
        if n.is_leaf() {
            continue;
        }
        let wealth_pre: f64 = held.iter().sum::<f64>() + cash_in;
        let mut buys = vec![0.0; d];
        let mut sells = vec![0.0; d];
        if let Some(targets) = &policy.targets {
            for k in 0..d {
                let diff = targets[k] * wealth_pre.max(0.0) - held[k];
                if diff > 0.0 {
                    buys[k] = diff;
                } else {
                    sells[k] = -diff;
                }
            }
        }
        let mut cash = cash_in;
        for (k, a) in inst.assets.iter().enumerate() {
            cash -= (1.0 + a.buy_cost) * buys[k];
            cash += (1.0 - a.sell_cost) * sells[k];
        }
        let remedial = (-cash).max(0.0) + policy.extra_remedial;
        cash += remedial;
        let mut total = cash;
        for k in 0..d {
            let h = held[k] + buys[k] - sells[k];
            x[reg.col(n.id, Role::Hold(k))] = h;
            x[reg.col(n.id, Role::Buy(k))] = buys[k];
            x[reg.col(n.id, Role::Sell(k))] = sells[k];
            total += h;
        }
        x[reg.col(n.id, Role::Cash)] = cash;
        x[reg.col(n.id, Role::Remedial)] = remedial;
        x[reg.col(n.id, Role::Wealth)] = total;
        let rate = policy.rate_at(n.time);
        x[reg.col(n.id, Role::Rate)] = rate;
        if let Some(p) = n.parent {
            let delta = rate - x[reg.col(p, Role::Rate)];
            x[reg.col(n.id, Role::RateChange)] = delta;
            x[reg.col(n.id, Role::RateChangeAbs)] = delta.abs();
        }
    }
    x
}

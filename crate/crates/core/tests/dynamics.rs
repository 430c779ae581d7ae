mod common;

use alm_core::icc::no_risk;
use alm_core::icc::IccConfig;
use alm_core::instance::AlmInstance;
use alm_core::model::{
    budget_rows, build_model, cash_rows, contribution_rows, expected_size, holding_rows, liquidity_rows,
    portfolio_rows, Role, RowSpec, VariableRegistry,
};
use alm_core::policy::{simulate_policy, FixedPolicy};
use alm_core::tree::ScenarioTree;
use alm_lp::{solve, SolveOptions, Status};
use proptest::prelude::*;

fn dynamics_rows(t: &ScenarioTree, inst: &AlmInstance, reg: &VariableRegistry) -> Vec<RowSpec> {
    let mut rows = budget_rows(t, inst, reg);
    rows.extend(holding_rows(t, inst, reg));
    rows.extend(cash_rows(t, inst, reg));
    rows.extend(contribution_rows(t, reg));
    rows
}

fn worst_violation(rows: &[RowSpec], x: &[f64]) -> (f64, String) {
    rows.iter()
        .map(|r| (r.violation(x), r.name.clone()))
        .fold((0.0, String::new()), |a, b| if b.0 > a.0 { b } else { a })
}

#[test]
fn initial_wealth_is_110000() {
    let inst = AlmInstance::default();
    let sum: f64 = inst.assets.iter().map(|a| a.initial).sum::<f64>() + inst.params.initial_cash;
    assert_eq!(sum, 110_000.0);
    let t = common::tree(&[2], 1);
    let reg = VariableRegistry::new(&t, &inst, false);
    let bud = &budget_rows(&t, &inst, &reg)[0];
    assert_eq!(bud.rhs, 110_000.0);
}

#[test]
fn conservation_without_flows() {
    let mut inst = AlmInstance::default();
    inst.params.risk_free = 0.0;
    for a in &mut inst.assets {
        a.buy_cost = 0.0;
        a.sell_cost = 0.0;
    }
    let mut t = common::tree(&[2, 2], 3);
    for n in &mut t.nodes {
        n.state.gross_returns.iter_mut().for_each(|g| *g = 1.0);
        n.state.benefits = 0.0;
    }
    let reg = VariableRegistry::new(&t, &inst, false);
    let x = simulate_policy(&t, &inst, &reg, &FixedPolicy::buy_and_hold(0.0), inst.params.gamma);
    for n in t.non_leaves() {
        assert_eq!(x[reg.col(n.id, Role::Wealth)], 110_000.0);
        assert_eq!(x[reg.col(n.id, Role::Cash)], 4_950.0);
    }
    let (v, name) = worst_violation(&dynamics_rows(&t, &inst, &reg), &x);
    assert_eq!(v, 0.0, "{name}");
}

#[test]
fn selling_all_bonds_at_root() {
    let inst = AlmInstance::default();
    let t = common::tree(&[2], 1);
    let reg = VariableRegistry::new(&t, &inst, false);
    let row = holding_rows(&t, &inst, &reg)
        .into_iter()
        .find(|r| r.name == "HL2_0")
        .unwrap();
    let mut x = vec![0.0; reg.len()];
    x[reg.col(0, Role::Sell(1))] = 38_500.0;
    assert_eq!(row.violation(&x), 0.0);
    x[reg.col(0, Role::Buy(1))] = 1.0;
    assert!(row.violation(&x) > 0.0);
}

#[test]
fn buying_stocks_costs_cash_plus_fee() {
    let inst = AlmInstance::default();
    let t = common::tree(&[2], 1);
    let reg = VariableRegistry::new(&t, &inst, false);
    let row = &cash_rows(&t, &inst, &reg)[0];
    let b = reg.col(0, Role::Buy(3));
    let coef = row.terms.iter().find(|(j, _)| *j == b).unwrap().1;
    assert_eq!(coef, 1.00425);
}

#[test]
fn portfolio_bounds_posted_as_rows() {
    let inst = AlmInstance::default();
    let t = common::tree(&[2], 1);
    let reg = VariableRegistry::new(&t, &inst, false);
    let rows = portfolio_rows(&t, &inst, &reg);
    let a = reg.col(0, Role::Wealth);
    let coef = |name: &str| {
        let r = rows.iter().find(|r| r.name == name).unwrap();
        r.terms.iter().find(|(j, _)| *j == a).unwrap().1
    };
    assert_eq!(coef("PU4_0"), -0.5);
    assert_eq!(coef("PL2_0"), -0.1);
    let mut loose = inst.clone();
    for a in &mut loose.assets {
        a.lower = 0.0;
        a.upper = 1.0;
    }
    assert!(portfolio_rows(&t, &loose, &reg).is_empty());
}

#[test]
fn contribution_bounds_live_on_columns() {
    let inst = AlmInstance::default();
    let t = common::tree(&[2, 2], 1);
    let reg = VariableRegistry::new(&t, &inst, false);
    let m = build_model(&t, &inst, no_risk(&IccConfig::from_params(&inst.params)).as_ref()).unwrap();
    let cr = &m.lp.columns()[reg.col(0, Role::Rate)];
    assert_eq!((cr.lower, cr.upper), (-0.08, 0.3));
    let dc = &m.lp.columns()[reg.col(1, Role::RateChange)];
    assert_eq!((dc.lower, dc.upper), (-0.08, 0.05));
    let da = &m.lp.columns()[reg.col(1, Role::RateChangeAbs)];
    assert_eq!((da.lower, da.upper), (0.0, f64::INFINITY));
}

#[test]
fn single_child_liquidity_reduces_to_one_scenario() {
    let inst = AlmInstance::default();
    let t = common::tree(&[1], 8);
    let reg = VariableRegistry::new(&t, &inst, false);
    let row = &liquidity_rows(&t, &inst, &reg)[0];
    let c = &t.nodes[1].state;
    assert_eq!(row.rhs, c.benefits);
    let w = row.terms.iter().find(|(j, _)| *j == reg.col(0, Role::Rate)).unwrap().1;
    assert_eq!(w, c.wages);
}

#[test]
fn one_period_deterministic_objective() {
    let mut inst = AlmInstance::default();
    inst.params.target_funding = 0.0;
    let t = common::tree(&[1], 8);
    let s = common::solve(&t, &inst, "none");
    assert_eq!(s.result.status, Status::Optimal);
    let root = s.solution.root().unwrap();
    assert!((root.rate - inst.params.cr_lower).abs() < 1e-9);
    let want = inst.params.discount(1) * root.rate * t.nodes[1].state.wages;
    assert!((s.result.objective - want).abs() < 1e-6);
}

#[test]
fn unreachable_terminal_target_is_infeasible() {
    let mut inst = AlmInstance::default();
    inst.params.target_funding = 10.0;
    inst.params.lambda_z = 0.0;
    let t = common::tree(&[2], 5);
    // Remedial money could close any gap; forbid it to make the cap bind.
    let r = no_risk(&IccConfig::from_params(&inst.params));
    let mut m = build_model(&t, &inst, r.as_ref()).unwrap();
    let z = m.registry.col(0, Role::Remedial);
    m.lp.set_bounds(z, 0.0, 0.0);
    let res = solve(&m.lp, &SolveOptions::default()).unwrap();
    assert_eq!(res.status, Status::Infeasible);
}

#[test]
fn dump_lists_every_row() {
    let inst = AlmInstance::default();
    let t = common::tree(&[2, 2], 1);
    let m = build_model(&t, &inst, common::risk("oicc", &inst).as_ref()).unwrap();
    let mut buf = Vec::new();
    m.lp.write_dump(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    for r in m.lp.rows() {
        assert!(text.contains(&format!("\n{}:", r.name)), "{}", r.name);
    }
    assert!(text.contains("BUD_0:") && text.contains("TRM_") && text.contains("ICA_0:"));
}

fn hand_objective(t: &ScenarioTree, inst: &AlmInstance, reg: &VariableRegistry, x: &[f64]) -> f64 {
    let p = &inst.params;
    let v = |t: usize| 1.0 / (1.0 + p.risk_free).powi(t as i32);
    let mut total = 0.0;
    for n in &t.nodes {
        if n.is_leaf() {
            continue;
        }
        let cr = x[reg.col(n.id, Role::Rate)];
        for &c in &n.children {
            let ch = &t.nodes[c];
            total += ch.path_prob * v(ch.time) * cr * ch.state.wages;
            if !ch.is_leaf() {
                let change = (x[reg.col(c, Role::Rate)] - cr).abs();
                total += p.lambda_dcr * ch.path_prob * v(ch.time) * ch.state.wages * change;
            }
        }
        total += p.lambda_z * n.path_prob * v(n.time) * x[reg.col(n.id, Role::Remedial)];
    }
    total
}

fn policy() -> impl Strategy<Value = FixedPolicy> {
    (
        prop::option::of(prop::collection::vec(0.05f64..1.0, 4)),
        prop::collection::vec(-0.08f64..0.3, 1..4),
        0.0f64..5_000.0,
    )
        .prop_map(|(targets, rates, extra)| FixedPolicy {
            targets: targets.map(|t| {
                // Leave 10% in cash.
                let s: f64 = t.iter().sum();
                t.iter().map(|v| 0.9 * v / s).collect()
            }),
            rates,
            extra_remedial: extra,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simulated_policies_satisfy_dynamics(
        b in prop::collection::vec(1usize..4, 1..4),
        seed in any::<u64>(),
        pol in policy(),
    ) {
        let inst = AlmInstance::default();
        let t = common::tree(&b, seed);
        let reg = VariableRegistry::new(&t, &inst, true);
        let x = simulate_policy(&t, &inst, &reg, &pol, inst.params.gamma);
        let (v, name) = worst_violation(&dynamics_rows(&t, &inst, &reg), &x);
        prop_assert!(v <= 1e-10, "row {} violated by {:e}", name, v);
    }

    #[test]
    fn objective_matches_hand_expansion(
        b in prop::collection::vec(1usize..4, 1..4),
        seed in any::<u64>(),
        pol in policy(),
    ) {
        let inst = AlmInstance::default();
        let t = common::tree(&b, seed);
        let r = no_risk(&IccConfig::from_params(&inst.params));
        let m = build_model(&t, &inst, r.as_ref()).unwrap();
        let x = simulate_policy(&t, &inst, &m.registry, &pol, inst.params.gamma);
        let got = m.lp.objective_value(&x);
        let want = hand_objective(&t, &inst, &m.registry, &x);
        prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0));
    }

    #[test]
    fn liquidity_activity_matches_expectation(
        b in prop::collection::vec(1usize..4, 1..4),
        seed in any::<u64>(),
        cash in 0.0f64..50_000.0,
        rate in -0.08f64..0.3,
    ) {
        let inst = AlmInstance::default();
        let t = common::tree(&b, seed);
        let reg = VariableRegistry::new(&t, &inst, false);
        let mut x = vec![0.0; reg.len()];
        for n in t.non_leaves() {
            x[reg.col(n.id, Role::Cash)] = cash;
            x[reg.col(n.id, Role::Rate)] = rate;
        }
        for (row, n) in liquidity_rows(&t, &inst, &reg).iter().zip(t.non_leaves()) {
            let lhs_minus_rhs = row.activity(&x) - row.rhs;
            let want = t.conditional_expectation(n.id, |c| {
                cash * (1.0 + inst.params.risk_free) + rate * c.state.wages - c.state.benefits
            }).unwrap();
            prop_assert!((lhs_minus_rhs - want).abs() <= 1e-9 * want.abs().max(1.0));
        }
    }

    #[test]
    fn dimensions_match_closed_form(
        b in prop::collection::vec(1usize..4, 1..4),
        seed in any::<u64>(),
        mode in prop::sample::select(vec!["none", "oicc", "micc", "micc-naive"]),
    ) {
        let inst = AlmInstance::default();
        let t = common::tree(&b, seed);
        let r = common::risk(mode, &inst);
        let m = build_model(&t, &inst, r.as_ref()).unwrap();
        prop_assert_eq!(m.size(), expected_size(&t, &inst, r.as_ref()));
        // Default data: 4 assets, bonds lower bound plus three upper bounds.
        let n = t.num_nodes();
        let nl = t.non_leaves().count();
        let leaves = n - nl;
        let shortfall = if mode == "none" { 0 } else { n - 1 };
        prop_assert_eq!(m.lp.num_cols(), nl * 16 + 2 * (nl - 1) + shortfall);
        let risk_rows = match mode {
            "none" => 0,
            "micc-naive" => (n - 1) + t.non_leaves().map(|x| x.time + 1).sum::<usize>(),
            _ => (n - 1) + nl,
        };
        prop_assert_eq!(m.lp.num_rows(), nl * 7 + nl * 4 + 3 * (nl - 1) + leaves + risk_rows);
    }
}

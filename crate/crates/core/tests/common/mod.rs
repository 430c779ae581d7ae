#![allow(dead_code)]

use alm_core::icc::{IccConfig, RiskConstraint, RiskRegistry};
use alm_core::instance::AlmInstance;
use alm_core::solve::{solve_instance, SolvedModel};
use alm_core::tree::{build_tree, ScenarioTree};
use alm_core::var_model::build_default_process;
use alm_lp::SolveOptions;

pub fn tree(branching: &[usize], seed: u64) -> ScenarioTree {
    tree_for(&AlmInstance::default(), branching, seed)
}

pub fn tree_for(inst: &AlmInstance, branching: &[usize], seed: u64) -> ScenarioTree {
    let p = build_default_process().unwrap();
    build_tree(&p, branching, &inst.params.initials(), seed).unwrap()
}

pub fn risk(mode: &str, inst: &AlmInstance) -> Box<dyn RiskConstraint> {
    RiskRegistry::default()
        .create(mode, &IccConfig::from_params(&inst.params))
        .unwrap()
}

pub fn solve(tree: &ScenarioTree, inst: &AlmInstance, mode: &str) -> SolvedModel {
    let r = risk(mode, inst);
    solve_instance(tree, inst, r.as_ref(), &SolveOptions::default()).unwrap()
}

pub fn with_alpha(alpha: f64) -> AlmInstance {
    let mut inst = AlmInstance::default();
    inst.params.alpha = alpha;
    inst
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

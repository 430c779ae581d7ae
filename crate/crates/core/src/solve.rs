//! Build, solve and read back in one call.

use alm_lp::{solve, LpResult, SolveOptions};

use crate::icc::RiskConstraint;
use crate::instance::AlmInstance;
use crate::model::{build_model, AlmModel, ModelError};
use crate::solution::Solution;
use crate::tree::ScenarioTree;

#[derive(Debug, Clone)]
pub struct SolvedModel {
    pub model: AlmModel,
    pub result: LpResult,
    pub solution: Solution,
}

pub fn solve_instance(
    tree: &ScenarioTree,
    inst: &AlmInstance,
    risk: &dyn RiskConstraint,
    opts: &SolveOptions,
) -> Result<SolvedModel, ModelError> {
    let model = build_model(tree, inst, risk)?;
    let result = solve(&model.lp, opts)?;
    let solution = Solution::from_values(tree, inst, &model, &result);
    Ok(SolvedModel {
        model,
        result,
        solution,
    })
}

//! Experiment configuration, read from TOML.
//!
//! Every section is optional; missing fields fall back to the compiled-in
//! calibration. See the README for the full schema.

use std::path::{Path, PathBuf};

use alm_lp::SolveOptions;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::icc::RiskRegistry;
use crate::instance::{default_assets, AlmInstance, AssetClass, FundParameters, InstanceError};
use crate::tree::{build_tree_from, node_count, ScenarioTree, TreeError};
use crate::var_model::{build_default_process, VarError, VarProcess};

/// Trees above this many nodes are not solved in-process; they are exported
/// as MPS instead.
pub const MAX_EMBEDDED_NODES: usize = 2_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Var(#[from] VarError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeConfig {
    pub branching: Vec<usize>,
    pub seed: u64,
    /// Log state the first period is conditioned on; the stationary mean of
    /// the process when absent.
    pub initial_log_state: Option<Vec<f64>>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            branching: vec![4, 4, 3, 3, 2],
            seed: 42,
            initial_log_state: None,
        }
    }
}

/// Replacements for parts of the default VAR calibration. Matrices are
/// given row by row.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VarOverrides {
    pub intercept: Option<Vec<f64>>,
    pub lag: Option<Vec<Vec<f64>>>,
    pub residual_sd: Option<Vec<f64>>,
    pub residual_corr: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVariable {
    Alpha,
    F0,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::Alpha => "alpha",
            SweepVariable::F0 => "f0",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub modes: Vec<String>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            variable: SweepVariable::Alpha,
            start: 0.0,
            stop: 0.18,
            step: 0.02,
            modes: vec!["oicc".into(), "micc".into()],
        }
    }
}

impl SweepConfig {
    /// Grid points `start, start + step, …` up to `stop` inclusive. Values
    /// are rounded to 12 decimals so `0.06` prints as `0.06`.
    pub fn grid(&self) -> Vec<f64> {
        if self.step <= 0.0 || self.stop < self.start {
            return Vec::new();
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| {
                let v = self.start + i as f64 * self.step;
                (v * 1e12).round() / 1e12
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: Option<usize>,
    pub refactor_interval: usize,
    pub degenerate_streak: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolveOptions::default();
        Self {
            tol: o.tol,
            max_iters: o.max_iters,
            refactor_interval: o.refactor_interval,
            degenerate_streak: o.degenerate_streak,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub tree: TreeConfig,
    pub fund: FundParameters,
    pub assets: Vec<AssetClass>,
    pub var: VarOverrides,
    pub sweep: SweepConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            tree: TreeConfig::default(),
            fund: FundParameters::default(),
            assets: default_assets(),
            var: VarOverrides::default(),
            sweep: SweepConfig::default(),
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, ConfigError> {
    let n = rows.len();
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(ConfigError::Invalid(format!(
            "var.{what} must be square: {n} rows but a row has {} entries",
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.tree.branching.is_empty() {
            return Err(TreeError::EmptyBranching.into());
        }
        if let Some(t) = self.tree.branching.iter().position(|&b| b == 0) {
            return Err(TreeError::ZeroBranch(t).into());
        }
        self.instance().validate()?;
        let s = &self.sweep;
        if !(s.step > 0.0) || !(s.stop >= s.start) || !s.start.is_finite() || !s.stop.is_finite() {
            return Err(ConfigError::Invalid(format!(
                "sweep grid must be increasing: start {} stop {} step {}",
                s.start, s.stop, s.step
            )));
        }
        match s.variable {
            SweepVariable::Alpha if s.start < 0.0 || s.stop > 1.0 => {
                return Err(ConfigError::Invalid("alpha grid must lie in [0, 1]".into()));
            }
            SweepVariable::F0 if s.start <= 0.0 => {
                return Err(ConfigError::Invalid("f0 grid must be positive".into()));
            }
            _ => {}
        }
        if s.modes.is_empty() {
            return Err(ConfigError::Invalid("sweep.modes is empty".into()));
        }
        let registry = RiskRegistry::default();
        for m in &s.modes {
            if !registry.names().contains(&m.as_str()) {
                return Err(ConfigError::Invalid(format!(
                    "unknown mode {m:?}; available: {}",
                    registry.names().join(", ")
                )));
            }
        }
        let p = self.process()?;
        if let Some(h0) = &self.tree.initial_log_state {
            if h0.len() != p.dim() {
                return Err(ConfigError::Invalid(format!(
                    "tree.initial_log_state has {} entries, process has {}",
                    h0.len(),
                    p.dim()
                )));
            }
        }
        if p.dim() != self.assets.len() + 1 {
            return Err(ConfigError::Invalid(format!(
                "process has {} series but {} assets are configured (expected wages + one per asset)",
                p.dim(),
                self.assets.len()
            )));
        }
        Ok(())
    }

    pub fn instance(&self) -> AlmInstance {
        AlmInstance {
            assets: self.assets.clone(),
            params: self.fund.clone(),
        }
    }

    /// Default calibration with any `[var]` overrides applied.
    pub fn process(&self) -> Result<VarProcess, ConfigError> {
        let base = build_default_process()?;
        let v = &self.var;
        let intercept = v
            .intercept
            .as_ref()
            .map(|c| DVector::from_vec(c.clone()))
            .unwrap_or(base.intercept);
        let lag = match &v.lag {
            Some(m) => matrix(m, "lag")?,
            None => base.lag,
        };
        let sd = v
            .residual_sd
            .as_ref()
            .map(|c| DVector::from_vec(c.clone()))
            .unwrap_or(base.residual_sd);
        let corr = match &v.residual_corr {
            Some(m) => matrix(m, "residual_corr")?,
            None => base.residual_corr,
        };
        Ok(VarProcess::new(intercept, lag, sd, corr)?)
    }

    pub fn node_count(&self) -> usize {
        node_count(&self.tree.branching)
    }

    /// Whether the tree is small enough for the embedded solver.
    pub fn is_desk_scale(&self) -> bool {
        self.node_count() <= MAX_EMBEDDED_NODES
    }

    pub fn build_tree(&self) -> Result<ScenarioTree, ConfigError> {
        let process = self.process()?;
        let h0 = match &self.tree.initial_log_state {
            Some(h) => DVector::from_vec(h.clone()),
            None => process.stationary_mean()?,
        };
        Ok(build_tree_from(
            &process,
            &self.tree.branching,
            &self.fund.initials(),
            self.tree.seed,
            &h0,
        )?)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.solver.tol,
            max_iters: self.solver.max_iters,
            refactor_interval: self.solver.refactor_interval,
            degenerate_streak: self.solver.degenerate_streak,
            ..SolveOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.node_count(), 501);
        assert!(cfg.is_desk_scale());
    }

    #[test]
    fn default_alpha_grid_has_ten_points() {
        let g = SweepConfig::default().grid();
        assert_eq!(g.len(), 10);
        assert_eq!(g[3], 0.06);
        assert_eq!(*g.last().unwrap(), 0.18);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = ExperimentConfig::default();
        cfg.tree.branching = vec![3, 2];
        cfg.sweep.variable = SweepVariable::F0;
        cfg.sweep.start = 0.5;
        cfg.sweep.stop = 1.5;
        cfg.sweep.step = 0.25;
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.sweep.grid(), vec![0.5, 0.75, 1.0, 1.25, 1.5]);
    }

    #[test]
    fn partial_sections_override_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            "[tree]\nbranching = [2, 2]\n\n[fund]\nalpha = 0.05\nkappa = 1.0\n",
        )
        .unwrap();
        assert_eq!(cfg.tree.branching, vec![2, 2]);
        assert_eq!(cfg.tree.seed, 42);
        assert_eq!(cfg.fund.alpha, 0.05);
        assert_eq!(cfg.fund.lambda_z, 350.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            ExperimentConfig::from_toml_str("[fund]\nbogus = 1\n"),
            Err(ConfigError::Parse(_))
        ));
        assert!(ExperimentConfig::from_toml_str("[sweep]\nstep = -0.1\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[sweep]\nmodes = [\"cvar\"]\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[tree]\nbranching = []\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[var]\nresidual_sd = [0.1, 0.1]\n").is_err());
    }

    #[test]
    fn full_scale_tree_is_not_desk_scale() {
        let mut cfg = ExperimentConfig::default();
        cfg.tree.branching = vec![10, 6, 6, 4, 4];
        assert!(!cfg.is_desk_scale());
    }
}

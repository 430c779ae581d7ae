//! Parameter sweeps over α or the initial funding ratio.
//!
//! All grid points share one scenario tree. For an `f0` sweep the tree's
//! liabilities are rescaled rather than regenerated, since liabilities grow
//! proportionally to `L_0` along every path.

use std::io::{BufRead, Write};
use std::time::Instant;

use alm_lp::SolveOptions;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ExperimentConfig, SweepVariable};
use crate::icc::{IccConfig, RiskConstraint, RiskRegistry};
use crate::instance::AlmInstance;
use crate::solve::solve_instance;
use crate::tree::ScenarioTree;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("sweep table: {0}")]
    Schema(String),
}

/// One solved grid point. Numeric outcome fields are `None` unless the
/// solve was optimal.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub mode: String,
    pub value: f64,
    pub status: String,
    pub cr0: Option<f64>,
    pub z0: Option<f64>,
    pub total_cost: Option<f64>,
    pub regular_cost: Option<f64>,
    pub remedial_cost: Option<f64>,
    pub remedial_share: Option<f64>,
    pub objective: Option<f64>,
    /// Cash first, then one entry per asset class.
    pub fractions: Option<Vec<f64>>,
    pub iterations: usize,
    /// Largest oracle shortfall excess over the bound, `max_n (ES_n − β_n)`.
    /// Negative when every bound holds with slack; `-inf` without a bound.
    pub worst_excess: Option<f64>,
    pub wall_seconds: f64,
}

impl SweepRow {
    pub fn empty(mode: &str, value: f64, status: String) -> Self {
        Self {
            mode: mode.to_string(),
            value,
            status,
            cr0: None,
            z0: None,
            total_cost: None,
            regular_cost: None,
            remedial_cost: None,
            remedial_share: None,
            objective: None,
            fractions: None,
            iterations: 0,
            worst_excess: None,
            wall_seconds: 0.0,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == "optimal"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub variable: SweepVariable,
    pub asset_names: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn modes(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.mode.as_str()) {
                out.push(&r.mode);
            }
        }
        out
    }

    pub fn rows_for<'a>(&'a self, mode: &'a str) -> impl Iterator<Item = &'a SweepRow> + 'a {
        self.rows.iter().filter(move |r| r.mode == mode)
    }

    pub fn all_optimal(&self) -> bool {
        self.rows.iter().all(SweepRow::is_optimal)
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = [
            "mode",
            "variable",
            "value",
            "status",
            "cr0",
            "z0",
            "total_cost",
            "regular_cost",
            "remedial_cost",
            "remedial_share",
            "objective",
            "max_excess",
            "frac_cash",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        h.extend(self.asset_names.iter().map(|a| format!("frac_{a}")));
        h.push("iterations".into());
        h
    }

    /// Writes the fixed-schema CSV. Output depends only on the solved
    /// values, so identical inputs give identical bytes.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            let mut rec = vec![
                r.mode.clone(),
                self.variable.as_str().to_string(),
                r.value.to_string(),
                r.status.clone(),
                opt(r.cr0),
                opt(r.z0),
                opt(r.total_cost),
                opt(r.regular_cost),
                opt(r.remedial_cost),
                opt(r.remedial_share),
                opt(r.objective),
                opt(r.worst_excess),
            ];
            match &r.fractions {
                Some(f) => rec.extend(f.iter().map(|v| v.to_string())),
                None => rec.extend(std::iter::repeat_n(String::new(), self.asset_names.len() + 1)),
            }
            rec.push(r.iterations.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses a CSV written by [`write_csv`](Self::write_csv). Wall time is
    /// not stored and comes back as zero.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, ExperimentError> {
        let mut rd = csv::Reader::from_reader(input);
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        let fixed = 13;
        if header.len() < fixed + 1 || header.last().map(String::as_str) != Some("iterations") {
            return Err(ExperimentError::Schema("unexpected header".into()));
        }
        let asset_names: Vec<String> = header[fixed..header.len() - 1]
            .iter()
            .map(|h| {
                h.strip_prefix("frac_")
                    .map(str::to_string)
                    .ok_or_else(|| ExperimentError::Schema(format!("bad column {h}")))
            })
            .collect::<Result<_, _>>()?;
        let mut table = SweepTable {
            variable: SweepVariable::Alpha,
            asset_names,
            rows: Vec::new(),
        };
        if header[..fixed] != table.header()[..fixed] {
            return Err(ExperimentError::Schema("unexpected header".into()));
        }
        let num = |s: &str| -> Result<Option<f64>, ExperimentError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| ExperimentError::Schema(format!("bad number {s:?}")))
            }
        };
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(ExperimentError::Schema("ragged row".into()));
            }
            table.variable = match &rec[1] {
                "alpha" => SweepVariable::Alpha,
                "f0" => SweepVariable::F0,
                v => return Err(ExperimentError::Schema(format!("bad variable {v:?}"))),
            };
            let fr: Vec<Option<f64>> = (fixed - 1..header.len() - 1)
                .map(|i| num(&rec[i]))
                .collect::<Result<_, _>>()?;
            table.rows.push(SweepRow {
                mode: rec[0].to_string(),
                value: num(&rec[2])?.ok_or_else(|| ExperimentError::Schema("missing value".into()))?,
                status: rec[3].to_string(),
                cr0: num(&rec[4])?,
                z0: num(&rec[5])?,
                total_cost: num(&rec[6])?,
                regular_cost: num(&rec[7])?,
                remedial_cost: num(&rec[8])?,
                remedial_share: num(&rec[9])?,
                objective: num(&rec[10])?,
                fractions: fr.into_iter().collect(),
                iterations: rec[header.len() - 1]
                    .parse()
                    .map_err(|_| ExperimentError::Schema("bad iterations".into()))?,
                worst_excess: num(&rec[11])?,
                wall_seconds: 0.0,
            });
        }
        Ok(table)
    }

    /// Per-point wall time, kept apart from the main CSV so that file stays
    /// reproducible.
    pub fn write_timings<W: Write>(&self, out: W) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["mode", "value", "status", "iterations", "wall_seconds"])?;
        for r in &self.rows {
            w.write_record([
                r.mode.clone(),
                r.value.to_string(),
                r.status.clone(),
                r.iterations.to_string(),
                format!("{:.3}", r.wall_seconds),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Copy of `tree` with every liability multiplied by `factor`.
pub fn rescale_liabilities(tree: &ScenarioTree, factor: f64) -> ScenarioTree {
    let mut t = tree.clone();
    for n in &mut t.nodes {
        n.state.liability *= factor;
    }
    t
}

/// Instance and tree for one grid point.
pub fn grid_point(
    tree: &ScenarioTree,
    inst: &AlmInstance,
    variable: SweepVariable,
    value: f64,
) -> (ScenarioTree, AlmInstance) {
    match variable {
        SweepVariable::Alpha => {
            let mut inst = inst.clone();
            inst.params.alpha = value;
            (tree.clone(), inst)
        }
        SweepVariable::F0 => {
            let inst = inst.clone().with_funding_ratio(value);
            let factor = inst.params.l0 / tree.root().state.liability;
            (rescale_liabilities(tree, factor), inst)
        }
    }
}

/// Solves one point and summarizes it.
pub fn solve_point(
    tree: &ScenarioTree,
    inst: &AlmInstance,
    risk: &dyn RiskConstraint,
    opts: &SolveOptions,
    value: f64,
) -> SweepRow {
    let start = Instant::now();
    let solved = solve_instance(tree, inst, risk, opts);
    let wall_seconds = start.elapsed().as_secs_f64();
    let mut row = SweepRow::empty(risk.name(), value, String::new());
    row.wall_seconds = wall_seconds;
    let s = match solved {
        Ok(s) => s,
        Err(e) => {
            row.status = format!("error: {e}");
            return row;
        }
    };
    row.status = s.solution.status.as_str().to_string();
    row.iterations = s.solution.iterations;
    if let Some(root) = s.solution.root() {
        let c = s.solution.costs;
        row.cr0 = Some(root.rate);
        row.z0 = Some(root.remedial);
        row.total_cost = Some(c.total());
        row.regular_cost = Some(c.regular);
        row.remedial_cost = Some(c.remedial);
        row.remedial_share = Some(c.remedial_share());
        row.objective = Some(s.solution.objective);
        row.fractions = s.solution.root_fractions();
        let audit = crate::icc::shortfall_audit(tree, inst, &s.solution, risk, risk.gamma());
        row.worst_excess = Some(crate::icc::worst_excess(&audit));
    }
    row
}

/// Runs every mode over the configured grid on one shared tree, using up to
/// `jobs` worker threads. Rows come back mode-major in grid order.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    tree: &ScenarioTree,
    registry: &RiskRegistry,
    jobs: usize,
) -> Result<SweepTable, ExperimentError> {
    let inst = cfg.instance();
    let opts = cfg.solve_options();
    let grid = cfg.sweep.grid();
    let tasks: Vec<(&str, f64)> = cfg
        .sweep
        .modes
        .iter()
        .flat_map(|m| grid.iter().map(move |&v| (m.as_str(), v)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()?;
    let rows = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(mode, value)| {
                let (t, i) = grid_point(tree, &inst, cfg.sweep.variable, value);
                let risk = match registry.create(mode, &IccConfig::from_params(&i.params)) {
                    Ok(r) => r,
                    Err(e) => {
                        return SweepRow::empty(mode, value, format!("error: {e}"))
                    }
                };
                solve_point(&t, &i, risk.as_ref(), &opts, value)
            })
            .collect()
    });
    Ok(SweepTable {
        variable: cfg.sweep.variable,
        asset_names: inst.assets.iter().map(|a| a.name.clone()).collect(),
        rows,
    })
}

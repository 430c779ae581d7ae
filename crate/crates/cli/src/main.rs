use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use alm_core::config::{ExperimentConfig, MAX_EMBEDDED_NODES};
use alm_core::experiment::run_sweep;
use alm_core::icc::{shortfall_audit, worst_excess, write_audit_csv, IccConfig, RiskConstraint, RiskRegistry};
use alm_core::model::{build_model, expected_size, AlmModel};
use alm_core::output::emit_outputs;
use alm_core::solution::{read_solution_file, write_solution_file, Solution};
use alm_core::tree::ScenarioTree;
use alm_core::tree_io::write_tree;
use alm_lp::{check_solution, export_mps, solve, Status};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

/// Shortfall bounds are verified to this absolute tolerance in currency units.
const SHORTFALL_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "alm", version, about = "Pension fund ALM on scenario trees with integrated chance constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the scenario tree and write it as text.
    Tree(Common),
    /// Build the LP and write it as MPS plus a readable dump.
    Build(Common),
    /// Solve one instance at the configured alpha.
    Solve(Common),
    /// Run the configured alpha or f0 sweep.
    Sweep(Common),
    /// Re-verify a solution file against residual and shortfall checks.
    Check {
        /// Solution file written by `solve`.
        solution: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment configuration; compiled-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the tree seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Risk constraint mode (none, oicc, micc, micc-naive).
    #[arg(long)]
    mode: Option<String>,
    /// Output directory; defaults to the config's output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

struct RunContext {
    cfg: ExperimentConfig,
    out: PathBuf,
    registry: RiskRegistry,
}

impl Common {
    fn load(&self) -> Result<RunContext> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.tree.seed = seed;
        }
        let registry = RiskRegistry::default();
        if let Some(m) = &self.mode {
            if !registry.names().contains(&m.as_str()) {
                bail!("unknown mode {m:?}; available: {}", registry.names().join(", "));
            }
            cfg.sweep.modes = vec![m.clone()];
        }
        let out = self.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
        std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok(RunContext { cfg, out, registry })
    }

    /// Single mode for commands that solve or build one model.
    fn single_mode(&self, cfg: &ExperimentConfig) -> String {
        self.mode.clone().unwrap_or_else(|| cfg.sweep.modes[0].clone())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn risk_for(ctx: &RunContext, mode: &str) -> Result<Box<dyn RiskConstraint>> {
    Ok(ctx.registry.create(mode, &IccConfig::from_params(&ctx.cfg.fund))?)
}

fn write_model(ctx: &RunContext, model: &AlmModel, mode: &str) -> Result<(PathBuf, PathBuf)> {
    let mps = ctx.out.join(format!("model_{mode}.mps"));
    let mut w = create(&mps)?;
    export_mps(&model.lp, &mut w)?;
    w.flush()?;
    let dump = ctx.out.join(format!("model_{mode}.txt"));
    let mut w = create(&dump)?;
    model.lp.write_dump(&mut w)?;
    w.flush()?;
    Ok((mps, dump))
}

fn warn_large(ctx: &RunContext) -> bool {
    if ctx.cfg.is_desk_scale() {
        return false;
    }
    eprintln!(
        "warning: tree has {} nodes (limit {MAX_EMBEDDED_NODES}); writing MPS for an external solver instead of solving",
        ctx.cfg.node_count()
    );
    true
}

fn cmd_tree(c: &Common) -> Result<bool> {
    let ctx = c.load()?;
    let tree = ctx.cfg.build_tree()?;
    let path = ctx.out.join("tree.txt");
    let mut w = create(&path)?;
    write_tree(&tree, &mut w)?;
    w.flush()?;
    println!(
        "tree {:?}: {} nodes, {} scenarios, seed {} -> {}",
        tree.branching,
        tree.num_nodes(),
        tree.leaves().count(),
        tree.seed,
        path.display()
    );
    Ok(true)
}

fn cmd_build(c: &Common) -> Result<bool> {
    let ctx = c.load()?;
    let mode = c.single_mode(&ctx.cfg);
    let tree = ctx.cfg.build_tree()?;
    let inst = ctx.cfg.instance();
    let risk = risk_for(&ctx, &mode)?;
    let model = build_model(&tree, &inst, risk.as_ref())?;
    let want = expected_size(&tree, &inst, risk.as_ref());
    if model.size() != want {
        bail!("model size {:?} differs from closed form {:?}", model.size(), want);
    }
    let (mps, dump) = write_model(&ctx, &model, &mode)?;
    println!(
        "{mode}: {} rows, {} columns, {} nonzeros -> {}, {}",
        model.lp.num_rows(),
        model.lp.num_cols(),
        model.lp.num_nonzeros(),
        mps.display(),
        dump.display()
    );
    Ok(true)
}

fn report_solution(tree: &ScenarioTree, sol: &Solution, asset_names: &[String]) {
    let Some(root) = sol.root() else { return };
    let c = sol.costs;
    println!("  cr0 {:.6}  Z0 {:.2}", root.rate, root.remedial);
    println!(
        "  total cost {:.2} (regular {:.2}, remedial {:.2}, remedial share {:.4})",
        c.total(),
        c.regular,
        c.remedial,
        c.remedial_share()
    );
    let fr = sol.root_fractions().unwrap_or_default();
    let mut line = format!("  root allocation: cash {:.4}", fr[0]);
    for (name, f) in asset_names.iter().zip(&fr[1..]) {
        line += &format!(", {name} {f:.4}");
    }
    println!("{line}");
    println!("  {} nodes, {} scenarios", tree.num_nodes(), tree.leaves().count());
}

fn cmd_solve(c: &Common) -> Result<bool> {
    let ctx = c.load()?;
    let mode = c.single_mode(&ctx.cfg);
    let tree = ctx.cfg.build_tree()?;
    let inst = ctx.cfg.instance();
    let risk = risk_for(&ctx, &mode)?;
    let model = build_model(&tree, &inst, risk.as_ref())?;
    if warn_large(&ctx) {
        let (mps, _) = write_model(&ctx, &model, &mode)?;
        println!("{mode}: not solved, model written to {}", mps.display());
        return Ok(false);
    }
    let start = Instant::now();
    let result = solve(&model.lp, &ctx.cfg.solve_options())?;
    let secs = start.elapsed().as_secs_f64();
    let sol = Solution::from_values(&tree, &inst, &model, &result);
    println!(
        "{mode} alpha={}: {} objective {:.6} after {} iterations ({secs:.2} s)",
        inst.params.alpha, result.status, result.objective, result.iterations
    );
    let path = ctx.out.join(format!("solution_{mode}.txt"));
    let mut w = create(&path)?;
    write_solution_file(&model, &result, &mut w)?;
    w.flush()?;
    if result.status != Status::Optimal {
        return Ok(false);
    }
    report_solution(&tree, &sol, &inst.assets.iter().map(|a| a.name.clone()).collect::<Vec<_>>());
    let report = check_solution(&model.lp, &result, None);
    println!("  max residual {:.3e}", report.max_residual());
    let audit = shortfall_audit(&tree, &inst, &sol, risk.as_ref(), risk.gamma());
    let audit_path = ctx.out.join(format!("audit_{mode}.csv"));
    write_audit_csv(&audit, create(&audit_path)?)?;
    println!("  solution -> {}, shortfall audit -> {}", path.display(), audit_path.display());
    Ok(report.passed() && worst_excess(&audit) <= SHORTFALL_TOL)
}

fn cmd_sweep(c: &Common) -> Result<bool> {
    let ctx = c.load()?;
    let tree = ctx.cfg.build_tree()?;
    if warn_large(&ctx) {
        let inst = ctx.cfg.instance();
        for mode in &ctx.cfg.sweep.modes {
            let model = build_model(&tree, &inst, risk_for(&ctx, mode)?.as_ref())?;
            let (mps, _) = write_model(&ctx, &model, mode)?;
            println!("{mode}: not solved, model written to {}", mps.display());
        }
        return Ok(false);
    }
    let start = Instant::now();
    let table = run_sweep(&ctx.cfg, &tree, &ctx.registry, c.jobs)?;
    let secs = start.elapsed().as_secs_f64();
    println!(
        "{:<10} {:>8} {:<10} {:>9} {:>14} {:>9}",
        "mode",
        table.variable.as_str(),
        "status",
        "cr0",
        "total_cost",
        "remedial"
    );
    for r in &table.rows {
        let f = |v: Option<f64>, p: usize| v.map(|v| format!("{v:.p$}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<10} {:>8} {:<10} {:>9} {:>14} {:>9}",
            r.mode,
            r.value,
            r.status,
            f(r.cr0, 4),
            f(r.total_cost, 2),
            f(r.remedial_share, 4)
        );
    }
    let written = emit_outputs(&table, &ctx.out)?;
    println!(
        "{} grid points in {secs:.1} s; wrote {} files to {}",
        table.rows.len(),
        written.len(),
        ctx.out.display()
    );
    let bounds_hold = table
        .rows
        .iter()
        .all(|r| r.worst_excess.is_none_or(|e| e <= SHORTFALL_TOL));
    if !bounds_hold {
        eprintln!("warning: a shortfall bound is violated beyond {SHORTFALL_TOL}");
    }
    Ok(table.all_optimal() && bounds_hold)
}

fn cmd_check(solution: &Path, c: &Common) -> Result<bool> {
    let ctx = c.load()?;
    let tree = ctx.cfg.build_tree()?;
    let inst = ctx.cfg.instance();
    // The mode is recorded in the file; read it first to build the right model.
    let mode = {
        let text = std::fs::read_to_string(solution).with_context(|| format!("reading {}", solution.display()))?;
        text.lines()
            .find_map(|l| l.strip_prefix("risk "))
            .map(str::to_string)
            .context("solution file has no risk line")?
    };
    let risk = risk_for(&ctx, &mode)?;
    let model = build_model(&tree, &inst, risk.as_ref())?;
    let (_, result) = read_solution_file(&model, BufReader::new(File::open(solution)?))?;
    println!("{mode}: status {} objective {:.6}", result.status, result.objective);
    if result.status != Status::Optimal {
        return Ok(false);
    }
    let report = check_solution(&model.lp, &result, None);
    println!(
        "  residuals: primal row {:.3e}, bound {:.3e}, dual {:.3e}, complementarity {:.3e}, gap {:.3e}",
        report.primal_row, report.primal_bound, report.dual, report.complementarity, report.duality_gap
    );
    for name in report.flagged.iter().take(20) {
        println!("  flagged: {name}");
    }
    let sol = Solution::from_values(&tree, &inst, &model, &result);
    let audit = shortfall_audit(&tree, &inst, &sol, risk.as_ref(), risk.gamma());
    let excess = worst_excess(&audit);
    println!("  worst shortfall excess over bound {excess:.3e}");
    let ok = report.passed() && excess <= SHORTFALL_TOL;
    println!("  {}", if ok { "PASS" } else { "FAIL" });
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Tree(c) => cmd_tree(c),
        Command::Build(c) => cmd_build(c),
        Command::Solve(c) => cmd_solve(c),
        Command::Sweep(c) => cmd_sweep(c),
        Command::Check { solution, common } => cmd_check(solution, common),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

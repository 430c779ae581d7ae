use alm_lp::{check_solution, solve, LpError, LpProblem, LpResult, Sense, SolveOptions, Status};

fn run(p: &LpProblem) -> LpResult {
    solve(p, &SolveOptions::default()).unwrap()
}

const INF: f64 = f64::INFINITY;

#[test]
fn single_lower_bound_row() {
    let mut p = LpProblem::new("t");
    let x = p.add_col("x", -INF, INF, 1.0).unwrap();
    p.add_row("r", [(x, 1.0)], Sense::Ge, 3.0).unwrap();
    let r = run(&p);
    assert_eq!(r.status, Status::Optimal);
    assert!((r.x[0] - 3.0).abs() < 1e-12);
    assert!((r.objective - 3.0).abs() < 1e-12);
    assert!((r.duals[0] - 1.0).abs() < 1e-12);
    assert!(check_solution(&p, &r, None).passed());
}

#[test]
fn optimum_on_a_facet() {
    let mut p = LpProblem::new("t");
    let x = p.add_col("x", 0.0, 1.0, -1.0).unwrap();
    let y = p.add_col("y", 0.0, 1.0, -1.0).unwrap();
    p.add_row("cap", [(x, 1.0), (y, 1.0)], Sense::Le, 1.0).unwrap();
    let r = run(&p);
    assert_eq!(r.status, Status::Optimal);
    assert!((r.objective + 1.0).abs() < 1e-12);
    assert!((r.x[0] + r.x[1] - 1.0).abs() < 1e-12);
    assert!(check_solution(&p, &r, None).passed());
}

#[test]
fn empty_problem_is_optimal() {
    let p = LpProblem::new("empty");
    let r = run(&p);
    assert_eq!(r.status, Status::Optimal);
    assert_eq!(r.objective, 0.0);
    assert_eq!(r.iterations, 0);
}

#[test]
fn detects_infeasibility() {
    let mut p = LpProblem::new("t");
    let x = p.add_col("x", 0.0, INF, 1.0).unwrap();
    let y = p.add_col("y", 0.0, INF, 1.0).unwrap();
    p.add_row("a", [(x, 1.0), (y, 1.0)], Sense::Le, 1.0).unwrap();
    p.add_row("b", [(x, 1.0), (y, 1.0)], Sense::Ge, 2.0).unwrap();
    assert_eq!(run(&p).status, Status::Infeasible);
}

#[test]
fn detects_unboundedness() {
    let mut p = LpProblem::new("t");
    let x = p.add_col("x", 0.0, INF, -1.0).unwrap();
    let y = p.add_col("y", 0.0, INF, 0.0).unwrap();
    p.add_row("a", [(x, 1.0), (y, -1.0)], Sense::Le, 1.0).unwrap();
    assert_eq!(run(&p).status, Status::Unbounded);
}

#[test]
fn free_variables_and_equalities() {
    // min |u| written as u = p - n, with u pinned by an equality
    let mut p = LpProblem::new("t");
    let u = p.add_col("u", -INF, INF, 0.0).unwrap();
    let pos = p.add_col("p", 0.0, INF, 1.0).unwrap();
    let neg = p.add_col("n", 0.0, INF, 1.0).unwrap();
    p.add_row("split", [(u, 1.0), (pos, -1.0), (neg, 1.0)], Sense::Eq, 0.0).unwrap();
    p.add_row("pin", [(u, 2.0)], Sense::Eq, -5.0).unwrap();
    let r = run(&p);
    assert_eq!(r.status, Status::Optimal);
    assert!((r.x[u] + 2.5).abs() < 1e-12);
    assert!((r.objective - 2.5).abs() < 1e-12);
    assert!(check_solution(&p, &r, None).passed());
}

#[test]
fn iteration_limit_is_reported() {
    let mut p = LpProblem::new("t");
    let cols: Vec<usize> = (0..10)
        .map(|j| p.add_col(format!("x{j}"), 0.0, INF, -1.0 - j as f64).unwrap())
        .collect();
    for i in 0..10 {
        p.add_row(format!("r{i}"), cols.iter().map(|&c| (c, 1.0 + ((i + c) % 3) as f64)), Sense::Le, 10.0)
            .unwrap();
    }
    let r = solve(&p, &SolveOptions { max_iters: Some(0), ..Default::default() }).unwrap();
    assert_eq!(r.status, Status::IterationLimit);
}

/// Beale's example cycles under textbook Dantzig pricing with
/// lowest-index tie breaking.
#[test]
fn degenerate_cycling_example_terminates() {
    let mut p = LpProblem::new("beale");
    let x: Vec<usize> = [-0.75, 150.0, -0.02, 6.0]
        .iter()
        .enumerate()
        .map(|(j, &c)| p.add_col(format!("x{j}"), 0.0, INF, c).unwrap())
        .collect();
    p.add_row("r1", [(x[0], 0.25), (x[1], -60.0), (x[2], -0.04), (x[3], 9.0)], Sense::Le, 0.0).unwrap();
    p.add_row("r2", [(x[0], 0.5), (x[1], -90.0), (x[2], -0.02), (x[3], 3.0)], Sense::Le, 0.0).unwrap();
    p.add_row("r3", [(x[2], 1.0)], Sense::Le, 1.0).unwrap();
    for opts in [
        SolveOptions::default(),
        SolveOptions { degenerate_streak: 0, scale: false, ..Default::default() },
    ] {
        let r = solve(&p, &opts).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.objective + 0.05).abs() < 1e-10, "{}", r.objective);
        assert!(r.iterations <= 50 * 7);
    }
}

#[test]
fn solve_is_bit_deterministic() {
    let mut p = LpProblem::new("t");
    let cols: Vec<usize> = (0..8)
        .map(|j| p.add_col(format!("x{j}"), 0.0, 3.0, ((j * 7) % 5) as f64 - 2.0).unwrap())
        .collect();
    for i in 0..5 {
        p.add_row(
            format!("r{i}"),
            cols.iter().map(|&c| (c, ((i * 3 + c * 5) % 7) as f64 - 2.5)),
            Sense::Le,
            4.0,
        )
        .unwrap();
    }
    let a = run(&p);
    let b = run(&p);
    assert_eq!(a.status, Status::Optimal);
    assert_eq!(a.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    assert_eq!(a.duals.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.duals.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
}

#[test]
fn perturbed_solution_is_flagged_by_row_name() {
    let mut p = LpProblem::new("t");
    let x = p.add_col("x", 0.0, 1.0, -1.0).unwrap();
    let y = p.add_col("y", 0.0, 1.0, -2.0).unwrap();
    p.add_row("cap", [(x, 1.0), (y, 1.0)], Sense::Le, 1.5).unwrap();
    p.add_row("mix", [(x, 1.0), (y, -1.0)], Sense::Ge, -0.5).unwrap();
    let mut r = run(&p);
    assert!(check_solution(&p, &r, None).passed());
    r.x[0] += 0.1;
    let rep = check_solution(&p, &r, None);
    assert!(!rep.passed());
    assert!(rep.flagged.contains(&"cap".to_string()), "{:?}", rep.flagged);
    assert!(rep.primal_row > 0.03);
}

#[test]
fn rejects_malformed_input() {
    let mut p = LpProblem::new("t");
    assert!(matches!(p.add_col("x", 2.0, 1.0, 0.0), Err(LpError::InvalidBounds { .. })));
    assert!(matches!(p.add_col("x", 0.0, 1.0, f64::NAN), Err(LpError::NonFinite(_))));
    let x = p.add_col("x", 0.0, 1.0, 0.0).unwrap();
    assert!(matches!(p.add_row("r", [(x + 1, 1.0)], Sense::Le, 0.0), Err(LpError::UnknownColumn { .. })));
    p.add_col("x", 0.0, 1.0, 0.0).unwrap();
    assert!(matches!(solve(&p, &SolveOptions::default()), Err(LpError::DuplicateName(_))));
}

#[test]
fn duplicate_terms_are_merged() {
    let mut p = LpProblem::new("t");
    let x = p.add_col("x", 0.0, INF, 1.0).unwrap();
    p.add_row("r", [(x, 1.0), (x, 1.0), (x, -0.5)], Sense::Ge, 3.0).unwrap();
    assert_eq!(p.rows()[0].terms, vec![(x, 1.5)]);
    let r = run(&p);
    assert!((r.x[0] - 2.0).abs() < 1e-12);
}

use alm_core::var_model::{build_default_process, cholesky, VarProcess, SERIES};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const STEPS: usize = 100_000;

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

#[test]
fn calibration_matches_published_tables() {
    let p = build_default_process().unwrap();
    let bonds = SERIES.iter().position(|s| *s == "bonds").unwrap();
    let stocks = SERIES.iter().position(|s| *s == "stocks").unwrap();
    assert_eq!(p.intercept[bonds], 0.058);
    assert_eq!(p.residual_sd[bonds], 0.060);
    assert_eq!(p.residual_corr[(1, stocks)], -0.516);
    assert_eq!(p.residual_corr[(stocks, 0)], -0.389);
    assert!(p.lag.row(bonds).iter().all(|&v| v == 0.0));
    assert_eq!(p.lag[(0, 0)], 0.693);
    assert_eq!(p.lag[(1, 1)], 0.644);
}

#[test]
fn cholesky_reconstructs_covariance() {
    let p = build_default_process().unwrap();
    let l = p.chol_factor();
    let err = max_abs(&(l * l.transpose() - p.covariance()));
    assert!(err < 1e-12, "reconstruction error {err:e}");
    for i in 0..p.dim() {
        assert!(l[(i, i)] > 0.0);
        for j in i + 1..p.dim() {
            assert_eq!(l[(i, j)], 0.0);
        }
    }
    let l2 = cholesky(
        &DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]),
        &DVector::from_vec(vec![1.0, 1.0]),
    )
    .unwrap();
    assert!((l2[(1, 1)] - 0.75f64.sqrt()).abs() < 1e-15);
}

fn simulate(p: &VarProcess, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = p.stationary_mean().unwrap();
    let mut out = Vec::with_capacity(STEPS);
    for _ in 0..STEPS {
        h = p.sample_step(&h, &mut rng).unwrap();
        out.push(h.clone());
    }
    out
}

#[test]
fn long_run_means_within_three_standard_errors() {
    let p = build_default_process().unwrap();
    let m = p.stationary_mean().unwrap();
    let path = simulate(&p, 2024);
    for i in 0..p.dim() {
        let mean = path.iter().map(|h| h[i]).sum::<f64>() / STEPS as f64;
        // Long-run standard deviation of an AR(1) sample mean.
        let se = p.residual_sd[i] / (1.0 - p.lag[(i, i)]) / (STEPS as f64).sqrt();
        assert!(
            (mean - m[i]).abs() < 3.0 * se,
            "{}: mean {mean} vs {} (se {se:e})",
            SERIES[i],
            m[i]
        );
    }
    assert_eq!(m[2], 0.058);
}

#[test]
fn innovation_correlations_match() {
    let p = build_default_process().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let d = p.dim();
    let zero = DVector::zeros(d);
    let mut sum = DVector::<f64>::zeros(d);
    let mut cross = DMatrix::<f64>::zeros(d, d);
    for _ in 0..STEPS {
        let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        let e = p.step(&zero, &z).unwrap() - &p.intercept;
        sum += &e;
        cross += &e * e.transpose();
    }
    let n = STEPS as f64;
    let mean = sum / n;
    let cov = cross / n - &mean * mean.transpose();
    for i in 0..d {
        for j in 0..d {
            let r = cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt();
            assert!(
                (r - p.residual_corr[(i, j)]).abs() < 0.02,
                "corr({i},{j}) = {r} vs {}",
                p.residual_corr[(i, j)]
            );
        }
    }
}

#[test]
fn noiseless_iteration_converges_to_stationary_mean() {
    let p = build_default_process().unwrap();
    let m = p.stationary_mean().unwrap();
    let zero = DVector::zeros(p.dim());
    let mut h = DVector::zeros(p.dim());
    let mut prev_err = f64::INFINITY;
    for _ in 0..60 {
        h = p.step(&h, &zero).unwrap();
        let err = (&h - &m).amax();
        assert!(err <= prev_err);
        prev_err = err;
    }
    assert!(prev_err < 1e-9);
}

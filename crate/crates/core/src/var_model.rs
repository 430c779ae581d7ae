//! First-order vector autoregression for log wage growth and log asset
//! returns, with Gaussian innovations.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Series order used throughout: wages first, then the asset classes.
pub const SERIES: [&str; 5] = ["wages", "deposits", "bonds", "real_estate", "stocks"];

#[derive(Debug, Error, PartialEq)]
pub enum VarError {
    #[error("covariance matrix is not positive definite (pivot {pivot}, value {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid correlation matrix: {0}")]
    InvalidCorrelation(String),
    #[error("residual standard deviation {index} must be positive, got {value}")]
    NonPositiveSd { index: usize, value: f64 },
    #[error("lag matrix has spectral radius >= 1; no stationary mean")]
    NonStationary,
}

/// `h_t = c + Ω h_{t−1} + ε_t`, `ε_t ~ N(0, D R D)`.
#[derive(Debug, Clone)]
pub struct VarProcess {
    pub intercept: DVector<f64>,
    pub lag: DMatrix<f64>,
    pub residual_sd: DVector<f64>,
    pub residual_corr: DMatrix<f64>,
    chol: DMatrix<f64>,
}

/// Lower-triangular `L` with `L Lᵀ = diag(sd) · corr · diag(sd)`.
pub fn cholesky(corr: &DMatrix<f64>, sd: &DVector<f64>) -> Result<DMatrix<f64>, VarError> {
    let n = sd.len();
    if corr.nrows() != n || corr.ncols() != n {
        return Err(VarError::Dimension {
            expected: n,
            got: corr.nrows(),
        });
    }
    let sigma = DMatrix::from_fn(n, n, |i, j| sd[i] * corr[(i, j)] * sd[j]);
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = sigma[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(VarError::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = sigma[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

impl VarProcess {
    pub fn new(
        intercept: DVector<f64>,
        lag: DMatrix<f64>,
        residual_sd: DVector<f64>,
        residual_corr: DMatrix<f64>,
    ) -> Result<Self, VarError> {
        let n = intercept.len();
        for got in [
            lag.nrows(),
            lag.ncols(),
            residual_sd.len(),
            residual_corr.nrows(),
            residual_corr.ncols(),
        ] {
            if got != n {
                return Err(VarError::Dimension { expected: n, got });
            }
        }
        for (i, &s) in residual_sd.iter().enumerate() {
            if !(s > 0.0) {
                return Err(VarError::NonPositiveSd { index: i, value: s });
            }
        }
        for i in 0..n {
            if residual_corr[(i, i)] != 1.0 {
                return Err(VarError::InvalidCorrelation(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..n {
                let v = residual_corr[(i, j)];
                if v != residual_corr[(j, i)] {
                    return Err(VarError::InvalidCorrelation(format!("entry ({i},{j}) not symmetric")));
                }
                if v.abs() > 1.0 {
                    return Err(VarError::InvalidCorrelation(format!("entry ({i},{j}) outside [-1,1]")));
                }
            }
        }
        let chol = cholesky(&residual_corr, &residual_sd)?;
        Ok(Self {
            intercept,
            lag,
            residual_sd,
            residual_corr,
            chol,
        })
    }

    pub fn dim(&self) -> usize {
        self.intercept.len()
    }

    pub fn chol_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| {
            self.residual_sd[i] * self.residual_corr[(i, j)] * self.residual_sd[j]
        })
    }

    /// `(I − Ω)⁻¹ c`.
    pub fn stationary_mean(&self) -> Result<DVector<f64>, VarError> {
        let n = self.dim();
        let radius = self
            .lag
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if radius >= 1.0 {
            return Err(VarError::NonStationary);
        }
        let a = DMatrix::<f64>::identity(n, n) - &self.lag;
        a.lu().solve(&self.intercept).ok_or(VarError::NonStationary)
    }

    /// `c + Ω prev + L draws`.
    pub fn step(&self, prev: &DVector<f64>, draws: &DVector<f64>) -> Result<DVector<f64>, VarError> {
        let n = self.dim();
        for got in [prev.len(), draws.len()] {
            if got != n {
                return Err(VarError::Dimension { expected: n, got });
            }
        }
        Ok(&self.intercept + &self.lag * prev + &self.chol * draws)
    }

    /// One step with fresh standard normal draws from `rng`.
    pub fn sample_step<R: Rng + ?Sized>(&self, prev: &DVector<f64>, rng: &mut R) -> Result<DVector<f64>, VarError> {
        let draws = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        self.step(prev, &draws)
    }
}

/// Calibrated five-series process: wages, deposits, bonds, real estate,
/// stocks. Only wages and deposits carry an autoregressive term.
pub fn build_default_process() -> Result<VarProcess, VarError> {
    let intercept = DVector::from_vec(vec![0.018, 0.020, 0.058, 0.072, 0.086]);
    let mut lag = DMatrix::zeros(5, 5);
    lag[(0, 0)] = 0.693;
    lag[(1, 1)] = 0.644;
    let sd = DVector::from_vec(vec![0.030, 0.017, 0.060, 0.112, 0.159]);
    #[rustfmt::skip]
    let corr = DMatrix::from_row_slice(5, 5, &[
         1.000,  0.227, -0.152, -0.008, -0.389,
         0.227,  1.000, -0.268, -0.179, -0.516,
        -0.152, -0.268,  1.000,  0.343,  0.383,
        -0.008, -0.179,  0.343,  1.000,  0.331,
        -0.389, -0.516,  0.383,  0.331,  1.000,
    ]);
    VarProcess::new(intercept, lag, sd, corr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_calibration_values() {
        let p = build_default_process().unwrap();
        assert_eq!(p.intercept[2], 0.058);
        assert_eq!(p.residual_sd[2], 0.060);
        assert_eq!(p.residual_corr[(1, 4)], -0.516);
        assert_eq!(p.residual_corr[(4, 0)], -0.389);
        assert!(p.lag.row(2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cholesky_identity_and_two_by_two() {
        let l = cholesky(&DMatrix::identity(2, 2), &DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert_eq!(l, DMatrix::identity(2, 2));
        let corr = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let l = cholesky(&corr, &DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert_eq!(l[(0, 0)], 1.0);
        assert_eq!(l[(0, 1)], 0.0);
        assert!((l[(1, 0)] - 0.5).abs() < 1e-15);
        assert!((l[(1, 1)] - 0.75f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cholesky_names_failing_pivot() {
        let corr = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, 0.0, 0.9, 1.0, 0.9, 0.0, 0.9, 1.0]);
        let err = cholesky(&corr, &DVector::from_element(3, 1.0)).unwrap_err();
        assert!(matches!(err, VarError::NotPositiveDefinite { pivot: 2, .. }), "{err:?}");
    }

    #[test]
    fn noiseless_step_fixed_points() {
        let p = build_default_process().unwrap();
        let zero = DVector::zeros(5);
        assert_eq!(p.step(&zero, &zero).unwrap(), p.intercept);
        let m = p.stationary_mean().unwrap();
        let next = p.step(&m, &zero).unwrap();
        assert!((next - &m).amax() < 1e-15);
        assert!((m[0] - 0.018 / (1.0 - 0.693)).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = build_default_process().unwrap();
        let err = p.step(&DVector::zeros(4), &DVector::zeros(5)).unwrap_err();
        assert_eq!(err, VarError::Dimension { expected: 5, got: 4 });
    }

    #[test]
    fn rejects_bad_correlation() {
        let mut corr = DMatrix::identity(2, 2);
        corr[(0, 1)] = 0.3;
        let err = VarProcess::new(
            DVector::zeros(2),
            DMatrix::zeros(2, 2),
            DVector::from_element(2, 1.0),
            corr,
        )
        .unwrap_err();
        assert!(matches!(err, VarError::InvalidCorrelation(_)));
    }
}

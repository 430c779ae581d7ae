//! Static fund data: asset classes and deterministic parameters.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::Initials;

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("asset {name}: {msg}")]
    Asset { name: String, msg: String },
    #[error("parameter {name}: {msg}")]
    Parameter { name: &'static str, msg: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetClass {
    pub name: String,
    /// Minimum fraction of total asset.
    pub lower: f64,
    /// Maximum fraction of total asset.
    pub upper: f64,
    pub buy_cost: f64,
    pub sell_cost: f64,
    pub initial: f64,
}

impl AssetClass {
    pub fn new(name: &str, lower: f64, upper: f64, cost: f64, initial: f64) -> Self {
        Self {
            name: name.to_string(),
            lower,
            upper,
            buy_cost: cost,
            sell_cost: cost,
            initial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FundParameters {
    pub risk_free: f64,
    pub lambda_z: f64,
    pub lambda_dcr: f64,
    pub cr_lower: f64,
    pub cr_upper: f64,
    /// Bounds on the signed year-to-year change of the contribution rate.
    pub dcr_lower: f64,
    pub dcr_upper: f64,
    pub initial_cash: f64,
    pub cash_lower: f64,
    pub cash_upper: f64,
    /// Shortfall threshold as a multiple of liability.
    pub gamma: f64,
    /// Required terminal funding ratio.
    pub target_funding: f64,
    pub alpha: f64,
    pub l0: f64,
    pub w0: f64,
    pub ben0: f64,
    /// Benefits grow at `kappa` times wage growth.
    pub kappa: f64,
}

impl Default for FundParameters {
    fn default() -> Self {
        Self {
            risk_free: 0.008,
            lambda_z: 350.0,
            lambda_dcr: 1.0,
            cr_lower: -0.08,
            cr_upper: 0.3,
            dcr_lower: -0.08,
            dcr_upper: 0.05,
            initial_cash: 4950.0,
            cash_lower: 0.0,
            cash_upper: 1.0,
            gamma: 1.05,
            target_funding: 1.05,
            alpha: 0.0,
            l0: 120_000.0,
            w0: 60_000.0,
            ben0: 6_000.0,
            kappa: 0.5,
        }
    }
}

impl FundParameters {
    /// `v_t = (1 + r_f)^{-t}`.
    pub fn discount(&self, t: usize) -> f64 {
        (1.0 + self.risk_free).powi(-(t as i32))
    }

    pub fn initials(&self) -> Initials {
        Initials {
            l0: self.l0,
            w0: self.w0,
            ben0: self.ben0,
            kappa: self.kappa,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlmInstance {
    pub assets: Vec<AssetClass>,
    pub params: FundParameters,
}

pub fn default_assets() -> Vec<AssetClass> {
    vec![
        AssetClass::new("deposits", 0.0, 0.5, 0.0015, 16_500.0),
        AssetClass::new("bonds", 0.1, 1.0, 0.0015, 38_500.0),
        AssetClass::new("real_estate", 0.0, 0.3, 0.00425, 17_600.0),
        AssetClass::new("stocks", 0.0, 0.5, 0.00425, 32_450.0),
    ]
}

impl Default for AlmInstance {
    fn default() -> Self {
        Self {
            assets: default_assets(),
            params: FundParameters::default(),
        }
    }
}

impl AlmInstance {
    pub fn num_assets(&self) -> usize {
        self.assets.len()
    }

    /// `Σ H̄_k + C̄_0`.
    pub fn initial_asset(&self) -> f64 {
        self.assets.iter().map(|a| a.initial).sum::<f64>() + self.params.initial_cash
    }

    /// `Ā_0 / L_0`.
    pub fn initial_funding_ratio(&self) -> f64 {
        self.initial_asset() / self.params.l0
    }

    /// Sets `L_0` so that the initial funding ratio equals `f0`, keeping the
    /// asset side fixed.
    pub fn with_funding_ratio(mut self, f0: f64) -> Self {
        self.params.l0 = self.initial_asset() / f0;
        self
    }

    /// Multiplies every currency quantity by `lambda`.
    pub fn scaled(mut self, lambda: f64) -> Self {
        for a in &mut self.assets {
            a.initial *= lambda;
        }
        let p = &mut self.params;
        p.initial_cash *= lambda;
        p.l0 *= lambda;
        p.w0 *= lambda;
        p.ben0 *= lambda;
        self
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        for a in &self.assets {
            let bad = |msg: &str| {
                Err(InstanceError::Asset {
                    name: a.name.clone(),
                    msg: msg.to_string(),
                })
            };
            if !(0.0 <= a.lower && a.lower <= a.upper && a.upper <= 1.0) {
                return bad("fraction bounds must satisfy 0 <= lower <= upper <= 1");
            }
            if !(0.0..1.0).contains(&a.buy_cost) || !(0.0..1.0).contains(&a.sell_cost) {
                return bad("transaction costs must lie in [0, 1)");
            }
            if !(a.initial >= 0.0) || !a.initial.is_finite() {
                return bad("initial holding must be nonnegative");
            }
        }
        let p = &self.params;
        let bad = |name: &'static str, msg: &str| {
            Err(InstanceError::Parameter {
                name,
                msg: msg.to_string(),
            })
        };
        let finite = [
            ("risk_free", p.risk_free),
            ("lambda_z", p.lambda_z),
            ("lambda_dcr", p.lambda_dcr),
            ("cr_lower", p.cr_lower),
            ("cr_upper", p.cr_upper),
            ("dcr_lower", p.dcr_lower),
            ("dcr_upper", p.dcr_upper),
            ("initial_cash", p.initial_cash),
            ("gamma", p.gamma),
            ("target_funding", p.target_funding),
            ("alpha", p.alpha),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return bad(name, "must be finite");
            }
        }
        if p.cr_lower > p.cr_upper {
            return bad("cr_lower", "exceeds cr_upper");
        }
        if !(p.dcr_lower <= 0.0 && 0.0 <= p.dcr_upper) {
            return bad("dcr_lower", "rate-change bounds must bracket zero");
        }
        if !(0.0 <= p.cash_lower && p.cash_lower <= p.cash_upper && p.cash_upper <= 1.0) {
            return bad("cash_lower", "cash bounds must satisfy 0 <= lower <= upper <= 1");
        }
        if p.initial_cash < 0.0 {
            return bad("initial_cash", "must be nonnegative");
        }
        if !(p.gamma > 0.0) {
            return bad("gamma", "must be positive");
        }
        if !(p.target_funding >= 0.0) {
            return bad("target_funding", "must be nonnegative");
        }
        if !(0.0..=1.0).contains(&p.alpha) {
            return bad("alpha", "must lie in [0, 1]");
        }
        if p.lambda_z < 0.0 || p.lambda_dcr < 0.0 {
            return bad("lambda_z", "penalties must be nonnegative");
        }
        for (name, v) in [("l0", p.l0), ("w0", p.w0), ("ben0", p.ben0)] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(name, "must be positive");
            }
        }
        if !(p.kappa >= 0.0) {
            return bad("kappa", "must be nonnegative");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_initial_asset_is_110000() {
        let inst = AlmInstance::default();
        assert_eq!(inst.initial_asset(), 110_000.0);
        assert!((inst.initial_funding_ratio() - 0.9166).abs() < 1e-4);
        inst.validate().unwrap();
    }

    #[test]
    fn funding_ratio_override_moves_liability() {
        let inst = AlmInstance::default().with_funding_ratio(0.5);
        assert_eq!(inst.params.l0, 220_000.0);
        assert_eq!(inst.initial_asset(), 110_000.0);
    }

    #[test]
    fn discount_factors() {
        let p = FundParameters::default();
        assert_eq!(p.discount(0), 1.0);
        assert!((p.discount(2) - 1.0 / 1.008f64.powi(2)).abs() < 1e-15);
    }

    #[test]
    fn validation_catches_bad_data() {
        let mut inst = AlmInstance::default();
        inst.assets[0].upper = 1.5;
        assert!(inst.validate().is_err());
        let mut inst = AlmInstance::default();
        inst.params.dcr_lower = 0.01;
        assert!(inst.validate().is_err());
        let mut inst = AlmInstance::default();
        inst.params.alpha = 1.5;
        assert!(inst.validate().is_err());
    }
}

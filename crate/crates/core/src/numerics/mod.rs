//! Arithmetic backends and the special functions built on them.

pub mod decimal;
mod gamma;
mod real;

pub use gamma::{
    gamma_density, inverse_regularized_lower_incomplete_gamma, regularized_lower_incomplete_gamma,
    MAX_BISECTION_STEPS,
};
pub use real::{BigFloat, ExactRational, Real};

use crate::error::{Error, Result};

/// Float precision and the residual tolerance paired with it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrecisionConfig {
    pub bits: u32,
    pub tolerance: f64,
}

impl PrecisionConfig {
    pub const DEFAULT_BITS: u32 = 256;
    pub const MIN_BITS: u32 = 64;

    /// `bits` of mantissa with the tolerance scaled from 1e-20 at 256 bits.
    pub fn new(bits: u32) -> Result<Self> {
        if bits < Self::MIN_BITS {
            return Err(Error::Precondition(format!(
                "precision must be at least {} bits, got {bits}",
                Self::MIN_BITS
            )));
        }
        let tolerance = 10f64.powf(-20.0 * f64::from(bits) / 256.0).max(f64::MIN_POSITIVE);
        Ok(PrecisionConfig { bits, tolerance })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if tolerance.is_nan() || tolerance <= 0.0 {
            return Err(Error::Precondition(format!("tolerance must be positive, got {tolerance}")));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    pub fn doubled(&self) -> Self {
        PrecisionConfig::new(self.bits * 2).expect("doubling keeps bits above minimum")
    }

    pub fn tolerance_as<T: Real>(&self, ctx: &T::Context) -> T {
        if T::EXACT {
            T::zero(ctx)
        } else {
            T::from_f64(self.tolerance, ctx)
        }
    }
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        PrecisionConfig::new(Self::DEFAULT_BITS).expect("default precision is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_tolerance_is_1e_minus_20() {
        let cfg = PrecisionConfig::default();
        assert_eq!(cfg.bits, 256);
        assert!((cfg.tolerance / 1e-20 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn precision_floor_is_enforced() {
        assert!(PrecisionConfig::new(32).is_err());
        assert!(PrecisionConfig::new(64).is_ok());
        assert!(PrecisionConfig::default().with_tolerance(0.0).is_err());
    }

    #[test]
    fn exact_backend_has_zero_tolerance() {
        let tol: ExactRational = PrecisionConfig::default().tolerance_as(&());
        assert!(tol.is_zero());
    }
}

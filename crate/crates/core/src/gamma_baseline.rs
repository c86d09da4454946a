//! Conjugate gamma prior: affine posterior mean, numerically inverted
//! posterior median.

use rug::Rational;

use crate::error::{Error, Result};
use crate::numerics::{
    inverse_regularized_lower_incomplete_gamma, regularized_lower_incomplete_gamma, BigFloat,
    PrecisionConfig, Real,
};

/// Gamma prior with shape `theta` and rate `alpha`, together with the affine
/// mean coefficients `E[X | Y = y] = a y + b` it induces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaPrior {
    alpha: Rational,
    theta: Rational,
    a: Rational,
    b: Rational,
}

impl GammaPrior {
    /// `alpha = (1 - a)/a`, `theta = b/a`; requires `0 < a < 1`, `b > 0`.
    pub fn from_affine(a: Rational, b: Rational) -> Result<Self> {
        if a <= 0 || a >= 1 || b <= 0 {
            return Err(Error::Precondition(format!(
                "an affine posterior mean needs 0 < a < 1 and b > 0, got a = {a}, b = {b}"
            )));
        }
        let alpha = (Rational::from(1) - &a) / &a;
        let theta = Rational::from(&b / &a);
        Ok(GammaPrior { alpha, theta, a, b })
    }

    /// From rate `alpha > 0` and shape `theta > 0`.
    pub fn from_rate_shape(alpha: Rational, theta: Rational) -> Result<Self> {
        if alpha <= 0 || theta <= 0 {
            return Err(Error::Precondition(format!(
                "gamma prior needs positive rate and shape, got alpha = {alpha}, theta = {theta}"
            )));
        }
        let denom = Rational::from(&alpha + 1u32);
        let a = Rational::from(denom.recip_ref());
        let b = Rational::from(&theta / &denom);
        Ok(GammaPrior { alpha, theta, a, b })
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    pub fn theta(&self) -> &Rational {
        &self.theta
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    /// `a y + b = (theta + y)/(alpha + 1)`, exact.
    pub fn conditional_mean(&self, y: u64) -> Rational {
        Rational::from(&self.a * y) + &self.b
    }

    /// Median of the posterior Gamma(shape `theta + y`, rate `alpha + 1`).
    pub fn conditional_median(&self, y: u64, config: &PrecisionConfig) -> Result<BigFloat> {
        let bits = config.bits;
        let shape = BigFloat::from_rational(&(Rational::from(&self.theta + y)), &bits);
        let half = BigFloat::from_rational(&Rational::from((1, 2)), &bits);
        let unit_rate_median = inverse_regularized_lower_incomplete_gamma(&shape, &half, config)?;
        let rate = BigFloat::from_rational(&Rational::from(&self.alpha + 1u32), &bits);
        Ok(unit_rate_median / rate)
    }

    /// Posterior median minus posterior mean.
    pub fn median_mean_gap(&self, y: u64, config: &PrecisionConfig) -> Result<BigFloat> {
        let median = self.conditional_median(y, config)?;
        Ok(median - BigFloat::from_rational(&self.conditional_mean(y), &config.bits))
    }

    /// `(y, gap(y))` for `y = 0, …, y_max`.
    pub fn median_mean_gap_curve(
        &self,
        y_max: u64,
        config: &PrecisionConfig,
    ) -> Result<Vec<(u64, BigFloat)>> {
        (0..=y_max)
            .map(|y| self.median_mean_gap(y, config).map(|g| (y, g)))
            .collect()
    }

    /// Prior cdf `P[X ≤ x] = P(theta, alpha x)`.
    pub fn prior_cdf(&self, x: &BigFloat) -> Result<BigFloat> {
        let bits = x.prec();
        if *x <= BigFloat::with_val(bits, 0) {
            return Ok(BigFloat::with_val(bits, 0));
        }
        let shape = BigFloat::from_rational(&self.theta, &bits);
        let scaled = BigFloat::from_rational(&self.alpha, &bits) * x;
        regularized_lower_incomplete_gamma(&shape, &scaled)
    }
}

//! Poisson posterior for finitely supported priors.
//!
//! The `1/y!` factor of the Poisson likelihood cancels on normalization and is
//! never formed. Medians use the left inverse of the posterior cdf at 1/2.

use rug::Rational;

use crate::error::{Error, Result};
use crate::estimator::PrescribedEstimator;
use crate::moment_solver::{tilt_to_prior, DiscretePrior, MomentSolution};
use crate::numerics::{BigFloat, PrecisionConfig, Real};

/// A prior that can produce unnormalized Poisson posterior weights.
pub trait PoissonPrior {
    type Scalar: Real;

    fn support(&self) -> &[Self::Scalar];

    /// Posterior weights at observation `y`, up to a common factor.
    fn posterior_weights(&self, y: u64) -> Vec<Self::Scalar>;

    /// Slack allowed when testing `cdf ≥ 1/2`; zero for exact arithmetic.
    fn tie_tolerance(&self) -> Self::Scalar;

    /// Largest `y` (exclusive) for which the prior guarantees `med = f(y)`.
    fn guaranteed_range(&self) -> Option<u64> {
        None
    }
}

impl PoissonPrior for DiscretePrior<BigFloat> {
    type Scalar = BigFloat;

    fn support(&self) -> &[BigFloat] {
        DiscretePrior::support(self)
    }

    /// `π_i w_i^y e^{-w_i}`.
    fn posterior_weights(&self, y: u64) -> Vec<BigFloat> {
        DiscretePrior::support(self)
            .iter()
            .zip(self.weights())
            .map(|(w, p)| p.clone() * w.powi(y as u32) * (-w.clone()).exp())
            .collect()
    }

    fn tie_tolerance(&self) -> BigFloat {
        let bits = self.support()[0].prec();
        let tol = PrecisionConfig::new(bits).map_or(0.0, |c| c.tolerance);
        BigFloat::with_val(bits, tol)
    }
}

/// The exponentially tilted prior of a [`MomentSolution`], kept in factored
/// form.
///
/// Since the tilt `e^{w}` cancels the likelihood factor `e^{-w}`, the
/// posterior weights are `p_i w_i^y` and stay exact under the rational
/// backend.
#[derive(Clone, Debug)]
pub struct TiltedPrior<T> {
    solution: MomentSolution<T>,
    tolerance: T,
}

impl<T: Real> TiltedPrior<T> {
    pub fn new(solution: MomentSolution<T>, config: &PrecisionConfig) -> Self {
        let tolerance = config.tolerance_as::<T>(&solution.support()[0].context());
        TiltedPrior { solution, tolerance }
    }

    pub fn solution(&self) -> &MomentSolution<T> {
        &self.solution
    }

    /// Evaluates the tilt numerically.
    pub fn materialize(&self, bits: u32) -> Result<DiscretePrior<BigFloat>> {
        tilt_to_prior(&self.solution, bits)
    }
}

impl<T: Real> PoissonPrior for TiltedPrior<T> {
    type Scalar = T;

    fn support(&self) -> &[T] {
        self.solution.support()
    }

    fn posterior_weights(&self, y: u64) -> Vec<T> {
        self.solution
            .support()
            .iter()
            .zip(self.solution.weights())
            .map(|(w, p)| p.clone() * w.powi(y as u32))
            .collect()
    }

    fn tie_tolerance(&self) -> T {
        self.tolerance.clone()
    }

    fn guaranteed_range(&self) -> Option<u64> {
        Some(self.solution.m() as u64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSummary<T> {
    pub y: u64,
    pub support: Vec<T>,
    pub pmf: Vec<T>,
    pub cdf: Vec<T>,
    pub median: T,
    pub mean: T,
}

/// `inf { w : F(w) ≥ p }` over a step cdf, with `slack` absorbing rounding.
pub fn left_inverse<T: Real>(support: &[T], cdf: &[T], p: &T, slack: &T) -> Option<T> {
    let threshold = p.clone() - slack;
    support
        .iter()
        .zip(cdf)
        .find(|(_, c)| **c >= threshold)
        .map(|(w, _)| w.clone())
}

pub fn posterior<P: PoissonPrior>(prior: &P, y: u64) -> Result<PosteriorSummary<P::Scalar>> {
    let support = prior.support();
    if support.is_empty() {
        return Err(Error::Precondition("prior has no atoms".into()));
    }
    let ctx = support[0].context();
    let raw = prior.posterior_weights(y);
    let total = raw.iter().fold(P::Scalar::zero(&ctx), |acc, v| acc + v);
    if total <= P::Scalar::zero(&ctx) {
        return Err(Error::Internal(format!("posterior at y = {y} has zero total likelihood")));
    }
    let pmf: Vec<P::Scalar> = raw.into_iter().map(|v| v / &total).collect();
    let mut acc = P::Scalar::zero(&ctx);
    let cdf: Vec<P::Scalar> = pmf
        .iter()
        .map(|p| {
            acc = acc.clone() + p;
            acc.clone()
        })
        .collect();
    let half = P::Scalar::one(&ctx) / P::Scalar::from_i64(2, &ctx);
    let median = left_inverse(support, &cdf, &half, &prior.tie_tolerance())
        .ok_or_else(|| Error::Internal(format!("posterior cdf at y = {y} never reaches 1/2")))?;
    let mean = pmf
        .iter()
        .zip(support)
        .fold(P::Scalar::zero(&ctx), |acc, (p, w)| acc + p.clone() * w);
    Ok(PosteriorSummary { y, support: support.to_vec(), pmf, cdf, median, mean })
}

pub fn conditional_mean<P: PoissonPrior>(prior: &P, y: u64) -> Result<P::Scalar> {
    posterior(prior, y).map(|s| s.mean)
}

#[derive(Clone, Debug)]
pub struct MedianCheck<T> {
    pub y: u64,
    pub median: T,
    pub target: Rational,
    pub matches: bool,
    /// Whether the construction guarantees `median = f(y)` at this `y`.
    pub guaranteed: bool,
}

#[derive(Clone, Debug)]
pub struct MedianReport<T> {
    pub checks: Vec<MedianCheck<T>>,
    /// Largest `y` such that every `y' ≤ y` matches.
    pub all_match_through: Option<u64>,
}

impl<T> MedianReport<T> {
    /// True when every guaranteed observation matches.
    pub fn guaranteed_pass(&self) -> bool {
        self.checks.iter().all(|c| c.matches || !c.guaranteed)
    }

    pub fn first_guaranteed_failure(&self) -> Option<&MedianCheck<T>> {
        self.checks.iter().find(|c| c.guaranteed && !c.matches)
    }
}

/// Compares `med(X | Y = y)` with `f(y)` for `y = 0, …, y_max`.
pub fn verify_median_property<P: PoissonPrior>(
    prior: &P,
    f: &PrescribedEstimator,
    y_max: u64,
) -> Result<MedianReport<P::Scalar>> {
    let ctx = prior.support()[0].context();
    let tol = prior.tie_tolerance();
    let guaranteed_below = prior.guaranteed_range();
    let mut checks = Vec::with_capacity(y_max as usize + 1);
    let mut all_match_through = None;
    let mut prefix_ok = true;
    for y in 0..=y_max {
        let summary = posterior(prior, y)?;
        let target = f.evaluate(y);
        let matches = (summary.median.clone() - P::Scalar::from_rational(&target, &ctx)).abs() <= tol;
        prefix_ok &= matches;
        if prefix_ok {
            all_match_through = Some(y);
        }
        checks.push(MedianCheck {
            y,
            median: summary.median,
            target,
            matches,
            guaranteed: guaranteed_below.is_some_and(|m| y < m),
        });
    }
    Ok(MedianReport { checks, all_match_through })
}

/// `Σ_i p_i w_i^y (1{w_i ≤ f(y)} − 1{w_i > f(y)})` for `y = 0, …, y_max`.
pub fn moment_condition_check<T: Real>(
    support: &[T],
    weights: &[T],
    f: &PrescribedEstimator,
    y_max: u64,
) -> Vec<T> {
    let ctx = support[0].context();
    (0..=y_max)
        .map(|y| {
            let threshold = f.evaluate_as::<T>(y, &ctx);
            support
                .iter()
                .zip(weights)
                .fold(T::zero(&ctx), |acc, (w, p)| {
                    let term = p.clone() * w.powi(y as u32);
                    if *w <= threshold {
                        acc + term
                    } else {
                        acc - term
                    }
                })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moment_solver::solve_direct;
    use crate::numerics::ExactRational;

    fn q(n: i64, d: i64) -> ExactRational {
        ExactRational(Rational::from((n, d)))
    }

    fn affine03() -> PrescribedEstimator {
        PrescribedEstimator::affine_from_str("0.3", "0.3").unwrap()
    }

    fn tilted(m: usize) -> TiltedPrior<ExactRational> {
        let cfg = PrecisionConfig::default();
        TiltedPrior::new(solve_direct(&affine03(), m, &(), &cfg).unwrap(), &cfg)
    }

    #[test]
    fn posterior_examples_for_level_two() {
        let prior = tilted(2);
        let s0 = posterior(&prior, 0).unwrap();
        assert_eq!(s0.pmf, vec![q(1, 2), q(1, 5), q(3, 10)]);
        assert_eq!(s0.median, q(3, 10));
        let s1 = posterior(&prior, 1).unwrap();
        assert_eq!(s1.pmf, vec![q(5, 18), q(2, 9), q(1, 2)]);
        assert_eq!(s1.cdf[1], q(1, 2));
        assert_eq!(s1.median, q(6, 10));
        let s2 = posterior(&prior, 2).unwrap();
        assert_eq!(s2.pmf, vec![q(1, 8), q(1, 5), q(27, 40)]);
        assert_eq!(s2.cdf[1], q(13, 40));
        assert_eq!(s2.median, q(9, 10));
        assert_eq!(*s2.cdf.last().unwrap(), q(1, 1));
    }

    #[test]
    fn median_property_reports() {
        let r8 = verify_median_property(&tilted(8), &affine03(), 7).unwrap();
        assert!(r8.guaranteed_pass());
        assert_eq!(r8.all_match_through, Some(7));
        let medians: Vec<_> = r8.checks.iter().map(|c| c.median.clone()).collect();
        let expect: Vec<_> = (1..=8).map(|k| q(3 * k, 10)).collect();
        assert_eq!(medians, expect);

        let r2 = verify_median_property(&tilted(2), &affine03(), 2).unwrap();
        assert!(r2.guaranteed_pass());
        assert!(r2.checks[0].guaranteed && r2.checks[1].guaranteed);
        assert!(!r2.checks[2].guaranteed);
        // f(2) = 0.9 = w_3, so the unguaranteed point happens to match
        assert!(r2.checks[2].matches);
    }

    #[test]
    fn moment_condition_examples() {
        let f = affine03();
        let r = moment_condition_check(&[q(3, 10), q(6, 10)], &[q(1, 2), q(1, 2)], &f, 0);
        assert_eq!(r, vec![q(0, 1)]);
        let sol = tilted(2).solution().clone();
        let r = moment_condition_check(sol.support(), sol.weights(), &f, 2);
        assert_eq!(r[0], q(0, 1));
        assert_eq!(r[1], q(0, 1));
        // every atom is ≤ f(2) = 0.9: 0.045 + 0.072 + 0.243
        assert_eq!(r[2], q(36, 100));
    }

    #[test]
    fn conditional_mean_examples() {
        assert_eq!(conditional_mean(&tilted(2), 0).unwrap(), q(54, 100));
        assert_eq!(conditional_mean(&tilted(1), 0).unwrap(), q(45, 100));
        let pm = DiscretePrior::point_mass(BigFloat::with_val(256, 0.3), "b").unwrap();
        for y in [0, 3, 40] {
            assert_eq!(conditional_mean(&pm, y).unwrap(), BigFloat::with_val(256, 0.3));
        }
    }

    #[test]
    fn tilt_cancels_likelihood() {
        for m in [1, 2, 4, 8] {
            let exact = tilted(m);
            let materialized = exact.materialize(256).unwrap();
            for y in 0..=m as u64 {
                let a = posterior(&exact, y).unwrap();
                let b = posterior(&materialized, y).unwrap();
                for (pa, pb) in a.pmf.iter().zip(&b.pmf) {
                    let diff = pa.to_big_float(256) - pb.clone();
                    assert!(diff.abs().to_f64() < 1e-60, "M={m} y={y}");
                }
            }
        }
    }

    #[test]
    fn medians_are_monotone_and_capped() {
        for m in [1, 2, 4, 8] {
            let prior = tilted(m);
            let top = prior.support().last().unwrap().clone();
            let medians: Vec<_> = (0..=2 * m as u64)
                .map(|y| posterior(&prior, y).unwrap().median)
                .collect();
            assert!(medians.windows(2).all(|w| w[0] <= w[1]));
            assert!(medians.iter().all(|md| *md <= top));
        }
    }

    #[test]
    fn left_inverse_tie_goes_left() {
        let support = [q(1, 1), q(2, 1), q(3, 1)];
        let cdf = [q(1, 4), q(1, 2), q(1, 1)];
        let half = q(1, 2);
        assert_eq!(left_inverse(&support, &cdf, &half, &q(0, 1)), Some(q(2, 1)));
        assert_eq!(left_inverse(&support, &cdf, &q(1, 5), &q(0, 1)), Some(q(1, 1)));
    }
}

//! Probability vectors on `f(0), …, f(M)` that balance the truncated moment
//! conditions, and the exponential tilt that turns them into priors.
//!
//! The balanced variable `W` satisfies, for every `y` in `0..M`,
//!
//! ```text
//! Σ_{i ≤ y} p_i w_i^y = Σ_{i > y} p_i w_i^y        (0-based indices)
//! ```
//!
//! and the prior is `P_X(w_i) ∝ p_i e^{w_i}`.

mod diagnostics;
mod direct;
mod recursive;

pub use diagnostics::{convergence_diagnostics, ConvergencePair, ConvergenceReport};
pub use direct::{build_system_matrix, solve_direct, solve_direct_escalating, solve_linear_system};
pub use recursive::{solve_recursive, solve_recursive_traced};

use rug::Rational;

use crate::error::{Error, Result};
use crate::estimator::PrescribedEstimator;
use crate::numerics::{BigFloat, PrecisionConfig, Real};

/// Largest precision reached by automatic escalation.
pub const MAX_ESCALATION_BITS: u32 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    DirectSolve,
    Recursive,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::DirectSolve => "direct",
            Method::Recursive => "recursive",
        }
    }
}

/// Balanced distribution of `W` at truncation level `M`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSolution<T> {
    m: usize,
    support: Vec<T>,
    weights: Vec<T>,
    residuals: Vec<T>,
    method: Method,
}

impl<T: Real> MomentSolution<T> {
    /// Wraps solved weights, checking shape and recomputing the residuals.
    pub fn new(support: Vec<T>, weights: Vec<T>, method: Method) -> Result<Self> {
        if support.len() < 2 {
            return Err(Error::Precondition(format!(
                "a moment solution needs at least two atoms, got {}",
                support.len()
            )));
        }
        if weights.len() != support.len() {
            return Err(Error::Precondition(format!(
                "{} weights for {} support points",
                weights.len(),
                support.len()
            )));
        }
        check_support(&support)?;
        let m = support.len() - 1;
        let residuals = moment_residuals(&support, &weights, m);
        Ok(MomentSolution { m, support, weights, residuals, method })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Residual of the balance condition for `y = 0, …, M-1`.
    pub fn residuals(&self) -> &[T] {
        &self.residuals
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn max_abs_residual(&self) -> T {
        let zero = T::zero(&self.support[0].context());
        self.residuals.iter().fold(zero, |acc, r| {
            let r = r.abs();
            if r > acc {
                r
            } else {
                acc
            }
        })
    }

    pub fn weight_sum(&self) -> T {
        sum(&self.weights)
    }

    /// `P[W ≥ w_{i+1}]` in 1-based atom numbering, i.e. the mass of atoms
    /// `i, …, M` in 0-based numbering.
    pub fn tail_mass(&self, i: usize) -> T {
        let ctx = self.support[0].context();
        self.weights
            .iter()
            .skip(i)
            .fold(T::zero(&ctx), |acc, p| acc + p)
    }

    /// Checks the normalization and sign invariants against `config`.
    pub fn check_probability_vector(&self, config: &PrecisionConfig) -> Result<()> {
        check_probability_vector(&self.weights, config)
    }
}

/// Finitely supported distribution on the positive reals.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretePrior<T> {
    support: Vec<T>,
    weights: Vec<T>,
    label: String,
}

impl<T: Real> DiscretePrior<T> {
    pub fn new(
        support: Vec<T>,
        weights: Vec<T>,
        label: impl Into<String>,
        config: &PrecisionConfig,
    ) -> Result<Self> {
        if support.is_empty() || support.len() != weights.len() {
            return Err(Error::Precondition(format!(
                "prior needs matching non-empty support and weights, got {} and {}",
                support.len(),
                weights.len()
            )));
        }
        check_support(&support)?;
        check_probability_vector(&weights, config)?;
        Ok(DiscretePrior { support, weights, label: label.into() })
    }

    pub fn point_mass(at: T, label: impl Into<String>) -> Result<Self> {
        let one = T::one(&at.context());
        Self::new(vec![at], vec![one], label, &PrecisionConfig::default())
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// `(w_i, P[X ≤ w_i])` at every atom.
    pub fn cdf_steps(&self) -> Vec<(T, T)> {
        let mut acc = T::zero(&self.support[0].context());
        self.support
            .iter()
            .zip(&self.weights)
            .map(|(w, p)| {
                acc = acc.clone() + p;
                (w.clone(), acc.clone())
            })
            .collect()
    }
}

fn sum<T: Real>(values: &[T]) -> T {
    let ctx = values[0].context();
    values.iter().fold(T::zero(&ctx), |acc, v| acc + v)
}

pub(crate) fn check_support<T: Real>(support: &[T]) -> Result<()> {
    if let Some(w) = support.first() {
        if *w <= T::zero(&w.context()) {
            return Err(Error::Precondition(format!("support points must be positive, got {w}")));
        }
    }
    if let Some(i) = support.windows(2).position(|w| w[0] >= w[1]) {
        return Err(Error::Precondition(format!(
            "support must be strictly increasing: w[{i}] = {} >= w[{}] = {}",
            support[i],
            i + 1,
            support[i + 1]
        )));
    }
    Ok(())
}

pub(crate) fn check_probability_vector<T: Real>(weights: &[T], config: &PrecisionConfig) -> Result<()> {
    let ctx = weights[0].context();
    let tol = config.tolerance_as::<T>(&ctx);
    if let Some((i, p)) = weights.iter().enumerate().find(|(_, p)| **p < -tol.clone()) {
        return Err(Error::Numeric(format!("weight {i} is negative: {p}")));
    }
    let total = sum(weights);
    if (total.clone() - T::one(&ctx)).abs() > tol {
        return Err(Error::Numeric(format!("weights do not normalize: sum = {total}")));
    }
    Ok(())
}

/// `Σ_{i ≤ y} p_i w_i^y − Σ_{i > y} p_i w_i^y` for `y` in `0..m`.
pub fn moment_residuals<T: Real>(support: &[T], weights: &[T], m: usize) -> Vec<T> {
    let ctx = support[0].context();
    (0..m)
        .map(|y| {
            support
                .iter()
                .zip(weights)
                .enumerate()
                .fold(T::zero(&ctx), |acc, (i, (w, p))| {
                    let term = p.clone() * w.powi(y as u32);
                    if i <= y {
                        acc + term
                    } else {
                        acc - term
                    }
                })
        })
        .collect()
}

/// Exponential tilt `P_X(w_i) ∝ p_i e^{w_i}`, evaluated at `bits` precision.
pub fn tilt_weights<T: Real>(support: &[T], weights: &[T], bits: u32) -> Result<DiscretePrior<BigFloat>> {
    if support.is_empty() || support.len() != weights.len() {
        return Err(Error::Precondition("tilt needs matching non-empty support and weights".into()));
    }
    let work = bits + 32;
    let support_f: Vec<BigFloat> = support.iter().map(|w| w.to_big_float(work)).collect();
    let raw: Vec<BigFloat> = support_f
        .iter()
        .zip(weights)
        .map(|(w, p)| p.to_big_float(work) * w.exp())
        .collect();
    let total = sum(&raw);
    let tilted = raw.into_iter().map(|v| (v / &total).with_prec(bits)).collect();
    let support_f = support.iter().map(|w| w.to_big_float(bits)).collect();
    let config = PrecisionConfig::new(bits)?;
    DiscretePrior::new(support_f, tilted, "P_X tilted", &config)
}

pub fn tilt_to_prior<T: Real>(solution: &MomentSolution<T>, bits: u32) -> Result<DiscretePrior<BigFloat>> {
    tilt_weights(solution.support(), solution.weights(), bits)
}

/// Balanced distribution itself as a prior object.
pub fn balanced_prior<T: Real>(solution: &MomentSolution<T>, config: &PrecisionConfig) -> Result<DiscretePrior<T>> {
    DiscretePrior::new(solution.support.clone(), solution.weights.clone(), "P_W", config)
}

/// `(f(⌊i/κ⌋) / f(i))^⌊i/κ⌋`, an upper bound on `P[W ≥ f(i)]`.
pub fn tail_bound(f: &PrescribedEstimator, i: u64, kappa: f64) -> Result<Rational> {
    if kappa < 1.0 || !kappa.is_finite() {
        return Err(Error::Precondition(format!("kappa must be finite and >= 1, got {kappa}")));
    }
    let lower = (i as f64 / kappa).floor() as u64;
    let ratio = f.evaluate(lower) / f.evaluate(i);
    Ok(rug::ops::Pow::pow(ratio, lower as u32))
}

#[derive(Clone, Debug)]
pub struct TailCheck<T> {
    pub i: usize,
    pub kappa: f64,
    pub tail: T,
    pub bound: Rational,
    pub holds: bool,
}

/// Compares every non-vacuous tail bound (`⌊i/κ⌋ ≥ 1`, `1 ≤ i ≤ M`) with the
/// solution's tail mass.
pub fn check_tail_bounds<T: Real>(
    solution: &MomentSolution<T>,
    f: &PrescribedEstimator,
    kappas: &[f64],
    config: &PrecisionConfig,
) -> Result<Vec<TailCheck<T>>> {
    let ctx = solution.support[0].context();
    let tol = config.tolerance_as::<T>(&ctx);
    let mut checks = Vec::new();
    for i in 1..=solution.m {
        for &kappa in kappas {
            if (i as f64 / kappa).floor() < 1.0 {
                continue;
            }
            let bound = tail_bound(f, i as u64, kappa)?;
            let tail = solution.tail_mass(i);
            let holds = tail <= T::from_rational(&bound, &ctx) + &tol;
            checks.push(TailCheck { i, kappa, tail, bound, holds });
        }
    }
    Ok(checks)
}

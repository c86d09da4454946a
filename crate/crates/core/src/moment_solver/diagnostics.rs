use std::fmt;

use super::{solve_direct, tilt_to_prior};
use crate::error::{Error, Result};
use crate::estimator::PrescribedEstimator;
use crate::numerics::{BigFloat, PrecisionConfig, Real};

/// Distances between the level `m_small` and `m_large` constructions.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergencePair {
    pub m_small: usize,
    pub m_large: usize,
    /// ℓ¹ distance of the balanced weights on the first `prefix` atoms.
    pub l1_prefix: f64,
    /// ℓ¹ distance of the balanced weights over all atoms of the larger
    /// support (the smaller vector padded with zeros).
    pub l1_full: f64,
    /// Total variation distance between the tilted priors.
    pub tv_tilted: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub prefix: usize,
    pub pairs: Vec<ConvergencePair>,
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "M_small,M_large,l1_first_{},l1_full,tv_tilted", self.prefix)?;
        for p in &self.pairs {
            writeln!(
                f,
                "{},{},{:.6e},{:.6e},{:.6e}",
                p.m_small, p.m_large, p.l1_prefix, p.l1_full, p.tv_tilted
            )?;
        }
        Ok(())
    }
}

fn l1<T: Real>(a: &[T], b: &[T], len: usize, bits: u32) -> f64 {
    let zero = BigFloat::with_val(bits, 0);
    let at = |v: &[T], i: usize| v.get(i).map_or(zero.clone(), |x| x.to_big_float(bits));
    (0..len)
        .fold(zero.clone(), |acc, i| acc + (at(a, i) - at(b, i)).abs())
        .to_f64()
}

/// Builds the direct solution for each level in `m_list` and reports the
/// distances between consecutive levels. No convergence claim is made; the
/// table shows the trend.
pub fn convergence_diagnostics<T: Real>(
    f: &PrescribedEstimator,
    m_list: &[usize],
    prefix: usize,
    ctx: &T::Context,
    config: &PrecisionConfig,
) -> Result<ConvergenceReport> {
    if m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("M list must be strictly increasing".into()));
    }
    let solutions = m_list
        .iter()
        .map(|&m| solve_direct::<T>(f, m, ctx, config))
        .collect::<Result<Vec<_>>>()?;
    let bits = config.bits;
    let tilted = solutions
        .iter()
        .map(|s| tilt_to_prior(s, bits))
        .collect::<Result<Vec<_>>>()?;
    let pairs = solutions
        .windows(2)
        .zip(tilted.windows(2))
        .map(|(s, t)| {
            let (small, large) = (&s[0], &s[1]);
            let len = large.weights().len();
            ConvergencePair {
                m_small: small.m(),
                m_large: large.m(),
                l1_prefix: l1(small.weights(), large.weights(), prefix.min(small.weights().len()), bits),
                l1_full: l1(small.weights(), large.weights(), len, bits),
                tv_tilted: 0.5 * l1(t[0].weights(), t[1].weights(), len, bits),
            }
        })
        .collect();
    Ok(ConvergenceReport { prefix, pairs })
}

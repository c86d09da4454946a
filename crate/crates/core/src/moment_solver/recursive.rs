use super::{check_support, MomentSolution, Method};
use crate::error::{Error, Result};
use crate::estimator::PrescribedEstimator;
use crate::numerics::{PrecisionConfig, Real};

/// Builds the level-`M` solution by induction on the number of conditions.
///
/// Level `k` holds, for every tail index `j ≥ k`, the balanced vector on
/// `(w_0, …, w_{k-1}, w_j)`. Level `k + 1` mixes the `j = k` entry `p` with
/// the `j` entry `q` (padded so their last atoms become `w_k` and `w_j`):
///
/// ```text
/// α = (R − Q) / (L + R − Q),
/// L = Σ_{i ≤ k} p_i w_i^k,  Q = Σ_{i < k} q_i w_i^k,  R = q_k w_j^k
/// ```
///
/// which balances condition `y = k` while preserving the earlier ones.
/// Returns the solution together with every α used.
pub fn solve_recursive_traced<T: Real>(
    f: &PrescribedEstimator,
    m: usize,
    ctx: &T::Context,
    config: &PrecisionConfig,
) -> Result<(MomentSolution<T>, Vec<T>)> {
    let support: Vec<T> = f.support_points_as(m, ctx)?;
    check_support(&support)?;
    let tol = config.tolerance_as::<T>(ctx);
    let half = T::one(ctx) / T::from_i64(2, ctx);

    // level[j - k] is the solution with tail atom w_j.
    let mut level: Vec<Vec<T>> = (1..=m).map(|_| vec![half.clone(), half.clone()]).collect();
    let mut alphas = Vec::new();
    for k in 1..m {
        let p = &level[0];
        let lhs: T = p
            .iter()
            .zip(&support)
            .fold(T::zero(ctx), |acc, (pi, w)| acc + pi.clone() * w.powi(k as u32));
        let mut next = Vec::with_capacity(level.len() - 1);
        for (offset, q) in level.iter().enumerate().skip(1) {
            let j = k + offset;
            let head = q[..k]
                .iter()
                .zip(&support)
                .fold(T::zero(ctx), |acc, (qi, w)| acc + qi.clone() * w.powi(k as u32));
            let tail = q[k].clone() * support[j].powi(k as u32);
            let alpha = (tail.clone() - &head) / (lhs.clone() + &tail - &head);
            if alpha < -tol.clone() || alpha > T::one(ctx) + &tol {
                return Err(Error::Internal(format!(
                    "mixing weight {alpha} outside [0, 1] at level {k}, tail atom {j}"
                )));
            }
            let beta = T::one(ctx) - &alpha;
            let mut mixed: Vec<T> = p[..k]
                .iter()
                .zip(&q[..k])
                .map(|(pi, qi)| alpha.clone() * pi + &(beta.clone() * qi))
                .collect();
            mixed.push(alpha.clone() * &p[k]);
            mixed.push(beta * &q[k]);
            alphas.push(alpha);
            next.push(mixed);
        }
        level = next;
    }
    let weights = level.into_iter().next().expect("level M has one entry");
    let solution = MomentSolution::new(support, weights, Method::Recursive)?;
    Ok((solution, alphas))
}

pub fn solve_recursive<T: Real>(
    f: &PrescribedEstimator,
    m: usize,
    ctx: &T::Context,
    config: &PrecisionConfig,
) -> Result<MomentSolution<T>> {
    solve_recursive_traced(f, m, ctx, config).map(|(s, _)| s)
}

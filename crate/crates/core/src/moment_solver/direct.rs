use super::{check_support, MomentSolution, Method, MAX_ESCALATION_BITS};
use crate::error::{Error, Result};
use crate::estimator::PrescribedEstimator;
use crate::numerics::{BigFloat, PrecisionConfig, Real};

/// The `(M+1) × (M+1)` system whose solution against `e_1` is the balanced
/// probability vector.
///
/// Row 0 is all ones. Row `k ≥ 1` encodes the condition for `y = k - 1`:
/// entry `j` is `-w_j^{k-1}` for `j < k` and `+w_j^{k-1}` otherwise.
pub fn build_system_matrix<T: Real>(support: &[T], m: usize) -> Result<Vec<Vec<T>>> {
    if m == 0 || support.len() != m + 1 {
        return Err(Error::Precondition(format!(
            "need M >= 1 and M + 1 support points, got M = {m} with {} points",
            support.len()
        )));
    }
    check_support(support)?;
    let ctx = support[0].context();
    let mut rows = Vec::with_capacity(m + 1);
    rows.push(vec![T::one(&ctx); m + 1]);
    for k in 1..=m {
        let row = support
            .iter()
            .enumerate()
            .map(|(j, w)| {
                let v = w.powi(k as u32 - 1);
                if j < k {
                    -v
                } else {
                    v
                }
            })
            .collect();
        rows.push(row);
    }
    Ok(rows)
}

/// Gaussian elimination with partial pivoting.
pub fn solve_linear_system<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::Precondition("linear system is not square".into()));
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| {
                a[r][col]
                    .abs()
                    .partial_cmp(&a[s][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty range");
        if a[pivot][col].is_zero() {
            return Err(Error::Internal(format!("singular system: no pivot in column {col}")));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for (offset, row) in lower.iter_mut().enumerate() {
            if row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone() / &pivot_row[col];
            for k in col..n {
                row[k] = row[k].clone() - factor.clone() * &pivot_row[k];
            }
            let r = col + 1 + offset;
            b[r] = b[r].clone() - factor * &b[col];
        }
    }
    let mut x = b.clone();
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for k in row + 1..n {
            acc = acc - a[row][k].clone() * &x[k];
        }
        x[row] = acc / &a[row][row];
    }
    Ok(x)
}

/// Solves `A_M p = e_1` on the support `f(0), …, f(M)`.
///
/// Fails with [`Error::NegativeWeight`] when a weight is negative beyond the
/// configured tolerance, which for the float backend signals that the
/// precision is too low for this `M`.
pub fn solve_direct<T: Real>(
    f: &PrescribedEstimator,
    m: usize,
    ctx: &T::Context,
    config: &PrecisionConfig,
) -> Result<MomentSolution<T>> {
    let support: Vec<T> = f.support_points_as(m, ctx)?;
    let matrix = build_system_matrix(&support, m)?;
    let mut rhs = vec![T::zero(ctx); m + 1];
    rhs[0] = T::one(ctx);
    let weights = solve_linear_system(matrix, rhs)?;
    let tol = config.tolerance_as::<T>(ctx);
    if let Some((index, p)) = weights.iter().enumerate().find(|(_, p)| **p < -tol.clone()) {
        return Err(Error::NegativeWeight {
            index,
            value: p.to_string(),
            bits: if T::EXACT { 0 } else { config.bits },
        });
    }
    let solution = MomentSolution::new(support, weights, Method::DirectSolve)?;
    if solution.max_abs_residual() > tol {
        return Err(Error::Numeric(format!(
            "moment residual {} exceeds tolerance {:e} at M = {m}",
            solution.max_abs_residual(),
            config.tolerance
        )));
    }
    Ok(solution)
}

/// Float solve that doubles the precision (up to [`MAX_ESCALATION_BITS`])
/// until the weights are non-negative and the residuals within tolerance.
/// Returns the solution with the precision that produced it.
pub fn solve_direct_escalating(
    f: &PrescribedEstimator,
    m: usize,
    config: &PrecisionConfig,
) -> Result<(MomentSolution<BigFloat>, PrecisionConfig)> {
    let mut current = *config;
    loop {
        match solve_direct::<BigFloat>(f, m, &current.bits, &current) {
            Ok(sol) => return Ok((sol, current)),
            Err(e @ (Error::NegativeWeight { .. } | Error::Numeric(_))) => {
                if current.bits * 2 > MAX_ESCALATION_BITS {
                    return Err(Error::Numeric(format!(
                        "{e}; precision escalation stopped at {} bits",
                        current.bits
                    )));
                }
                current.bits *= 2;
            }
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ExactRational;
    use rug::Rational;

    fn q(n: i64, d: i64) -> ExactRational {
        ExactRational(Rational::from((n, d)))
    }

    fn affine(a: &str, b: &str) -> PrescribedEstimator {
        PrescribedEstimator::affine_from_str(a, b).unwrap()
    }

    #[test]
    fn matrix_examples() {
        let a = build_system_matrix(&[q(3, 10), q(6, 10), q(9, 10)], 2).unwrap();
        assert_eq!(
            a,
            vec![
                vec![q(1, 1), q(1, 1), q(1, 1)],
                vec![q(-1, 1), q(1, 1), q(1, 1)],
                vec![q(-3, 10), q(-6, 10), q(9, 10)],
            ]
        );
        let a = build_system_matrix(&[q(1, 2), q(1, 1)], 1).unwrap();
        assert_eq!(a, vec![vec![q(1, 1), q(1, 1)], vec![q(-1, 1), q(1, 1)]]);
        let a = build_system_matrix(&[q(1, 1), q(2, 1), q(3, 1), q(4, 1)], 3).unwrap();
        assert_eq!(a[3], vec![q(-1, 1), q(-4, 1), q(-9, 1), q(16, 1)]);
    }

    #[test]
    fn matrix_rejects_bad_support() {
        assert!(build_system_matrix(&[q(1, 1), q(1, 1)], 1).is_err());
        assert!(build_system_matrix(&[q(1, 1), q(2, 1)], 2).is_err());
        assert!(build_system_matrix(&[q(-1, 1), q(2, 1)], 1).is_err());
    }

    #[test]
    fn direct_examples() {
        let cfg = PrecisionConfig::default();
        let s1 = solve_direct::<ExactRational>(&affine("0.3", "0.3"), 1, &(), &cfg).unwrap();
        assert_eq!(s1.weights(), &[q(1, 2), q(1, 2)]);
        let s2 = solve_direct::<ExactRational>(&affine("0.3", "0.3"), 2, &(), &cfg).unwrap();
        assert_eq!(s2.weights(), &[q(1, 2), q(1, 5), q(3, 10)]);
        assert_eq!(s2.method(), Method::DirectSolve);
        let s = solve_direct::<ExactRational>(&affine("0.5", "0.5"), 1, &(), &cfg).unwrap();
        assert_eq!(s.weights(), &[q(1, 2), q(1, 2)]);
    }

    #[test]
    fn hand_solved_three_by_three() {
        // p1 = p2 + p3, 0.3 p1 + 0.6 p2 = 0.9 p3, p1 + p2 + p3 = 1
        // => p1 = 1/2, p3 = (0.15 + 0.3) / 1.5, p2 = 1/2 - p3
        let p3 = Rational::from((45, 100)) / Rational::from((15, 10));
        let p2 = Rational::from((1, 2)) - &p3;
        let cfg = PrecisionConfig::default();
        let s = solve_direct::<ExactRational>(&affine("0.3", "0.3"), 2, &(), &cfg).unwrap();
        assert_eq!(s.weights()[1].0, p2);
        assert_eq!(s.weights()[2].0, p3);
    }

    #[test]
    fn float_backend_matches_exact() {
        let cfg = PrecisionConfig::default();
        let f = affine("0.3", "0.3");
        for m in 1..=8 {
            let exact = solve_direct::<ExactRational>(&f, m, &(), &cfg).unwrap();
            let approx = solve_direct::<BigFloat>(&f, m, &cfg.bits, &cfg).unwrap();
            for (e, a) in exact.weights().iter().zip(approx.weights()) {
                assert!((e.to_big_float(512) - a.clone()).abs().to_f64() < 1e-60);
            }
        }
    }

    #[test]
    fn escalation_recovers_at_high_m() {
        let f = affine("0.3", "0.3");
        let low = PrecisionConfig::new(64).unwrap().with_tolerance(1e-20).unwrap();
        let (sol, used) = solve_direct_escalating(&f, 24, &low).unwrap();
        assert!(used.bits > 64);
        assert!(sol.weights().iter().all(|p| p.to_f64() >= -1e-20));
        let exact = solve_direct::<ExactRational>(&f, 24, &(), &low).unwrap();
        for (e, a) in exact.weights().iter().zip(sol.weights()) {
            assert!((e.to_f64() - a.to_f64()).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_solver_handles_pivoting() {
        let a = vec![vec![q(0, 1), q(1, 1)], vec![q(2, 1), q(1, 1)]];
        let x = solve_linear_system(a, vec![q(3, 1), q(5, 1)]).unwrap();
        assert_eq!(x, vec![q(1, 1), q(3, 1)]);
        let singular = vec![vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(4, 1)]];
        assert!(matches!(
            solve_linear_system(singular, vec![q(1, 1), q(1, 1)]),
            Err(Error::Internal(_))
        ));
    }
}

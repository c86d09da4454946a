//! Prescribed estimators and the summability check that decides whether the
//! infinite construction yields a proper prior.

use std::fmt::Write as _;

use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::numerics::decimal::rational_to_string;
use crate::numerics::Real;

/// Target conditional median `f`, increasing up to `c0` and constant after.
#[derive(Clone, Debug, PartialEq)]
pub enum PrescribedEstimator {
    /// `f(y) = a y + b`, never saturating.
    Affine { a: Rational, b: Rational },
    /// `f(y) = a min(y, c0) + b`.
    SaturatingAffine { a: Rational, b: Rational, c0: u64 },
    /// `f(y) = values[min(y, len - 1)]`.
    Table { values: Vec<Rational> },
}

impl PrescribedEstimator {
    pub fn affine(a: Rational, b: Rational) -> Result<Self> {
        check_affine(&a, &b)?;
        Ok(PrescribedEstimator::Affine { a, b })
    }

    pub fn saturating_affine(a: Rational, b: Rational, c0: u64) -> Result<Self> {
        check_affine(&a, &b)?;
        Ok(PrescribedEstimator::SaturatingAffine { a, b, c0 })
    }

    pub fn table(values: Vec<Rational>) -> Result<Self> {
        let Some(first) = values.first() else {
            return Err(Error::Precondition("estimator table is empty".into()));
        };
        if *first <= 0 {
            return Err(Error::Precondition(format!(
                "estimator values must be positive, f(0) = {first}"
            )));
        }
        if let Some(i) = values.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::Precondition(format!(
                "estimator table must be strictly increasing: f({}) = {} >= f({}) = {}",
                i,
                values[i],
                i + 1,
                values[i + 1]
            )));
        }
        Ok(PrescribedEstimator::Table { values })
    }

    /// Convenience constructor from decimal literals such as `"0.3"`.
    pub fn affine_from_str(a: &str, b: &str) -> Result<Self> {
        use crate::numerics::decimal::parse_rational;
        Self::affine(parse_rational(a)?, parse_rational(b)?)
    }

    /// Saturation point; `None` when `f` increases forever.
    pub fn c0(&self) -> Option<u64> {
        match self {
            PrescribedEstimator::Affine { .. } => None,
            PrescribedEstimator::SaturatingAffine { c0, .. } => Some(*c0),
            PrescribedEstimator::Table { values } => Some(values.len() as u64 - 1),
        }
    }

    pub fn evaluate(&self, y: u64) -> Rational {
        match self {
            PrescribedEstimator::Affine { a, b } => Rational::from(a * y) + b,
            PrescribedEstimator::SaturatingAffine { a, b, c0 } => {
                Rational::from(a * y.min(*c0)) + b
            }
            PrescribedEstimator::Table { values } => {
                values[(y as usize).min(values.len() - 1)].clone()
            }
        }
    }

    pub fn evaluate_as<T: Real>(&self, y: u64, ctx: &T::Context) -> T {
        T::from_rational(&self.evaluate(y), ctx)
    }

    /// `(f(0), …, f(M))`, the support of the level-`M` construction.
    pub fn support_points(&self, m: usize) -> Result<Vec<Rational>> {
        if m == 0 {
            return Err(Error::Precondition("truncation level M must be at least 1".into()));
        }
        if let Some(c0) = self.c0() {
            if m as u64 > c0 {
                return Err(Error::Precondition(format!(
                    "M = {m} exceeds the saturation point c0 = {c0}; support points would repeat"
                )));
            }
        }
        Ok((0..=m as u64).map(|y| self.evaluate(y)).collect())
    }

    pub fn support_points_as<T: Real>(&self, m: usize, ctx: &T::Context) -> Result<Vec<T>> {
        Ok(self
            .support_points(m)?
            .iter()
            .map(|w| T::from_rational(w, ctx))
            .collect())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PrescribedEstimator::Affine { .. } => "affine",
            PrescribedEstimator::SaturatingAffine { .. } => "saturating_affine",
            PrescribedEstimator::Table { .. } => "table",
        }
    }

    fn evaluate_f64(&self, y: u64) -> f64 {
        self.evaluate(y).to_f64()
    }
}

impl std::fmt::Display for PrescribedEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PrescribedEstimator::Affine { a, b } => {
                write!(f, "f(y) = {} y + {}", rational_to_string(a), rational_to_string(b))
            }
            PrescribedEstimator::SaturatingAffine { a, b, c0 } => write!(
                f,
                "f(y) = {} min(y, {c0}) + {}",
                rational_to_string(a),
                rational_to_string(b)
            ),
            PrescribedEstimator::Table { values } => {
                let vals: Vec<String> = values.iter().map(rational_to_string).collect();
                write!(f, "f = table[{}]", vals.join(", "))
            }
        }
    }
}

fn check_affine(a: &Rational, b: &Rational) -> Result<()> {
    if *a <= 0 || *b <= 0 {
        return Err(Error::Precondition(format!(
            "affine estimator needs a > 0 and b > 0, got a = {a}, b = {b}"
        )));
    }
    Ok(())
}

/// One κ of the summability scan.
#[derive(Clone, Debug, PartialEq)]
pub struct KappaEvaluation {
    pub kappa: f64,
    /// ln of the partial sum with exponent ⌊i/κ⌋.
    pub log_partial_sum: f64,
    /// Fitted growth rate of ln(term) with exponent ⌊i/κ⌋.
    pub rate: f64,
    /// Same two quantities with the real exponent i/κ.
    pub log_partial_sum_real_exponent: f64,
    pub rate_real_exponent: f64,
}

#[derive(Clone, Debug)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    pub kappa_star: f64,
    /// Truncated series at `kappa_star` (may be `inf` when it overflows f64).
    pub partial_sum: f64,
    /// Exponential growth rate of the terms at `kappa_star`; negative means
    /// geometric decay, `-inf` for a finite series.
    pub asymptotic_rate: f64,
    /// Verdict obtained with the real exponent i/κ instead of ⌊i/κ⌋.
    pub admissible_real_exponent: bool,
    pub evaluations: Vec<KappaEvaluation>,
    pub diagnostics: String,
}

/// κ ∈ {1, 1.25, …, 8}.
pub fn default_kappa_grid() -> Vec<f64> {
    (0..=28).map(|k| 1.0 + 0.25 * f64::from(k)).collect()
}

pub const DEFAULT_TRUNCATION: u64 = 1000;

fn log_add(acc: f64, x: f64) -> f64 {
    if acc == f64::NEG_INFINITY {
        return x;
    }
    let (hi, lo) = if acc > x { (acc, x) } else { (x, acc) };
    hi + (lo - hi).exp().ln_1p()
}

/// Least-squares slope of `ys` against consecutive integers.
fn fitted_slope(start: u64, ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return f64::NAN;
    }
    let mean_x = start as f64 + (n - 1.0) / 2.0;
    let mean_y = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, y) in ys.iter().enumerate() {
        let dx = start as f64 + k as f64 - mean_x;
        sxy += dx * (y - mean_y);
        sxx += dx * dx;
    }
    sxy / sxx
}

fn evaluate_kappa(f: &PrescribedEstimator, kappa: f64, last: u64) -> KappaEvaluation {
    let mut log_sum = f64::NEG_INFINITY;
    let mut log_sum_real = f64::NEG_INFINITY;
    let tail_start = last / 2 + 1;
    let mut tail = Vec::new();
    let mut tail_real = Vec::new();
    for i in 1..=last {
        let fi = f.evaluate_f64(i);
        let lower = (i as f64 / kappa).floor() as u64;
        let log_ratio = (f.evaluate_f64(lower) / fi).ln();
        let log_term = lower as f64 * log_ratio + fi;
        let log_term_real = (i as f64 / kappa) * log_ratio + fi;
        log_sum = log_add(log_sum, log_term);
        log_sum_real = log_add(log_sum_real, log_term_real);
        if i >= tail_start {
            tail.push(log_term);
            tail_real.push(log_term_real);
        }
    }
    KappaEvaluation {
        kappa,
        log_partial_sum: log_sum,
        rate: fitted_slope(tail_start, &tail),
        log_partial_sum_real_exponent: log_sum_real,
        rate_real_exponent: fitted_slope(tail_start, &tail_real),
    }
}

/// Checks the series Σ_i (f(⌊i/κ⌋)/f(i))^⌊i/κ⌋ e^{f(i)} for some κ in the grid.
///
/// Finite `c0` makes the series finite, hence admissible. For unbounded `f`
/// the terms are scanned up to `truncation` and a κ whose fitted log-term
/// slope is negative certifies geometric decay. The affine family is decided
/// by its closed-form rate `a - ln(κ)/κ`, which is smallest at κ = e.
pub fn check_summability(
    f: &PrescribedEstimator,
    kappa_grid: &[f64],
    truncation: u64,
) -> Result<AdmissibilityReport> {
    if kappa_grid.is_empty() {
        return Err(Error::Precondition("kappa grid is empty".into()));
    }
    if let Some(k) = kappa_grid.iter().find(|k| **k < 1.0 || !k.is_finite()) {
        return Err(Error::Precondition(format!("kappa must be finite and >= 1, got {k}")));
    }
    if truncation < 100 {
        return Err(Error::Precondition(format!(
            "truncation must be at least 100, got {truncation}"
        )));
    }

    let mut kappas = kappa_grid.to_vec();
    let is_affine = matches!(f, PrescribedEstimator::Affine { .. });
    if is_affine && !kappas.contains(&std::f64::consts::E) {
        kappas.push(std::f64::consts::E);
    }
    let last = f.c0().map_or(truncation, |c0| c0.min(truncation));
    let evaluations: Vec<KappaEvaluation> =
        kappas.iter().map(|&k| evaluate_kappa(f, k, last.max(1))).collect();

    let mut diagnostics = String::new();
    for e in &evaluations {
        let _ = writeln!(
            diagnostics,
            "kappa={:.4} ln(sum)={:.6} rate={:.6} | exponent i/kappa: ln(sum)={:.6} rate={:.6}",
            e.kappa, e.log_partial_sum, e.rate, e.log_partial_sum_real_exponent, e.rate_real_exponent
        );
    }

    let best_by_sum = |key: fn(&KappaEvaluation) -> f64| {
        evaluations
            .iter()
            .min_by(|x, y| key(x).total_cmp(&key(y)))
            .expect("grid is non-empty")
    };

    let report = match (f, f.c0()) {
        (PrescribedEstimator::Affine { a, .. }, _) => {
            let inv_e = Float::with_val(256, 1).exp().recip();
            let admissible = *a < inv_e;
            let rate = a.to_f64() - std::f64::consts::E.recip();
            let at_e = evaluations
                .iter()
                .find(|e| e.kappa == std::f64::consts::E)
                .expect("e was added to the grid");
            let numeric = evaluations.iter().any(|e| e.rate < 0.0);
            let numeric_real = evaluations.iter().any(|e| e.rate_real_exponent < 0.0);
            let _ = writeln!(
                diagnostics,
                "closed form: rate a - 1/e = {rate:.6}; numeric ratio test: floor exponent {}, real exponent {}",
                verdict(numeric),
                verdict(numeric_real)
            );
            AdmissibilityReport {
                admissible,
                kappa_star: std::f64::consts::E,
                partial_sum: at_e.log_partial_sum.exp(),
                asymptotic_rate: rate,
                admissible_real_exponent: admissible,
                evaluations,
                diagnostics,
            }
        }
        (_, Some(c0)) if c0 <= truncation => {
            let best = best_by_sum(|e| e.log_partial_sum);
            let _ = writeln!(diagnostics, "finite series: f is constant from c0 = {c0}");
            AdmissibilityReport {
                admissible: true,
                kappa_star: best.kappa,
                partial_sum: best.log_partial_sum.exp(),
                asymptotic_rate: f64::NEG_INFINITY,
                admissible_real_exponent: true,
                evaluations,
                diagnostics,
            }
        }
        _ => {
            // c0 beyond the scanned range: decide by the fitted decay rate.
            let best = best_by_sum(|e| e.rate);
            let admissible = best.rate < 0.0 && best.log_partial_sum.is_finite();
            let admissible_real_exponent = evaluations
                .iter()
                .any(|e| e.rate_real_exponent < 0.0 && e.log_partial_sum_real_exponent.is_finite());
            AdmissibilityReport {
                admissible,
                kappa_star: best.kappa,
                partial_sum: best.log_partial_sum.exp(),
                asymptotic_rate: best.rate,
                admissible_real_exponent,
                evaluations,
                diagnostics,
            }
        }
    };
    Ok(report)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "decaying"
    } else {
        "not decaying"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn affine(a: &str, b: &str) -> PrescribedEstimator {
        PrescribedEstimator::affine_from_str(a, b).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(affine("0.3", "0.3").evaluate(4), q(3, 2));
        assert_eq!(affine("0.5", "0.5").evaluate(0), q(1, 2));
        let sat = PrescribedEstimator::saturating_affine(q(3, 10), q(3, 10), 3).unwrap();
        assert_eq!(sat.evaluate(10), q(6, 5));
        assert_eq!(sat.evaluate(3), q(6, 5));
        assert_eq!(sat.evaluate(2), q(9, 10));
    }

    #[test]
    fn support_point_examples() {
        assert_eq!(
            affine("0.3", "0.3").support_points(2).unwrap(),
            vec![q(3, 10), q(6, 10), q(9, 10)]
        );
        assert_eq!(affine("0.5", "0.5").support_points(1).unwrap(), vec![q(1, 2), q(1, 1)]);
        let s8 = affine("0.3", "0.3").support_points(8).unwrap();
        assert_eq!(s8.len(), 9);
        assert_eq!(s8[0], q(3, 10));
        assert_eq!(s8[8], q(27, 10));
    }

    #[test]
    fn support_beyond_saturation_is_rejected() {
        let sat = PrescribedEstimator::saturating_affine(q(3, 10), q(3, 10), 3).unwrap();
        assert!(sat.support_points(3).is_ok());
        assert!(matches!(sat.support_points(4), Err(Error::Precondition(_))));
        assert!(matches!(affine("0.3", "0.3").support_points(0), Err(Error::Precondition(_))));
    }

    #[test]
    fn invalid_estimators_are_rejected() {
        assert!(PrescribedEstimator::affine(q(0, 1), q(1, 1)).is_err());
        assert!(PrescribedEstimator::affine(q(1, 1), q(-1, 1)).is_err());
        assert!(PrescribedEstimator::table(vec![]).is_err());
        assert!(PrescribedEstimator::table(vec![q(1, 1), q(1, 1)]).is_err());
        assert!(PrescribedEstimator::table(vec![q(0, 1), q(1, 1)]).is_err());
        let t = PrescribedEstimator::table(vec![q(1, 2), q(1, 1), q(3, 1)]).unwrap();
        assert_eq!(t.c0(), Some(2));
        assert_eq!(t.evaluate(7), q(3, 1));
    }

    #[test]
    fn summability_examples() {
        let grid = default_kappa_grid();
        let r = check_summability(&affine("0.3", "0.3"), &grid, DEFAULT_TRUNCATION).unwrap();
        assert!(r.admissible);
        assert_eq!(r.kappa_star, std::f64::consts::E);
        assert!(r.partial_sum.is_finite() && r.partial_sum > 0.0);

        let r = check_summability(&affine("0.5", "0.5"), &grid, DEFAULT_TRUNCATION).unwrap();
        assert!(!r.admissible);
        // term ratio e^{a - ln(κ)/κ} exceeds one for every κ in the grid
        for e in &r.evaluations {
            let closed = 0.5 - e.kappa.ln() / e.kappa;
            assert!(closed > 0.0);
            assert!(e.rate > 0.0, "kappa={} rate={}", e.kappa, e.rate);
        }

        let sat = PrescribedEstimator::saturating_affine(q(3, 10), q(3, 10), 7).unwrap();
        let r = check_summability(&sat, &grid, DEFAULT_TRUNCATION).unwrap();
        assert!(r.admissible);
        assert!(r.partial_sum.is_finite());
        assert_eq!(r.asymptotic_rate, f64::NEG_INFINITY);
    }

    #[test]
    fn affine_verdict_is_the_one_over_e_predicate() {
        let grid = default_kappa_grid();
        for a in ["0.05", "0.1", "0.3", "0.36", "0.367", "0.368", "0.37", "0.5", "0.9", "2"] {
            for b in ["0.1", "0.3", "1", "10"] {
                let r = check_summability(&affine(a, b), &grid, DEFAULT_TRUNCATION).unwrap();
                let expected = a.parse::<f64>().unwrap() < (-1.0f64).exp();
                assert_eq!(r.admissible, expected, "a={a} b={b}");
                assert!(r.kappa_star >= 1.0 && r.partial_sum >= 0.0);
            }
        }
    }

    #[test]
    fn floor_and_real_exponents_agree_on_clear_cases() {
        let grid = default_kappa_grid();
        for (a, decays) in [("0.1", true), ("0.3", true), ("0.5", false), ("0.9", false)] {
            let r = check_summability(&affine(a, "0.3"), &grid, DEFAULT_TRUNCATION).unwrap();
            let floor = r.evaluations.iter().any(|e| e.rate < 0.0);
            let real = r.evaluations.iter().any(|e| e.rate_real_exponent < 0.0);
            assert_eq!(floor, decays, "a={a}");
            assert_eq!(real, decays, "a={a}");
            assert!(r.diagnostics.contains("exponent i/kappa"));
        }
    }

    #[test]
    fn large_table_uses_numeric_rate() {
        // slowly growing table: f(i) = ln(i + 2), c0 beyond the scan
        let values: Vec<Rational> = (0..3000)
            .map(|i| Rational::from_f64(((i + 2) as f64).ln()).unwrap())
            .collect();
        let f = PrescribedEstimator::table(values).unwrap();
        let r = check_summability(&f, &default_kappa_grid(), 1000).unwrap();
        assert!(r.asymptotic_rate.is_finite());
    }

    #[test]
    fn bad_arguments() {
        let f = affine("0.3", "0.3");
        assert!(check_summability(&f, &[], 1000).is_err());
        assert!(check_summability(&f, &[0.5], 1000).is_err());
        assert!(check_summability(&f, &[2.0], 10).is_err());
    }
}

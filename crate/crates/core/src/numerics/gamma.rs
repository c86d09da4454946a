//! Regularized lower incomplete gamma function and its inverse in `x`.

use std::cmp::Ordering;

use rug::Float;

use super::{BigFloat, PrecisionConfig};
use crate::error::{Error, Result};

/// Iteration cap for the safeguarded root search.
pub const MAX_BISECTION_STEPS: usize = 10_000;

const MAX_EXPANSION_TERMS: usize = 1_000_000;
const GUARD_BITS: u32 = 64;

fn check_shape(s: &Float) -> Result<()> {
    if s.is_nan() || s.cmp0() != Some(Ordering::Greater) || s.is_infinite() {
        return Err(Error::Domain(format!("shape must be finite and positive, got {s}")));
    }
    Ok(())
}

/// `exp(s ln x - x - ln Γ(s))`, the common prefactor of both expansions.
fn prefactor(s: &Float, x: &Float, prec: u32) -> Float {
    let mut log = Float::with_val(prec, x.ln_ref());
    log *= s;
    log -= x;
    log -= Float::with_val(prec, s.ln_gamma_ref());
    log.exp()
}

/// Series for P(s, x); converges fastest for x < s + 1.
fn lower_series(s: &Float, x: &Float, prec: u32) -> Result<Float> {
    let eps = Float::with_val(prec, Float::i_exp(1, -(prec as i32)));
    let mut denom = Float::with_val(prec, s);
    let mut term = Float::with_val(prec, 1) / s;
    let mut sum = term.clone();
    for _ in 0..MAX_EXPANSION_TERMS {
        denom += 1;
        term *= x;
        term /= &denom;
        sum += &term;
        if Float::with_val(prec, term.abs_ref()) <= Float::with_val(prec, &sum * &eps) {
            return Ok(sum * prefactor(s, x, prec));
        }
    }
    Err(Error::Numeric(format!(
        "incomplete gamma series did not converge for s={s}, x={x}"
    )))
}

/// Continued fraction for Q(s, x) = 1 - P(s, x), evaluated by modified Lentz;
/// converges fastest for x ≥ s + 1.
fn upper_continued_fraction(s: &Float, x: &Float, prec: u32) -> Result<Float> {
    let eps = Float::with_val(prec, Float::i_exp(1, -(prec as i32)));
    let tiny = Float::with_val(prec, Float::i_exp(1, -(4 * prec as i32)));
    let mut b = Float::with_val(prec, x + 1u32) - s;
    let mut c = Float::with_val(prec, 1) / &tiny;
    let mut d = Float::with_val(prec, 1) / &b;
    let mut h = d.clone();
    for i in 1..MAX_EXPANSION_TERMS {
        let i_f = Float::with_val(prec, i);
        // a_i = -i (i - s)
        let an = -(Float::with_val(prec, &i_f - s) * &i_f);
        b += 2u32;
        d = Float::with_val(prec, &an * &d) + &b;
        if Float::with_val(prec, d.abs_ref()) < tiny {
            d = tiny.clone();
        }
        c = Float::with_val(prec, &an / &c) + &b;
        if Float::with_val(prec, c.abs_ref()) < tiny {
            c = tiny.clone();
        }
        d.recip_mut();
        let delta = Float::with_val(prec, &d * &c);
        h *= &delta;
        if Float::with_val(prec, (delta - 1u32).abs()) <= eps {
            return Ok(h * prefactor(s, x, prec));
        }
    }
    Err(Error::Numeric(format!(
        "incomplete gamma continued fraction did not converge for s={s}, x={x}"
    )))
}

fn lower_regularized(s: &Float, x: &Float, prec: u32) -> Result<Float> {
    if x.is_zero() {
        return Ok(Float::with_val(prec, 0));
    }
    if x.is_infinite() {
        return Ok(Float::with_val(prec, 1));
    }
    let split = Float::with_val(prec, s + 1u32);
    let value = if *x < split {
        lower_series(s, x, prec)?
    } else {
        1u32 - upper_continued_fraction(s, x, prec)?
    };
    Ok(value.clamp(&0u32, &1u32))
}

/// P(s, x) = γ(s, x) / Γ(s), at the wider of the argument precisions.
pub fn regularized_lower_incomplete_gamma(s: &BigFloat, x: &BigFloat) -> Result<BigFloat> {
    check_shape(&s.0)?;
    if x.0.is_nan() || x.0.cmp0() == Some(Ordering::Less) {
        return Err(Error::Domain(format!("x must be non-negative, got {}", x.0)));
    }
    let prec = s.max_prec(x);
    let work = prec + GUARD_BITS;
    let value = lower_regularized(
        &Float::with_val(work, &s.0),
        &Float::with_val(work, &x.0),
        work,
    )?;
    Ok(BigFloat(Float::with_val(prec, value)))
}

/// Density of the unit-rate gamma distribution with shape `s`.
pub fn gamma_density(s: &BigFloat, x: &BigFloat) -> Result<BigFloat> {
    check_shape(&s.0)?;
    let prec = s.max_prec(x);
    if x.0.cmp0() != Some(Ordering::Greater) {
        return Ok(BigFloat(Float::with_val(prec, 0)));
    }
    Ok(BigFloat(density(&s.0, &x.0, prec)))
}

fn density(s: &Float, x: &Float, prec: u32) -> Float {
    let mut log = Float::with_val(prec, x.ln_ref());
    log *= Float::with_val(prec, s - 1u32);
    log -= x;
    log -= Float::with_val(prec, s.ln_gamma_ref());
    log.exp()
}

/// Solves P(s, x) = p for x.
///
/// The root is bracketed by doubling, then refined with Newton steps that fall
/// back to bisection whenever they leave the bracket. Works at `config.bits`
/// plus guard bits and fails after [`MAX_BISECTION_STEPS`] iterations.
pub fn inverse_regularized_lower_incomplete_gamma(
    s: &BigFloat,
    p: &BigFloat,
    config: &PrecisionConfig,
) -> Result<BigFloat> {
    check_shape(&s.0)?;
    if p.0.is_nan() || p.0.cmp0() != Some(Ordering::Greater) || p.0 >= 1u32 {
        return Err(Error::Domain(format!("probability must lie in (0, 1), got {}", p.0)));
    }
    let bits = config.bits;
    let prec = bits + GUARD_BITS / 2;
    let s = Float::with_val(prec + GUARD_BITS, &s.0);
    let p = Float::with_val(prec + GUARD_BITS, &p.0);
    let eval = |x: &Float| -> Result<Float> {
        let v = lower_regularized(&s, &Float::with_val(prec + GUARD_BITS, x), prec + GUARD_BITS)?;
        Ok(Float::with_val(prec, v - &p))
    };

    let mut lo = Float::with_val(prec, 0);
    let mut hi = Float::with_val(prec, s.clone().max(&Float::with_val(prec, 1)));
    let mut steps = 0usize;
    while eval(&hi)?.cmp0() == Some(Ordering::Less) {
        lo = hi.clone();
        hi *= 2u32;
        steps += 1;
        if steps >= MAX_BISECTION_STEPS || hi.is_infinite() {
            return Err(Error::Numeric(format!("could not bracket P^-1(s={s}, p={p})")));
        }
    }

    // Wilson-Hilferty at the median as a starting point.
    let sf = s.to_f64();
    let guess = sf * (1.0 - 1.0 / (9.0 * sf)).max(1e-3).powi(3);
    let mut x = Float::with_val(prec, guess);
    if x <= lo || x >= hi {
        x = Float::with_val(prec, &lo + &hi) / 2u32;
    }
    let step_tol = Float::with_val(prec, Float::i_exp(1, -(bits as i32)));
    for _ in 0..MAX_BISECTION_STEPS {
        let f = eval(&x)?;
        match f.cmp0() {
            Some(Ordering::Equal) => return finish(x, &eval, config, bits),
            Some(Ordering::Less) => lo = x.clone(),
            _ => hi = x.clone(),
        }
        let slope = density(&s, &Float::with_val(prec + GUARD_BITS, &x), prec + GUARD_BITS);
        let mut next = if slope.is_zero() || !slope.is_finite() {
            Float::with_val(prec, &lo + &hi) / 2u32
        } else {
            Float::with_val(prec, &x - Float::with_val(prec, &f / &slope))
        };
        if next <= lo || next >= hi {
            next = Float::with_val(prec, &lo + &hi) / 2u32;
        }
        let scale = Float::with_val(prec, next.abs_ref()).max(&Float::with_val(prec, 1));
        let moved = Float::with_val(prec, &next - &x).abs();
        let width = Float::with_val(prec, &hi - &lo);
        x = next;
        if moved <= Float::with_val(prec, &step_tol * &scale)
            || width <= Float::with_val(prec, &step_tol * &scale)
        {
            return finish(x, &eval, config, bits);
        }
    }
    Err(Error::Numeric(format!(
        "P^-1(s={s}, p={p}) did not converge in {MAX_BISECTION_STEPS} steps; bracket [{lo}, {hi}]"
    )))
}

fn finish(
    x: Float,
    eval: &dyn Fn(&Float) -> Result<Float>,
    config: &PrecisionConfig,
    bits: u32,
) -> Result<BigFloat> {
    let residual = eval(&x)?.abs().to_f64();
    if residual > config.tolerance {
        return Err(Error::Numeric(format!(
            "P^-1 residual {residual:e} exceeds tolerance {:e} at x={x}",
            config.tolerance
        )));
    }
    Ok(BigFloat(Float::with_val(bits, x)))
}

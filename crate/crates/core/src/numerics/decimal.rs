//! Decimal text conversions used by the file formats.

use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};

/// Significant decimal digits that guarantee a round trip at `bits` precision.
pub fn digits_for_bits(bits: u32) -> usize {
    (f64::from(bits) * std::f64::consts::LOG10_2).ceil() as usize + 2
}

/// Mantissa bits that comfortably hold `digits` decimal digits.
pub fn bits_for_digits(digits: usize) -> u32 {
    ((digits as f64) / std::f64::consts::LOG10_2).ceil() as u32 + 16
}

/// Plain positional notation (no exponent) with at most `digits` significant
/// digits; trailing fractional zeros are dropped.
pub fn format_significant(value: &Float, digits: usize) -> String {
    if value.is_nan() {
        return "NaN".to_string();
    }
    if value.is_infinite() {
        return if value.is_sign_negative() { "-inf" } else { "inf" }.to_string();
    }
    let (negative, mantissa, exp) = value.to_sign_string_exp(10, Some(digits.max(1)));
    let Some(exp) = exp else {
        return "0".to_string();
    };
    let mantissa = mantissa.trim_end_matches('0');
    if mantissa.is_empty() {
        return "0".to_string();
    }
    // value = 0.<mantissa> * 10^exp
    let n = mantissa.len() as i64;
    let exp = i64::from(exp);
    let mut out = String::with_capacity(mantissa.len() + 8);
    if negative {
        out.push('-');
    }
    if exp <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp) as usize));
        out.push_str(mantissa);
    } else if exp < n {
        let (int, frac) = mantissa.split_at(exp as usize);
        out.push_str(int);
        out.push('.');
        out.push_str(frac);
    } else {
        out.push_str(mantissa);
        out.extend(std::iter::repeat_n('0', (exp - n) as usize));
    }
    out
}

/// Exact decimal when the denominator divides a power of ten, `num/den` otherwise.
pub fn rational_to_string(value: &Rational) -> String {
    let mut den = value.denom().clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while den.is_divisible_u(2) {
        den /= 2u32;
        twos += 1;
    }
    while den.is_divisible_u(5) {
        den /= 5u32;
        fives += 1;
    }
    if den != 1 {
        return value.to_string();
    }
    let scale = twos.max(fives);
    if scale == 0 {
        return value.numer().to_string();
    }
    let scaled = (value.numer() * Integer::from(Integer::u_pow_u(10, scale)))
        / value.denom();
    let negative = scaled < 0;
    let digits = scaled.abs().to_string();
    let digits = format!("{:0>width$}", digits, width = scale as usize + 1);
    let (int, frac) = digits.split_at(digits.len() - scale as usize);
    let frac = frac.trim_end_matches('0');
    let sign = if negative { "-" } else { "" };
    if frac.is_empty() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// Parses `num/den`, an integer, or a decimal literal with optional exponent,
/// exactly.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let num: Integer = num.trim().parse().map_err(|_| bad())?;
        let den: Integer = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(Error::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::from((num, den)));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: Integer = format!("{int}{frac}0").parse().map_err(|_| bad())?;
    let digits = digits / 10u32;
    let shift = exponent - frac.len() as i32;
    let ten_pow = Integer::from(Integer::u_pow_u(10, shift.unsigned_abs()));
    let mut value = if shift >= 0 {
        Rational::from(digits * ten_pow)
    } else {
        Rational::from((digits, ten_pow))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Parses a decimal literal into a float at `bits` precision.
pub fn parse_float(text: &str, bits: u32) -> Result<Float> {
    let parsed = Float::parse(text.trim())
        .map_err(|e| Error::Parse(format!("not a decimal number: {text:?} ({e})")))?;
    Ok(Float::with_val(bits, parsed))
}

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::ops::Pow;
use rug::{Float, Rational};

use super::decimal;

/// Field arithmetic shared by the exact and the floating backend.
///
/// Constants are built from a backend [`Real::Context`]: the unit type for
/// rationals, the mantissa width in bits for [`BigFloat`].
pub trait Real:
    Clone
    + PartialEq
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
{
    type Context: Clone + fmt::Debug + Send + Sync;

    /// True when every field operation is exact.
    const EXACT: bool;

    fn context(&self) -> Self::Context;

    fn from_rational(value: &Rational, ctx: &Self::Context) -> Self;

    /// Exact conversion of a finite `f64` (rounded for the float backend).
    fn from_f64(value: f64, ctx: &Self::Context) -> Self;

    fn from_i64(value: i64, ctx: &Self::Context) -> Self {
        Self::from_rational(&Rational::from(value), ctx)
    }

    fn zero(ctx: &Self::Context) -> Self {
        Self::from_i64(0, ctx)
    }

    fn one(ctx: &Self::Context) -> Self {
        Self::from_i64(1, ctx)
    }

    fn powi(&self, exponent: u32) -> Self;

    fn abs(&self) -> Self;

    fn is_zero(&self) -> bool;

    fn to_f64(&self) -> f64;

    fn to_big_float(&self, bits: u32) -> BigFloat;

    /// Plain positional decimal with at most `digits` significant digits.
    fn to_decimal(&self, digits: usize) -> String {
        decimal::format_significant(&self.to_big_float(decimal::bits_for_digits(digits)).0, digits)
    }

    /// Exact textual form, when the backend has one.
    fn to_exact_string(&self) -> Option<String> {
        None
    }
}

/// Exact rational arithmetic on arbitrary-size integers.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ExactRational(pub Rational);

/// Binary floating point whose precision is carried by each value.
///
/// Binary operations round to the larger of the operand precisions.
#[derive(Clone, Debug)]
pub struct BigFloat(pub Float);

impl ExactRational {
    pub fn new(value: Rational) -> Self {
        ExactRational(value)
    }

    pub fn recip(&self) -> Self {
        ExactRational(Rational::from(self.0.recip_ref()))
    }
}

impl From<Rational> for ExactRational {
    fn from(value: Rational) -> Self {
        ExactRational(value)
    }
}

impl BigFloat {
    pub fn with_val<T>(bits: u32, value: T) -> Self
    where
        Float: rug::Assign<T>,
    {
        BigFloat(Float::with_val(bits, value))
    }

    pub fn prec(&self) -> u32 {
        self.0.prec()
    }

    pub fn exp(&self) -> Self {
        BigFloat(self.0.clone().exp())
    }

    pub fn ln(&self) -> Self {
        BigFloat(self.0.clone().ln())
    }

    pub fn sqrt(&self) -> Self {
        BigFloat(self.0.clone().sqrt())
    }

    /// Re-rounds to a different precision.
    pub fn with_prec(&self, bits: u32) -> Self {
        BigFloat(Float::with_val(bits, &self.0))
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn max_prec(&self, other: &Self) -> u32 {
        self.0.prec().max(other.0.prec())
    }
}

impl PartialEq for BigFloat {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl PartialOrd for BigFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::Display for BigFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = decimal::digits_for_bits(self.prec());
        f.write_str(&decimal::format_significant(&self.0, digits))
    }
}

macro_rules! forward_binop {
    ($ty:ident, $trait:ident, $method:ident, $body:expr) => {
        impl<'a> $trait<&'a $ty> for &'a $ty {
            type Output = $ty;
            fn $method(self, rhs: &'a $ty) -> $ty {
                let f: fn(&$ty, &$ty) -> $ty = $body;
                f(self, rhs)
            }
        }
        impl<'a> $trait<&'a $ty> for $ty {
            type Output = $ty;
            fn $method(self, rhs: &'a $ty) -> $ty {
                $trait::$method(&self, rhs)
            }
        }
        impl $trait<$ty> for $ty {
            type Output = $ty;
            fn $method(self, rhs: $ty) -> $ty {
                $trait::$method(&self, &rhs)
            }
        }
    };
}

forward_binop!(ExactRational, Add, add, |a, b| ExactRational(Rational::from(&a.0 + &b.0)));
forward_binop!(ExactRational, Sub, sub, |a, b| ExactRational(Rational::from(&a.0 - &b.0)));
forward_binop!(ExactRational, Mul, mul, |a, b| ExactRational(Rational::from(&a.0 * &b.0)));
forward_binop!(ExactRational, Div, div, |a, b| ExactRational(Rational::from(&a.0 / &b.0)));

forward_binop!(BigFloat, Add, add, |a, b| BigFloat(Float::with_val(a.max_prec(b), &a.0 + &b.0)));
forward_binop!(BigFloat, Sub, sub, |a, b| BigFloat(Float::with_val(a.max_prec(b), &a.0 - &b.0)));
forward_binop!(BigFloat, Mul, mul, |a, b| BigFloat(Float::with_val(a.max_prec(b), &a.0 * &b.0)));
forward_binop!(BigFloat, Div, div, |a, b| BigFloat(Float::with_val(a.max_prec(b), &a.0 / &b.0)));

impl Neg for ExactRational {
    type Output = ExactRational;
    fn neg(self) -> ExactRational {
        ExactRational(-self.0)
    }
}

impl Neg for BigFloat {
    type Output = BigFloat;
    fn neg(self) -> BigFloat {
        BigFloat(-self.0)
    }
}

impl Real for ExactRational {
    type Context = ();
    const EXACT: bool = true;

    fn context(&self) -> Self::Context {}

    fn from_rational(value: &Rational, _ctx: &()) -> Self {
        ExactRational(value.clone())
    }

    fn from_f64(value: f64, _ctx: &()) -> Self {
        ExactRational(Rational::from_f64(value).expect("finite f64"))
    }

    fn powi(&self, exponent: u32) -> Self {
        ExactRational(Rational::from((&self.0).pow(exponent)))
    }

    fn abs(&self) -> Self {
        ExactRational(Rational::from(self.0.abs_ref()))
    }

    fn is_zero(&self) -> bool {
        self.0.cmp0() == Ordering::Equal
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    fn to_big_float(&self, bits: u32) -> BigFloat {
        BigFloat(Float::with_val(bits, &self.0))
    }

    fn to_exact_string(&self) -> Option<String> {
        Some(self.0.to_string())
    }
}

impl Real for BigFloat {
    type Context = u32;
    const EXACT: bool = false;

    fn context(&self) -> u32 {
        self.prec()
    }

    fn from_rational(value: &Rational, bits: &u32) -> Self {
        BigFloat(Float::with_val(*bits, value))
    }

    fn from_f64(value: f64, bits: &u32) -> Self {
        BigFloat(Float::with_val(*bits, value))
    }

    fn from_i64(value: i64, bits: &u32) -> Self {
        BigFloat(Float::with_val(*bits, value))
    }

    fn powi(&self, exponent: u32) -> Self {
        BigFloat(Float::with_val(self.prec(), (&self.0).pow(exponent)))
    }

    fn abs(&self) -> Self {
        BigFloat(self.0.clone().abs())
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    fn to_big_float(&self, bits: u32) -> BigFloat {
        self.with_prec(bits)
    }
}

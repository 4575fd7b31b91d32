//! High-precision reals for the asymptotic estimates.
//!
//! Values carry [`PRECISION_BITS`] bits of binary mantissa and an unbounded
//! exponent, so quantities like `n^k / n!` stay representable long after
//! `f64` would overflow.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::{IBig, UBig};
use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;

pub const PRECISION_BITS: usize = 128;

type Inner = FBig<HalfEven, 2>;

#[derive(Clone, PartialEq, PartialOrd)]
pub struct Real(Inner);

fn to_ubig(v: &BigUint) -> UBig {
    UBig::from_le_bytes(&v.to_bytes_le())
}

fn to_ibig(v: &BigInt) -> IBig {
    let magnitude = IBig::from(to_ubig(v.magnitude()));
    if v.sign() == Sign::Minus {
        -magnitude
    } else {
        magnitude
    }
}

impl Real {
    fn wrap(inner: Inner) -> Self {
        Real(inner.with_precision(PRECISION_BITS).value())
    }

    pub fn from_u64(v: u64) -> Self {
        Self::wrap(Inner::from(v))
    }

    pub fn from_i64(v: i64) -> Self {
        Self::wrap(Inner::from(v))
    }

    pub fn from_biguint(v: &BigUint) -> Self {
        Self::wrap(Inner::from(to_ubig(v)))
    }

    pub fn from_rational(r: &BigRational) -> Self {
        let num = Self::wrap(Inner::from(to_ibig(r.numer())));
        let den = Self::wrap(Inner::from(to_ibig(r.denom())));
        num / den
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64(v: f64) -> Self {
        Self::wrap(Inner::try_from(v).expect("finite f64"))
    }

    pub fn ln(&self) -> Self {
        Real(self.0.ln())
    }

    pub fn exp(&self) -> Self {
        Real(self.0.exp())
    }

    pub fn powi(&self, exp: usize) -> Self {
        Real(self.0.powi(IBig::from(exp)))
    }

    pub fn sqrt(&self) -> Self {
        Real(self.0.sqrt())
    }

    pub fn abs(&self) -> Self {
        if self.0.sign() == dashu_int::Sign::Negative {
            Real(-self.0.clone())
        } else {
            self.clone()
        }
    }

    /// Nearest `f64`; saturates to infinity or zero outside its range.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }

    /// Decimal rendering with the given number of significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        let decimal = self.0.clone().with_base_and_precision::<10>(digits.max(1)).value();
        decimal.to_string()
    }
}

/// `x` with `digits` significant digits: positional notation for moderate
/// magnitudes, scientific otherwise.
pub fn format_significant(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exponent) {
        let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.prec$e}", prec = digits - 1)
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Real({})", self.to_decimal(30))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal(f.precision().unwrap_or(30)))
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                Real(self.0 $op rhs.0)
            }
        }
        impl<'a> $trait<&'a Real> for &'a Real {
            type Output = Real;
            fn $method(self, rhs: &'a Real) -> Real {
                Real(&self.0 $op &rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(-self.0)
    }
}

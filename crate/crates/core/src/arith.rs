//! Small exact-integer helpers shared across modules.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub fn factorial(n: usize) -> BigUint {
    (1..=n as u64).fold(BigUint::one(), |acc, i| acc * i)
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

pub fn pow_u(base: u64, exp: usize) -> BigUint {
    num_traits::pow(BigUint::from(base), exp)
}

/// Order of `G(n, p)`, i.e. `p^n n!`.
pub fn group_order(n: usize, p: u32) -> BigUint {
    pow_u(p as u64, n) * factorial(n)
}

/// Number of terms of `B_a` in `G(n, p)`: `C(n, a) p^a a!`.
pub fn b_size(n: usize, p: u32, a: usize) -> BigUint {
    binomial(n, a) * pow_u(p as u64, a) * factorial(a)
}

pub fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> BigRational {
    BigRational::new(num.into(), den.into())
}

pub fn int(v: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(v.into())
}

pub fn to_biguint_exact(r: &BigRational) -> Option<BigUint> {
    if r.is_integer() && !r.is_negative() {
        r.numer().to_biguint()
    } else {
        None
    }
}

/// Conversion of a (possibly huge) rational to `f64` without overflowing
/// intermediate integers.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let num = r.numer();
    let den = r.denom();
    let nb = num.bits() as i64;
    let db = den.bits() as i64;
    // Scale both to ~60 significant bits before dividing.
    let shift_n = (nb - 60).max(0);
    let shift_d = (db - 60).max(0);
    let n_small: f64 = num_traits::ToPrimitive::to_f64(&(num >> shift_n as usize)).unwrap_or(0.0);
    let d_small: f64 = num_traits::ToPrimitive::to_f64(&(den >> shift_d as usize)).unwrap_or(1.0);
    let exp = shift_n - shift_d;
    let mut value = n_small / d_small;
    // Apply the power of two in bounded steps so subnormal/overflow is gradual.
    let mut e = exp;
    while e > 0 {
        let step = e.min(1000);
        value *= 2f64.powi(step as i32);
        e -= step;
    }
    while e < 0 {
        let step = (-e).min(1000);
        value /= 2f64.powi(step as i32);
        e += step;
    }
    value
}

#[cfg(test)]
pub fn biguint_ln(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 60 {
        return num_traits::ToPrimitive::to_f64(v).unwrap_or(0.0).ln();
    }
    let shift = bits - 60;
    let top: f64 = num_traits::ToPrimitive::to_f64(&(v >> shift as usize)).unwrap_or(1.0);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

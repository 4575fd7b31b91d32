//! Exact characteristic polynomials of integer matrices by reduction to upper
//! Hessenberg form modulo word-sized primes, recombined by Chinese remaindering.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};

const PRIME_CEILING: u64 = 1 << 31;
const PRIME_POOL: usize = 1024;

fn is_prime(m: u64) -> bool {
    if m < 4 {
        return m >= 2;
    }
    if m % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= m {
        if m % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Primes just below `2^31`, largest first.
pub(crate) fn primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let mut out = Vec::with_capacity(PRIME_POOL);
        let mut m = PRIME_CEILING - 1;
        while out.len() < PRIME_POOL {
            if is_prime(m) {
                out.push(m);
            }
            m -= 2;
        }
        out
    })
}

fn pow_mod(mut b: u64, mut e: u64, q: u64) -> u64 {
    let mut acc = 1u64;
    b %= q;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % q;
        }
        b = b * b % q;
        e >>= 1;
    }
    acc
}

fn inv_mod(a: u64, q: u64) -> u64 {
    pow_mod(a, q - 2, q)
}

/// Characteristic polynomial `det(xI − A) mod q`, coefficients ascending.
/// `a` is dense row-major with entries already reduced mod `q`.
pub(crate) fn char_poly_mod(mut a: Vec<u64>, n: usize, q: u64) -> Vec<u64> {
    let idx = |r: usize, c: usize| r * n + c;
    for m in 1..n.saturating_sub(1) {
        let Some(piv) = (m..n).find(|&i| a[idx(i, m - 1)] != 0) else {
            continue;
        };
        if piv != m {
            for c in 0..n {
                a.swap(idx(piv, c), idx(m, c));
            }
            for r in 0..n {
                a.swap(idx(r, piv), idx(r, m));
            }
        }
        let inv = inv_mod(a[idx(m, m - 1)], q);
        let mut factors = vec![0u64; n];
        for i in m + 1..n {
            let u = a[idx(i, m - 1)] * inv % q;
            if u == 0 {
                continue;
            }
            factors[i] = u;
            let neg = q - u;
            for c in m - 1..n {
                let v = a[idx(m, c)];
                if v != 0 {
                    a[idx(i, c)] = (a[idx(i, c)] + neg * v) % q;
                }
            }
        }
        // Column m accumulates Σ_i u_i · column i (the inverse similarity).
        for r in 0..n {
            let mut acc = a[idx(r, m)] as u128;
            for i in m + 1..n {
                if factors[i] != 0 {
                    acc += factors[i] as u128 * a[idx(r, i)] as u128;
                }
            }
            a[idx(r, m)] = (acc % q as u128) as u64;
        }
    }
    // p_m = (x − h_mm) p_{m−1} − Σ_{i<m} h_im (Π_{j=i+1}^{m} h_{j,j−1}) p_{i−1}
    let mut polys: Vec<Vec<u64>> = vec![vec![1]];
    for m in 0..n {
        let prev = &polys[m];
        let mut next = vec![0u64; m + 2];
        for (k, &c) in prev.iter().enumerate() {
            next[k + 1] = (next[k + 1] + c) % q;
            next[k] = (next[k] + (q - a[idx(m, m)]) * c) % q;
        }
        let mut t = 1u64;
        for i in (0..m).rev() {
            t = t * a[idx(i + 1, i)] % q;
            if t == 0 {
                break;
            }
            let h = a[idx(i, m)] * t % q;
            if h == 0 {
                continue;
            }
            for (k, &c) in polys[i].iter().enumerate() {
                next[k] = (next[k] + (q - h) * c) % q;
            }
        }
        polys.push(next);
    }
    polys.pop().unwrap_or_else(|| vec![1])
}

/// Number of primes from [`primes`] whose product exceeds `2 · bound`.
pub(crate) fn primes_needed(bound: &BigUint) -> usize {
    let target = bound * 2u32 + 1u32;
    let mut product = BigUint::one();
    for (i, &q) in primes().iter().enumerate() {
        product *= q;
        if product > target {
            return i + 1;
        }
    }
    primes().len() + 1
}

/// Lifts residues to the symmetric range modulo the product of the first
/// `residues.len()` primes.
pub(crate) fn crt_symmetric(residues: &[Vec<u64>]) -> Vec<BigInt> {
    let len = residues[0].len();
    let mut modulus = BigInt::one();
    let mut values = vec![BigInt::zero(); len];
    for (j, res) in residues.iter().enumerate() {
        let q = BigInt::from(primes()[j]);
        let m_inv = modulus.mod_floor(&q);
        let m_inv = BigInt::from(inv_mod(
            u64::try_from(m_inv).expect("residue below q"),
            primes()[j],
        ));
        for (v, &r) in values.iter_mut().zip(res) {
            let diff = (BigInt::from(r) - &*v).mod_floor(&q);
            *v += &modulus * ((diff * &m_inv).mod_floor(&q));
        }
        modulus *= q;
    }
    let half = &modulus >> 1;
    for v in values.iter_mut() {
        if *v > half {
            *v -= &modulus;
        }
    }
    values
}

/// Bound on the absolute coefficients of the characteristic polynomial of an
/// `n × n` matrix whose column sums of absolute values are at most `rho`:
/// `max_j C(n, j) rho^j`.
pub(crate) fn coefficient_bound(n: usize, rho: &BigUint) -> BigUint {
    let mut best = BigUint::one();
    let mut term = BigUint::one();
    for j in 1..=n {
        term = term * rho * (n + 1 - j) / j;
        if term > best {
            best = term.clone();
        }
    }
    best
}

/// Reduces a signed integer into `0..q`.
#[cfg(test)]
pub(crate) fn reduce(v: &BigInt, q: u64) -> u64 {
    let r = v.mod_floor(&BigInt::from(q));
    u64::try_from(r).expect("reduced value below q")
}

pub(crate) fn reduce_i64(v: i64, q: u64) -> u64 {
    v.rem_euclid(q as i64) as u64
}

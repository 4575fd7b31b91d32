//! Stirling numbers of both kinds, their `p`-deformations, the generalized
//! numbers `S_{a,a}(k, b)` from boson normal ordering, the row mode, and the
//! asymptotics used for the cutoff analysis.
//!
//! First-kind numbers are the unsigned ones (`[k, a]` counts permutations of
//! `k` with `a` cycles).

use std::io::{self, Write};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arith::{self, binomial, factorial, pow_u};
use crate::error::{Error, Result};
use crate::real::Real;

/// Default row bound for memoized tables.
pub const DEFAULT_MAX_ROWS: usize = 20_000;
/// Default column bound for memoized tables.
pub const DEFAULT_MAX_COLUMNS: usize = 1_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StirlingKind {
    First,
    Second,
}

/// Memoized triangular table, rows `0..=max_k`, columns truncated at `max_a`.
#[derive(Clone, Debug)]
pub struct StirlingTable {
    kind: StirlingKind,
    max_a: usize,
    rows: Vec<Vec<BigUint>>,
}

impl StirlingTable {
    pub fn new(kind: StirlingKind, max_k: usize, max_a: usize) -> Result<Self> {
        Self::with_caps(kind, max_k, max_a, DEFAULT_MAX_ROWS, DEFAULT_MAX_COLUMNS)
    }

    pub fn with_caps(
        kind: StirlingKind,
        max_k: usize,
        max_a: usize,
        row_cap: usize,
        column_cap: usize,
    ) -> Result<Self> {
        if max_k > row_cap {
            return Err(Error::cap("Stirling table rows", max_k, row_cap, None));
        }
        if max_a > column_cap {
            return Err(Error::cap("Stirling table columns", max_a, column_cap, None));
        }
        let mut rows = Vec::with_capacity(max_k + 1);
        let mut row = vec![BigUint::one()];
        rows.push(row.clone());
        for k in 0..max_k {
            row = next_row(kind, &row, k, max_a);
            rows.push(row.clone());
        }
        Ok(Self { kind, max_a, rows })
    }

    pub fn kind(&self) -> StirlingKind {
        self.kind
    }

    pub fn max_k(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn max_a(&self) -> usize {
        self.max_a
    }

    /// Entry `(k, a)`; zero above the diagonal, `None` outside the table bounds.
    pub fn get(&self, k: usize, a: usize) -> Option<BigUint> {
        if a > self.max_a {
            return None;
        }
        let row = self.rows.get(k)?;
        Some(row.get(a).cloned().unwrap_or_default())
    }

    /// Row `k`, truncated at `min(k, max_a)`.
    pub fn row(&self, k: usize) -> Option<&[BigUint]> {
        self.rows.get(k).map(|r| r.as_slice())
    }

    #[doc(hidden)]
    pub fn perturb(&mut self, k: usize, a: usize) {
        if let Some(entry) = self.rows.get_mut(k).and_then(|r| r.get_mut(a)) {
            *entry += 1u32;
        }
    }

    /// CSV with header `k,a,value` over the given (inclusive) ranges.
    pub fn write_csv<W: Write>(
        &self,
        mut out: W,
        k_range: std::ops::RangeInclusive<usize>,
        a_range: std::ops::RangeInclusive<usize>,
    ) -> io::Result<()> {
        writeln!(out, "k,a,value")?;
        for k in k_range {
            if k > self.max_k() {
                break;
            }
            for a in a_range.clone() {
                if a > self.max_a {
                    break;
                }
                let value = self.get(k, a).unwrap_or_default();
                writeln!(out, "{k},{a},{value}")?;
            }
        }
        Ok(())
    }
}

fn next_row(kind: StirlingKind, row: &[BigUint], k: usize, max_a: usize) -> Vec<BigUint> {
    let len = (k + 2).min(max_a + 1);
    let mut next = vec![BigUint::zero(); len];
    for (a, slot) in next.iter_mut().enumerate().skip(1) {
        let same = row.get(a).map(|v| {
            let factor = match kind {
                StirlingKind::First => k as u64,
                StirlingKind::Second => a as u64,
            };
            v * factor
        });
        let left = row.get(a - 1);
        *slot = match (same, left) {
            (Some(s), Some(l)) => s + l,
            (Some(s), None) => s,
            (None, Some(l)) => l.clone(),
            (None, None) => BigUint::zero(),
        };
    }
    next
}

/// Streams rows `0, 1, 2, …` of the second-kind table, keeping only the
/// current row in memory.
#[derive(Clone, Debug)]
pub struct Stirling2Rows {
    max_a: usize,
    k: usize,
    row: Option<Vec<BigUint>>,
}

pub fn stirling2_rows(max_a: usize) -> Stirling2Rows {
    Stirling2Rows {
        max_a,
        k: 0,
        row: None,
    }
}

impl Iterator for Stirling2Rows {
    type Item = (usize, Vec<BigUint>);

    fn next(&mut self) -> Option<Self::Item> {
        let row = match self.row.take() {
            None => vec![BigUint::one()],
            Some(prev) => {
                self.k += 1;
                next_row(StirlingKind::Second, &prev, self.k - 1, self.max_a)
            }
        };
        self.row = Some(row.clone());
        Some((self.k, row))
    }
}

/// Row `k` of the second-kind table truncated at column `max_a`.
pub fn stirling2_row(k: usize, max_a: usize) -> Vec<BigUint> {
    stirling2_rows(max_a).nth(k).map(|(_, r)| r).unwrap_or_default()
}

fn single(kind: StirlingKind, k: usize, a: usize) -> BigUint {
    if a > k {
        return BigUint::zero();
    }
    let mut row = vec![BigUint::one()];
    for i in 0..k {
        row = next_row(kind, &row, i, a);
    }
    row.get(a).cloned().unwrap_or_default()
}

/// `{k, a}`: partitions of a `k`-set into `a` blocks.
pub fn stirling2(k: usize, a: usize) -> BigUint {
    single(StirlingKind::Second, k, a)
}

/// Unsigned `[k, a]`: permutations of `k` elements with `a` cycles.
pub fn stirling1(k: usize, a: usize) -> BigUint {
    single(StirlingKind::First, k, a)
}

/// `{k, a}_p = p^(k-a) {k, a}`, zero for `a > k`.
pub fn stirling2_p(k: usize, a: usize, p: u32) -> BigUint {
    if a > k {
        return BigUint::zero();
    }
    pow_u(p as u64, k - a) * stirling2(k, a)
}

/// `[k, a]_p = p^(k-a) [k, a]`, zero for `a > k`.
pub fn stirling1_p(k: usize, a: usize, p: u32) -> BigUint {
    if a > k {
        return BigUint::zero();
    }
    pow_u(p as u64, k - a) * stirling1(k, a)
}

/// `(x)_{n,p} = x (x - p) (x - 2p) … (x - (n-1)p)`.
pub fn falling_factorial_p(x: &BigRational, n: usize, p: u32) -> BigRational {
    (0..n).fold(BigRational::one(), |acc, j| {
        acc * (x - arith::int(BigInt::from(j as u64 * p as u64)))
    })
}

/// Right-hand side of `(x)_{n,p} = Σ_k p^(n-k) (-1)^(n-k) [n, k] x^k`.
pub fn falling_factorial_p_expansion(x: &BigRational, n: usize, p: u32) -> BigRational {
    (0..=n)
        .map(|k| {
            let magnitude = arith::int(stirling1_p(n, k, p));
            let term = magnitude * num_traits::pow(x.clone(), k);
            if (n - k) % 2 == 0 {
                term
            } else {
                -term
            }
        })
        .sum()
}

/// Right-hand side of `x^n = Σ_k p^(n-k) {n, k} (x)_{k,p}`.
pub fn power_via_falling_factorials(x: &BigRational, n: usize, p: u32) -> BigRational {
    (0..=n)
        .map(|k| arith::int(stirling2_p(n, k, p)) * falling_factorial_p(x, k, p))
        .sum()
}

/// `S_{a,a}(k, b) = ((-1)^b / b!) Σ_{i=a}^{b} (-1)^i C(b, i) (a! C(i, a))^k`.
///
/// Evaluated over the rationals; a non-integral result is reported as an
/// internal error. Zero outside `a ≤ b ≤ a k`.
pub fn generalized_stirling(a: usize, k: usize, b: usize) -> Result<BigInt> {
    if b < a || b > a * k {
        return Ok(BigInt::zero());
    }
    let a_fact = factorial(a);
    let mut sum = BigInt::zero();
    for i in a..=b {
        let base = &a_fact * binomial(i, a);
        let term = BigInt::from(binomial(b, i) * num_traits::pow(base, k));
        if i % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if b % 2 == 1 {
        sum = -sum;
    }
    let value = BigRational::new(sum, BigInt::from(factorial(b)));
    if !value.is_integer() || value.is_negative() {
        return Err(Error::Internal(format!(
            "S_{{{a},{a}}}({k}, {b}) evaluated to {value}, not a natural number"
        )));
    }
    Ok(value.to_integer())
}

/// Leftmost argmax of `a ↦ {k, a}`: the first index whose successor does not increase.
pub fn stirling_mode(k: usize) -> usize {
    if k == 0 {
        return 0;
    }
    mode_of_row(&stirling2_row(k, k))
}

pub(crate) fn mode_of_row(row: &[BigUint]) -> usize {
    let mut a = 1;
    while a + 1 < row.len() && row[a + 1] > row[a] {
        a += 1;
    }
    a
}

/// Leading-order location of the row mode, `k / ln k`.
pub fn asymptotic_mode(k: usize) -> Real {
    let kr = Real::from_u64(k as u64);
    &kr / &kr.ln()
}

/// Thresholds standing in for the two "→ ∞" conditions of the Menon regime.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MenonThresholds {
    /// Minimum for `n / √k`.
    pub min_n_over_sqrt_k: f64,
    /// Minimum for `k/n − ln √k`.
    pub min_excess: f64,
}

impl Default for MenonThresholds {
    fn default() -> Self {
        Self {
            min_n_over_sqrt_k: 3.0,
            min_excess: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MenonValidity {
    pub n_over_sqrt_k: f64,
    pub excess: f64,
    pub n_over_sqrt_k_large: bool,
    pub excess_large: bool,
}

impl MenonValidity {
    pub fn holds(&self) -> bool {
        self.n_over_sqrt_k_large && self.excess_large
    }
}

/// `{k, n} ≈ (n^k / n!) exp(-e^λ)`, `λ = ln n − k/n + 1/(2n) − 1/(12 n²)`.
#[derive(Clone, Debug)]
pub struct AsymptoticEstimate {
    pub k: usize,
    pub n: usize,
    pub point_value: Real,
    pub lambda: Real,
    pub validity: MenonValidity,
}

pub fn menon_lambda(k: usize, n: usize) -> Real {
    let nr = Real::from_u64(n as u64);
    let kr = Real::from_u64(k as u64);
    let half = Real::from_u64(1) / (Real::from_u64(2) * nr.clone());
    let twelfth = Real::from_u64(1) / (Real::from_u64(12) * nr.clone() * nr.clone());
    nr.ln() - kr / nr + half - twelfth
}

pub fn menon_approx(k: usize, n: usize) -> AsymptoticEstimate {
    menon_approx_with(k, n, MenonThresholds::default())
}

pub fn menon_approx_with(k: usize, n: usize, thresholds: MenonThresholds) -> AsymptoticEstimate {
    assert!(n >= 1, "menon_approx needs n >= 1");
    let lambda = menon_lambda(k, n);
    let nr = Real::from_u64(n as u64);
    let ln_prefactor =
        nr.ln() * Real::from_u64(k as u64) - Real::from_biguint(&factorial(n)).ln();
    let point_value = (ln_prefactor - lambda.exp()).exp();
    let kf = k.max(1) as f64;
    let n_over_sqrt_k = n as f64 / kf.sqrt();
    let excess = k as f64 / n as f64 - kf.sqrt().ln();
    AsymptoticEstimate {
        k,
        n,
        point_value,
        lambda,
        validity: MenonValidity {
            n_over_sqrt_k,
            excess,
            n_over_sqrt_k_large: n_over_sqrt_k >= thresholds.min_n_over_sqrt_k,
            excess_large: excess >= thresholds.min_excess,
        },
    }
}

/// Probability that `k` balls thrown into `n` boxes leave none empty:
/// `{k, n} n! / n^k`.
pub fn ball_box_probability(k: usize, n: usize) -> BigRational {
    assert!(n >= 1, "ball_box_probability needs n >= 1");
    BigRational::new(
        BigInt::from(stirling2(k, n) * factorial(n)),
        BigInt::from(pow_u(n as u64, k)),
    )
}

/// Same probability by inclusion–exclusion, `Σ_j (-1)^j C(n, j) (1 − j/n)^k`.
pub fn ball_box_inclusion_exclusion(k: usize, n: usize) -> BigRational {
    assert!(n >= 1, "ball_box_inclusion_exclusion needs n >= 1");
    let den = BigInt::from(pow_u(n as u64, k));
    let mut num = BigInt::zero();
    for j in 0..=n {
        let term = BigInt::from(binomial(n, j) * pow_u((n - j) as u64, k));
        if j % 2 == 0 {
            num += term;
        } else {
            num -= term;
        }
    }
    BigRational::new(num, den)
}

/// Limit form `exp(−n e^{−k/n})` of the ball-box probability.
pub fn ball_box_limit(k: usize, n: usize) -> Real {
    let nr = Real::from_u64(n as u64);
    let ratio = Real::from_u64(k as u64) / nr.clone();
    (-(nr * (-ratio).exp())).exp()
}

/// Natural logs of `{k, a}` for `a = 0..=min(k, max_a)`, computed by running the
/// recurrence in log space. Approximate; `-inf` marks zero entries.
pub fn ln_stirling2_row(k: usize, max_a: usize) -> Vec<f64> {
    let mut row = vec![0.0f64];
    for i in 0..k {
        let len = (i + 2).min(max_a + 1);
        let mut next = vec![f64::NEG_INFINITY; len];
        for (a, slot) in next.iter_mut().enumerate().skip(1) {
            let same = row.get(a).map(|v| v + (a as f64).ln());
            let left = row.get(a - 1).copied();
            *slot = log_add(same.unwrap_or(f64::NEG_INFINITY), left.unwrap_or(f64::NEG_INFINITY));
        }
        row = next;
    }
    row
}

pub(crate) fn log_add(x: f64, y: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return y;
    }
    if y == f64::NEG_INFINITY {
        return x;
    }
    let (hi, lo) = if x > y { (x, y) } else { (y, x) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln({k, n} n! / n^k)` from the log-space row; approximate.
pub fn ln_ball_box_probability(k: usize, n: usize) -> f64 {
    let row = ln_stirling2_row(k, n);
    let ln_s = row.get(n).copied().unwrap_or(f64::NEG_INFINITY);
    ln_s + ln_factorial(n) - k as f64 * (n as f64).ln()
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

//! The left regular representation, exact characteristic polynomials and the
//! eigenvalue multiplicities of the shuffle operators.
//!
//! `L(x)` acts on the basis of group elements (in enumeration order) by left
//! multiplication: column `v` of `L(x)` is `Σ_w x_w · (w v)`. The transition
//! matrix of the shuffle is `L(B_1) / (np)`; the eigenvalue `ip` of `L(B_1)`
//! has multiplicity `C(n, i) D(n − i, p)`, the number of group elements with
//! exactly `i` fixed points.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{self, binomial, factorial, pow_u};
use crate::colored_group::{self, derangement_count, ColoredPermutation};
use crate::error::{Error, Result};
use crate::modular;
use crate::shuffle_algebra::{self, AlgebraElement};

/// Default bound on the order `p^n n!` of a regular matrix.
pub const DEFAULT_MATRIX_CAP: u64 = 5000;
/// Largest order handled by the general (multimodular Hessenberg) route.
pub const GENERAL_CHAR_POLY_CAP: usize = 400;

/// `L(x)` stored by sparse columns.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularMatrix {
    n: usize,
    p: u32,
    columns: Vec<Vec<(u32, BigRational)>>,
}

/// `L(x)` for `x ∈ Q[G(n, p)]`.
pub fn left_regular_matrix(x: &AlgebraElement) -> Result<RegularMatrix> {
    left_regular_matrix_with_cap(x, DEFAULT_MATRIX_CAP)
}

pub fn left_regular_matrix_with_cap(x: &AlgebraElement, cap: u64) -> Result<RegularMatrix> {
    let (n, p) = (x.n(), x.p());
    let order = match colored_group::group_order_u64(n, p) {
        Some(order) if order <= cap => order,
        _ => {
            return Err(Error::cap(
                "the regular representation",
                format!("order {}", colored_group::group_order(n, p)),
                cap,
                Some("raise the matrix cap or use the formula method"),
            ))
        }
    };
    let basis: Vec<ColoredPermutation> = colored_group::enumerate_with_cap(n, p, order)?.collect();
    let columns = basis
        .par_iter()
        .map(|v| {
            let mut col: Vec<(u32, BigRational)> = x
                .terms()
                .iter()
                .map(|(w, c)| {
                    let row = w.mul_unchecked(v).rank().expect("rank fits when order does");
                    (row as u32, c.clone())
                })
                .collect();
            col.sort_by_key(|(r, _)| *r);
            col
        })
        .collect();
    Ok(RegularMatrix { n, p, columns })
}

impl RegularMatrix {
    /// The identity matrix of order `p^n n!`.
    pub fn identity(n: usize, p: u32) -> Result<Self> {
        left_regular_matrix(&AlgebraElement::identity(n, p))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn order(&self) -> usize {
        self.columns.len()
    }

    /// Basis labels in row/column order.
    pub fn labels(&self) -> Vec<ColoredPermutation> {
        (0..self.order() as u64)
            .map(|r| ColoredPermutation::unrank(self.n, self.p, r).expect("rank in range"))
            .collect()
    }

    pub fn entry(&self, row: usize, col: usize) -> BigRational {
        self.columns[col]
            .binary_search_by_key(&(row as u32), |(r, _)| *r)
            .map(|i| self.columns[col][i].1.clone())
            .unwrap_or_else(|_| BigRational::zero())
    }

    pub fn column(&self, col: usize) -> &[(u32, BigRational)] {
        &self.columns[col]
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<BigRational>> {
        let n = self.order();
        let mut out = vec![vec![BigRational::zero(); n]; n];
        for (c, col) in self.columns.iter().enumerate() {
            for (r, v) in col {
                out[*r as usize][c] = v.clone();
            }
        }
        out
    }

    pub fn trace(&self) -> BigRational {
        (0..self.order()).map(|i| self.entry(i, i)).sum()
    }

    pub fn column_sums(&self) -> Vec<BigRational> {
        self.columns
            .iter()
            .map(|col| col.iter().map(|(_, v)| v).sum())
            .collect()
    }

    pub fn row_sums(&self) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); self.order()];
        for col in &self.columns {
            for (r, v) in col {
                out[*r as usize] += v;
            }
        }
        out
    }

    pub fn scale(&self, factor: &BigRational) -> Self {
        Self {
            n: self.n,
            p: self.p,
            columns: self
                .columns
                .iter()
                .map(|col| {
                    col.iter()
                        .filter(|_| !factor.is_zero())
                        .map(|(r, v)| (*r, v * factor))
                        .collect()
                })
                .collect(),
        }
    }

    /// Exact matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        if self.n != rhs.n || self.p != rhs.p {
            return Err(Error::Mismatch {
                left_n: self.n,
                left_p: self.p,
                right_n: rhs.n,
                right_p: rhs.p,
            });
        }
        let columns = rhs
            .columns
            .par_iter()
            .map(|bcol| {
                let mut acc: BTreeMap<u32, BigRational> = BTreeMap::new();
                for (k, b) in bcol {
                    for (r, a) in &self.columns[*k as usize] {
                        *acc.entry(*r).or_insert_with(BigRational::zero) += a * b;
                    }
                }
                acc.into_iter().filter(|(_, v)| !v.is_zero()).collect()
            })
            .collect();
        Ok(Self {
            n: self.n,
            p: self.p,
            columns,
        })
    }

    fn integer_columns(&self) -> Result<Vec<Vec<(u32, i64)>>> {
        self.columns
            .iter()
            .map(|col| {
                col.iter()
                    .map(|(r, v)| {
                        if !v.is_integer() {
                            return Err(Error::invalid(
                                "characteristic polynomials need an integer matrix",
                            ));
                        }
                        v.to_integer()
                            .to_i64()
                            .map(|x| (*r, x))
                            .ok_or_else(|| Error::invalid("matrix entry exceeds 64 bits"))
                    })
                    .collect()
            })
            .collect()
    }
}

/// Monic integer polynomial, optionally with its factorization into linear
/// factors over the integers.
#[derive(Clone, Debug)]
pub struct CharPoly {
    degree: usize,
    coefficients: OnceLock<Vec<BigInt>>,
    factors: Option<Vec<(BigInt, usize)>>,
}

impl PartialEq for CharPoly {
    fn eq(&self, other: &Self) -> bool {
        self.coefficients() == other.coefficients()
    }
}

impl CharPoly {
    pub fn from_coefficients(coefficients: Vec<BigInt>) -> Self {
        let degree = coefficients.len().saturating_sub(1);
        Self {
            degree,
            coefficients: OnceLock::from(coefficients),
            factors: None,
        }
    }

    /// `Π (x − r)^m`; roots are kept in descending order.
    pub fn from_factors(mut factors: Vec<(BigInt, usize)>) -> Self {
        factors.retain(|(_, m)| *m > 0);
        factors.sort_by(|a, b| b.0.cmp(&a.0));
        Self {
            degree: factors.iter().map(|(_, m)| m).sum(),
            coefficients: OnceLock::new(),
            factors: Some(factors),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Ascending coefficients, leading coefficient last.
    pub fn coefficients(&self) -> &[BigInt] {
        self.coefficients.get_or_init(|| {
            let mut poly = vec![BigInt::one()];
            for (root, mult) in self.factors.as_deref().unwrap_or(&[]) {
                for _ in 0..*mult {
                    let mut next = vec![BigInt::zero(); poly.len() + 1];
                    for (k, c) in poly.iter().enumerate() {
                        next[k + 1] += c;
                        next[k] -= c * root;
                    }
                    poly = next;
                }
            }
            poly
        })
    }

    pub fn factors(&self) -> Option<&[(BigInt, usize)]> {
        self.factors.as_deref()
    }

    /// Multiplicity of `root`, when the factorization is known.
    pub fn multiplicity(&self, root: &BigInt) -> Option<usize> {
        self.factors
            .as_ref()
            .map(|f| f.iter().find(|(r, _)| r == root).map_or(0, |(_, m)| *m))
    }

    /// Splits off the given integer roots by exact synthetic division. The
    /// candidates must exhaust the polynomial: a nonconstant quotient is an
    /// internal error.
    pub fn factor(&self, candidates: &[BigInt]) -> Result<CharPoly> {
        let mut poly = self.coefficients().to_vec();
        let mut factors = Vec::new();
        for root in candidates {
            let mut mult = 0;
            while poly.len() > 1 {
                let (quotient, remainder) = synthetic_division(&poly, root);
                if !remainder.is_zero() {
                    break;
                }
                poly = quotient;
                mult += 1;
            }
            factors.push((root.clone(), mult));
        }
        if poly.len() > 1 {
            return Err(Error::Internal(format!(
                "candidate roots leave a factor of degree {} unexplained",
                poly.len() - 1
            )));
        }
        let mut out = CharPoly::from_factors(factors);
        out.coefficients = self.coefficients.clone();
        Ok(out)
    }

    /// E.g. `(x-6)(x-4)^3(x-2)^15x^29`.
    pub fn factored_string(&self) -> Option<String> {
        let factors = self.factors.as_ref()?;
        let mut out = String::new();
        for (root, mult) in factors {
            let base = if root.is_zero() {
                "x".to_string()
            } else if root.is_negative() {
                format!("(x+{})", -root)
            } else {
                format!("(x-{root})")
            };
            out.push_str(&base);
            if *mult > 1 {
                out.push_str(&format!("^{mult}"));
            }
        }
        if out.is_empty() {
            out.push('1');
        }
        Some(out)
    }
}

impl fmt::Display for CharPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.factored_string() {
            Some(s) => f.write_str(&s),
            None => {
                let terms: Vec<String> = self
                    .coefficients()
                    .iter()
                    .enumerate()
                    .rev()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(k, c)| format!("{c}x^{k}"))
                    .collect();
                f.write_str(&terms.join(" + "))
            }
        }
    }
}

/// Divides by `x − root`; returns the quotient and the remainder.
fn synthetic_division(poly: &[BigInt], root: &BigInt) -> (Vec<BigInt>, BigInt) {
    let deg = poly.len() - 1;
    let mut quotient = vec![BigInt::zero(); deg];
    let mut carry = BigInt::zero();
    for k in (0..=deg).rev() {
        let value = &poly[k] + &carry * root;
        if k == 0 {
            return (quotient, value);
        }
        quotient[k - 1] = value.clone();
        carry = value;
    }
    unreachable!("loop returns at k = 0")
}

/// `det(xI − M)` for an integer matrix of order at most
/// [`GENERAL_CHAR_POLY_CAP`], by Hessenberg reduction modulo enough primes to
/// pin down every coefficient.
pub fn char_poly(m: &RegularMatrix) -> Result<CharPoly> {
    let size = m.order();
    if size > GENERAL_CHAR_POLY_CAP {
        return Err(Error::cap(
            "the general characteristic polynomial",
            format!("order {size}"),
            GENERAL_CHAR_POLY_CAP,
            Some("use the certified route with candidate roots"),
        ));
    }
    let columns = m.integer_columns()?;
    let rho = columns
        .iter()
        .map(|col| col.iter().map(|(_, v)| v.unsigned_abs()).sum::<u64>())
        .chain(std::iter::once(1))
        .max()
        .unwrap_or(1);
    let bound = modular::coefficient_bound(size, &BigUint::from(rho));
    let count = modular::primes_needed(&bound);
    if count > modular::primes().len() {
        return Err(Error::cap(
            "the prime pool for Chinese remaindering",
            count,
            modular::primes().len(),
            None,
        ));
    }
    let residues: Vec<Vec<u64>> = modular::primes()[..count]
        .par_iter()
        .map(|&q| {
            let mut dense = vec![0u64; size * size];
            for (c, col) in columns.iter().enumerate() {
                for (r, v) in col {
                    dense[*r as usize * size + c] = modular::reduce_i64(*v, q);
                }
            }
            modular::char_poly_mod(dense, size, q)
        })
        .collect();
    Ok(CharPoly::from_coefficients(modular::crt_symmetric(&residues)))
}

/// Characteristic polynomial of a matrix known to have all its eigenvalues in
/// `candidates`, certified exactly.
///
/// The route first proves `Π_r (M − rI) = 0` column by column, which makes `M`
/// diagonalizable with spectrum inside the (distinct) candidates. The
/// multiplicities then follow from the power traces `Tr M^k`, `k < #candidates`,
/// through the Vandermonde system `Σ_r m_r r^k = Tr M^k`.
pub fn char_poly_certified(m: &RegularMatrix, candidates: &[BigInt]) -> Result<CharPoly> {
    let mut roots: Vec<i128> = candidates
        .iter()
        .map(|r| r.to_i128().ok_or_else(|| Error::invalid("candidate root exceeds 128 bits")))
        .collect::<Result<_>>()?;
    roots.sort_unstable();
    roots.dedup();
    let columns = m.integer_columns()?;
    let size = m.order();
    // Coefficients of Π (x − r), ascending.
    let mut annihilator: Vec<i128> = vec![1];
    for &r in &roots {
        let mut next = vec![0i128; annihilator.len() + 1];
        for (k, &c) in annihilator.iter().enumerate() {
            next[k + 1] = next[k + 1].checked_add(c).ok_or_else(overflow)?;
            next[k] = next[k].checked_sub(c.checked_mul(r).ok_or_else(overflow)?).ok_or_else(overflow)?;
        }
        annihilator = next;
    }
    let r_count = roots.len();
    let partial: Vec<Vec<i128>> = (0..size)
        .into_par_iter()
        .map(|j| -> Result<Vec<i128>> {
            let mut v = vec![0i128; size];
            v[j] = 1;
            let mut traces = vec![0i128; r_count];
            let mut image = vec![0i128; size];
            for (k, &coef) in annihilator.iter().enumerate() {
                if k < r_count {
                    traces[k] = v[j];
                }
                if coef != 0 {
                    for (slot, &x) in image.iter_mut().zip(&v) {
                        if x != 0 {
                            *slot = slot
                                .checked_add(coef.checked_mul(x).ok_or_else(overflow)?)
                                .ok_or_else(overflow)?;
                        }
                    }
                }
                if k + 1 < annihilator.len() {
                    v = sparse_matvec(&columns, &v)?;
                }
            }
            if image.iter().any(|&x| x != 0) {
                return Err(Error::Internal(format!(
                    "basis vector {j} is not annihilated by the candidate roots"
                )));
            }
            Ok(traces)
        })
        .collect::<Result<_>>()?;
    let mut traces = vec![BigInt::zero(); r_count];
    for t in &partial {
        for (acc, &x) in traces.iter_mut().zip(t) {
            *acc += x;
        }
    }
    let mults = solve_vandermonde(&roots, &traces)?;
    Ok(CharPoly::from_factors(
        roots.iter().map(|&r| BigInt::from(r)).zip(mults).collect(),
    ))
}

fn overflow() -> Error {
    Error::Internal("128-bit overflow in the certified characteristic polynomial".into())
}

fn sparse_matvec(columns: &[Vec<(u32, i64)>], v: &[i128]) -> Result<Vec<i128>> {
    let mut out = vec![0i128; v.len()];
    for (c, &x) in v.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for &(r, a) in &columns[c] {
            let slot = &mut out[r as usize];
            *slot = slot
                .checked_add((a as i128).checked_mul(x).ok_or_else(overflow)?)
                .ok_or_else(overflow)?;
        }
    }
    Ok(out)
}

/// Solves `Σ_r m_r r^k = t_k` exactly; the solution must be natural numbers.
fn solve_vandermonde(roots: &[i128], traces: &[BigInt]) -> Result<Vec<usize>> {
    let size = roots.len();
    let mut rows: Vec<Vec<BigRational>> = (0..size)
        .map(|k| {
            let mut row: Vec<BigRational> = roots
                .iter()
                .map(|&r| arith::int(num_traits::pow(BigInt::from(r), k)))
                .collect();
            row.push(BigRational::from_integer(traces[k].clone()));
            row
        })
        .collect();
    for col in 0..size {
        let pivot = (col..size)
            .find(|&r| !rows[r][col].is_zero())
            .ok_or_else(|| Error::Internal("singular Vandermonde system".into()))?;
        rows.swap(col, pivot);
        let inv = BigRational::one() / &rows[col][col];
        for x in rows[col].iter_mut() {
            *x *= &inv;
        }
        for r in 0..size {
            if r != col && !rows[r][col].is_zero() {
                let f = rows[r][col].clone();
                for c in col..=size {
                    let delta = &rows[col][c] * &f;
                    rows[r][c] -= delta;
                }
            }
        }
    }
    rows.iter()
        .map(|row| {
            let m = &row[size];
            if !m.is_integer() || m.is_negative() {
                return Err(Error::Internal(format!("non-natural multiplicity {m}")));
            }
            m.to_integer()
                .to_usize()
                .ok_or_else(|| Error::Internal("multiplicity overflow".into()))
        })
        .collect()
}

/// Characteristic polynomial factored over `candidates`, by whichever exact
/// route the order allows.
pub fn char_poly_factored(m: &RegularMatrix, candidates: &[BigInt]) -> Result<CharPoly> {
    if m.order() <= GENERAL_CHAR_POLY_CAP / 2 {
        char_poly(m)?.factor(candidates)
    } else {
        char_poly_certified(m, candidates)
    }
}

/// Candidate eigenvalues `0, p, 2p, …, np` of `L(B_1)`.
pub fn b1_candidates(n: usize, p: u32) -> Vec<BigInt> {
    (0..=n).rev().map(|i| BigInt::from(i as u64 * p as u64)).collect()
}

/// Candidate eigenvalues of `L(B_a)`: `0` and `p^a a! C(i, a)` for `i ≥ a`.
pub fn ba_candidates(a: usize, n: usize, p: u32) -> Vec<BigInt> {
    let mut out: Vec<BigInt> = ba_eigenvalues(a, n, p)
        .into_iter()
        .map(|(v, _)| BigInt::from(v))
        .collect();
    if !out.iter().any(Zero::is_zero) {
        out.push(BigInt::zero());
    }
    out
}

/// How a multiplicity report is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumMethod {
    /// `C(n, i) D(n − i, p)`.
    Formula,
    /// `Tr L(e_i)`, which is `p^n n!` times the identity coefficient of `e_i`.
    IdempotentTrace,
    /// Exact characteristic polynomial of `L(B_1)`.
    CharPoly,
}

impl SpectrumMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectrumMethod::Formula => "formula",
            SpectrumMethod::IdempotentTrace => "idempotent-trace",
            SpectrumMethod::CharPoly => "char-poly",
        }
    }
}

impl fmt::Display for SpectrumMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpectrumMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "formula" => Ok(SpectrumMethod::Formula),
            "idempotent-trace" | "trace" => Ok(SpectrumMethod::IdempotentTrace),
            "char-poly" | "charpoly" => Ok(SpectrumMethod::CharPoly),
            other => Err(Error::invalid(format!(
                "unknown spectrum method `{other}` (expected formula, idempotent-trace or char-poly)"
            ))),
        }
    }
}

mod decimal {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub value: u64,
    pub i: usize,
    #[serde(with = "decimal")]
    pub multiplicity: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub n: usize,
    pub p: u32,
    /// Eigenvalues `ip` of `L(B_1)` in decreasing order, absent ones included
    /// with multiplicity zero.
    pub eigenvalues: Vec<Eigenvalue>,
    pub method: SpectrumMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub char_poly: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub char_poly_coefficients: Option<Vec<String>>,
}

impl SpectrumReport {
    pub fn total_multiplicity(&self) -> BigUint {
        self.eigenvalues.iter().map(|e| &e.multiplicity).sum()
    }

    pub fn multiplicity(&self, i: usize) -> Option<&BigUint> {
        self.eigenvalues.iter().find(|e| e.i == i).map(|e| &e.multiplicity)
    }

    /// `value^multiplicity` factors, zero-multiplicity eigenvalues omitted.
    pub fn factored_string(&self) -> String {
        let factors = self
            .eigenvalues
            .iter()
            .filter_map(|e| {
                e.multiplicity
                    .to_usize()
                    .filter(|&m| m > 0)
                    .map(|m| (BigInt::from(e.value), m))
            })
            .collect();
        CharPoly::from_factors(factors)
            .factored_string()
            .unwrap_or_default()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports always serialize")
    }
}

/// Multiplicities `C(n, i) D(n − i, p)` of the eigenvalues `ip`, `i = n, …, 0`.
pub fn formula_multiplicities(n: usize, p: u32) -> Result<Vec<BigUint>> {
    (0..=n)
        .rev()
        .map(|i| Ok(binomial(n, i) * derangement_count(n - i, p)?))
        .collect()
}

/// `Tr L(e_i) = p^n n! · [id] e_i`; every `B_a` contains the identity once.
pub fn idempotent_trace(i: usize, n: usize, p: u32) -> Result<BigUint> {
    let identity_coefficient: BigRational = (i..=n)
        .map(|a| shuffle_algebra::idempotent_coefficient(i, a, p))
        .sum();
    let trace = identity_coefficient * arith::int(arith::group_order(n, p));
    arith::to_biguint_exact(&trace)
        .ok_or_else(|| Error::Internal(format!("Tr L(e_{i}) = {trace} is not a natural number")))
}

pub fn multiplicity_report(n: usize, p: u32, method: SpectrumMethod) -> Result<SpectrumReport> {
    multiplicity_report_with_cap(n, p, method, DEFAULT_MATRIX_CAP)
}

pub fn multiplicity_report_with_cap(
    n: usize,
    p: u32,
    method: SpectrumMethod,
    cap: u64,
) -> Result<SpectrumReport> {
    if n == 0 || p == 0 {
        return Err(Error::invalid("n and p must be at least 1"));
    }
    let mut char_poly_text = None;
    let mut coefficients = None;
    let mults: Vec<BigUint> = match method {
        SpectrumMethod::Formula => formula_multiplicities(n, p)?,
        SpectrumMethod::IdempotentTrace => (0..=n)
            .rev()
            .map(|i| idempotent_trace(i, n, p))
            .collect::<Result<_>>()?,
        SpectrumMethod::CharPoly => {
            let b1 = shuffle_algebra::build_b(1, n, p)?;
            let matrix = left_regular_matrix_with_cap(&b1, cap)?;
            let poly = char_poly_factored(&matrix, &b1_candidates(n, p))?;
            char_poly_text = poly.factored_string();
            if poly.degree() <= GENERAL_CHAR_POLY_CAP {
                coefficients = Some(poly.coefficients().iter().map(|c| c.to_string()).collect());
            }
            (0..=n)
                .rev()
                .map(|i| {
                    BigUint::from(
                        poly.multiplicity(&BigInt::from(i as u64 * p as u64))
                            .unwrap_or(0),
                    )
                })
                .collect()
        }
    };
    let eigenvalues = (0..=n)
        .rev()
        .zip(mults)
        .map(|(i, multiplicity)| Eigenvalue {
            value: i as u64 * p as u64,
            i,
            multiplicity,
        })
        .collect();
    Ok(SpectrumReport {
        n,
        p,
        eigenvalues,
        method,
        char_poly: char_poly_text,
        char_poly_coefficients: coefficients,
    })
}

/// Eigenvalues of `L(B_a)` with multiplicities, by decreasing value:
/// `p^a a! C(i, a)` carries `C(n, i) D(n − i, p)` for `i ≥ a`, and `0` the rest.
pub fn ba_eigenvalues(a: usize, n: usize, p: u32) -> Vec<(BigUint, BigUint)> {
    let mut merged: HashMap<BigUint, BigUint> = HashMap::new();
    let total = arith::group_order(n, p);
    let mut assigned = BigUint::zero();
    for i in a..=n {
        let value = pow_u(p as u64, a) * factorial(a) * binomial(i, a);
        let mult = binomial(n, i)
            * derangement_count(n - i, p).expect("p >= 1 checked by callers");
        assigned += &mult;
        *merged.entry(value).or_default() += mult;
    }
    if assigned < total {
        *merged.entry(BigUint::zero()).or_default() += total - assigned;
    }
    let mut out: Vec<_> = merged.into_iter().filter(|(_, m)| !m.is_zero()).collect();
    out.sort_by(|x, y| y.0.cmp(&x.0));
    out
}

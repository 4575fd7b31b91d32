//! The colored permutation group `G(n, p) = C_p ≀ S_n`.
//!
//! An element `(s, σ)` is stored as its word `(s_1, σ(1)) (s_2, σ(2)) … (s_n, σ(n))`:
//! position `j` holds the card value `σ(j)` together with its color `s_j`.
//! Multiplication follows
//!
//! ```text
//! (t, τ)(s, σ) = (σt + s, τσ),   σt = (t_σ(1), …, t_σ(n))
//! ```
//!
//! so in word form the product `a · b` reads `b` left to right and replaces
//! each letter `(s, v)` by the letter of `a` at position `v`, shifted by `s`.
//! Right multiplication by the cycle element `S_{i,k}` is therefore the card
//! move "take the top card, add `k` to its color, insert it at place `i`".
//!
//! Text notation: letters are space separated, `v` for color 0 and `v~c` for
//! color `c ≥ 1`, e.g. `4 1~1 2 3~2`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith;
use crate::error::{Error, Result};

/// Default bound on `p^n n!` for [`enumerate`].
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// A card: value in `1..=n` and color in `0..p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColoredLetter {
    pub color: u32,
    pub value: u32,
}

impl ColoredLetter {
    pub const fn new(color: u32, value: u32) -> Self {
        Self { color, value }
    }

    /// Color-0 letter.
    pub const fn plain(value: u32) -> Self {
        Self { color: 0, value }
    }
}

impl fmt::Display for ColoredLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.color == 0 {
            write!(f, "{}", self.value)
        } else {
            write!(f, "{}~{}", self.value, self.color)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColoredPermutation {
    p: u32,
    word: Vec<ColoredLetter>,
}

impl ColoredPermutation {
    pub fn identity(n: usize, p: u32) -> Self {
        assert!(p >= 1, "modulus must be positive");
        Self {
            p,
            word: (1..=n as u32).map(ColoredLetter::plain).collect(),
        }
    }

    /// Builds an element from its word; colors are reduced modulo `p`.
    pub fn from_word(p: u32, word: Vec<ColoredLetter>) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("modulus p must be at least 1"));
        }
        let n = word.len();
        let mut seen = vec![false; n];
        let mut reduced = word;
        for letter in reduced.iter_mut() {
            let v = letter.value as usize;
            if v == 0 || v > n {
                return Err(Error::invalid(format!(
                    "value {} outside 1..={n}",
                    letter.value
                )));
            }
            if std::mem::replace(&mut seen[v - 1], true) {
                return Err(Error::invalid(format!("value {v} occurs twice")));
            }
            letter.color %= p;
        }
        Ok(Self { p, word: reduced })
    }

    /// Builds `(s, σ)` from the color vector `s` and the one-line notation of `σ`.
    pub fn from_pair(p: u32, colors: &[u32], perm: &[u32]) -> Result<Self> {
        if colors.len() != perm.len() {
            return Err(Error::invalid("color and permutation lengths differ"));
        }
        let word = colors
            .iter()
            .zip(perm)
            .map(|(&c, &v)| ColoredLetter::new(c, v))
            .collect();
        Self::from_word(p, word)
    }

    pub(crate) fn from_word_unchecked(p: u32, word: Vec<ColoredLetter>) -> Self {
        Self { p, word }
    }

    pub fn n(&self) -> usize {
        self.word.len()
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn word(&self) -> &[ColoredLetter] {
        &self.word
    }

    pub fn into_word(self) -> Vec<ColoredLetter> {
        self.word
    }

    /// The pair view `(s, σ)`: colors and one-line permutation.
    pub fn pair_form(&self) -> (Vec<u32>, Vec<u32>) {
        self.word.iter().map(|l| (l.color, l.value)).unzip()
    }

    pub fn is_identity(&self) -> bool {
        self.word
            .iter()
            .enumerate()
            .all(|(j, l)| l.color == 0 && l.value as usize == j + 1)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n() != other.n() || self.p != other.p {
            return Err(Error::Mismatch {
                left_n: self.n(),
                left_p: self.p,
                right_n: other.n(),
                right_p: other.p,
            });
        }
        Ok(())
    }

    /// The product `self · rhs`.
    pub fn multiply(&self, rhs: &Self) -> Result<Self> {
        self.check_compatible(rhs)?;
        Ok(self.mul_unchecked(rhs))
    }

    pub(crate) fn mul_unchecked(&self, rhs: &Self) -> Self {
        let p = self.p;
        let word = rhs
            .word
            .iter()
            .map(|l| {
                let src = self.word[l.value as usize - 1];
                ColoredLetter::new((src.color + l.color) % p, src.value)
            })
            .collect();
        Self { p, word }
    }

    pub fn inverse(&self) -> Self {
        let n = self.n();
        let p = self.p;
        let mut word = vec![ColoredLetter::plain(0); n];
        for (j, l) in self.word.iter().enumerate() {
            word[l.value as usize - 1] = ColoredLetter::new((p - l.color) % p, j as u32 + 1);
        }
        Self { p, word }
    }

    /// Positions `i` (1-based) with color 0 and value `i`.
    pub fn fixed_points(&self) -> Vec<usize> {
        self.word
            .iter()
            .enumerate()
            .filter(|(j, l)| l.color == 0 && l.value as usize == j + 1)
            .map(|(j, _)| j + 1)
            .collect()
    }

    pub fn is_derangement(&self) -> bool {
        self.fixed_points().is_empty()
    }

    /// Index of this element in the canonical enumeration order, or `None`
    /// when the group order does not fit in `u64`.
    pub fn rank(&self) -> Option<u64> {
        let n = self.n();
        let color_space = (self.p as u64).checked_pow(n as u32)?;
        group_order_u64(n, self.p)?;
        let mut used = vec![false; n];
        let mut perm_rank: u64 = 0;
        for (j, l) in self.word.iter().enumerate() {
            let v = l.value as usize - 1;
            let smaller_unused = used[..v].iter().filter(|u| !**u).count() as u64;
            used[v] = true;
            perm_rank = perm_rank * (n - j) as u64 + smaller_unused;
        }
        let color_rank = self
            .word
            .iter()
            .fold(0u64, |acc, l| acc * self.p as u64 + l.color as u64);
        Some(perm_rank * color_space + color_rank)
    }

    /// Inverse of [`rank`](Self::rank).
    pub fn unrank(n: usize, p: u32, rank: u64) -> Option<Self> {
        if p == 0 {
            return None;
        }
        let order = group_order_u64(n, p)?;
        if rank >= order {
            return None;
        }
        let color_space = (p as u64).pow(n as u32);
        let mut perm_rank = rank / color_space;
        let mut color_rank = rank % color_space;
        // Lehmer digits, most significant first.
        let mut digits = vec![0usize; n];
        for j in (0..n).rev() {
            let base = (n - j) as u64;
            digits[j] = (perm_rank % base) as usize;
            perm_rank /= base;
        }
        let mut available: Vec<u32> = (1..=n as u32).collect();
        let mut colors = vec![0u32; n];
        for j in (0..n).rev() {
            colors[j] = (color_rank % p as u64) as u32;
            color_rank /= p as u64;
        }
        let word = digits
            .iter()
            .zip(colors)
            .map(|(&d, c)| ColoredLetter::new(c, available.remove(d)))
            .collect();
        Some(Self { p, word })
    }

    /// Parses the `v` / `v~c` notation. Colors must lie in `0..p`.
    pub fn parse(text: &str, p: u32) -> Result<Self> {
        if p == 0 {
            return Err(Error::Parse("modulus p must be at least 1".into()));
        }
        let mut word = Vec::new();
        for token in text.split_whitespace() {
            let (value, color) = match token.split_once('~') {
                Some((v, c)) => (v, c),
                None => (token, "0"),
            };
            let value: u32 = value
                .parse()
                .map_err(|_| Error::Parse(format!("malformed token `{token}`")))?;
            let color: u32 = color
                .parse()
                .map_err(|_| Error::Parse(format!("malformed token `{token}`")))?;
            if color >= p {
                return Err(Error::Parse(format!(
                    "color {color} in `{token}` out of range for p = {p}"
                )));
            }
            word.push(ColoredLetter::new(color, value));
        }
        Self::from_word(p, word).map_err(|e| match e {
            Error::InvalidArgument(msg) => Error::Parse(msg),
            other => other,
        })
    }

    /// Rendering with combining overlines (one bar per unit of color) for `p ≤ 3`,
    /// falling back to the ASCII notation otherwise.
    pub fn overbar_string(&self) -> String {
        if self.p > 3 {
            return self.to_string();
        }
        let mut out = String::new();
        for l in &self.word {
            out.push_str(&l.value.to_string());
            for _ in 0..l.color {
                out.push('\u{0305}');
            }
        }
        out
    }
}

impl PartialOrd for ColoredPermutation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical order: by `(p, n)`, then lexicographic on the value sequence,
/// then on the color sequence. Within one group this is the enumeration order.
impl Ord for ColoredPermutation {
    fn cmp(&self, other: &Self) -> Ordering {
        self.p
            .cmp(&other.p)
            .then(self.n().cmp(&other.n()))
            .then_with(|| {
                self.word
                    .iter()
                    .map(|l| l.value)
                    .cmp(other.word.iter().map(|l| l.value))
            })
            .then_with(|| {
                self.word
                    .iter()
                    .map(|l| l.color)
                    .cmp(other.word.iter().map(|l| l.color))
            })
    }
}

impl fmt::Display for ColoredPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, l) in self.word.iter().enumerate() {
            if j > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    p: u32,
    n: usize,
    word: Vec<[u32; 2]>,
}

impl Serialize for ColoredPermutation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ElementRepr {
            p: self.p,
            n: self.n(),
            word: self.word.iter().map(|l| [l.color, l.value]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ColoredPermutation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = ElementRepr::deserialize(deserializer)?;
        if repr.word.len() != repr.n {
            return Err(serde::de::Error::custom("word length differs from n"));
        }
        let word = repr
            .word
            .iter()
            .map(|&[c, v]| ColoredLetter::new(c, v))
            .collect();
        ColoredPermutation::from_word(repr.p, word).map_err(serde::de::Error::custom)
    }
}

/// `p^n n!` when it fits in `u64`.
pub fn group_order_u64(n: usize, p: u32) -> Option<u64> {
    let mut acc = (p as u64).checked_pow(n as u32)?;
    for i in 2..=n as u64 {
        acc = acc.checked_mul(i)?;
    }
    Some(acc)
}

pub fn group_order(n: usize, p: u32) -> BigUint {
    arith::group_order(n, p)
}

/// Iterator over `G(n, p)` in canonical order.
#[derive(Clone, Debug)]
pub struct Elements {
    n: usize,
    p: u32,
    next: u64,
    total: u64,
}

impl Iterator for Elements {
    type Item = ColoredPermutation;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.total {
            return None;
        }
        let g = ColoredPermutation::unrank(self.n, self.p, self.next);
        self.next += 1;
        g
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Elements {}

pub fn enumerate(n: usize, p: u32) -> Result<Elements> {
    enumerate_with_cap(n, p, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_with_cap(n: usize, p: u32, cap: u64) -> Result<Elements> {
    if p == 0 {
        return Err(Error::invalid("modulus p must be at least 1"));
    }
    match group_order_u64(n, p) {
        Some(total) if total <= cap => Ok(Elements { n, p, next: 0, total }),
        _ => Err(Error::cap(
            "enumerating the group",
            group_order(n, p),
            cap,
            None,
        )),
    }
}

/// Number of fixed-point-free elements, `p^n n! Σ_{k≤n} (-1)^k / (p^k k!)`.
pub fn derangement_count(n: usize, p: u32) -> Result<BigUint> {
    if p == 0 {
        return Err(Error::invalid("modulus p must be at least 1"));
    }
    let mut sum = BigRational::zero();
    let mut term_den = BigInt::one();
    for k in 0..=n {
        if k > 0 {
            term_den *= BigInt::from(p) * BigInt::from(k);
        }
        let sign = if k % 2 == 0 { 1 } else { -1 };
        sum += BigRational::new(BigInt::from(sign), term_den.clone());
    }
    let total = sum * BigRational::from_integer(BigInt::from(group_order(n, p)));
    arith::to_biguint_exact(&total).ok_or_else(|| {
        Error::Internal(format!("derangement count for n={n}, p={p} is not a natural number"))
    })
}

/// `D(n, p)` as `u64`, for the small cases used in tables and tests.
pub fn derangement_count_u64(n: usize, p: u32) -> Option<u64> {
    derangement_count(n, p).ok()?.to_u64()
}

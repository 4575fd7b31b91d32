//! The rational group algebra `Q[G(n, p)]`.
//!
//! Elements are sparse maps from group elements to nonzero rationals. The
//! distinguished family `B_0, …, B_n` is built from shuffles of colored words:
//! `B_a` sums `α ⧢ (a+1)(a+2)…n` over all `α ∈ G(a, p)`, so its words are the
//! arrangements in which the cards `a+1, …, n` keep their relative order and
//! color 0. `B_1 / (np)` is the one-step distribution of the shuffle.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{self, binomial, factorial, pow_u};
use crate::colored_group::{self, ColoredLetter, ColoredPermutation};
use crate::error::{Error, Result};
use crate::stirling;

/// Default bound on the number of terms a single `B_a` may have.
pub const DEFAULT_TERM_CAP: u64 = 2_000_000;

/// A word over `C_p × [n]` with pairwise distinct values.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    p: u32,
    letters: Vec<ColoredLetter>,
}

impl Word {
    /// Colors are reduced modulo `p`; repeated values are rejected.
    pub fn new(p: u32, letters: Vec<ColoredLetter>) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("modulus p must be at least 1"));
        }
        let letters: Vec<_> = letters
            .into_iter()
            .map(|l| ColoredLetter::new(l.color % p, l.value))
            .collect();
        if let Some(v) = letters.iter().map(|l| l.value).duplicates().next() {
            return Err(Error::invalid(format!("value {v} repeated in word")));
        }
        Ok(Self { p, letters })
    }

    pub fn empty(p: u32) -> Self {
        Self { p, letters: Vec::new() }
    }

    /// `(0, a+1)(0, a+2)…(0, n)`.
    pub fn tail(a: usize, n: usize, p: u32) -> Self {
        Self {
            p,
            letters: (a + 1..=n).map(|v| ColoredLetter::plain(v as u32)).collect(),
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn letters(&self) -> &[ColoredLetter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// The group element spelled by this word, if its values are exactly `1..=len`.
    pub fn to_permutation(&self) -> Result<ColoredPermutation> {
        ColoredPermutation::from_word(self.p, self.letters.clone())
    }
}

impl From<&ColoredPermutation> for Word {
    fn from(g: &ColoredPermutation) -> Self {
        Self {
            p: g.p(),
            letters: g.word().to_vec(),
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letters.iter().join(" "))
    }
}

/// Formal integer combination of words.
pub type WordSum = BTreeMap<Word, BigInt>;

/// All interleavings of `u` and `v` that keep the internal order of each.
pub fn shuffle_product(u: &Word, v: &Word) -> Result<WordSum> {
    if u.p != v.p {
        return Err(Error::invalid(format!(
            "shuffle of words over different moduli {} and {}",
            u.p, v.p
        )));
    }
    let values: std::collections::HashSet<u32> = u.letters.iter().map(|l| l.value).collect();
    if let Some(l) = v.letters.iter().find(|l| values.contains(&l.value)) {
        return Err(Error::invalid(format!(
            "value {} occurs in both shuffle operands",
            l.value
        )));
    }
    let total = u.len() + v.len();
    let mut out = WordSum::new();
    for slots in (0..total).combinations(u.len()) {
        let letters = interleave(&u.letters, &v.letters, &slots);
        *out.entry(Word { p: u.p, letters }).or_default() += 1;
    }
    Ok(out)
}

/// Places `u` at the (increasing) `slots` and `v` everywhere else.
fn interleave(u: &[ColoredLetter], v: &[ColoredLetter], slots: &[usize]) -> Vec<ColoredLetter> {
    let total = u.len() + v.len();
    let mut letters = Vec::with_capacity(total);
    let (mut i, mut j) = (0, 0);
    for pos in 0..total {
        if i < slots.len() && slots[i] == pos {
            letters.push(u[i]);
            i += 1;
        } else {
            letters.push(v[j]);
            j += 1;
        }
    }
    letters
}

/// Element of `Q[G(n, p)]`. Stored coefficients are never zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebraElement {
    n: usize,
    p: u32,
    terms: BTreeMap<ColoredPermutation, BigRational>,
}

impl AlgebraElement {
    pub fn zero(n: usize, p: u32) -> Self {
        Self {
            n,
            p,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize, p: u32) -> Self {
        Self::basis(ColoredPermutation::identity(n, p))
    }

    pub fn basis(g: ColoredPermutation) -> Self {
        let (n, p) = (g.n(), g.p());
        let mut terms = BTreeMap::new();
        terms.insert(g, BigRational::one());
        Self { n, p, terms }
    }

    /// Sums repeated keys and drops zeros.
    pub fn from_terms<I>(n: usize, p: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ColoredPermutation, BigRational)>,
    {
        let mut out = Self::zero(n, p);
        for (g, c) in terms {
            if g.n() != n || g.p() != p {
                return Err(Error::Mismatch {
                    left_n: n,
                    left_p: p,
                    right_n: g.n(),
                    right_p: g.p(),
                });
            }
            out.add_term(g, c);
        }
        Ok(out)
    }

    fn add_term(&mut self, g: ColoredPermutation, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(g) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn terms(&self) -> &BTreeMap<ColoredPermutation, BigRational> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, g: &ColoredPermutation) -> BigRational {
        self.terms.get(g).cloned().unwrap_or_else(BigRational::zero)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.p != other.p {
            return Err(Error::Mismatch {
                left_n: self.n,
                left_p: self.p,
                right_n: other.n,
                right_p: other.p,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (g, c) in &other.terms {
            out.add_term(g.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, factor: &BigRational) -> Self {
        if factor.is_zero() {
            return Self::zero(self.n, self.p);
        }
        Self {
            n: self.n,
            p: self.p,
            terms: self
                .terms
                .iter()
                .map(|(g, c)| (g.clone(), c * factor))
                .collect(),
        }
    }

    /// `Σ_i c_i x_i` over elements of one group.
    pub fn linear_combination<'a, I>(n: usize, p: u32, parts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BigRational, &'a AlgebraElement)>,
    {
        let mut out = Self::zero(n, p);
        for (c, x) in parts {
            out.check_compatible(x)?;
            if c.is_zero() {
                continue;
            }
            for (g, v) in &x.terms {
                out.add_term(g.clone(), v * &c);
            }
        }
        Ok(out)
    }

    /// Group-algebra product: the coefficient of `w` is `Σ_{uv = w} x_u y_v`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let (xs, dx) = integer_scaled(self);
        let (ys, dy) = integer_scaled(other);
        let den = BigRational::from_integer(dx * dy);
        let sums: Vec<(ColoredPermutation, BigInt)> = match convolve_i128(&xs, &ys) {
            Some(small) => small
                .into_iter()
                .map(|(g, v)| (g, BigInt::from(v)))
                .collect(),
            None => convolve_big(&xs, &ys).into_iter().collect(),
        };
        let mut out = Self::zero(self.n, self.p);
        for (g, v) in sums {
            if !v.is_zero() {
                out.terms.insert(g, BigRational::from_integer(v) / &den);
            }
        }
        Ok(out)
    }

    /// `Σ |c_w|`.
    pub fn l1_norm(&self) -> BigRational {
        self.terms.values().map(|c| c.abs()).sum()
    }

    /// `Σ c_w`.
    pub fn total_mass(&self) -> BigRational {
        self.terms.values().sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.terms.values().all(|c| !c.is_negative())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("algebra elements always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn integer_scaled(x: &AlgebraElement) -> (Vec<(&ColoredPermutation, BigInt)>, BigInt) {
    let den = x
        .terms
        .values()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let scaled = x
        .terms
        .iter()
        .map(|(g, c)| (g, c.numer() * (&den / c.denom())))
        .collect();
    (scaled, den)
}

fn convolve_i128(
    xs: &[(&ColoredPermutation, BigInt)],
    ys: &[(&ColoredPermutation, BigInt)],
) -> Option<HashMap<ColoredPermutation, i128>> {
    let xs: Vec<(&ColoredPermutation, i128)> = xs
        .iter()
        .map(|(g, c)| c.to_i128().map(|v| (*g, v)))
        .collect::<Option<_>>()?;
    let ys: Vec<(&ColoredPermutation, i128)> = ys
        .iter()
        .map(|(g, c)| c.to_i128().map(|v| (*g, v)))
        .collect::<Option<_>>()?;
    let mut acc: HashMap<ColoredPermutation, i128> = HashMap::new();
    for (u, cu) in &xs {
        for (v, cv) in &ys {
            let prod = cu.checked_mul(*cv)?;
            let slot = acc.entry(u.mul_unchecked(v)).or_insert(0);
            *slot = slot.checked_add(prod)?;
        }
    }
    Some(acc)
}

fn convolve_big(
    xs: &[(&ColoredPermutation, BigInt)],
    ys: &[(&ColoredPermutation, BigInt)],
) -> HashMap<ColoredPermutation, BigInt> {
    let mut acc: HashMap<ColoredPermutation, BigInt> = HashMap::new();
    for (u, cu) in xs {
        for (v, cv) in ys {
            *acc.entry(u.mul_unchecked(v)).or_default() += cu * cv;
        }
    }
    acc
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    word: String,
    num: String,
    den: String,
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    p: u32,
    n: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for AlgebraElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ElementRepr {
            p: self.p,
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(g, c)| TermRepr {
                    word: g.to_string(),
                    num: c.numer().to_string(),
                    den: c.denom().to_string(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AlgebraElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = ElementRepr::deserialize(deserializer)?;
        let mut terms = Vec::with_capacity(repr.terms.len());
        for t in repr.terms {
            let g = ColoredPermutation::parse(&t.word, repr.p).map_err(D::Error::custom)?;
            let num: BigInt = t.num.parse().map_err(D::Error::custom)?;
            let den: BigInt = t.den.parse().map_err(D::Error::custom)?;
            if den.is_zero() {
                return Err(D::Error::custom("zero denominator"));
            }
            terms.push((g, BigRational::new(num, den)));
        }
        AlgebraElement::from_terms(repr.n, repr.p, terms).map_err(D::Error::custom)
    }
}

fn check_params(n: usize, p: u32) -> Result<()> {
    if p == 0 {
        return Err(Error::invalid("modulus p must be at least 1"));
    }
    if n == 0 {
        return Err(Error::invalid("deck size n must be at least 1"));
    }
    Ok(())
}

/// `B_a`, all coefficients 1, `C(n, a) p^a a!` terms.
pub fn build_b(a: usize, n: usize, p: u32) -> Result<AlgebraElement> {
    build_b_with_cap(a, n, p, DEFAULT_TERM_CAP)
}

pub fn build_b_with_cap(a: usize, n: usize, p: u32, cap: u64) -> Result<AlgebraElement> {
    check_params(n, p)?;
    if a > n {
        return Err(Error::invalid(format!("index a = {a} exceeds n = {n}")));
    }
    let size = arith::b_size(n, p, a);
    if size > cap.into() {
        return Err(Error::cap(
            "building B_a",
            format!("{size} terms"),
            format!("{cap} terms"),
            Some("use a smaller n or p"),
        ));
    }
    let heads: Vec<ColoredPermutation> = colored_group::enumerate_with_cap(a, p, cap)?.collect();
    let tail = Word::tail(a, n, p);
    let mut out = AlgebraElement::zero(n, p);
    for slots in (0..n).combinations(a) {
        for alpha in &heads {
            let word = interleave(alpha.word(), tail.letters(), &slots);
            out.terms
                .insert(ColoredPermutation::from_word_unchecked(p, word), BigRational::one());
        }
    }
    Ok(out)
}

/// Smallest `a` with `g` among the words of `B_a`: the cards `a+1, …, n` must
/// carry color 0 and appear in increasing order.
pub fn layer_index(g: &ColoredPermutation) -> usize {
    let n = g.n();
    let mut position = vec![0usize; n + 1];
    let mut color = vec![0u32; n + 1];
    for (j, l) in g.word().iter().enumerate() {
        position[l.value as usize] = j;
        color[l.value as usize] = l.color;
    }
    let mut a = n;
    while a >= 1 && color[a] == 0 && (a == n || position[a] < position[a + 1]) {
        a -= 1;
    }
    a
}

/// `[B_0, B_1, …, B_n]`.
pub fn b_family(n: usize, p: u32) -> Result<Vec<AlgebraElement>> {
    (0..=n).map(|a| build_b(a, n, p)).collect()
}

/// One step of the shuffle as a probability element, `B_1 / (np)`.
pub fn transition_element(n: usize, p: u32) -> Result<AlgebraElement> {
    Ok(build_b(1, n, p)?.scale(&arith::ratio(1, n as u64 * p as u64)))
}

/// The part of `B_a` whose words start with `head`. Valid heads are the
/// letters `(c, v)` with `v ≤ a`, and `(0, a + 1)` when `a < n`.
pub fn head_group(a: usize, head: ColoredLetter, n: usize, p: u32) -> Result<AlgebraElement> {
    check_params(n, p)?;
    let valid = (head.value >= 1 && head.value as usize <= a && head.color < p)
        || (a < n && head.value as usize == a + 1 && head.color == 0);
    if !valid {
        return Err(Error::invalid(format!(
            "`{head}` cannot head a word of B_{a} in G({n}, {p})"
        )));
    }
    let b = build_b(a, n, p)?;
    Ok(AlgebraElement {
        n,
        p,
        terms: b
            .terms
            .into_iter()
            .filter(|(g, _)| g.word()[0] == head)
            .collect(),
    })
}

/// `e_i = (1/i!) Σ_{a=i}^{n} (-1)^{a-i} / (p^a (a-i)!) B_a`.
pub fn idempotent_e(i: usize, n: usize, p: u32) -> Result<AlgebraElement> {
    check_params(n, p)?;
    if i > n {
        return Err(Error::invalid(format!("index i = {i} exceeds n = {n}")));
    }
    let family = b_family(n, p)?;
    idempotent_from_family(i, &family)
}

pub fn idempotents(n: usize, p: u32) -> Result<Vec<AlgebraElement>> {
    let family = b_family(n, p)?;
    (0..=n).map(|i| idempotent_from_family(i, &family)).collect()
}

/// Coefficient of `B_a` in `e_i`.
pub fn idempotent_coefficient(i: usize, a: usize, p: u32) -> BigRational {
    if a < i {
        return BigRational::zero();
    }
    let den = factorial(i) * pow_u(p as u64, a) * factorial(a - i);
    let c = arith::ratio(1, den);
    if (a - i) % 2 == 0 {
        c
    } else {
        -c
    }
}

fn idempotent_from_family(i: usize, family: &[AlgebraElement]) -> Result<AlgebraElement> {
    let (n, p) = (family[0].n, family[0].p);
    AlgebraElement::linear_combination(
        n,
        p,
        (i..=n).map(|a| (idempotent_coefficient(i, a, p), &family[a])),
    )
}

/// `B_1^k = Σ_a p^(k-a) {k, a} B_a`.
pub fn b1_power(k: usize, n: usize, p: u32) -> Result<AlgebraElement> {
    b1_power_with(k, &b_family(n, p)?, stirling::stirling2)
}

/// [`b1_power`] over a prebuilt family with a caller-supplied second-kind table.
pub fn b1_power_with<F>(k: usize, family: &[AlgebraElement], stirling2: F) -> Result<AlgebraElement>
where
    F: Fn(usize, usize) -> num_bigint::BigUint,
{
    let (n, p) = (family[0].n, family[0].p);
    let coefficients: Vec<BigRational> = (0..=n.min(k))
        .map(|a| arith::int(pow_u(p as u64, k - a) * stirling2(k, a)))
        .collect();
    AlgebraElement::linear_combination(n, p, coefficients.into_iter().zip(family))
}

/// `x^k` by repeated convolution.
pub fn convolution_power(x: &AlgebraElement, k: usize) -> Result<AlgebraElement> {
    let mut acc = AlgebraElement::identity(x.n, x.p);
    for _ in 0..k {
        acc = acc.convolve(x)?;
    }
    Ok(acc)
}

/// `B_1 (B_1 - p) (B_1 - 2p) … (B_1 - (a-1)p)`, evaluated by convolution.
pub fn ba_from_falling_factorial(a: usize, n: usize, p: u32) -> Result<AlgebraElement> {
    check_params(n, p)?;
    if a > n {
        return Err(Error::invalid(format!("index a = {a} exceeds n = {n}")));
    }
    let b1 = build_b(1, n, p)?;
    let id = AlgebraElement::identity(n, p);
    let mut acc = id.clone();
    for j in 0..a {
        let factor = b1.sub(&id.scale(&arith::int(j as u64 * p as u64)))?;
        acc = acc.convolve(&factor)?;
    }
    Ok(acc)
}

/// `Σ_i (-p)^(a-i) [a, i] B_1^i` with the powers of `B_1` taken by convolution.
pub fn ba_from_signed_stirling(a: usize, n: usize, p: u32) -> Result<AlgebraElement> {
    check_params(n, p)?;
    if a > n {
        return Err(Error::invalid(format!("index a = {a} exceeds n = {n}")));
    }
    let b1 = build_b(1, n, p)?;
    let mut power = AlgebraElement::identity(n, p);
    let mut acc = AlgebraElement::zero(n, p);
    for i in 0..=a {
        let magnitude = arith::int(stirling::stirling1_p(a, i, p));
        let c = if (a - i) % 2 == 0 { magnitude } else { -magnitude };
        acc = acc.add(&power.scale(&c))?;
        power = power.convolve(&b1)?;
    }
    Ok(acc)
}

/// `B_a^k = Σ_{b=a}^{n} p^(ka-b) S_{a,a}(k, b) B_b`; `B_a^0` is the identity.
pub fn ba_power(a: usize, k: usize, n: usize, p: u32) -> Result<AlgebraElement> {
    check_params(n, p)?;
    if a == 0 || a > n {
        return Err(Error::invalid(format!("index a = {a} must lie in 1..={n}")));
    }
    if k == 0 {
        return Ok(AlgebraElement::identity(n, p));
    }
    let family = b_family(n, p)?;
    let mut parts = Vec::new();
    for b in a..=n.min(a * k) {
        let s = stirling::generalized_stirling(a, k, b)?;
        parts.push((arith::int(BigInt::from(pow_u(p as u64, k * a - b)) * s), &family[b]));
    }
    AlgebraElement::linear_combination(n, p, parts)
}

/// Eigenvalue of left multiplication by `B_a` on the image of `e_i`:
/// `p^a a! C(i, a)`.
pub fn ba_eigenvalue(a: usize, i: usize, p: u32) -> num_bigint::BigUint {
    pow_u(p as u64, a) * factorial(a) * binomial(i, a)
}

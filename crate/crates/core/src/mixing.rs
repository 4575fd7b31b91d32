//! Total-variation distance of the shuffle from uniform after `k` steps.
//!
//! After `k` steps the distribution `(B_1/(np))^k` is constant on each layer
//! `C_a = B_a \ B_{a−1}`, with mass
//!
//! ```text
//! x_a = (1/(np)^k) Σ_{b=a}^{n} p^(k−b) {k, b}
//! ```
//!
//! per element. Against the uniform mass `y = 1/(p^n n!)` the distance is
//! `Σ_{a ≥ A} (y − x_a)(|B_a| − |B_{a−1}|)`, where `A` is the first layer
//! with `x_a < y`. Everything here is exact except the log-space mode, which
//! runs the same formula on logarithms for decks too large for big rationals.

use std::io::{self, Write};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{self, factorial, pow_u};
use crate::error::{Error, Result};
use crate::real::{format_significant, Real};
use crate::shuffle_algebra::{self, AlgebraElement};
use crate::stirling::{self, DEFAULT_MAX_COLUMNS, DEFAULT_MAX_ROWS};

/// Largest deck for which curves default to exact arithmetic.
pub const EXACT_MODE_MAX_N: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveMode {
    Exact,
    #[serde(rename = "logspace")]
    LogSpace,
}

impl CurveMode {
    pub fn default_for(n: usize) -> Self {
        if n <= EXACT_MODE_MAX_N {
            CurveMode::Exact
        } else {
            CurveMode::LogSpace
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CurveMode::Exact => "exact",
            CurveMode::LogSpace => "logspace",
        }
    }
}

impl std::str::FromStr for CurveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(CurveMode::Exact),
            "logspace" | "log-space" => Ok(CurveMode::LogSpace),
            other => Err(Error::invalid(format!(
                "unknown mode `{other}` (expected exact or logspace)"
            ))),
        }
    }
}

fn check_params(n: usize, p: u32) -> Result<()> {
    if n == 0 || p == 0 {
        return Err(Error::invalid("n and p must be at least 1"));
    }
    Ok(())
}

fn check_exact_caps(n: usize, k: usize) -> Result<()> {
    if k > DEFAULT_MAX_ROWS {
        return Err(Error::cap(
            "exact Stirling rows",
            k,
            DEFAULT_MAX_ROWS,
            Some("switch to --mode logspace"),
        ));
    }
    if n > DEFAULT_MAX_COLUMNS {
        return Err(Error::cap(
            "exact Stirling columns",
            n,
            DEFAULT_MAX_COLUMNS,
            Some("switch to --mode logspace"),
        ));
    }
    Ok(())
}

/// `y = 1/(p^n n!)`.
pub fn uniform_mass(n: usize, p: u32) -> BigRational {
    arith::ratio(1, arith::group_order(n, p))
}

/// `|B_a| − |B_{a−1}|` with `|B_{−1}| = 0`.
pub fn layer_size(n: usize, p: u32, a: usize) -> BigUint {
    let size = arith::b_size(n, p, a);
    if a == 0 {
        size
    } else {
        size - arith::b_size(n, p, a - 1)
    }
}

/// Exact quantities at one `k`, derived from row `k` of the Stirling table.
///
/// `tails[a] = n! Σ_{b=a}^{n} p^(n−b) {k, b}`, so that `x_a / y = tails[a] / n^k`.
struct Layers {
    n: usize,
    p: u32,
    tails: Vec<BigUint>,
    n_pow_k: BigUint,
}

impl Layers {
    fn from_row(n: usize, p: u32, k: usize, row: &[BigUint]) -> Self {
        let n_fact = factorial(n);
        let mut tails = vec![BigUint::zero(); n + 2];
        for a in (0..=n).rev() {
            let s = row.get(a).cloned().unwrap_or_default();
            tails[a] = &tails[a + 1] + &n_fact * pow_u(p as u64, n - a) * s;
        }
        tails.pop();
        Self {
            n,
            p,
            tails,
            n_pow_k: pow_u(n as u64, k),
        }
    }

    fn threshold(&self) -> usize {
        (0..=self.n)
            .find(|&a| self.n_pow_k > self.tails[a])
            .unwrap_or(self.n + 1)
    }

    fn x(&self, a: usize) -> BigRational {
        let den = BigInt::from(&self.n_pow_k * arith::group_order(self.n, self.p));
        BigRational::new(BigInt::from(self.tails[a].clone()), den)
    }

    fn tv(&self) -> BigRational {
        let threshold = self.threshold();
        let mut num = BigUint::zero();
        for a in threshold..=self.n {
            num += (&self.n_pow_k - &self.tails[a]) * layer_size(self.n, self.p, a);
        }
        BigRational::new(
            BigInt::from(num),
            BigInt::from(&self.n_pow_k * arith::group_order(self.n, self.p)),
        )
    }

    fn upper(&self) -> BigRational {
        // tails[n] = n! {k, n}.
        BigRational::one()
            - BigRational::new(
                BigInt::from(self.tails[self.n].clone()),
                BigInt::from(self.n_pow_k.clone()),
            )
    }

    /// `T_a / n^k` for the surrogate factor `C`.
    fn tail_ratio(&self, a: usize) -> BigRational {
        BigRational::new(
            BigInt::from(self.tails[a].clone()),
            BigInt::from(self.n_pow_k.clone()),
        )
    }
}

fn layers(n: usize, p: u32, k: usize) -> Result<Layers> {
    check_params(n, p)?;
    check_exact_caps(n, k)?;
    Ok(Layers::from_row(n, p, k, &stirling::stirling2_row(k, n)))
}

/// `A = min{a : y > x_a}`, or `n + 1` when no layer is below uniform.
pub fn threshold_a(n: usize, p: u32, k: usize) -> Result<usize> {
    Ok(layers(n, p, k)?.threshold())
}

/// `[x_0, …, x_n]`, non-increasing.
pub fn x_sequence(n: usize, p: u32, k: usize) -> Result<Vec<BigRational>> {
    let l = layers(n, p, k)?;
    Ok((0..=n).map(|a| l.x(a)).collect())
}

/// Exact `d_TV((B_1/(np))^k, U)`.
pub fn tv_exact(n: usize, p: u32, k: usize) -> Result<BigRational> {
    Ok(layers(n, p, k)?.tv())
}

/// `1 − {k, n} n! / n^k`.
pub fn tv_upper_bound(n: usize, p: u32, k: usize) -> Result<BigRational> {
    Ok(layers(n, p, k)?.upper())
}

/// `(B_1/(np))^k = Σ_a x_a C_a` as an algebra element.
pub fn decomposition(n: usize, p: u32, k: usize) -> Result<AlgebraElement> {
    let xs = x_sequence(n, p, k)?;
    let family = shuffle_algebra::b_family(n, p)?;
    let mut out = AlgebraElement::zero(n, p);
    for a in 0..=n {
        let layer = if a == 0 {
            family[0].clone()
        } else {
            family[a].sub(&family[a - 1])?
        };
        out = out.add(&layer.scale(&xs[a]))?;
    }
    Ok(out)
}

/// `½ Σ_w |P_w − 1/(p^n n!)|` with `P = (B_1/(np))^k` built by `k` explicit
/// convolutions. Exponential in `n`; an oracle for small groups.
pub fn tv_brute_force(n: usize, p: u32, k: usize) -> Result<BigRational> {
    check_params(n, p)?;
    let elements: Vec<_> = crate::colored_group::enumerate(n, p)?.collect();
    let b1 = shuffle_algebra::build_b(1, n, p)?;
    let mut walk = AlgebraElement::identity(n, p);
    for _ in 0..k {
        walk = walk.convolve(&b1)?;
    }
    let scale = arith::ratio(1, pow_u(n as u64 * p as u64, k));
    let u = uniform_mass(n, p);
    let total: BigRational = elements
        .iter()
        .map(|g| (walk.coefficient(g) * &scale - &u).abs())
        .sum();
    Ok(total / arith::int(2))
}

fn ln_factorial(n: usize) -> f64 {
    stirling::ln_factorial(n)
}

/// Log-space evaluation of the same quantities, for large decks.
struct LogLayers {
    n: usize,
    /// `ln(x_a / y)`.
    ln_ratio: Vec<f64>,
    ln_p: f64,
    ln_ball_box: f64,
}

impl LogLayers {
    fn new(n: usize, p: u32, k: usize) -> Self {
        let row = stirling::ln_stirling2_row(k, n);
        let ln_p = (p as f64).ln();
        let shift = ln_factorial(n) - k as f64 * (n as f64).ln();
        let mut ln_ratio = vec![f64::NEG_INFINITY; n + 1];
        let mut acc = f64::NEG_INFINITY;
        for a in (0..=n).rev() {
            let term = row.get(a).copied().unwrap_or(f64::NEG_INFINITY) + (n - a) as f64 * ln_p;
            acc = stirling::log_add(acc, term);
            ln_ratio[a] = acc + shift;
        }
        let ln_ball_box = row.get(n).copied().unwrap_or(f64::NEG_INFINITY) + shift;
        Self {
            n,
            ln_ratio,
            ln_p,
            ln_ball_box,
        }
    }

    fn threshold(&self) -> usize {
        (0..=self.n)
            .find(|&a| self.ln_ratio[a] < 0.0)
            .unwrap_or(self.n + 1)
    }

    /// `(|B_a| − |B_{a−1}|) / (p^n n!)`.
    fn layer_weight(&self, a: usize) -> f64 {
        let n = self.n;
        let top = (-ln_factorial(n - a) - (n - a) as f64 * self.ln_p).exp();
        if a == 0 {
            top
        } else {
            top - (-ln_factorial(n - a + 1) - (n - a + 1) as f64 * self.ln_p).exp()
        }
    }

    fn tv(&self) -> f64 {
        (self.threshold()..=self.n)
            .map(|a| -self.ln_ratio[a].exp_m1() * self.layer_weight(a))
            .sum()
    }

    fn upper(&self) -> f64 {
        -self.ln_ball_box.exp_m1()
    }

    fn tail_ratio(&self, a: usize) -> f64 {
        self.ln_ratio[a].exp()
    }
}

/// Log-space approximation of [`tv_exact`].
pub fn tv_logspace(n: usize, p: u32, k: usize) -> Result<f64> {
    check_params(n, p)?;
    Ok(LogLayers::new(n, p, k).tv())
}

/// Log-space approximation of [`tv_upper_bound`].
pub fn tv_upper_bound_logspace(n: usize, p: u32, k: usize) -> Result<f64> {
    check_params(n, p)?;
    Ok(LogLayers::new(n, p, k).upper())
}

/// `1 − exp(−e^{−c})`, the candidate limit profile above the cutoff.
pub fn limit_upper(c: f64) -> f64 {
    -(-(-c).exp()).exp_m1()
}

/// `c = k/n − ln n`.
pub fn c_of_k(n: usize, k: usize) -> f64 {
    k as f64 / n as f64 - (n as f64).ln()
}

/// `⌊n ln n + c n⌋`, clamped at zero.
pub fn cutoff_k(n: usize, c: f64) -> usize {
    let nf = n as f64;
    (nf * nf.ln() + c * nf).floor().max(0.0) as usize
}

/// `n ln n + n ln(−1/ln(1−ε))`.
pub fn closed_form(n: usize, eps: f64) -> f64 {
    let nf = n as f64;
    nf * nf.ln() + nf * (-1.0 / (1.0 - eps).ln()).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingTime {
    pub n: usize,
    pub p: u32,
    pub eps: f64,
    /// Smallest `k` with `1 − {k, n} n!/n^k ≤ ε`.
    pub k: usize,
    pub closed_form: f64,
    /// The bound is only claimed for `p ≥ 2`; `false` marks the uncolored chain.
    pub p_hypothesis: bool,
}

/// Exact search for the first `k` at which the upper bound drops to `ε`.
pub fn mixing_time(n: usize, p: u32, eps: f64) -> Result<MixingTime> {
    check_params(n, p)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("eps = {eps} must lie strictly between 0 and 1")));
    }
    let eps_exact = BigRational::from_float(eps).expect("finite eps");
    let n_fact = arith::int(factorial(n));
    let mut n_pow = BigUint::one();
    for (k, row) in stirling::stirling2_rows(n) {
        if k > DEFAULT_MAX_ROWS {
            return Err(Error::cap("mixing-time search rows", k, DEFAULT_MAX_ROWS, None));
        }
        if k >= n {
            let s = row.get(n).cloned().unwrap_or_default();
            let bound = BigRational::one() - &n_fact * arith::ratio(s, n_pow.clone());
            if bound <= eps_exact {
                return Ok(MixingTime {
                    n,
                    p,
                    eps,
                    k,
                    closed_form: closed_form(n, eps),
                    p_hypothesis: p >= 2,
                });
            }
        }
        n_pow *= n as u64;
    }
    unreachable!("the row iterator is unbounded")
}

/// One point of a distance curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TVRecord {
    pub k: usize,
    pub c: f64,
    #[serde(with = "opt_rational")]
    pub tv_exact: Option<BigRational>,
    /// Decimal value of the distance (exact or log-space).
    pub tv: f64,
    #[serde(with = "opt_rational")]
    pub tv_upper_exact: Option<BigRational>,
    pub tv_upper: f64,
    pub tv_limit: f64,
    pub threshold_a: usize,
    pub mode: CurveMode,
    /// Outcome of the lower-bound check, when one was requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_bound_flag: Option<bool>,
}

mod opt_rational {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        num: String,
        den: String,
    }

    pub fn serialize<S: Serializer>(v: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref()
            .map(|r| Repr {
                num: r.numer().to_string(),
                den: r.denom().to_string(),
            })
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigRational>, D::Error> {
        let repr = Option::<Repr>::deserialize(d)?;
        repr.map(|r| {
            let num = r.num.parse().map_err(serde::de::Error::custom)?;
            let den = r.den.parse().map_err(serde::de::Error::custom)?;
            Ok(BigRational::new(num, den))
        })
        .transpose()
    }
}

fn record_from_row(n: usize, p: u32, k: usize, c: f64, row: &[BigUint]) -> TVRecord {
    let l = Layers::from_row(n, p, k, row);
    let tv = l.tv();
    let upper = l.upper();
    TVRecord {
        k,
        c,
        tv: rational_f64(&tv),
        tv_exact: Some(tv),
        tv_upper: rational_f64(&upper),
        tv_upper_exact: Some(upper),
        tv_limit: limit_upper(c),
        threshold_a: l.threshold(),
        mode: CurveMode::Exact,
        lower_bound_flag: None,
    }
}

fn record_logspace(n: usize, p: u32, k: usize, c: f64) -> TVRecord {
    let l = LogLayers::new(n, p, k);
    TVRecord {
        k,
        c,
        tv_exact: None,
        tv: l.tv(),
        tv_upper_exact: None,
        tv_upper: l.upper(),
        tv_limit: limit_upper(c),
        threshold_a: l.threshold(),
        mode: CurveMode::LogSpace,
        lower_bound_flag: None,
    }
}

fn rational_f64(r: &BigRational) -> f64 {
    arith::rational_to_f64(r)
}

/// Record at a single `k`.
pub fn tv_record(n: usize, p: u32, k: usize, mode: CurveMode) -> Result<TVRecord> {
    check_params(n, p)?;
    let c = c_of_k(n, k);
    Ok(match mode {
        CurveMode::Exact => {
            check_exact_caps(n, k)?;
            record_from_row(n, p, k, c, &stirling::stirling2_row(k, n))
        }
        CurveMode::LogSpace => record_logspace(n, p, k, c),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TVCurve {
    pub n: usize,
    pub p: u32,
    pub mode: CurveMode,
    pub records: Vec<TVRecord>,
}

pub const CSV_HEADER: &str = "k,c,tv_exact_num,tv_exact_den,tv_upper,tv_limit,threshold_A,mode,tv,lower_bound_flag";

impl TVCurve {
    /// CSV with decimals at `digits` significant digits. The `tv` column
    /// carries the decimal distance in both modes; `lower_bound_flag` is empty
    /// unless a below-cutoff check ran.
    pub fn write_csv<W: Write>(&self, mut out: W, digits: usize) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.records {
            let (num, den) = r
                .tv_exact
                .as_ref()
                .map(|v| (v.numer().to_string(), v.denom().to_string()))
                .unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.k,
                format_significant(r.c, digits),
                num,
                den,
                format_significant(r.tv_upper, digits),
                format_significant(r.tv_limit, digits),
                r.threshold_a,
                r.mode.as_str(),
                format_significant(r.tv, digits),
                r.lower_bound_flag.map(|f| f.to_string()).unwrap_or_default(),
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("curves always serialize")
    }
}

/// Records at each `(k, c)` pair, sharing one pass over the Stirling rows.
fn curve_at(n: usize, p: u32, points: Vec<(usize, f64)>, mode: CurveMode) -> Result<TVCurve> {
    check_params(n, p)?;
    let records = match mode {
        CurveMode::Exact => {
            let k_max = points.iter().map(|(k, _)| *k).max().unwrap_or(0);
            check_exact_caps(n, k_max)?;
            let mut wanted: Vec<(usize, f64)> = points.clone();
            wanted.sort_by_key(|(k, _)| *k);
            let mut rows = Vec::with_capacity(wanted.len());
            let mut next = 0;
            for (k, row) in stirling::stirling2_rows(n) {
                while next < wanted.len() && wanted[next].0 == k {
                    rows.push((wanted[next].0, wanted[next].1, row.clone()));
                    next += 1;
                }
                if next == wanted.len() {
                    break;
                }
            }
            let mut records: Vec<TVRecord> = rows
                .par_iter()
                .map(|(k, c, row)| record_from_row(n, p, *k, *c, row))
                .collect();
            records.sort_by(|a, b| a.k.cmp(&b.k).then(a.c.total_cmp(&b.c)));
            records
        }
        CurveMode::LogSpace => {
            let mut records: Vec<TVRecord> = points
                .par_iter()
                .map(|&(k, c)| record_logspace(n, p, k, c))
                .collect();
            records.sort_by(|a, b| a.k.cmp(&b.k).then(a.c.total_cmp(&b.c)));
            records
        }
    };
    Ok(TVCurve {
        n,
        p,
        mode,
        records,
    })
}

/// Records for `k = k_min..=k_max`; empty when `k_min > k_max`.
pub fn curve_k_range(n: usize, p: u32, k_min: usize, k_max: usize, mode: CurveMode) -> Result<TVCurve> {
    let points = (k_min..=k_max).map(|k| (k, c_of_k(n, k))).collect();
    curve_at(n, p, points, mode)
}

/// Records at `k = ⌊n ln n + c n⌋` for each `c`.
pub fn curve_c_grid(n: usize, p: u32, cs: &[f64], mode: CurveMode) -> Result<TVCurve> {
    let points = cs.iter().map(|&c| (cutoff_k(n, c), c)).collect();
    curve_at(n, p, points, mode)
}

/// `c = −3, −2, …, 6`.
pub fn default_c_grid() -> Vec<f64> {
    (-3..=6).map(f64::from).collect()
}

/// `c = c_min, c_min + step, …` up to `c_max`; empty when `c_min > c_max`.
pub fn c_grid(c_min: f64, c_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::invalid("step must be positive"));
    }
    let mut out = Vec::new();
    let mut i = 0u32;
    loop {
        let c = c_min + f64::from(i) * step;
        if c > c_max + 1e-9 * step {
            break;
        }
        out.push(c);
        i += 1;
    }
    Ok(out)
}

/// Record at `k = ⌊n ln n + c n⌋`.
pub fn cutoff_upper(n: usize, p: u32, c: f64, mode: CurveMode) -> Result<TVRecord> {
    let mut record = tv_record(n, p, cutoff_k(n, c), mode)?;
    record.c = c;
    record.tv_limit = limit_upper(c);
    Ok(record)
}

/// Parameters of the below-cutoff check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundOptions {
    /// The check demands `d_TV ≥ 1 − n^{−(1/2 − δ)}`.
    pub delta: f64,
    /// `c_n ≪ ln n` is read as `c_n / ln n < ratio`.
    pub ratio: f64,
}

impl Default for LowerBoundOptions {
    fn default() -> Self {
        Self {
            delta: 0.1,
            ratio: 0.75,
        }
    }
}

/// Lower edge `ln(ln(np) · ln n)` of the admissible window for `c_n`.
pub fn window_lower_edge(n: usize, p: u32) -> f64 {
    let nf = n as f64;
    ((nf * p as f64).ln() * nf.ln()).ln()
}

pub fn in_window(n: usize, p: u32, c_n: f64, opts: &LowerBoundOptions) -> bool {
    let ln_n = (n as f64).ln();
    c_n >= window_lower_edge(n, p) && c_n / ln_n < opts.ratio
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurrogateCase {
    /// `A ≤ X`: the bound `(1 − C)(1 − D)`.
    ThresholdBelowX,
    /// `X < A`: the bound `(1 − C)(1 − D')` with `A` in place of `X` in `D`.
    ThresholdAboveX,
}

/// `(1 − C)(1 − D)` with `X = ⌊n − ln n⌋`, `C = (n!/n^k) Σ_{b ≥ X} p^(n−b) {k, b}`
/// and `D = 1/((n − X + 1)! p^(n−X+1))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    pub x_index: usize,
    pub threshold_a: usize,
    pub case: SurrogateCase,
    pub c_factor: f64,
    pub d_factor: f64,
    pub value: f64,
    #[serde(with = "opt_rational")]
    pub value_exact: Option<BigRational>,
}

/// `X = ⌊n − ln n⌋`, at least 1.
pub fn x_index(n: usize) -> usize {
    ((n as f64 - (n as f64).ln()).floor() as usize).max(1)
}

fn d_exact(n: usize, p: u32, index: usize) -> BigRational {
    let m = n + 1 - index.min(n + 1);
    arith::ratio(1, factorial(m) * pow_u(p as u64, m))
}

/// `1/((n − X + 1)! p^(n−X+1))`.
pub fn d_factor(n: usize, p: u32, index: usize) -> f64 {
    let m = (n + 1 - index.min(n + 1)) as f64;
    (-(stirling::ln_factorial(m as usize)) - m * (p as f64).ln()).exp()
}

pub fn surrogate(n: usize, p: u32, k: usize, mode: CurveMode) -> Result<Surrogate> {
    check_params(n, p)?;
    let x = x_index(n);
    match mode {
        CurveMode::Exact => {
            let l = layers(n, p, k)?;
            let a = l.threshold();
            let (case, d_at) = if a <= x {
                (SurrogateCase::ThresholdBelowX, x)
            } else {
                (SurrogateCase::ThresholdAboveX, a)
            };
            let c = l.tail_ratio(x);
            let d = d_exact(n, p, d_at);
            let value = (BigRational::one() - &c) * (BigRational::one() - &d);
            Ok(Surrogate {
                x_index: x,
                threshold_a: a,
                case,
                c_factor: rational_f64(&c),
                d_factor: rational_f64(&d),
                value: rational_f64(&value),
                value_exact: Some(value),
            })
        }
        CurveMode::LogSpace => {
            let l = LogLayers::new(n, p, k);
            let a = l.threshold();
            let (case, d_at) = if a <= x {
                (SurrogateCase::ThresholdBelowX, x)
            } else {
                (SurrogateCase::ThresholdAboveX, a)
            };
            let c = l.tail_ratio(x);
            let d = d_factor(n, p, d_at);
            Ok(Surrogate {
                x_index: x,
                threshold_a: a,
                case,
                c_factor: c,
                d_factor: d,
                value: (1.0 - c) * (1.0 - d),
                value_exact: None,
            })
        }
    }
}

/// Below-cutoff record at `k = ⌊n ln n − c_n n⌋`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundRecord {
    pub n: usize,
    pub p: u32,
    pub c_n: f64,
    pub k: usize,
    pub window_lower_edge: f64,
    pub c_n_over_ln_n: f64,
    pub in_window: bool,
    pub record: TVRecord,
    pub surrogate: Surrogate,
    /// `n^{−(1/2 − δ)}`.
    pub tolerance: f64,
    /// `d_TV − (1 − tolerance)`.
    pub margin: f64,
    pub passes: bool,
}

pub fn cutoff_lower(
    n: usize,
    p: u32,
    c_n: f64,
    mode: CurveMode,
    opts: &LowerBoundOptions,
) -> Result<LowerBoundRecord> {
    check_params(n, p)?;
    let k = cutoff_k(n, -c_n);
    let mut record = tv_record(n, p, k, mode)?;
    record.c = -c_n;
    record.tv_limit = limit_upper(-c_n);
    let surrogate = surrogate(n, p, k, mode)?;
    let tolerance = (n as f64).powf(-(0.5 - opts.delta));
    let margin = record.tv - (1.0 - tolerance);
    let passes = margin >= 0.0;
    record.lower_bound_flag = Some(passes);
    Ok(LowerBoundRecord {
        n,
        p,
        c_n,
        k,
        window_lower_edge: window_lower_edge(n, p),
        c_n_over_ln_n: c_n / (n as f64).ln(),
        in_window: in_window(n, p, c_n, opts),
        record,
        surrogate,
        tolerance,
        margin,
        passes,
    })
}

/// High-precision `{k, n} n! / n^k` against its limit `exp(−n e^{−k/n})`.
pub fn ball_box_gap(k: usize, n: usize) -> f64 {
    let exact = Real::from_rational(&stirling::ball_box_probability(k, n));
    (exact - stirling::ball_box_limit(k, n)).abs().to_f64()
}

/// `tv` must lie in `[0, 1]` and below the bound; a failed check is an internal error.
pub fn check_record(r: &TVRecord) -> Result<()> {
    if let (Some(tv), Some(upper)) = (&r.tv_exact, &r.tv_upper_exact) {
        if tv.is_negative() || tv > &BigRational::one() || tv > upper {
            return Err(Error::Internal(format!(
                "distance {tv} at k = {} violates 0 ≤ d ≤ {upper}",
                r.k
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_at_k_zero() {
        for (n, p) in [(1, 1), (3, 2), (4, 3), (10, 2)] {
            let expected = BigRational::one() - uniform_mass(n, p);
            assert_eq!(tv_exact(n, p, 0).unwrap(), expected);
            assert!((tv_logspace(n, p, 0).unwrap() - rational_f64(&expected)).abs() < 1e-12);
        }
        assert_eq!(tv_exact(3, 2, 0).unwrap(), arith::ratio(47, 48));
    }

    #[test]
    fn x_sequence_is_non_increasing() {
        for (n, p) in [(3, 2), (5, 3), (8, 1)] {
            for k in 0..40 {
                let xs = x_sequence(n, p, k).unwrap();
                assert!(xs.windows(2).all(|w| w[0] >= w[1]), "n={n} p={p} k={k}");
            }
        }
    }

    #[test]
    fn layer_masses_sum_to_one() {
        for (n, p) in [(3, 2), (4, 3)] {
            for k in 0..20 {
                let xs = x_sequence(n, p, k).unwrap();
                let total: BigRational = (0..=n)
                    .map(|a| &xs[a] * arith::int(layer_size(n, p, a)))
                    .sum();
                assert!(total.is_one());
            }
        }
    }

    #[test]
    fn threshold_matches_definitional_scan() {
        for k in [1, 5, 12, 200] {
            let xs = x_sequence(3, 2, k).unwrap();
            let y = uniform_mass(3, 2);
            let scan = (0..=3).find(|&a| y > xs[a]).unwrap_or(4);
            assert_eq!(threshold_a(3, 2, k).unwrap(), scan, "k={k}");
        }
    }

    #[test]
    fn matches_brute_force_on_small_groups() {
        for (n, p) in [(2, 2), (3, 2), (3, 1)] {
            for k in 0..=12 {
                assert_eq!(tv_exact(n, p, k).unwrap(), tv_brute_force(n, p, k).unwrap(), "n={n} p={p} k={k}");
            }
        }
    }

    #[test]
    fn upper_bound_values() {
        for k in 0..3 {
            assert!(tv_upper_bound(3, 2, k).unwrap().is_one());
        }
        assert_eq!(
            tv_upper_bound(3, 2, 10).unwrap(),
            BigRational::one() - arith::ratio(9330 * 6, 59049)
        );
        let bound = tv_upper_bound(3, 2, 30).unwrap();
        assert!(tv_exact(3, 2, 30).unwrap() <= bound);
    }

    #[test]
    fn decomposition_matches_powers() {
        let b1 = shuffle_algebra::transition_element(3, 2).unwrap();
        let mut walk = AlgebraElement::identity(3, 2);
        for k in 0..=6 {
            assert_eq!(decomposition(3, 2, k).unwrap(), walk, "k={k}");
            walk = walk.convolve(&b1).unwrap();
        }
    }

    #[test]
    fn logspace_tracks_exact() {
        for (n, p) in [(10, 2), (30, 3), (100, 2)] {
            for c in [-2.0, 0.0, 1.0, 3.0] {
                let k = cutoff_k(n, c);
                let exact = rational_f64(&tv_exact(n, p, k).unwrap());
                let approx = tv_logspace(n, p, k).unwrap();
                assert!((exact - approx).abs() < 1e-9, "n={n} p={p} k={k}: {exact} vs {approx}");
                let upper = rational_f64(&tv_upper_bound(n, p, k).unwrap());
                assert!((upper - tv_upper_bound_logspace(n, p, k).unwrap()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn limit_profile() {
        assert!((limit_upper(0.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!(limit_upper(40.0) < 1e-17);
        for i in -40..=80 {
            let c = f64::from(i) / 10.0;
            assert!(limit_upper(c) <= (-c).exp() + 1e-15);
        }
    }

    #[test]
    fn mixing_time_brackets_closed_form() {
        let m = mixing_time(50, 2, 0.25).unwrap();
        assert!((m.k as f64 - m.closed_form).abs() <= 100.0, "{m:?}");
        assert!(m.p_hypothesis);
        let before = tv_upper_bound(50, 2, m.k - 1).unwrap();
        assert!(before > BigRational::from_float(0.25).unwrap());
        let a = mixing_time(20, 2, 0.1).unwrap().k;
        let b = mixing_time(20, 2, 0.5).unwrap().k;
        assert!(a >= b);
        assert!(closed_form(20, 0.999) < 20.0 * 20f64.ln());
        assert!(mixing_time(20, 2, 1.0).is_err());
        assert!(!mixing_time(5, 1, 0.5).unwrap().p_hypothesis);
    }

    #[test]
    fn cutoff_grid_and_csv() {
        let curve = curve_c_grid(20, 2, &[0.0, 1.0], CurveMode::Exact).unwrap();
        assert_eq!(curve.records.len(), 2);
        assert_eq!(curve.records[0].k, cutoff_k(20, 0.0));
        let mut buf = Vec::new();
        curve.write_csv(&mut buf, 12).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(lines.clone().count(), 2);
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 10);
        assert_eq!(first[9], "");
        assert_eq!(first[7], "exact");
        let back: TVCurve = serde_json::from_str(&curve.to_json()).unwrap();
        assert_eq!(back, curve);
    }

    #[test]
    fn k_range_curve_agrees_with_single_records() {
        let curve = curve_k_range(6, 2, 3, 15, CurveMode::Exact).unwrap();
        assert_eq!(curve.records.len(), 13);
        for r in &curve.records {
            assert_eq!(r.tv_exact.as_ref().unwrap(), &tv_exact(6, 2, r.k).unwrap());
            check_record(r).unwrap();
        }
        assert!(curve_k_range(6, 2, 5, 4, CurveMode::Exact).unwrap().records.is_empty());
    }

    #[test]
    fn exact_cap_suggests_logspace() {
        let err = tv_exact(10, 2, DEFAULT_MAX_ROWS + 1).unwrap_err();
        assert!(err.to_string().contains("logspace"));
    }

    #[test]
    fn window_predicate() {
        let opts = LowerBoundOptions::default();
        let lo = window_lower_edge(100, 2);
        assert!((lo - (200f64.ln() * 100f64.ln()).ln()).abs() < 1e-12);
        assert!(in_window(100, 2, lo, &opts));
        assert!(!in_window(100, 2, 100f64.ln(), &opts));
        assert!(!in_window(100, 2, lo - 0.1, &opts));
    }

    #[test]
    fn d_factor_is_order_one_over_n() {
        for n in 20..=400 {
            let x = x_index(n);
            assert!(d_factor(n, 2, x) <= 1.0 / n as f64, "n={n}");
            assert!((d_factor(n, 2, x) - rational_f64(&d_exact(n, 2, x))).abs() < 1e-15);
        }
    }

    #[test]
    fn surrogate_is_a_lower_bound() {
        for (n, p) in [(10, 2), (40, 2), (60, 3)] {
            for c in [-3.0, -2.0, -1.0, 0.0, 1.0] {
                let k = cutoff_k(n, c);
                let s = surrogate(n, p, k, CurveMode::Exact).unwrap();
                let tv = tv_exact(n, p, k).unwrap();
                assert!(s.value_exact.as_ref().unwrap() <= &tv, "n={n} c={c}");
            }
        }
    }

    #[test]
    fn lower_bound_inside_the_window() {
        let opts = LowerBoundOptions::default();
        let c_n = window_lower_edge(100, 2);
        let r = cutoff_lower(100, 2, c_n, CurveMode::Exact, &opts).unwrap();
        assert!(r.in_window);
        assert!(r.record.tv >= 0.9);
        assert!(r.passes);
        assert!(r.margin > 0.0);
        assert!(r.surrogate.value <= r.record.tv);
    }
}

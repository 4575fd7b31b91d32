//! Exact identity battery over every small group `G(n, p)`.
//!
//! Each check compares two independently computed exact quantities and
//! records the identity name, the parameters and, on failure, a witness.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{self, binomial, factorial, pow_u};
use crate::colored_group::{self, ColoredLetter};
use crate::error::{Error, Result};
use crate::mixing;
use crate::shuffle_algebra::{self as sa, AlgebraElement};
use crate::spectral::{self, SpectrumMethod};
use crate::stirling::{self, StirlingKind, StirlingTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Algebra,
    Spectral,
    Mixing,
    All,
}

impl Suite {
    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Spectral => "spectral",
            Suite::Mixing => "mixing",
            Suite::All => "all",
        }
    }

    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "algebra" => Ok(Suite::Algebra),
            "spectral" => Ok(Suite::Spectral),
            "mixing" => Ok(Suite::Mixing),
            "all" => Ok(Suite::All),
            other => Err(Error::invalid(format!(
                "unknown suite `{other}` (expected algebra, spectral, mixing or all)"
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Deliberate corruption used to check that the battery can fail.
#[doc(hidden)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Adds one to the second-kind Stirling entry `{k, a}` fed to the `B_1` power expansion.
    Stirling2 { k: usize, a: usize },
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub n_max: usize,
    pub p_max: u32,
    pub suite: Suite,
    /// Groups larger than this are skipped.
    pub max_order: u64,
    /// Largest group on which characteristic polynomials are computed.
    pub char_poly_max_order: u64,
    /// Highest power in the power-expansion identities.
    pub max_power: usize,
    /// Highest power in the expansion of `B_a^k` for `a ≥ 2`.
    pub max_ba_power: usize,
    /// Largest `k` in the distance identities.
    pub max_steps: usize,
    #[doc(hidden)]
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            n_max: 3,
            p_max: 2,
            suite: Suite::All,
            max_order: 5000,
            char_poly_max_order: 2000,
            max_power: 6,
            max_ba_power: 4,
            max_steps: 12,
            fault: None,
        }
    }
}

impl VerifyOptions {
    /// Every `(n, p)` with `1 ≤ n ≤ n_max`, `1 ≤ p ≤ p_max` and `p^n n! ≤ max_order`.
    pub fn groups(&self) -> Vec<(usize, u32)> {
        let mut out = Vec::new();
        for n in 1..=self.n_max {
            for p in 1..=self.p_max {
                if colored_group::group_order(n, p) <= BigUint::from(self.max_order) {
                    out.push((n, p));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub identity: String,
    pub suite: Suite,
    pub n: usize,
    pub p: u32,
    /// Remaining parameters, e.g. `k=3`.
    pub params: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub n_max: usize,
    pub p_max: u32,
    pub groups: Vec<(usize, u32)>,
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per identity with its pass count, then every failure with its witness.
    pub fn summary(&self) -> String {
        let mut names: Vec<&str> = Vec::new();
        for c in &self.checks {
            if !names.contains(&c.identity.as_str()) {
                names.push(&c.identity);
            }
        }
        let mut out = String::new();
        for name in names {
            let (total, ok) = self
                .checks
                .iter()
                .filter(|c| c.identity == name)
                .fold((0, 0), |(t, o), c| (t + 1, o + c.passed as usize));
            let mark = if ok == total { "ok  " } else { "FAIL" };
            out += &format!("{mark} {name} ({ok}/{total})\n");
        }
        for c in self.failures() {
            out += &format!(
                "failed {} at n={} p={} {}: {}\n",
                c.identity,
                c.n,
                c.p,
                c.params,
                c.witness.as_deref().unwrap_or("")
            );
        }
        let verdict = if self.passed() { "passed" } else { "FAILED" };
        out += &format!(
            "{verdict}: {} checks over {} groups\n",
            self.checks.len(),
            self.groups.len()
        );
        out
    }
}

struct Recorder<'a> {
    suite: Suite,
    n: usize,
    p: u32,
    checks: &'a mut Vec<CheckOutcome>,
}

impl Recorder<'_> {
    fn record(&mut self, identity: &str, params: String, witness: Option<String>) {
        self.checks.push(CheckOutcome {
            identity: identity.to_string(),
            suite: self.suite,
            n: self.n,
            p: self.p,
            params,
            passed: witness.is_none(),
            witness,
        });
    }

    fn elements(&mut self, identity: &str, params: String, left: &AlgebraElement, right: &AlgebraElement) {
        self.record(identity, params, element_witness(left, right));
    }

    fn values<T: PartialEq + fmt::Display>(&mut self, identity: &str, params: String, left: &T, right: &T) {
        let witness = (left != right).then(|| format!("left {left}, right {right}"));
        self.record(identity, params, witness);
    }
}

/// First group element (in canonical order) where the two elements differ.
fn element_witness(left: &AlgebraElement, right: &AlgebraElement) -> Option<String> {
    if left == right {
        return None;
    }
    let zero = BigRational::zero();
    let lt = left.terms();
    let rt = right.terms();
    let g = lt
        .keys()
        .chain(rt.keys())
        .filter(|g| lt.get(*g).unwrap_or(&zero) != rt.get(*g).unwrap_or(&zero))
        .min()
        .expect("unequal elements differ somewhere");
    Some(format!(
        "coefficient of [{g}]: left {}, right {}",
        lt.get(g).unwrap_or(&zero),
        rt.get(g).unwrap_or(&zero)
    ))
}

/// Runs the selected suites over [`VerifyOptions::groups`].
pub fn run(opts: &VerifyOptions) -> Result<VerifyReport> {
    run_on(opts, &opts.groups())
}

/// Runs the selected suites over an explicit list of groups.
pub fn run_on(opts: &VerifyOptions, groups: &[(usize, u32)]) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    for &(n, p) in groups {
        if n == 0 || p == 0 {
            return Err(Error::invalid("n and p must be at least 1"));
        }
        if opts.suite.includes(Suite::Algebra) {
            algebra(opts, n, p, &mut checks)?;
        }
        if opts.suite.includes(Suite::Spectral) {
            spectral_checks(opts, n, p, &mut checks)?;
        }
        if opts.suite.includes(Suite::Mixing) {
            mixing_checks(opts, n, p, &mut checks)?;
        }
    }
    Ok(VerifyReport {
        suite: opts.suite,
        n_max: opts.n_max,
        p_max: opts.p_max,
        groups: groups.to_vec(),
        checks,
    })
}

fn algebra(opts: &VerifyOptions, n: usize, p: u32, checks: &mut Vec<CheckOutcome>) -> Result<()> {
    let mut rec = Recorder { suite: Suite::Algebra, n, p, checks };
    let family = sa::b_family(n, p)?;
    let b1 = &family[1];
    let pu = p as u64;

    for a in 0..=n {
        let left = family[a].convolve(b1)?;
        let next = family.get(a + 1).cloned().unwrap_or_else(|| AlgebraElement::zero(n, p));
        let right = family[a].scale(&arith::int(pu * a as u64)).add(&next)?;
        rec.elements("b-recursion", format!("a={a}"), &left, &right);
    }

    for a in 0..=n {
        let product = sa::ba_from_falling_factorial(a, n, p)?;
        rec.elements("falling-factorial-product", format!("a={a}"), &product, &family[a]);
    }

    let mut table = StirlingTable::new(StirlingKind::Second, opts.max_power, n)?;
    if let Some(Fault::Stirling2 { k, a }) = opts.fault {
        table.perturb(k, a);
    }
    let mut power = AlgebraElement::identity(n, p);
    let mut powers = Vec::with_capacity(opts.max_power + 1);
    for k in 0..=opts.max_power {
        let expanded = sa::b1_power_with(k, &family, |k, a| table.get(k, a).unwrap_or_default())?;
        rec.elements("b1-power-expansion", format!("k={k}"), &power, &expanded);
        powers.push(power.clone());
        power = power.convolve(b1)?;
    }

    for a in 0..=n {
        let mut acc = AlgebraElement::zero(n, p);
        for i in 0..=a {
            let magnitude = arith::int(stirling::stirling1_p(a, i, p));
            let c = if (a - i) % 2 == 0 { magnitude } else { -magnitude };
            let bi = match powers.get(i) {
                Some(x) => x.clone(),
                None => sa::convolution_power(b1, i)?,
            };
            acc = acc.add(&bi.scale(&c))?;
        }
        rec.elements("signed-stirling-inversion", format!("a={a}"), &acc, &family[a]);
    }

    let es = sa::idempotents(n, p)?;
    for i in 0..=n {
        for j in 0..=n {
            let product = es[i].convolve(&es[j])?;
            let expected = if i == j { es[i].clone() } else { AlgebraElement::zero(n, p) };
            rec.elements("idempotent-orthogonality", format!("i={i} j={j}"), &product, &expected);
        }
    }
    let mut sum = AlgebraElement::zero(n, p);
    for e in &es {
        sum = sum.add(e)?;
    }
    rec.elements("idempotent-completeness", String::new(), &sum, &AlgebraElement::identity(n, p));

    for (k, power) in powers.iter().enumerate() {
        let spectral = AlgebraElement::linear_combination(
            n,
            p,
            es.iter()
                .enumerate()
                .map(|(i, e)| (arith::int(pow_u(pu * i as u64, k)), e)),
        )?;
        rec.elements("b1-spectral-expansion", format!("k={k}"), power, &spectral);
    }

    for a in 0..=n {
        let expanded = AlgebraElement::linear_combination(
            n,
            p,
            es.iter()
                .enumerate()
                .map(|(i, e)| (arith::int(sa::ba_eigenvalue(a, i, p)), e)),
        )?;
        rec.elements("ba-idempotent-expansion", format!("a={a}"), &expanded, &family[a]);
    }

    for a in 2..=n {
        let mut power = AlgebraElement::identity(n, p);
        for k in 0..=opts.max_ba_power {
            let formula = sa::ba_power(a, k, n, p)?;
            rec.elements("ba-power-expansion", format!("a={a} k={k}"), &power, &formula);
            power = power.convolve(&family[a])?;
        }
    }

    for a in 1..=n.min(2) {
        let mut heads: Vec<ColoredLetter> = (1..=a as u32)
            .flat_map(|v| (0..p).map(move |c| ColoredLetter::new(c, v)))
            .collect();
        if a < n {
            heads.push(ColoredLetter::plain(a as u32 + 1));
        }
        let mut total = AlgebraElement::zero(n, p);
        for head in heads {
            let group = sa::head_group(a, head, n, p)?;
            total = total.add(&group)?;
            let expected = if head.value as usize == a + 1 { &family[a + 1] } else { &family[a] };
            rec.elements(
                "head-letter-grouping",
                format!("a={a} head={head}"),
                &group.convolve(b1)?,
                expected,
            );
        }
        rec.elements("head-letter-partition", format!("a={a}"), &total, &family[a]);
    }
    Ok(())
}

fn spectral_checks(opts: &VerifyOptions, n: usize, p: u32, checks: &mut Vec<CheckOutcome>) -> Result<()> {
    let mut rec = Recorder { suite: Suite::Spectral, n, p, checks };
    let formula = spectral::formula_multiplicities(n, p)?;
    let order = colored_group::group_order(n, p);
    let total: BigUint = formula.iter().sum();
    rec.values("derangement-partition", String::new(), &total, &order);

    for (idx, i) in (0..=n).rev().enumerate() {
        let trace = spectral::idempotent_trace(i, n, p)?;
        rec.values("idempotent-trace-multiplicity", format!("i={i}"), &trace, &formula[idx]);
    }

    if order > BigUint::from(opts.char_poly_max_order) {
        return Ok(());
    }
    let report = spectral::multiplicity_report_with_cap(n, p, SpectrumMethod::CharPoly, opts.char_poly_max_order)?;
    for (idx, i) in (0..=n).rev().enumerate() {
        rec.values(
            "char-poly-multiplicity",
            format!("i={i}"),
            &report.eigenvalues[idx].multiplicity,
            &formula[idx],
        );
    }
    for a in 2..=n {
        let ba = sa::build_b(a, n, p)?;
        let matrix = spectral::left_regular_matrix_with_cap(&ba, opts.char_poly_max_order)?;
        let poly = spectral::char_poly_factored(&matrix, &spectral::ba_candidates(a, n, p))?;
        for (value, mult) in spectral::ba_eigenvalues(a, n, p) {
            let got = BigUint::from(poly.multiplicity(&BigInt::from(value.clone())).unwrap_or(0));
            rec.values("ba-eigenvalues", format!("a={a} value={value}"), &got, &mult);
        }
    }
    Ok(())
}

fn mixing_checks(opts: &VerifyOptions, n: usize, p: u32, checks: &mut Vec<CheckOutcome>) -> Result<()> {
    let mut rec = Recorder { suite: Suite::Mixing, n, p, checks };
    let one = BigRational::one();
    let start = mixing::tv_exact(n, p, 0)?;
    rec.values("point-mass-start", "k=0".into(), &start, &(&one - mixing::uniform_mass(n, p)));

    let step = sa::transition_element(n, p)?;
    let uniform = mixing::uniform_mass(n, p);
    let mut dist = AlgebraElement::identity(n, p);
    for k in 0..=opts.max_steps {
        let mass = dist.total_mass();
        let witness = (!dist.is_nonnegative() || mass != one)
            .then(|| format!("total mass {mass}, nonnegative {}", dist.is_nonnegative()));
        rec.record("distribution-mass", format!("k={k}"), witness);

        let layered = mixing::decomposition(n, p, k)?;
        rec.elements("layer-decomposition", format!("k={k}"), &layered, &dist);

        let unseen = arith::int(colored_group::group_order(n, p) - BigUint::from(dist.len()));
        let brute: BigRational = dist
            .terms()
            .values()
            .map(|v| num_traits::Signed::abs(&(v - &uniform)))
            .sum::<BigRational>()
            + &uniform * unseen;
        let brute = brute / arith::int(2);
        let tv = mixing::tv_exact(n, p, k)?;
        rec.values("tv-layer-formula", format!("k={k}"), &tv, &brute);

        let upper = mixing::tv_upper_bound(n, p, k)?;
        let witness = (tv > upper).then(|| format!("tv {tv} exceeds bound {upper}"));
        rec.record("tv-upper-bound", format!("k={k}"), witness);

        dist = dist.convolve(&step)?;
    }

    for k in 0..=opts.max_steps {
        rec.values(
            "ball-box-inclusion-exclusion",
            format!("k={k}"),
            &stirling::ball_box_probability(k, n),
            &stirling::ball_box_inclusion_exclusion(k, n),
        );
    }

    for k in 0..=opts.max_steps {
        let direct = stirling::stirling2(k, n) * factorial(n);
        let via_surjections: BigInt = (0..=n)
            .map(|j| {
                let term = BigInt::from(binomial(n, j) * pow_u((n - j) as u64, k));
                if j % 2 == 0 { term } else { -term }
            })
            .sum();
        rec.values("surjection-count", format!("k={k}"), &BigInt::from(direct), &via_surjections);
    }
    Ok(())
}

//! Monte Carlo simulation of the colored top-to-random shuffle.
//!
//! Each step draws a color shift `j ∈ Z_p` and a position `i ∈ [n]` uniformly
//! and independently, takes the top card, adds `j` to its color and inserts
//! it at position `i`. This is right multiplication of the deck by the cycle
//! element `S_{i,j}`; the `np` moves are exactly the terms of `B_1`.
//!
//! Trajectory `t` draws from `ChaCha8Rng::seed_from_u64(seed)` switched to
//! stream `t`, so results depend only on the configuration and never on how
//! trajectories are scheduled across threads.

use std::collections::BTreeMap;
use std::io::{self, Write};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith;
use crate::colored_group::{self, ColoredLetter, ColoredPermutation};
use crate::error::{Error, Result};
use crate::mixing;
use crate::shuffle_algebra::{self, AlgebraElement};

/// Identifier recorded in run manifests.
pub const RNG_ALGORITHM: &str =
    "rand_chacha::ChaCha8Rng/0.9; seed_from_u64(seed); set_stream(trajectory index)";

/// Trajectories handed to one worker at a time.
const CHUNK: usize = 1024;

/// A move of the shuffle: shift the top card's color by `color` and insert it
/// at 1-based `position`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move {
    pub color: u32,
    pub position: usize,
}

/// All `np` moves, ordered by color then position.
pub fn all_moves(n: usize, p: u32) -> Vec<Move> {
    (0..p)
        .flat_map(|color| (1..=n).map(move |position| Move { color, position }))
        .collect()
}

/// `S_{i,j}`: the word `2 3 … i (j,1) i+1 … n`.
pub fn move_element(n: usize, p: u32, mv: Move) -> Result<ColoredPermutation> {
    if mv.position == 0 || mv.position > n {
        return Err(Error::invalid(format!(
            "position {} outside 1..={n}",
            mv.position
        )));
    }
    let mut word: Vec<ColoredLetter> = (2..=n as u32).map(ColoredLetter::plain).collect();
    word.insert(mv.position - 1, ColoredLetter::new(mv.color % p, 1));
    ColoredPermutation::from_word(p, word)
}

/// Applies one move to the deck.
pub fn step(state: &ColoredPermutation, mv: Move) -> ColoredPermutation {
    let p = state.p();
    let mut word = state.word().to_vec();
    let top = word.remove(0);
    word.insert(
        mv.position - 1,
        ColoredLetter::new((top.color + mv.color) % p, top.value),
    );
    ColoredPermutation::from_word_unchecked(p, word)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n: usize,
    pub p: u32,
    /// Steps per trajectory.
    pub k: usize,
    pub trials: u64,
    pub seed: u64,
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::invalid("n and p must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        Ok(())
    }
}

/// Where each trajectory starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Start {
    Identity,
    /// A uniformly drawn group element (requires `p^n n!` to fit in 64 bits).
    Uniform,
}

fn sample_move<R: Rng>(rng: &mut R, n: usize, p: u32) -> Move {
    Move {
        color: rng.random_range(0..p),
        position: rng.random_range(1..=n),
    }
}

fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Occurrence counts of the final deck over all trajectories.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmpiricalDistribution {
    pub n: usize,
    pub p: u32,
    pub counts: BTreeMap<ColoredPermutation, u64>,
    pub total: u64,
}

impl EmpiricalDistribution {
    /// `word,count` lines in canonical element order.
    pub fn write_histogram<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "word,count")?;
        for (g, c) in &self.counts {
            writeln!(out, "{g},{c}")?;
        }
        Ok(())
    }

    pub fn frequency(&self, g: &ColoredPermutation) -> BigRational {
        arith::ratio(self.counts.get(g).copied().unwrap_or(0), self.total)
    }
}

/// Runs `config.trials` trajectories from the identity.
pub fn run(config: &ChainConfig, threads: Option<usize>) -> Result<EmpiricalDistribution> {
    run_from(config, Start::Identity, threads)
}

pub fn run_from(
    config: &ChainConfig,
    start: Start,
    threads: Option<usize>,
) -> Result<EmpiricalDistribution> {
    config.validate()?;
    let ChainConfig { n, p, k, trials, seed } = *config;
    let order = match start {
        Start::Identity => 0,
        Start::Uniform => colored_group::group_order_u64(n, p).ok_or_else(|| {
            Error::cap("uniform starting states", colored_group::group_order(n, p), u64::MAX, None)
        })?,
    };
    let simulate_chunk = |chunk: u64| -> BTreeMap<ColoredPermutation, u64> {
        let mut counts = BTreeMap::new();
        let lo = chunk * CHUNK as u64;
        let hi = (lo + CHUNK as u64).min(trials);
        for t in lo..hi {
            let mut rng = trajectory_rng(seed, t);
            let mut state = match start {
                Start::Identity => ColoredPermutation::identity(n, p),
                Start::Uniform => ColoredPermutation::unrank(n, p, rng.random_range(0..order))
                    .expect("rank below the group order"),
            };
            for _ in 0..k {
                state = step(&state, sample_move(&mut rng, n, p));
            }
            *counts.entry(state).or_insert(0) += 1;
        }
        counts
    };
    let chunks = trials.div_ceil(CHUNK as u64);
    let work = || {
        (0..chunks)
            .into_par_iter()
            .map(simulate_chunk)
            .reduce(BTreeMap::new, merge_counts)
    };
    let counts = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    Ok(EmpiricalDistribution {
        n,
        p,
        counts,
        total: trials,
    })
}

fn merge_counts(
    mut a: BTreeMap<ColoredPermutation, u64>,
    b: BTreeMap<ColoredPermutation, u64>,
) -> BTreeMap<ColoredPermutation, u64> {
    for (g, c) in b {
        *a.entry(g).or_insert(0) += c;
    }
    a
}

/// Distribution an empirical histogram is compared against.
#[derive(Clone, Debug)]
pub enum Reference {
    Uniform,
    /// The exact law after `k` steps from the identity, `(B_1/(np))^k`.
    AfterSteps(usize),
    /// Any probability element of the group algebra.
    Distribution(AlgebraElement),
}

/// `½ Σ_w |count_w / total − q_w|`, computed exactly.
pub fn empirical_tv_exact(e: &EmpiricalDistribution, reference: &Reference) -> Result<BigRational> {
    let (n, p) = (e.n, e.p);
    let total = BigInt::from(e.total);
    let freq = |c: u64| BigRational::new(BigInt::from(c), total.clone());
    let mut sum = BigRational::zero();
    match reference {
        Reference::Uniform => {
            let q = mixing::uniform_mass(n, p);
            for &c in e.counts.values() {
                sum += (freq(c) - &q).abs();
            }
            let unseen = arith::group_order(n, p) - BigUint::from(e.counts.len());
            sum += q * arith::int(unseen);
        }
        Reference::AfterSteps(k) => {
            let xs = mixing::x_sequence(n, p, *k)?;
            let mut seen_per_layer = vec![0u64; n + 1];
            for (g, &c) in &e.counts {
                let a = shuffle_algebra::layer_index(g);
                seen_per_layer[a] += 1;
                sum += (freq(c) - &xs[a]).abs();
            }
            for a in 0..=n {
                let unseen = mixing::layer_size(n, p, a) - BigUint::from(seen_per_layer[a]);
                sum += &xs[a] * arith::int(unseen);
            }
        }
        Reference::Distribution(q) => {
            if q.n() != n || q.p() != p {
                return Err(Error::Mismatch {
                    left_n: n,
                    left_p: p,
                    right_n: q.n(),
                    right_p: q.p(),
                });
            }
            for (g, &c) in &e.counts {
                sum += (freq(c) - q.coefficient(g)).abs();
            }
            for (g, v) in q.terms() {
                if !e.counts.contains_key(g) {
                    sum += v.abs();
                }
            }
        }
    }
    Ok(sum / arith::int(2))
}

pub fn empirical_tv(e: &EmpiricalDistribution, reference: &Reference) -> Result<f64> {
    Ok(arith::rational_to_f64(&empirical_tv_exact(e, reference)?))
}

/// One line of the simulation CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub k: usize,
    pub trials: u64,
    pub seed: u64,
    pub empirical_tv: f64,
    pub exact_tv: f64,
    pub abs_error: f64,
}

pub const CSV_HEADER: &str = "k,trials,seed,empirical_tv,exact_tv,abs_error";

/// Runs the chain and compares its histogram with uniform, next to the exact distance.
pub fn summarize(config: &ChainConfig, threads: Option<usize>) -> Result<(SimulationSummary, EmpiricalDistribution)> {
    let dist = run(config, threads)?;
    let empirical = empirical_tv(&dist, &Reference::Uniform)?;
    let exact = arith::rational_to_f64(&mixing::tv_exact(config.n, config.p, config.k)?);
    Ok((
        SimulationSummary {
            k: config.k,
            trials: config.trials,
            seed: config.seed,
            empirical_tv: empirical,
            exact_tv: exact,
            abs_error: (empirical - exact).abs(),
        },
        dist,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shuffle_algebra::transition_element;

    fn config(n: usize, p: u32, k: usize, trials: u64, seed: u64) -> ChainConfig {
        ChainConfig { n, p, k, trials, seed }
    }

    #[test]
    fn trivial_move_keeps_the_deck() {
        let g = ColoredPermutation::parse("3 1~1 2", 2).unwrap();
        assert_eq!(step(&g, Move { color: 0, position: 1 }), g);
    }

    #[test]
    fn move_to_the_bottom_with_a_color_shift() {
        let id = ColoredPermutation::identity(3, 2);
        let next = step(&id, Move { color: 1, position: 3 });
        assert_eq!(next, ColoredPermutation::parse("2 3 1~1", 2).unwrap());
    }

    #[test]
    fn step_is_right_multiplication() {
        for g in colored_group::enumerate(3, 2).unwrap() {
            for mv in all_moves(3, 2) {
                let s = move_element(3, 2, mv).unwrap();
                assert_eq!(step(&g, mv), g.multiply(&s).unwrap(), "{g} {mv:?}");
            }
        }
    }

    #[test]
    fn one_step_from_identity_is_b1() {
        let moves = all_moves(3, 2);
        let id = ColoredPermutation::identity(3, 2);
        let weight = arith::ratio(1, moves.len() as u64);
        let reached = AlgebraElement::from_terms(
            3,
            2,
            moves.iter().map(|&mv| (step(&id, mv), weight.clone())),
        )
        .unwrap();
        assert_eq!(reached, transition_element(3, 2).unwrap());
    }

    #[test]
    fn zero_steps_is_a_point_mass() {
        let d = run(&config(4, 3, 0, 50, 1), None).unwrap();
        assert_eq!(d.counts.len(), 1);
        assert_eq!(d.counts[&ColoredPermutation::identity(4, 3)], 50);
        let tv = empirical_tv_exact(&d, &Reference::Uniform).unwrap();
        assert_eq!(tv, BigRational::from_integer(1.into()) - mixing::uniform_mass(4, 3));
        assert!(empirical_tv_exact(&d, &Reference::AfterSteps(0)).unwrap().is_zero());
    }

    #[test]
    fn reproducible_and_schedule_invariant() {
        let cfg = config(4, 2, 7, 5000, 99);
        let a = run(&cfg, Some(1)).unwrap();
        let b = run(&cfg, Some(4)).unwrap();
        let c = run(&cfg, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let d = run(&config(4, 2, 7, 5000, 100), Some(1)).unwrap();
        assert_ne!(a, d);
        assert_eq!(a.counts.values().sum::<u64>(), 5000);
    }

    #[test]
    fn references_agree() {
        let d = run(&config(3, 2, 4, 3000, 5), None).unwrap();
        let exact = mixing::decomposition(3, 2, 4).unwrap();
        let via_layers = empirical_tv_exact(&d, &Reference::AfterSteps(4)).unwrap();
        let via_element = empirical_tv_exact(&d, &Reference::Distribution(exact)).unwrap();
        assert_eq!(via_layers, via_element);
        let uniform = AlgebraElement::from_terms(
            3,
            2,
            colored_group::enumerate(3, 2)
                .unwrap()
                .map(|g| (g, arith::ratio(1, 48))),
        )
        .unwrap();
        assert_eq!(
            empirical_tv_exact(&d, &Reference::Uniform).unwrap(),
            empirical_tv_exact(&d, &Reference::Distribution(uniform)).unwrap()
        );
    }

    #[test]
    fn self_distance_is_zero() {
        let d = run(&config(3, 2, 3, 2000, 11), None).unwrap();
        let own = AlgebraElement::from_terms(
            3,
            2,
            d.counts.keys().map(|g| (g.clone(), d.frequency(g))),
        )
        .unwrap();
        assert!(empirical_tv_exact(&d, &Reference::Distribution(own)).unwrap().is_zero());
    }

    #[test]
    fn single_step_frequencies() {
        let trials = 1_000_000u64;
        let d = run(&config(3, 2, 1, trials, 2024), None).unwrap();
        assert_eq!(d.counts.len(), 6);
        let q = 1.0 / 6.0;
        let sigma = (trials as f64 * q * (1.0 - q)).sqrt();
        for &c in d.counts.values() {
            assert!((c as f64 - trials as f64 * q).abs() <= 4.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn uniform_start_stays_uniform() {
        let trials = 96_000u64;
        let d = run_from(&config(3, 2, 1, trials, 3), Start::Uniform, None).unwrap();
        let expected = trials as f64 / 48.0;
        let chi2: f64 = colored_group::enumerate(3, 2)
            .unwrap()
            .map(|g| {
                let c = d.counts.get(&g).copied().unwrap_or(0) as f64;
                (c - expected).powi(2) / expected
            })
            .sum();
        // 47 degrees of freedom; the 0.999 quantile is about 82.7.
        assert!(chi2 < 82.7, "chi2 = {chi2}");
    }

    #[test]
    fn histogram_dump() {
        let d = run(&config(2, 2, 0, 3, 0), None).unwrap();
        let mut buf = Vec::new();
        d.write_histogram(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "word,count\n1 2,3\n");
    }

    #[test]
    fn invalid_configs() {
        assert!(run(&config(3, 2, 1, 0, 0), None).is_err());
        assert!(run(&config(0, 2, 1, 1, 0), None).is_err());
        assert!(move_element(3, 2, Move { color: 0, position: 4 }).is_err());
    }
}

//! Exact analysis of the top-to-random shuffle on the colored permutation
//! groups `G(n, p) = C_p ≀ S_n`.
//!
//! A deck of `n` cards, each carrying a color in `Z/p`, is shuffled by taking
//! the top card, shifting its color by a uniform residue and reinserting it at
//! a uniform position. The crate builds the group algebra elements that drive
//! this chain, computes the spectrum of the transition operator, the exact
//! total-variation distance to uniformity after `k` steps, the mixing and
//! cutoff curves, and a Monte Carlo simulator for the physical card process.
//!
//! All identities are checked in exact rational arithmetic; floating point is
//! confined to asymptotic estimates, log-space curves for large decks, and
//! empirical estimates.

pub mod colored_group;
pub mod error;
pub mod mixing;
pub mod real;
pub mod shuffle_algebra;
pub mod simulate;
pub mod spectral;
pub mod stirling;
pub mod verify;

pub(crate) mod arith;
pub(crate) mod modular;

pub use colored_group::{ColoredLetter, ColoredPermutation};
pub use error::{Error, ErrorKind, Result};
pub use shuffle_algebra::{AlgebraElement, Word};

/// Version tag recorded in run manifests and serialized reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Exact and Monte-Carlo mixing analysis for generalized riffle shuffles.
//!
//! A `p`-shuffle picks a pack count `m` from a distribution `p` and performs
//! an `m`-shuffle: cut the deck into `m` multinomial packs and drop cards
//! with probability proportional to the pack sizes. The law of the deck after
//! any number of such shuffles depends only on the number of rising sequences
//! of the arrangement, which lets every total-variation distance in this
//! crate be computed exactly over `n` classes instead of `n!` arrangements.
//!
//! Modules:
//! - [`combinatorics`]: big-integer foundations, Eulerian rows and their cache.
//! - [`shuffle_laws`]: exact laws, total variation, and brute-force oracles.
//! - [`sampling`]: Monte-Carlo simulation of the physical shuffle.
//! - [`cutoff`]: cutoff times, windows and condition checkers.
//! - [`continuous`]: Poissonized chains and the discretized pack law.
//! - [`verify`]: exact property suites shared by the CLI and the tests.

pub mod combinatorics;
pub mod continuous;
pub mod cutoff;
pub mod error;
pub mod numeric;
pub mod sampling;
pub mod shuffle_laws;
pub mod verify;

pub use combinatorics::{
    binomial_big, eulerian_row, rising_sequences, BigCount, DeckArrangement, EulerianCache,
    EulerianRow, ExactProb,
};
pub use error::{Result, RiffleError};
pub use shuffle_laws::{
    law_after_k, product_power, q_nm, tv_to_uniform, PackDistribution, ProductLaw, RisingSeqLaw,
};

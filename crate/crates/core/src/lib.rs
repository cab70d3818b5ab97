//! Testing randomness extracted from wireless channels.
//!
//! The crate models quantized channel bits as a lag-1 Markov chain, scores a
//! maximum-likelihood tree search (MLTS) adversary against that model, runs
//! nine NIST SP 800-22 tests together with their accept probabilities under
//! bit correlation, and picks the P-value threshold and privacy-amplification
//! rate that maximize key-generation efficiency without security loss.
//!
//! Module map:
//!
//! - [`specfun`]: error function, incomplete beta/gamma and inverses.
//! - [`bitmodel`]: bit sequences, Markov generators, correlation estimators,
//!   and the shared bit-sequence file formats.
//! - [`mlts`]: adversary budgets, MLTS success probabilities, candidate
//!   enumeration and security-loss metrics.
//! - [`randtests`]: the nine tests and their analytic accept probabilities.
//! - [`guideline`]: grid optimizer for `(alpha, R_privacy)`.
//! - [`pipeline`]: synthetic channel → quantizer → test → reconcile → amplify.

pub mod bitmodel;
pub mod error;
pub mod guideline;
pub mod mlts;
pub mod pipeline;
pub mod randtests;
pub mod seed;
pub mod specfun;

pub use bitmodel::{BitSequence, MarkovBitModel, MaryMarkovModel};
pub use error::{Error, Result};
pub use guideline::{GuidelineProblem, GuidelineSolution};
pub use mlts::{AdversaryBudget, SecurityReport};
pub use randtests::{TestKind, TestOutcome, TestSpec, Verdict};
pub use specfun::Real;

/// Double-precision probability; the scalar used outside [`specfun`].
pub type Probability = specfun::Probability<f64>;
/// Single-precision probability.
pub type Probability32 = specfun::Probability<f32>;

/// Name of the pseudo-random generator behind every seeded operation.
pub const RNG_ALGORITHM: &str = "ChaCha20";

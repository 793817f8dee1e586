//! Compressive phase retrieval via lifting.
//!
//! Recovers a sparse complex signal `x` from squared-magnitude measurements
//! `b_i = |<x, a_i>|^2` by lifting to `X = x x^H` and solving
//!
//! ```text
//! min  tr(X) + lambda ||X||_1   s.t.  ||B(X) - b||_2 <= eps,  X >= 0
//! ```
//!
//! with a first-order splitting method. Modules:
//!
//! * [`linalg`]: Hermitian eigendecomposition, PSD projection, shrinkage.
//! * [`lifting`]: the sensing system and the lifted operator `B`.
//! * [`solver`]: the splitting solver (CPRL, PhaseLift, noisy, warm start).
//! * [`greedy`]: greedy support expansion over small restricted programs.
//! * [`certify`]: coherence and RIP estimates, dual certificates, oracles.
//! * [`bench`]: instance generation, sweeps, the audio experiment.

pub mod bench;
pub mod certify;
pub mod error;
pub mod greedy;
pub mod lifting;
pub mod linalg;
pub mod solver;

pub use error::{Error, Result};

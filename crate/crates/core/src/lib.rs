//! Adaptive parallel tempering.
//!
//! A parallel-tempering sampler built on the affine-invariant ensemble
//! stretch move, with a temperature ladder that is tuned online by a
//! single-state Gaussian policy gradient. Rewards, baseline ladder
//! adapters, benchmark targets and autocorrelation diagnostics live in
//! their own modules.

pub mod adaptation;
pub mod diagnostics;
pub mod ensemble;
mod error;
pub mod rewards;
pub mod rng;
pub mod targets;
pub mod tempering;

pub use error::{Error, Result};

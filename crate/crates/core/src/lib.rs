//! Sparse random embeddings into l1 that preserve the block l1/l2
//! interpolation norm `‖x‖_{1,2,s}` up to a constant factor.
//!
//! * [`norms`]: the block norm, the K-interpolation norm, rearrangements.
//! * [`sketch`]: binary masks, Gaussian/Bernoulli composite embeddings and
//!   their normalization, Cauchy sketches.
//! * [`analysis`]: conditional expectations, bound certificates, tail bounds.
//! * [`binsim`]: the balls-into-bins process behind the lower bound.
//! * [`lab`]: Monte-Carlo studies and CSV output.

// `!(x > 0.0)` style checks are meant to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod binsim;
pub mod error;
pub mod lab;
pub mod norms;
pub mod rng;
pub mod signal;
pub mod sketch;
pub mod stats;

pub use error::{Error, Result};
pub use signal::Signal;

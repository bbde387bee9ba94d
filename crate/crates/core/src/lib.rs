//! Stability analysis for the Volterra convolution recursion
//! `x_n = sum_{i=0}^{n-1} a_{n-i} x_i`.
//!
//! The crate issues certificates for the null solution from a kernel
//! description: interval-certified series tests, a real-axis root witness,
//! Rouché-type tests built on the truncated characteristic polynomial, a
//! heuristic marginal-stability check, and, when nothing certifies, an
//! empirical classification of the simulated trajectory.

pub mod certify;
pub mod charfun;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod interval;
pub mod kernel;
pub mod simulate;

pub use error::{Error, Result};
pub use kernel::{KernelSpec, SumEnclosure, SumMode, SupportGcd, TailModel};

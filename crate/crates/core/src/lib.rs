//! Core numerics for an energy-trading stochastic game among prosumers with
//! prospect-theoretic payoffs, and for the utility company's online
//! allocation problem.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! computation over immutable inputs; randomness is always driven by a
//! caller-provided seed. File formats, configuration and the command line
//! live in the `gridgame` crate.
//!
//! Module map:
//!
//! * [`model`]: storage dynamics, threshold demand, fairness pricing, payoffs,
//!   generated-energy distributions and transition kernels.
//! * [`prospect`]: Prelec weighting, Tversky valuation, expected prospect.
//! * [`mdp`]: stationary distributions, prospect-weighted rewards, the
//!   occupation-measure LP, vertex enumeration and exact evaluation.
//! * [`learning`]: the distributed epsilon-Nash learning protocol and its
//!   certificate.
//! * [`allocator`]: projected online gradient allocation and regret.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod allocator;
mod error;
pub mod learning;
pub mod linalg;
pub mod lp;
pub mod mdp;
pub mod model;
pub mod prospect;

pub use error::{Error, Result};

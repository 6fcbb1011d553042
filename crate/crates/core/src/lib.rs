//! Gradient descent for low-rank matrix sensing with factorized iterates.
//!
//! The crate covers both parameterizations of the search variable:
//! symmetric `M = X X^T` and asymmetric `M = F G^T`, with `X, F, G` of
//! shape `n x k` and a rank-`r` diagonal target. It provides
//!
//! * [`linalg`]: dense matrices, Jacobi SVD/eigen routines, seeded Gaussians;
//! * [`sensing`]: Gaussian and identity measurement operators;
//! * [`problem`]: ground truth and the initialization schemes;
//! * [`optimizer`]: the update rules and an instrumented run loop;
//! * [`diagnostics`]: per-iteration quantities and rate fits;
//! * [`accel`]: the one-shot rebalancing transform;
//! * [`toycase`]: the scalar recursions of the `k = r + 1` toy problem.

pub mod accel;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod optimizer;
pub mod problem;
pub mod sensing;
pub mod toycase;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, Seed};

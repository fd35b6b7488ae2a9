//! Strong restricted isometry machinery for phaseless compressed sensing.
//!
//! The crate is `no_std` with `alloc`. It covers:
//!
//! * [`ensembles`]: seeded Gaussian and Bernoulli sensing matrices, sparse
//!   test signals and phaseless measurements `b = |Ax|`.
//! * [`halfnorm`]: the smallest-half norm `F`, its subset generalisation,
//!   Monte Carlo estimation of `mu_m` and the explicit constants `nu_0`,
//!   `c_alpha`.
//! * [`isometry`]: exact small-scale and randomized RIP / strong-RIP level
//!   estimation, the Bernoulli failure witness and admissibility thresholds.
//! * [`recovery`]: basis pursuit with dual certificates, an LP reference
//!   solver, the sign-enumeration and `l0` oracles and an alternating
//!   solver for `min ||x||_1 s.t. |Ax| = b`.
//! * [`probes`]: Monte Carlo checks of the concentration inequalities and
//!   of the erasure-robust Johnson-Lindenstrauss embedding.
//!
//! IO, file formats and the command line live in the `srip-harness` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod ensembles;
mod error;
pub mod halfnorm;
pub mod isometry;
pub mod linalg;
pub mod probes;
pub mod recovery;
pub mod rng;

pub use error::{Error, Result};

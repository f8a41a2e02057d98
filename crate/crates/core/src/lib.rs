//! Bell-Mermin operator pairs, k-separability bounds and entanglement
//! witnesses for n-particle systems of arbitrary local dimension.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense complex matrices, density operators, spectra.
//! - [`bell`]: the complex map `f`, Bell-Mermin pairs built directly,
//!   recursively, and through their correlator expansion.
//! - [`states`]: GHZ and white-noise GHZ states, partitions, k-separable
//!   products and random mixtures.
//! - [`bounds`]: closed-form quadratic and linear bounds and the witness
//!   decision rule.
//! - [`measurement`]: two-outcome POVMs, exact correlators and finite-shot
//!   sampling.
//! - [`optimize`]: maximisation of `<B>^2 + <B'>^2` over qubit settings.
//! - [`verify`]: randomized brute-force checks of every inequality and the
//!   equality-achieving constructions.
//! - [`io`]: the JSON forms shared by the command-line tool.

// NaN must fail validation, hence `!(x <= bound)` rather than `x > bound`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bell;
pub mod bounds;
pub mod error;
pub mod io;
pub mod linalg;
pub mod measurement;
pub mod optimize;
pub mod random;
pub mod states;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{CMatrix, DensityOperator};

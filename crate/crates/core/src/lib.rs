//! Numerics for the Schrödinger operator `Δ - V` with a killing potential
//! `V ≈ κ|x|^{-(2+2β)}` that is too singular at the origin for perturbation
//! theory.
//!
//! The crate has three layers. `specfun` and `envelopes` evaluate closed-form
//! quantities. `mc`, `exterior` and `pde` compute heat kernels, survival
//! probabilities and Green functions numerically. `verify` compares the two.

pub mod envelopes;
pub mod error;
pub mod exterior;
pub mod mc;
pub mod pde;
pub mod potentials;
pub mod report;
pub mod specfun;
pub mod suites;
pub mod verify;

pub use envelopes::{EnvelopeConstants, EnvelopeValue, ModelParams};
pub use error::{Error, Result};

//! Compressed-sensing imaging recoverability toolkit.
//!
//! The crate assembles sensing matrices `A = Φ_Ω^T (Ψ ⊗ Ψ)` for three imaging
//! architectures (single-pixel / CI cameras, rapid MRI, coded apertures),
//! certifies how many sparse coefficients they can uniquely encode, and runs
//! basis pursuit phase-transition experiments to check those certificates
//! empirically.
//!
//! * [`masks`] builds sub-sampling index sets over an `m × n` grid.
//! * [`bases`] builds sampling dictionaries and the Daubechies-4 sparsifier.
//! * [`sensing`] vectorizes, composes Kronecker products and realifies.
//! * [`certify`] computes Spark, spherical-section and coherence bounds.
//! * [`recovery`] solves basis pursuit and sweeps phase transitions.

pub mod bases;
pub mod certify;
mod error;
pub mod linalg;
pub mod masks;
pub mod recovery;
pub mod rng;
pub mod sensing;

pub use error::{Error, Result};

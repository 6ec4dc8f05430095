//! Exact non-Markovian photon transport through driven resonator networks coupled to
//! band-limited waveguides.
//!
//! The pipeline is `model` → `kernels` → `dynamics` → `coefficients` / `transport`, with
//! `bornmarkov` providing closed-form weak-coupling results for single-mode cavities.

pub mod bornmarkov;
pub mod coefficients;
pub mod dynamics;
mod error;
pub mod kernels;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod quadrature;
pub mod special;
pub mod trace;
pub mod transport;

pub use error::{Error, Result};
pub use num_complex::Complex64;

//! Numerical laboratory for the quartic generalized KdV equation
//! `ψₜ + ∂ₓ(ψₓₓ + ψ⁴) = 0` and its soliton family.
//!
//! Everything lives on a periodic grid `[−L/2, L/2)`; profiles are evaluated from
//! closed forms at the minimal periodic image of `x − y`.

// Numeric kernels index several parallel arrays per loop, and `!(x > 0.0)` is the
// deliberate NaN-rejecting form of a positivity check.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod integrator;
pub mod io;
pub mod linop;
pub mod modulation;
pub mod noise;
pub mod norms;
pub mod scattering;
pub mod soliton;
pub mod special;
pub mod flows;
pub mod virial;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{Field, GridSpec, SpectralField};
pub use soliton::SolitonParams;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Linear expand-contract plasticity of ellipsoids `{x : ⟨x, Ax⟩ <= 1}`
//! described through the spectrum of `A`.
//!
//! The crate decides plasticity for a closed class of spectral descriptors,
//! builds explicit non-expansive, non-isometric witness operators for the
//! non-plastic cases and checks their properties numerically on finite
//! truncations.

// Negated comparisons such as `!(x > 0.0)` reject NaN together with
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod measures;
pub mod plasticity;
mod poly;
pub mod spectrum;
pub mod verify;
pub mod witness;

pub use error::{Error, Result};

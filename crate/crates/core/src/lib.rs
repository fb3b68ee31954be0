//! Reduced-dimension surrogate modeling for layered composite/metal
//! structures under four-point bending.
//!
//! The crate covers the whole pipeline: a desk-scale source model built
//! from lamina, cohesive and metal constitutive laws ([`damage_model`]),
//! input designs ([`sampling`]), feedforward surrogates ([`surrogate`]),
//! FDR-logworth screening and Sobol' indices ([`sensitivity`]), and the
//! direct and summed reduced-dimension workflows ([`rdsm`]).

// guards such as `!(x > 0.0)` reject NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod param_space;
pub mod sampling;
pub mod damage_model;
pub mod surrogate;
pub mod sensitivity;
pub mod rdsm;

pub use error::{Error, Result};

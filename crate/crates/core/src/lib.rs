//! Numerical analysis of matrix spectral densities on the unit circle:
//! Muckenhoupt-type characteristics, harmonic extensions, Carleson measures,
//! mean oscillation, spectral factorization and finite-section prediction.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod builtin;
pub mod circle;
pub mod criteria;
pub mod error;
pub mod factorization;
pub mod harmonic;
pub mod linalg;
pub mod oscillation;
pub mod prediction;
pub mod report;
pub mod weight;
pub mod weight_file;

pub use error::{Error, Result};

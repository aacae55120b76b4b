//! Bures metric tensors, volume-element priors and separability
//! probabilities for parameterized families of density matrices.

#![forbid(unsafe_code)]

pub mod error;
pub mod bures;
pub mod families;
pub mod linalg;
pub mod priors;
pub mod probability;
pub mod quadrature;
pub mod region;
pub mod separability;

#[cfg(test)]
mod proptests;

pub use error::{Error, Result};

//! Appliance identification from power-consumption signatures.
//!
//! A signature is min-max normalized and reshaped into a 2D matrix
//! ([`transform`]), summarized by a local texture histogram
//! ([`descriptors`]) and classified with an entropy-weighted,
//! subgroup-routed k-nearest-neighbors model ([`iknn`]). [`eventdetect`]
//! cuts per-appliance windows out of an aggregate meter signal, and
//! [`eval`] provides cross-validation, metrics and correlation matrices.

pub mod descriptors;
pub mod error;
pub mod eval;
pub mod eventdetect;
pub mod iknn;
pub mod signal;
pub mod store;
pub mod synth;
pub mod transform;

pub use error::{Error, Result};

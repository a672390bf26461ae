//! Sinusoidal implicit neural representations (SIREN) with uniform and noise-perturbed
//! (WINNER) initialization, training on 1D/2D signals, and spectral diagnostics.

pub mod error;
pub mod math;
pub mod network;

pub use error::{Error, Result};
pub mod signal;
pub mod spectral;
pub mod target_init;
pub mod training;

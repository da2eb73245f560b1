//! Sensitivity analysis of sub-shot-noise absorption measurements.
//!
//! The crate evaluates the absorption uncertainty of twin-beam and
//! squeezed-coherent probing schemes with optional phase-sensitive
//! amplification before lossy detection, compares them with Cramér-Rao
//! bounds, optimizes the input squeezing, and cross-checks the Gaussian
//! engine against a truncated Fock-space simulator and a Monte Carlo
//! photon-counting sampler.

pub mod bounds;
pub mod error;
pub mod gaussian;
pub mod optimize;
pub mod oracles;
pub mod schemes;
pub mod tolerances;
pub mod validation;

pub use error::{Error, Result};
pub use gaussian::{detected_moments, GaussianChannel, GaussianState, PhotonStats};
pub use tolerances::Tolerances;

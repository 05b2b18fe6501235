//! Shape-preserving multi-electron beams.
//!
//! Transverse lengths are in Bohr radii and the propagation variable is
//! `ζ = z / (2 k a₀²)`, so the beam obeys
//! `i ∂ψ/∂ζ = −∇²ψ + Uψ` with `∇²U = −γ|ψ|²`.

pub mod bessel;
pub mod error;
pub mod fft;
pub mod field;
pub mod io;
pub mod mask;
pub mod metrics;
pub mod numerics;
pub mod params;
pub mod poisson;
pub mod propagator;
pub mod radial;
pub mod runner;

pub use error::{Error, Result};

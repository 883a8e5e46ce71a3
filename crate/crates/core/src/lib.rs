//! Numerical lab for normalized single-peak solutions of the
//! Schrödinger–Poisson–Slater equation
//!
//! ```text
//! −Δu + λu + (|x|⁻¹ ∗ u²) u = V(x) u^{p−1},   ∫u² = a,   p = 10/3 ± ε.
//! ```
//!
//! The grid, quadrature, Hartree and potential code is generic over [`Real`];
//! the solver layers above it work in `f64`.

pub mod asymptotics;
pub mod error;
pub mod groundstate;
pub mod hartree;
pub mod lab;
pub mod mass;
pub mod potentials;
pub mod numerics;
pub mod pohozaev;
mod scalar;
pub mod spse;

pub use error::{Error, Result};
pub use scalar::Real;

pub type RadialGrid = numerics::RadialGrid<f64>;
pub type RadialField = numerics::RadialField<f64>;
pub type Grid3D = numerics::Grid3D<f64>;
pub type ScalarField3D = numerics::ScalarField3D<f64>;
pub type NormPack = numerics::NormPack<f64>;

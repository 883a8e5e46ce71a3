//! Grids, fields, quadrature, finite-difference stencils and the linear
//! solvers shared by the rest of the crate.

mod field;
mod grid;
pub mod banded;
pub mod interp;
pub mod io;
pub mod krylov;
pub mod multigrid;
mod norms;
mod quadrature;
pub mod stencil;
pub mod sum;

pub use field::{RadialField, ScalarField3D};
pub use grid::{Grid3D, RadialGrid};
pub use norms::{gradient_sq_integral, l2_sq, norms, radial_derivative, FieldNorms, NormPack};
pub use quadrature::{
    gauss_legendre, inner_3d, integrate_3d, integrate_3d_by, integrate_3d_values, integrate_radial,
    integrate_radial_values, radial_weights,
};
pub use stencil::{laplacian, laplacian_radial};

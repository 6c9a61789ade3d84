//! Stencil weights, point kernels, explicit Euler and boundary conditions.

pub mod bc;
mod kernels;
mod stencil;

pub use bc::{apply_face, apply_face_raw};
pub use kernels::{apply_stencil, euler_update, stencil_row, var};
pub use stencil::{exact_weights, stencil_coeffs, Ratio, StencilCoeffs, StencilError};

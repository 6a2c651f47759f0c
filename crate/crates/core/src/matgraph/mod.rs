//! Small dense linear algebra and graph Laplacians.

mod eigen;
mod laplacian;
mod matrix;

pub use eigen::{lambda_min, spectral_norm, sym_eigen, Spectrum};
pub use laplacian::{Laplacian, ER_MAX_ATTEMPTS};
pub use matrix::{Matrix, SymMatrix, SYMMETRY_TOL};

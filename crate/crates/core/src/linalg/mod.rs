//! Numerical kernels: dense LAPACK wrappers, matrix exponential, Lyapunov
//! solve, banded Cholesky, sparse assembly storage, and shift-invert
//! Lanczos.

pub mod band;
pub mod dense;
pub mod expm;
pub mod lanczos;
pub mod sparse;
pub mod sylvester;

pub use band::{BandCholesky, SymBand};
pub use dense::{
    cond_2, eigen, fro_norm, schur, schur_reorder, solve_lower_triangular, sym_eigen, trsyl,
    CholeskyFactor, Eigen, LuFactor, Schur,
};
pub use expm::expm;
pub use lanczos::{smallest_modes, LanczosResult};
pub use sparse::{SparseSym, Triplet};
pub use sylvester::{lyapunov_residual, solve_lyapunov};

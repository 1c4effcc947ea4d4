//! Derivative-carrying scalars and small dense linear algebra.

mod linalg;
mod scalar;

pub use linalg::{EigenResult, Eigenvalue, SmallMatrix, MAX_DIM};
pub use scalar::{Dual, HyperDual, Scalar};

/// Eigenvalues of `m` clustered within `tol`, with kernel dimensions.
pub fn eig_real(m: &SmallMatrix, tol: f64) -> crate::Result<EigenResult> {
    m.eig_real(tol)
}

/// Orthonormal basis of the numerical kernel of `m`.
pub fn kernel_basis(m: &SmallMatrix, tol: f64) -> Vec<Vec<f64>> {
    m.kernel_basis(tol)
}

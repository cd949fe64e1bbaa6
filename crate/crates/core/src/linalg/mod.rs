//! Dense complex linear algebra and the baseline matrix exponentials.
//!
//! The Padé, eigendecomposition and Taylor routes serve two purposes: they
//! are independent oracles for the discrete-operator propagators, and they
//! are the timing baselines those propagators are compared against.

mod eigen;
mod expm;
mod matrix;
mod solve;
mod sparse;

pub use eigen::HermitianEigen;
pub use expm::{
    expm, expm_herm, expm_pade, expm_taylor, expm_taylor_adaptive, ExpmMethod, TaylorExpm,
    PADE_THETA_13,
};
pub use matrix::ComplexMatrix;
pub use num_complex::Complex64 as C64;
pub use solve::solve;
pub use sparse::SparseMatrix;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("buffer of length {len} cannot form a {dim}x{dim} matrix")]
    BadLength { dim: usize, len: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not Hermitian (max |A - A^†| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is singular to working precision")]
    Singular,
}

/// Pauli matrices (without the spin-1/2 factor).
pub mod pauli {
    use super::{ComplexMatrix, C64};

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    pub fn y() -> ComplexMatrix {
        let i = C64::new(0.0, 1.0);
        let z = C64::new(0.0, 0.0);
        ComplexMatrix::from_rows(&[&[z, -i], &[i, z]]).unwrap()
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap()
    }
}

/// Random Hermitian matrix with entries of unit scale (GUE-like, unnormalized).
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim);
    for i in 0..dim {
        m[(i, i)] = C64::new(rng.random_range(-1.0..1.0), 0.0);
        for j in i + 1..dim {
            let v = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
    m
}

/// Smallest and largest eigenvalue magnitude bound used by fidelity bounds:
/// the spectral radius of a Hermitian matrix.
pub fn spectral_radius_hermitian(h: &ComplexMatrix) -> Result<f64, LinalgError> {
    let eig = HermitianEigen::new(h)?;
    Ok(eig
        .eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, &x| acc.max(x.abs())))
}

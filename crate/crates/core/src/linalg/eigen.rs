use nalgebra::{DMatrix, SymmetricEigen};

use super::{ComplexMatrix, LinalgError, C64};

/// Tolerance on `max |H - H†|`, relative to the largest entry.
const HERMITIAN_RTOL: f64 = 1e-12;

/// Eigendecomposition `H = Q diag(λ) Q†` of a Hermitian matrix.
///
/// Computing this once lets every `exp(-i t H)` be formed as
/// `Q diag(e^{-i t λ}) Q†` at the cost of two products.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    values: Vec<f64>,
    // column k of `vectors` is the k-th eigenvector
    vectors: ComplexMatrix,
    vectors_adj: ComplexMatrix,
}

impl HermitianEigen {
    pub fn new(h: &ComplexMatrix) -> Result<Self, LinalgError> {
        if !h.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let deviation = h.hermiticity_error();
        if deviation > HERMITIAN_RTOL * h.max_abs().max(1.0) {
            return Err(LinalgError::NotHermitian { deviation });
        }
        let n = h.dim();
        let m = DMatrix::from_fn(n, n, |i, j| h[(i, j)]);
        let eig = SymmetricEigen::new(m);
        let vectors = ComplexMatrix::from_fn(n, |i, j| eig.eigenvectors[(i, j)]);
        Ok(Self {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors_adj: vectors.adjoint(),
            vectors,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    /// `Q diag(f(λ)) Q†`
    pub fn map(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.vectors.dim();
        let phases: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        let mut scaled = self.vectors.clone();
        for i in 0..n {
            for (j, p) in phases.iter().enumerate() {
                scaled[(i, j)] *= p;
            }
        }
        &scaled * &self.vectors_adj
    }

    /// `exp(-i t H)`
    pub fn propagator(&self, t: f64) -> ComplexMatrix {
        self.map(|l| C64::from_polar(1.0, -t * l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_hermitian;
    use rand::SeedableRng;

    #[test]
    fn reconstructs_input() {
        let mut rng = rand_pcg::Pcg64::seed_from_u64(3);
        let h = random_hermitian(12, &mut rng);
        let eig = HermitianEigen::new(&h).unwrap();
        let back = eig.map(|l| C64::new(l, 0.0));
        assert!(back.frob_dist(&h).unwrap() < 1e-12);
        assert!(eig.eigenvectors().unitarity_error() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut a = ComplexMatrix::identity(3);
        a[(0, 1)] = C64::new(0.5, 0.0);
        assert!(matches!(
            HermitianEigen::new(&a),
            Err(LinalgError::NotHermitian { .. })
        ));
    }
}

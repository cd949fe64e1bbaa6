use super::{ComplexMatrix, C64};

/// Coordinate-list view of a mostly-zero operator.
///
/// Spin operators have a handful of nonzeros per row; contracting them
/// against dense matrices entry by entry is much cheaper than a dense product.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseMatrix {
    pub fn from_dense(m: &ComplexMatrix) -> Self {
        let n = m.dim();
        let mut entries = Vec::new();
        for i in 0..n {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != C64::new(0.0, 0.0) {
                    entries.push((i, j, v));
                }
            }
        }
        Self { dim: n, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    /// `Tr(self · m)`
    pub fn trace_with(&self, m: &ComplexMatrix) -> C64 {
        debug_assert_eq!(self.dim, m.dim());
        self.entries.iter().map(|&(i, j, v)| v * m[(j, i)]).sum()
    }

    /// `m · self`
    pub fn right_mul(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        let src = m.as_slice();
        let dst = out.as_mut_slice();
        for &(k, j, v) in &self.entries {
            for i in 0..n {
                dst[i * n + j] += src[i * n + k] * v;
            }
        }
        out
    }

    /// `Tr(U ρ U† M)` with `ρ = self` and sparse `M`, without dense products.
    pub fn conjugated_expectation(&self, u: &ComplexMatrix, observable: &SparseMatrix) -> C64 {
        // Y = U ρ, then Tr(Y U† M) = Σ_{(k,i)∈M} M_ki Σ_j Y_ij conj(U_kj)
        let y = self.right_mul(u);
        let n = self.dim;
        let ys = y.as_slice();
        let us = u.as_slice();
        observable
            .entries
            .iter()
            .map(|&(k, i, mv)| {
                let s: C64 = ys[i * n..(i + 1) * n]
                    .iter()
                    .zip(&us[k * n..(k + 1) * n])
                    .map(|(a, b)| a * b.conj())
                    .sum();
                mv * s
            })
            .sum()
    }
}

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use super::LinalgError;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

// below this the interleaved loop is as fast as splitting
const SPLIT_MIN_DIM: usize = 8;

thread_local! {
    static SPLIT_SCRATCH: std::cell::RefCell<Vec<f64>> = const { std::cell::RefCell::new(Vec::new()) };
}

/// Dense square complex matrix.
///
/// Entries are stored row-major in a single contiguous buffer: entry `(i, j)`
/// lives at `i * dim + j`. Every routine in this crate, including the
/// benchmarked exponentials, goes through the same layout and the same
/// [`mul_into`](ComplexMatrix::mul_into) kernel, so timings compare
/// algorithms rather than memory layouts.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from a row-major buffer of length `dim * dim`.
    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        if dim == 0 || data.len() != dim * dim {
            return Err(LinalgError::BadLength {
                dim,
                len: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[&[C64]]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        let data: Vec<C64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(LinalgError::BadLength {
                dim,
                len: data.len(),
            });
        }
        Self::from_vec(dim, data)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, LinalgError> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        let refs: Vec<&[C64]> = rows.iter().map(|r| r.as_slice()).collect();
        Self::from_rows(&refs)
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * dim + i] = d;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_of_product(&self, other: &Self) -> Result<C64, LinalgError> {
        self.check_dim(other)?;
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            let row = self.row(i);
            for (j, &a) in row.iter().enumerate() {
                acc += a * other.data[j * n + i];
            }
        }
        Ok(acc)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: C64, other: &Self) {
        assert_eq!(self.dim, other.dim, "axpy dimension mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        let dim = n * m;
        let mut out = Self::zeros(dim);
        for i in 0..n {
            for j in 0..n {
                let a = self.data[i * n + j];
                if a == ZERO {
                    continue;
                }
                for k in 0..m {
                    let dst = (i * m + k) * dim + j * m;
                    for (o, &b) in out.data[dst..dst + m].iter_mut().zip(other.row(k)) {
                        *o = a * b;
                    }
                }
            }
        }
        out
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn frob_dist(&self, other: &Self) -> Result<f64, LinalgError> {
        self.check_dim(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn one_norm(&self) -> f64 {
        let n = self.dim;
        (0..n)
            .map(|j| (0..n).map(|i| self.data[i * n + j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// Largest entrywise deviation `max |A - A†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let d = self.data[i * n + j] - self.data[j * n + i].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// `‖U†U − I‖_F`
    pub fn unitarity_error(&self) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut s = ZERO;
                for k in 0..n {
                    s += self.data[k * n + i].conj() * self.data[k * n + j];
                }
                if i == j {
                    s -= ONE;
                }
                acc += s.norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_dim(other)?;
        let mut out = Self::zeros(self.dim);
        Self::mul_into(self, other, &mut out);
        Ok(out)
    }

    /// `out = a * b`. Panics on dimension mismatch; `out` must not alias.
    pub fn mul_into(a: &Self, b: &Self, out: &mut Self) {
        let n = a.dim;
        assert!(
            b.dim == n && out.dim == n,
            "mul_into dimension mismatch: {} x {} -> {}",
            n,
            b.dim,
            out.dim
        );
        if n < SPLIT_MIN_DIM {
            out.data.fill(ZERO);
            for i in 0..n {
                let out_row = &mut out.data[i * n..(i + 1) * n];
                for (k, &aik) in a.data[i * n..(i + 1) * n].iter().enumerate() {
                    if aik == ZERO {
                        continue;
                    }
                    let b_row = &b.data[k * n..(k + 1) * n];
                    for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                        *o += aik * bkj;
                    }
                }
            }
            return;
        }
        // real and imaginary planes so the inner loop is plain f64 arithmetic
        SPLIT_SCRATCH.with(|cell| {
            let mut buf = cell.borrow_mut();
            buf.clear();
            buf.resize(4 * n * n, 0.0);
            let (b_re, rest) = buf.split_at_mut(n * n);
            let (b_im, rest) = rest.split_at_mut(n * n);
            let (o_re, o_im) = rest.split_at_mut(n * n);
            for ((r, im), v) in b_re.iter_mut().zip(b_im.iter_mut()).zip(&b.data) {
                *r = v.re;
                *im = v.im;
            }
            for i in 0..n {
                let or = &mut o_re[i * n..(i + 1) * n];
                let oi = &mut o_im[i * n..(i + 1) * n];
                for (k, &aik) in a.data[i * n..(i + 1) * n].iter().enumerate() {
                    if aik == ZERO {
                        continue;
                    }
                    let (ar, ai) = (aik.re, aik.im);
                    let br = &b_re[k * n..(k + 1) * n];
                    let bi = &b_im[k * n..(k + 1) * n];
                    for j in 0..n {
                        or[j] += ar * br[j] - ai * bi[j];
                        oi[j] += ar * bi[j] + ai * br[j];
                    }
                }
            }
            for ((o, &r), &im) in out.data.iter_mut().zip(o_re.iter()).zip(o_im.iter()) {
                *o = C64::new(r, im);
            }
        });
    }

    /// Commutator `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Result<Self, LinalgError> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        Ok(&ab - &ba)
    }

    /// `D · self · D†` for a diagonal `D` given by its entries.
    pub fn conjugate_by_diag(&self, d: &[C64]) -> Self {
        assert_eq!(d.len(), self.dim, "diagonal length mismatch");
        let n = self.dim;
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] *= d[i] * d[j].conj();
            }
        }
        out
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>, LinalgError> {
        if v.len() != self.dim {
            return Err(LinalgError::DimensionMismatch {
                left: self.dim,
                right: v.len(),
            });
        }
        Ok((0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    fn check_dim(&self, other: &Self) -> Result<(), LinalgError> {
        if self.dim != other.dim {
            return Err(LinalgError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for x in self.row(i) {
                write!(f, "{:+.6}{:+.6}i  ", x.re, x.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

/// Panics on dimension mismatch; use [`ComplexMatrix::matmul`] for a checked product.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim);
        ComplexMatrix::mul_into(self, rhs, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli;

    fn naive_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
        let n = a.dim();
        ComplexMatrix::from_fn(n, |i, j| (0..n).map(|k| a[(i, k)] * b[(k, j)]).sum())
    }

    fn lcg_matrix(dim: usize, mut state: u64) -> ComplexMatrix {
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        ComplexMatrix::from_fn(dim, |_, _| C64::new(next(), next()))
    }

    #[test]
    fn identity_is_neutral() {
        let a = lcg_matrix(2, 7);
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(i2.matmul(&a).unwrap(), a);
    }

    #[test]
    fn pauli_product() {
        let (x, y, z) = (pauli::x(), pauli::y(), pauli::z());
        let xz = x.matmul(&z).unwrap();
        let expected = y.scale(C64::new(0.0, -1.0));
        assert!(xz.frob_dist(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn matmul_matches_triple_loop() {
        // both sides of the split-plane threshold, plus an odd size
        for n in [3, 7, 8, 16, 33] {
            let a = lcg_matrix(n, 1);
            let b = lcg_matrix(n, 2);
            let fast = a.matmul(&b).unwrap();
            let slow = naive_product(&a, &b);
            let worst = fast
                .as_slice()
                .iter()
                .zip(slow.as_slice())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(worst <= 1e-13 * n as f64, "n={n}: max deviation {worst}");
        }
        // repeated calls reuse the scratch buffer across sizes
        let a = lcg_matrix(16, 3);
        let mut out = ComplexMatrix::zeros(16);
        ComplexMatrix::mul_into(&a, &ComplexMatrix::identity(16), &mut out);
        assert_eq!(out, a);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(4);
        assert!(matches!(
            a.matmul(&b),
            Err(LinalgError::DimensionMismatch { left: 2, right: 4 })
        ));
        assert!(a.frob_dist(&b).is_err());
    }

    #[test]
    fn trace_kron_adjoint_basics() {
        assert_eq!(ComplexMatrix::identity(4).trace(), C64::new(4.0, 0.0));
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(i2.kron(&i2), ComplexMatrix::identity(4));
        let a = lcg_matrix(5, 3);
        assert_eq!(a.adjoint().adjoint(), a);
        assert_eq!(a.kron(&i2).dim(), 10);
    }

    #[test]
    fn kron_is_associative() {
        let a = lcg_matrix(2, 11);
        let b = lcg_matrix(3, 12);
        let c = lcg_matrix(2, 13);
        let left = a.kron(&b).kron(&c);
        let right = a.kron(&b.kron(&c));
        assert!(left.frob_dist(&right).unwrap() < 1e-14);
    }

    #[test]
    fn trace_of_product_matches_full_product() {
        let a = lcg_matrix(6, 21);
        let b = lcg_matrix(6, 22);
        let t = a.trace_of_product(&b).unwrap();
        assert!((t - a.matmul(&b).unwrap().trace()).norm() < 1e-13);
    }

    #[test]
    fn conjugate_by_diag_matches_dense() {
        let a = lcg_matrix(4, 5);
        let d: Vec<C64> = (0..4).map(|k| C64::from_polar(1.0, 0.3 * k as f64)).collect();
        let dm = ComplexMatrix::from_diag(&d);
        let dense = &(&dm * &a) * &dm.adjoint();
        assert!(a.conjugate_by_diag(&d).frob_dist(&dense).unwrap() < 1e-14);
    }

    #[test]
    fn bad_length_rejected() {
        assert!(ComplexMatrix::from_vec(2, vec![ZERO; 3]).is_err());
        assert!(ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0]]).is_err());
    }
}

use super::{ComplexMatrix, LinalgError, C64};

/// Solves `A X = B` by LU factorization with partial pivoting.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    let n = a.dim();
    if b.dim() != n {
        return Err(LinalgError::DimensionMismatch {
            left: n,
            right: b.dim(),
        });
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| lu[(r, col)].norm().total_cmp(&lu[(s, col)].norm()))
            .unwrap();
        if lu[(pivot, col)].norm() <= f64::EPSILON * scale * 1e-3 {
            return Err(LinalgError::Singular);
        }
        if pivot != col {
            swap_rows(&mut lu, pivot, col);
            swap_rows(&mut x, pivot, col);
        }
        let inv = C64::new(1.0, 0.0) / lu[(col, col)];
        for r in col + 1..n {
            let factor = lu[(r, col)] * inv;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            lu[(r, col)] = factor;
            let (upper, lower) = lu.as_mut_slice().split_at_mut(r * n);
            let pivot_row = &upper[col * n + col + 1..col * n + n];
            for (dst, &src) in lower[col + 1..n].iter_mut().zip(pivot_row) {
                *dst -= factor * src;
            }
            let (upper, lower) = x.as_mut_slice().split_at_mut(r * n);
            let pivot_row = &upper[col * n..col * n + n];
            for (dst, &src) in lower[..n].iter_mut().zip(pivot_row) {
                *dst -= factor * src;
            }
        }
    }

    // back substitution, one block row at a time
    for row in (0..n).rev() {
        let inv = C64::new(1.0, 0.0) / lu[(row, row)];
        for k in row + 1..n {
            let f = lu[(row, k)];
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            let (upper, lower) = x.as_mut_slice().split_at_mut(k * n);
            let src = &lower[..n];
            for (dst, &s) in upper[row * n..row * n + n].iter_mut().zip(src) {
                *dst -= f * s;
            }
        }
        for v in &mut x.as_mut_slice()[row * n..row * n + n] {
            *v *= inv;
        }
    }
    Ok(x)
}

fn swap_rows(m: &mut ComplexMatrix, r: usize, s: usize) {
    let n = m.dim();
    for j in 0..n {
        m.as_mut_slice().swap(r * n + j, s * n + j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_hermitian;
    use rand::SeedableRng;

    #[test]
    fn solves_random_system() {
        let mut rng = rand_pcg::Pcg64::seed_from_u64(9);
        let a = &random_hermitian(10, &mut rng) + &ComplexMatrix::identity(10).scale_real(4.0);
        let b = random_hermitian(10, &mut rng);
        let x = solve(&a, &b).unwrap();
        assert!(a.matmul(&x).unwrap().frob_dist(&b).unwrap() < 1e-12);
    }

    #[test]
    fn needs_pivoting() {
        let a = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let x = solve(&a, &ComplexMatrix::identity(2)).unwrap();
        assert!(x.frob_dist(&a).unwrap() < 1e-15);
    }

    #[test]
    fn singular_is_reported() {
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert_eq!(
            solve(&a, &ComplexMatrix::identity(2)),
            Err(LinalgError::Singular)
        );
    }
}

use super::{solve, ComplexMatrix, HermitianEigen, LinalgError, C64};

/// Largest 1-norm for which the degree-13 diagonal Padé approximant is used
/// without scaling.
pub const PADE_THETA_13: f64 = 5.371920351148152;

const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Selects how a matrix exponential is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExpmMethod {
    Pade,
    /// Eigendecomposition of `iA`; only valid for skew-Hermitian input.
    Eigen,
    /// Scaling-and-squaring Taylor series with an adaptive term count.
    Taylor,
}

impl ExpmMethod {
    pub fn name(self) -> &'static str {
        match self {
            ExpmMethod::Pade => "pade",
            ExpmMethod::Eigen => "ed",
            ExpmMethod::Taylor => "taylor",
        }
    }
}

pub fn expm(method: ExpmMethod, a: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    match method {
        ExpmMethod::Pade => expm_pade(a),
        ExpmMethod::Eigen => expm_herm(a),
        ExpmMethod::Taylor => expm_taylor_adaptive(a).map(|t| t.value),
    }
}

/// `e^A` by scaling and squaring with the [13/13] Padé approximant.
pub fn expm_pade(a: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = a.dim();
    let norm = a.one_norm();
    let squarings = if norm > PADE_THETA_13 {
        (norm / PADE_THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = if squarings > 0 {
        a.scale_real(0.5f64.powi(squarings))
    } else {
        a.clone()
    };

    let b = &PADE_13;
    let eye = ComplexMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let mut w1 = a6.scale_real(b[13]);
    w1.axpy(C64::new(b[11], 0.0), &a4);
    w1.axpy(C64::new(b[9], 0.0), &a2);
    let mut w = &a6 * &w1;
    w.axpy(C64::new(b[7], 0.0), &a6);
    w.axpy(C64::new(b[5], 0.0), &a4);
    w.axpy(C64::new(b[3], 0.0), &a2);
    w.axpy(C64::new(b[1], 0.0), &eye);
    let u = &a * &w;

    let mut z1 = a6.scale_real(b[12]);
    z1.axpy(C64::new(b[10], 0.0), &a4);
    z1.axpy(C64::new(b[8], 0.0), &a2);
    let mut v = &a6 * &z1;
    v.axpy(C64::new(b[6], 0.0), &a6);
    v.axpy(C64::new(b[4], 0.0), &a4);
    v.axpy(C64::new(b[2], 0.0), &a2);
    v.axpy(C64::new(b[0], 0.0), &eye);

    let mut result = solve(&(&v - &u), &(&v + &u))?;
    let mut scratch = ComplexMatrix::zeros(n);
    for _ in 0..squarings {
        ComplexMatrix::mul_into(&result, &result, &mut scratch);
        std::mem::swap(&mut result, &mut scratch);
    }
    Ok(result)
}

/// `e^A` for skew-Hermitian `A = -iH` via the eigendecomposition of `H`.
pub fn expm_herm(minus_i_h: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    if !minus_i_h.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let h = minus_i_h.scale(C64::new(0.0, 1.0));
    Ok(HermitianEigen::new(&h)?.propagator(1.0))
}

/// Truncated series `Σ_{k<terms} A^k / k!`, without scaling.
pub fn expm_taylor(a: &ComplexMatrix, terms: usize) -> ComplexMatrix {
    assert!(terms >= 1, "Taylor expansion needs at least one term");
    let n = a.dim();
    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    let mut scratch = ComplexMatrix::zeros(n);
    for k in 1..terms {
        ComplexMatrix::mul_into(&term, a, &mut scratch);
        std::mem::swap(&mut term, &mut scratch);
        term = term.scale_real(1.0 / k as f64);
        sum += &term;
    }
    sum
}

/// Result of [`expm_taylor_adaptive`] with the truncation it settled on.
#[derive(Clone, Debug)]
pub struct TaylorExpm {
    pub value: ComplexMatrix,
    /// Series terms summed, counting the identity.
    pub terms: usize,
    pub squarings: u32,
}

const TAYLOR_SCALED_NORM: f64 = 0.5;
const TAYLOR_MAX_TERMS: usize = 40;

/// Taylor series with scaling and squaring.
///
/// The input is scaled by `2^-s` until its 1-norm is at most 0.5, terms are
/// added until the next one falls below unit roundoff relative to the sum,
/// and the result is squared `s` times.
pub fn expm_taylor_adaptive(a: &ComplexMatrix) -> Result<TaylorExpm, LinalgError> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = a.dim();
    let norm = a.one_norm();
    let squarings = if norm > TAYLOR_SCALED_NORM {
        (norm / TAYLOR_SCALED_NORM).log2().ceil() as u32
    } else {
        0
    };
    let a = a.scale_real(0.5f64.powi(squarings as i32));

    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    let mut scratch = ComplexMatrix::zeros(n);
    let mut terms = 1;
    for k in 1..TAYLOR_MAX_TERMS {
        ComplexMatrix::mul_into(&term, &a, &mut scratch);
        std::mem::swap(&mut term, &mut scratch);
        term = term.scale_real(1.0 / k as f64);
        sum += &term;
        terms += 1;
        if term.one_norm() <= f64::EPSILON * 0.01 * sum.one_norm() {
            break;
        }
    }
    for _ in 0..squarings {
        ComplexMatrix::mul_into(&sum, &sum, &mut scratch);
        std::mem::swap(&mut sum, &mut scratch);
    }
    Ok(TaylorExpm {
        value: sum,
        terms,
        squarings,
    })
}

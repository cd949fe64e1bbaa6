use super::RedoError;
use crate::linalg::{ComplexMatrix, LinalgError, C64};

/// Allowed deviation of a state's norm from 1.
pub const STATE_NORM_TOL: f64 = 1e-10;

/// `|Tr[A† B] / N|²`, the dimension-normalized overlap of two operators.
pub fn trace_fidelity(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64, LinalgError> {
    let overlap = a.adjoint().trace_of_product(b)?;
    let n = a.dim() as f64;
    Ok(clamp01((overlap / n).norm_sqr()))
}

/// `|Tr[U_f† U] / Tr[U_f† U_f]|²`; insensitive to a global phase.
pub fn gate_fidelity(u: &ComplexMatrix, target: &ComplexMatrix) -> Result<f64, RedoError> {
    let td = target.adjoint();
    let norm = td.trace_of_product(target)?;
    if norm.norm() == 0.0 {
        return Err(RedoError::ZeroTarget);
    }
    let overlap = td.trace_of_product(u)?;
    Ok(clamp01((overlap / norm).norm_sqr()))
}

/// `|⟨ψ_f|ψ⟩|²` for unit vectors.
pub fn state_fidelity(psi: &[C64], target: &[C64]) -> Result<f64, RedoError> {
    if psi.len() != target.len() {
        return Err(LinalgError::DimensionMismatch {
            left: psi.len(),
            right: target.len(),
        }
        .into());
    }
    for v in [psi, target] {
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(LinalgError::NonFinite.into());
        }
        if (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(RedoError::NotNormalized((norm - 1.0).abs()));
        }
    }
    let overlap: C64 = target.iter().zip(psi).map(|(t, p)| t.conj() * p).sum();
    Ok(clamp01(overlap.norm_sqr()))
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

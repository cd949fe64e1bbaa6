//! Coarse-graining, the discrete operator table and propagator assembly.

mod fidelity;
mod grain;
mod io;
mod table;

pub use fidelity::{gate_fidelity, state_fidelity, trace_fidelity, STATE_NORM_TOL};
pub use grain::{cost_for_ratio, cost_model, CoarseGrainSpec, CostModel, DigitVector, Sign};
pub use io::{TABLE_FORMAT_VERSION, TABLE_MAGIC};
pub use table::{DiscreteOperatorTable, MemoPolicy, TableStats};

use crate::linalg::{ComplexMatrix, ExpmMethod, LinalgError};

#[derive(Debug, thiserror::Error)]
pub enum RedoError {
    #[error("invalid coarse-grain spec: {0}")]
    InvalidSpec(String),
    #[error("coefficient is not finite")]
    NonFiniteCoefficient,
    #[error("negative coefficient {0} for an unsigned table")]
    NegativeCoefficient(f64),
    #[error("coefficient {value} outside covered range ±{bound}")]
    OutOfRange { value: f64, bound: f64 },
    #[error("digit vector does not match table: {0}")]
    MalformedDigits(String),
    #[error("state not normalized: |norm - 1| = {0:e}")]
    NotNormalized(f64),
    #[error("zero target operator")]
    ZeroTarget,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("table file: {0}")]
    Format(String),
    #[error("table file checksum mismatch")]
    Checksum,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Builds a table for `spec` and `generator`; shorthand for
/// [`DiscreteOperatorTable::build`].
pub fn build_table(
    spec: CoarseGrainSpec,
    generator: &ComplexMatrix,
    method: ExpmMethod,
) -> Result<DiscreteOperatorTable, RedoError> {
    DiscreteOperatorTable::build(spec, generator.clone(), method)
}

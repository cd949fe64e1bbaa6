//! Rapid exponentiation of a scaled Hermitian generator from a table of
//! precomputed discrete operators, with the quantum-control and driven-chain
//! applications built on top of it.
//!
//! The central object is [`DiscreteOperatorTable`]: for a generator `S`, a
//! segment length `Δt` and a base-`b` digit range `[l, m]`, it stores
//! `exp(-i c b^j Δt S)` for every nonzero digit `c` and level `j`. Any
//! coefficient on the `b^l` grid is then a product of at most `m - l + 1`
//! table entries, so repeated exponentials become a handful of matrix
//! products.

pub mod bessel;
pub mod freeze;
pub mod grape;
pub mod linalg;
pub mod redo;
pub mod rng;
pub mod spin;

pub use linalg::{ComplexMatrix, ExpmMethod, C64};
pub use redo::{CoarseGrainSpec, DigitVector, DiscreteOperatorTable, RedoError};

/// How segment propagators are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Backend {
    /// Products of precomputed discrete operators.
    Redo,
    /// Direct Padé exponential of the full segment Hamiltonian.
    Pade,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Redo => "redo",
            Backend::Pade => "pade",
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "redo" => Ok(Backend::Redo),
            "pade" => Ok(Backend::Pade),
            other => Err(format!("unknown backend '{other}' (expected redo or pade)")),
        }
    }
}

//! Driven Ising chain with a noisy transverse drive and the dynamical order
//! parameter `Q(ω, λ)`.
//!
//! `H(t) = H₀ − h₀ c(t) Σ I_ix` with `H₀ = −J Σ 2 I_iz I_{i+1,z}` and
//! `c(t) = (1−λ) cos ωt + λη`.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;

use crate::bessel::bessel_j0;
use crate::linalg::{expm_pade, ComplexMatrix, ExpmMethod, HermitianEigen, LinalgError, SparseMatrix, C64};
use crate::redo::{CoarseGrainSpec, DiscreteOperatorTable, MemoPolicy, RedoError};
use crate::rng;
use crate::spin::{hermitize, spin_op, Axis, FrameTime, SpinError};
use crate::Backend;

#[derive(Debug, thiserror::Error)]
pub enum FreezeError {
    #[error("invalid freezing config: {0}")]
    InvalidConfig(String),
    #[error("drive parameter out of range: {0}")]
    DriveOutOfRange(String),
    #[error("non-finite response at ω = {omega}, λ = {lambda}")]
    NonFinite { omega: f64, lambda: f64 },
    #[error(transparent)]
    Spin(#[from] SpinError),
    #[error(transparent)]
    Redo(#[from] RedoError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FreezeConfig {
    pub n_spins: usize,
    /// Ising coupling, rad/s.
    pub j: f64,
    /// Drive amplitude, rad/s.
    pub h0: f64,
    pub omegas: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Total simulated time, s.
    pub total_time: f64,
    pub n_time_points: usize,
    /// Coarse-graining of the dimensionless drive coefficient.
    pub base: u32,
    pub low: i32,
    pub high: i32,
    pub seed: u64,
    pub periodic: bool,
    pub frame_time: FrameTime,
    pub table_method: ExpmMethod,
}

impl FreezeConfig {
    /// Three-spin chain with `h₀ = 5π`, `J = h₀/20` over `[0, 20π]`.
    pub fn standard(omegas: Vec<f64>, lambdas: Vec<f64>, n_time_points: usize) -> Self {
        let h0 = 5.0 * std::f64::consts::PI;
        Self {
            n_spins: 3,
            j: h0 / 20.0,
            h0,
            omegas,
            lambdas,
            total_time: 20.0 * std::f64::consts::PI,
            n_time_points,
            base: 100,
            low: -2,
            high: -1,
            seed: 0,
            periodic: false,
            frame_time: FrameTime::Midpoint,
            table_method: ExpmMethod::Eigen,
        }
    }

    pub fn dt(&self) -> f64 {
        self.total_time / self.n_time_points as f64
    }

    pub fn validate(&self) -> Result<(), FreezeError> {
        let bad = |m: String| Err(FreezeError::InvalidConfig(m));
        if self.n_spins < 2 || self.n_spins > crate::spin::MAX_SPINS {
            return bad(format!("{} spins", self.n_spins));
        }
        if !self.j.is_finite() || !(self.h0.is_finite() && self.h0 > 0.0) {
            return bad(format!("J = {}, h0 = {}", self.j, self.h0));
        }
        if let Some(w) = self.omegas.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return bad(format!("drive frequency {w} is not positive"));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return bad(format!("noise parameter {l} outside [0, 1]"));
        }
        if self.omegas.is_empty() || self.lambdas.is_empty() {
            return bad("empty grid".into());
        }
        if self.n_time_points < 2 {
            return bad(format!("{} time points", self.n_time_points));
        }
        if !(self.total_time.is_finite() && self.total_time > 0.0) {
            return bad(format!("total time {}", self.total_time));
        }
        self.coarse_grain_spec()?;
        Ok(())
    }

    pub fn coarse_grain_spec(&self) -> Result<CoarseGrainSpec, FreezeError> {
        Ok(CoarseGrainSpec::new(
            self.base,
            self.low,
            self.high,
            1.0,
            self.dt(),
            true,
        )?)
    }
}

/// `−J Σ 2 I_iz I_{i+1,z}`, open chain unless `periodic`.
pub fn ising_h0(n_spins: usize, j: f64, periodic: bool) -> Result<ComplexMatrix, FreezeError> {
    if n_spins < 2 {
        return Err(FreezeError::InvalidConfig(format!(
            "Ising chain needs at least 2 spins, got {n_spins}"
        )));
    }
    let z: Vec<ComplexMatrix> = (0..n_spins)
        .map(|i| spin_op(n_spins, i, Axis::Z))
        .collect::<Result<_, _>>()?;
    let mut bonds: Vec<(usize, usize)> = (0..n_spins - 1).map(|i| (i, i + 1)).collect();
    if periodic && n_spins > 2 {
        bonds.push((n_spins - 1, 0));
    }
    let mut h = ComplexMatrix::zeros(1 << n_spins);
    for (a, b) in bonds {
        h.axpy(C64::new(-2.0 * j, 0.0), &(&z[a] * &z[b]));
    }
    Ok(h)
}

/// `(1−λ) cos ωt + λη`.
pub fn drive_coefficient(t: f64, omega: f64, lambda: f64, eta: f64) -> Result<f64, FreezeError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(FreezeError::DriveOutOfRange(format!("λ = {lambda}")));
    }
    if !(-1.0..=1.0).contains(&eta) {
        return Err(FreezeError::DriveOutOfRange(format!("η = {eta}")));
    }
    Ok((1.0 - lambda) * (omega * t).cos() + lambda * eta)
}

/// Infinite-chain reference `1 / (1 + J₀(2h₀/ω))`.
pub fn q_theory(omega: f64, h0: f64) -> f64 {
    1.0 / (1.0 + bessel_j0(2.0 * h0 / omega))
}

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Indices of strict interior local maxima.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] >= values[i + 1])
        .collect()
}

/// Response trajectory of one cell.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// `q(t_k)` at `t_k = kΔt`, `k = 0..=n_time_points`.
    pub q: Vec<f64>,
    /// Final accumulated propagator.
    pub propagator: ComplexMatrix,
}

impl Trajectory {
    /// Time average over `t_1 … t_N`.
    pub fn average(&self) -> f64 {
        let tail = &self.q[1..];
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

/// Per-system operators plus the shared table for the REDO backend.
pub struct FreezeSimulator {
    cfg: FreezeConfig,
    backend: Backend,
    h0: ComplexMatrix,
    sx: ComplexMatrix,
    m: SparseMatrix,
    norm: f64,
    table: Option<Arc<DiscreteOperatorTable>>,
    table_build_seconds: f64,
}

impl FreezeSimulator {
    pub fn new(cfg: FreezeConfig, backend: Backend) -> Result<Self, FreezeError> {
        cfg.validate()?;
        let n = cfg.n_spins;
        let h0 = ising_h0(n, cfg.j, cfg.periodic)?;
        let mut sx = ComplexMatrix::zeros(1 << n);
        for i in 0..n {
            sx = &sx + &spin_op(n, i, Axis::X)?;
        }
        let m = SparseMatrix::from_dense(&sx);
        // Tr[(Σ I_ix)²] = n 2^n / 4
        let norm = (&sx * &sx).trace().re;
        let start = Instant::now();
        let table = match backend {
            Backend::Pade => None,
            Backend::Redo => {
                let dt = cfg.dt();
                let eig = HermitianEigen::new(&h0)?;
                let vt = eig.propagator(cfg.frame_time.tau(dt));
                let gen = hermitize(&(&vt.adjoint() * &(&sx * &vt)).scale_real(-cfg.h0));
                let table = DiscreteOperatorTable::build(cfg.coarse_grain_spec()?, gen, cfg.table_method)?
                    .with_memo(MemoPolicy::Unbounded)
                    .with_frame(eig.propagator(dt))?;
                Some(Arc::new(table))
            }
        };
        let table_build_seconds = start.elapsed().as_secs_f64();
        Ok(Self {
            cfg,
            backend,
            h0,
            sx,
            m,
            norm,
            table,
            table_build_seconds,
        })
    }

    pub fn config(&self) -> &FreezeConfig {
        &self.cfg
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn table(&self) -> Option<&DiscreteOperatorTable> {
        self.table.as_deref()
    }

    pub fn table_build_seconds(&self) -> f64 {
        self.table_build_seconds
    }

    pub fn hamiltonian(&self, coefficient: f64) -> ComplexMatrix {
        let mut h = self.h0.clone();
        h.axpy(C64::new(-self.cfg.h0 * coefficient, 0.0), &self.sx);
        h
    }

    /// Segment propagator for drive coefficient `c`.
    pub fn segment(&self, coefficient: f64) -> Result<ComplexMatrix, FreezeError> {
        match &self.table {
            Some(t) => Ok((*t.propagator_for(coefficient)?).clone()),
            None => self.pade_segment(coefficient),
        }
    }

    fn pade_segment(&self, coefficient: f64) -> Result<ComplexMatrix, FreezeError> {
        let a = self.hamiltonian(coefficient).scale(C64::new(0.0, -self.cfg.dt()));
        Ok(expm_pade(&a)?)
    }

    fn response(&self, u: &ComplexMatrix) -> f64 {
        self.m.conjugated_expectation(u, &self.m).re / self.norm
    }

    /// Full `q(t)` trajectory for one `(ω, λ)` cell with noise seed `seed`.
    pub fn trajectory(&self, omega: f64, lambda: f64, seed: u64) -> Result<Trajectory, FreezeError> {
        let n = self.cfg.n_time_points;
        let dt = self.cfg.dt();
        let mut rng = rng::seeded(seed);
        let dim = self.sx.dim();
        let mut u = ComplexMatrix::identity(dim);
        let mut next = ComplexMatrix::zeros(dim);
        let mut q = Vec::with_capacity(n + 1);
        q.push(self.response(&u));
        for k in 0..n {
            // η is drawn even when λ = 0 so noise streams stay aligned across λ
            let eta: f64 = rng.random_range(-1.0..=1.0);
            let c = drive_coefficient((k as f64 + 0.5) * dt, omega, lambda, eta)?;
            match &self.table {
                Some(t) => ComplexMatrix::mul_into(&*t.propagator_for(c)?, &u, &mut next),
                None => ComplexMatrix::mul_into(&self.pade_segment(c)?, &u, &mut next),
            }
            std::mem::swap(&mut u, &mut next);
            q.push(self.response(&u));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(FreezeError::NonFinite { omega, lambda });
        }
        Ok(Trajectory { q, propagator: u })
    }

    /// Time-averaged response `Q(ω, λ)`.
    pub fn simulate_q(&self, omega: f64, lambda: f64, seed: u64) -> Result<f64, FreezeError> {
        Ok(self.trajectory(omega, lambda, seed)?.average())
    }

    /// Noise seed of grid cell `(i, j)`.
    pub fn cell_seed(&self, i: usize, j: usize) -> u64 {
        rng::sub_seed(self.cfg.seed, i as u64, j as u64)
    }

    /// `Q` over the whole `(ω, λ)` grid, cells in parallel.
    pub fn sweep(&self) -> Result<QSurface, FreezeError> {
        let (nw, nl) = (self.cfg.omegas.len(), self.cfg.lambdas.len());
        let start = Instant::now();
        let cells: Vec<(f64, f64)> = (0..nw * nl)
            .into_par_iter()
            .map(|idx| -> Result<(f64, f64), FreezeError> {
                let (i, j) = (idx / nl, idx % nl);
                let t = Instant::now();
                let q = self.simulate_q(self.cfg.omegas[i], self.cfg.lambdas[j], self.cell_seed(i, j))?;
                Ok((q, t.elapsed().as_secs_f64()))
            })
            .collect::<Result<_, FreezeError>>()?;
        let total_seconds = start.elapsed().as_secs_f64();
        let (q, cell_seconds) = cells.into_iter().unzip();
        Ok(QSurface {
            backend: self.backend,
            omegas: self.cfg.omegas.clone(),
            lambdas: self.cfg.lambdas.clone(),
            q,
            cell_seconds,
            total_seconds,
            table_build_seconds: self.table_build_seconds,
            saturations: self.table.as_ref().map_or(0, |t| t.stats().saturations),
        })
    }
}

/// `Q(ω, λ)` on a grid, row-major in `ω`.
#[derive(Clone, Debug)]
pub struct QSurface {
    pub backend: Backend,
    pub omegas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub q: Vec<f64>,
    pub cell_seconds: Vec<f64>,
    /// Wall time of the sweep, table build excluded.
    pub total_seconds: f64,
    pub table_build_seconds: f64,
    pub saturations: u64,
}

impl QSurface {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.lambdas.len() + j]
    }

    /// `Q(ω)` at fixed λ index.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.omegas.len()).map(|i| self.get(i, j)).collect()
    }

    pub fn cell_seconds_total(&self) -> f64 {
        self.cell_seconds.iter().sum()
    }

    pub fn max_abs_difference(&self, other: &QSurface) -> Option<f64> {
        if self.omegas != other.omegas || self.lambdas != other.lambdas {
            return None;
        }
        Some(
            self.q
                .iter()
                .zip(&other.q)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }
}

/// Convenience wrapper: build a simulator and sweep its grid.
pub fn sweep(cfg: &FreezeConfig, backend: Backend) -> Result<QSurface, FreezeError> {
    FreezeSimulator::new(cfg.clone(), backend)?.sweep()
}

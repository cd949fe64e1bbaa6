//! Spin-1/2 operators, NMR Hamiltonians and Dirac-frame segment propagators.
//!
//! Basis ordering: spin 0 is the most significant Kronecker factor, and
//! basis state `|0⟩` of each spin is the `+1/2` eigenstate of `I_z`.

use std::f64::consts::PI;

use crate::linalg::{expm_pade, ComplexMatrix, ExpmMethod, HermitianEigen, LinalgError, C64};
use crate::redo::{CoarseGrainSpec, DiscreteOperatorTable, MemoPolicy, RedoError};

// largest system the dense code paths accept
pub const MAX_SPINS: usize = 12;

#[derive(Debug, thiserror::Error)]
pub enum SpinError {
    #[error("spin index {index} out of range for {n_spins} spins")]
    IndexOutOfRange { index: usize, n_spins: usize },
    #[error("unknown channel {0}")]
    UnknownChannel(usize),
    #[error("invalid spin system: {0}")]
    InvalidSystem(String),
    #[error("invalid controls: {0}")]
    InvalidControls(String),
    #[error(transparent)]
    Redo(#[from] RedoError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// `I_{index,axis}` on `n_spins` spins (zero-based index).
pub fn spin_op(n_spins: usize, index: usize, axis: Axis) -> Result<ComplexMatrix, SpinError> {
    if n_spins == 0 || n_spins > MAX_SPINS {
        return Err(SpinError::InvalidSystem(format!(
            "{n_spins} spins (allowed 1..={MAX_SPINS})"
        )));
    }
    if index >= n_spins {
        return Err(SpinError::IndexOutOfRange { index, n_spins });
    }
    let dim = 1usize << n_spins;
    let bit = 1usize << (n_spins - 1 - index);
    let half = 0.5;
    let mut m = ComplexMatrix::zeros(dim);
    for s in 0..dim {
        let up = s & bit == 0;
        match axis {
            Axis::Z => m[(s, s)] = C64::new(if up { half } else { -half }, 0.0),
            Axis::X => m[(s ^ bit, s)] = C64::new(half, 0.0),
            // σy|0⟩ = i|1⟩, σy|1⟩ = −i|0⟩
            Axis::Y => m[(s ^ bit, s)] = C64::new(0.0, if up { half } else { -half }),
        }
    }
    Ok(m)
}

/// Diagonal of `I_{index,z}`.
fn spin_z_diag(n_spins: usize, index: usize) -> Vec<f64> {
    let bit = 1usize << (n_spins - 1 - index);
    (0..1usize << n_spins)
        .map(|s| if s & bit == 0 { 0.5 } else { -0.5 })
        .collect()
}

/// Offsets in rad/s, couplings in Hz, and a channel assignment per spin.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinSystem {
    offsets: Vec<f64>,
    scalar: Vec<(usize, usize, f64)>,
    dipolar: Vec<(usize, usize, f64)>,
    species: Vec<usize>,
    n_channels: usize,
}

impl SpinSystem {
    /// `scalar` and `dipolar` list upper-triangle pairs `(i, j, hz)` with `i < j`.
    pub fn new(
        offsets: Vec<f64>,
        scalar: Vec<(usize, usize, f64)>,
        dipolar: Vec<(usize, usize, f64)>,
        species: Vec<usize>,
    ) -> Result<Self, SpinError> {
        let n = offsets.len();
        let bad = |msg: String| Err(SpinError::InvalidSystem(msg));
        if n == 0 || n > MAX_SPINS {
            return bad(format!("{n} spins (allowed 1..={MAX_SPINS})"));
        }
        if offsets.iter().any(|w| !w.is_finite()) {
            return bad("non-finite offset".into());
        }
        if species.len() != n {
            return bad(format!("{} species entries for {n} spins", species.len()));
        }
        let n_channels = species.iter().max().map_or(0, |&k| k + 1);
        for k in 0..n_channels {
            if !species.contains(&k) {
                return bad(format!("channel {k} has no spins"));
            }
        }
        for (name, list) in [("J", &scalar), ("D", &dipolar)] {
            let mut seen = std::collections::HashSet::new();
            for &(i, j, v) in list {
                if i >= j || j >= n {
                    return bad(format!("{name} coupling ({i}, {j}) must satisfy i < j < {n}"));
                }
                if !v.is_finite() {
                    return bad(format!("non-finite {name} coupling ({i}, {j})"));
                }
                if !seen.insert((i, j)) {
                    return bad(format!("duplicate {name} coupling ({i}, {j})"));
                }
            }
        }
        Ok(Self {
            offsets,
            scalar,
            dipolar,
            species,
            n_channels,
        })
    }

    /// All spins on one channel, no couplings.
    pub fn homonuclear(offsets: Vec<f64>) -> Result<Self, SpinError> {
        let n = offsets.len();
        Self::new(offsets, vec![], vec![], vec![0; n])
    }

    pub fn n_spins(&self) -> usize {
        self.offsets.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins()
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn scalar_couplings(&self) -> &[(usize, usize, f64)] {
        &self.scalar
    }

    pub fn dipolar_couplings(&self) -> &[(usize, usize, f64)] {
        &self.dipolar
    }

    pub fn species(&self) -> &[usize] {
        &self.species
    }

    pub fn spins_in_channel(&self, k: usize) -> Result<Vec<usize>, SpinError> {
        if k >= self.n_channels {
            return Err(SpinError::UnknownChannel(k));
        }
        Ok((0..self.n_spins())
            .filter(|&i| self.species[i] == k)
            .collect())
    }

    /// `S_{k,axis} = Σ_{i ∈ k} I_{i,axis}`.
    pub fn collective_op(&self, k: usize, axis: Axis) -> Result<ComplexMatrix, SpinError> {
        let mut total = ComplexMatrix::zeros(self.dim());
        for i in self.spins_in_channel(k)? {
            total = &total + &spin_op(self.n_spins(), i, axis)?;
        }
        Ok(total)
    }

    /// Diagonal of `S_{k,z}`.
    pub fn collective_z_diag(&self, k: usize) -> Result<Vec<f64>, SpinError> {
        let mut d = vec![0.0; self.dim()];
        for i in self.spins_in_channel(k)? {
            for (acc, v) in d.iter_mut().zip(spin_z_diag(self.n_spins(), i)) {
                *acc += v;
            }
        }
        Ok(d)
    }

    /// `H₀ = −Σ ω_i I_iz + 2π Σ J_ij I_i·I_j + 2π Σ D_ij (3 I_iz I_jz − I_i·I_j)`.
    pub fn internal_hamiltonian(&self) -> ComplexMatrix {
        let n = self.n_spins();
        let op = |i, a| spin_op(n, i, a).expect("validated index");
        let mut h = ComplexMatrix::zeros(self.dim());
        for (i, &w) in self.offsets.iter().enumerate() {
            h.axpy(C64::new(-w, 0.0), &op(i, Axis::Z));
        }
        let dot = |i, j| {
            let mut s = ComplexMatrix::zeros(self.dim());
            for a in [Axis::X, Axis::Y, Axis::Z] {
                s = &s + &(&op(i, a) * &op(j, a));
            }
            s
        };
        for &(i, j, hz) in &self.scalar {
            h.axpy(C64::new(2.0 * PI * hz, 0.0), &dot(i, j));
        }
        for &(i, j, hz) in &self.dipolar {
            let zz = &op(i, Axis::Z) * &op(j, Axis::Z);
            let term = &zz.scale_real(3.0) - &dot(i, j);
            h.axpy(C64::new(2.0 * PI * hz, 0.0), &term);
        }
        h
    }

    /// `V(t) = exp(−i H₀ t)`.
    pub fn frame_operator(&self, t: f64) -> Result<ComplexMatrix, SpinError> {
        Ok(HermitianEigen::new(&self.internal_hamiltonian())?.propagator(t))
    }

    /// `S̃_xk = V†(τ) S_xk V(τ)`.
    pub fn dirac_x_operator(&self, k: usize, tau: f64) -> Result<ComplexMatrix, SpinError> {
        let v = self.frame_operator(tau)?;
        let sx = self.collective_op(k, Axis::X)?;
        Ok(hermitize(&(&v.adjoint() * &(&sx * &v))))
    }

    /// Diagonal of `Z = exp(−i Σ_k φ_k S_kz)`.
    pub fn phase_rotation(&self, phases: &[f64]) -> Result<Vec<C64>, SpinError> {
        if phases.len() != self.n_channels {
            return Err(SpinError::InvalidControls(format!(
                "{} phases for {} channels",
                phases.len(),
                self.n_channels
            )));
        }
        let mut angle = vec![0.0; self.dim()];
        for (k, &phi) in phases.iter().enumerate() {
            for (a, z) in angle.iter_mut().zip(self.collective_z_diag(k)?) {
                *a += phi * z;
            }
        }
        Ok(angle.into_iter().map(|a| C64::from_polar(1.0, -a)).collect())
    }

    /// `H₀ + Σ_k Ω_k (cos φ_k S_xk + sin φ_k S_yk)`.
    pub fn segment_hamiltonian(
        &self,
        amplitudes: &[f64],
        phases: &[f64],
    ) -> Result<ComplexMatrix, SpinError> {
        ControlOperators::new(self).hamiltonian(amplitudes, phases)
    }

    pub(crate) fn check_controls(&self, amplitudes: &[f64], phases: &[f64]) -> Result<(), SpinError> {
        if amplitudes.len() != self.n_channels || phases.len() != self.n_channels {
            return Err(SpinError::InvalidControls(format!(
                "expected {} amplitudes and phases, got {} and {}",
                self.n_channels,
                amplitudes.len(),
                phases.len()
            )));
        }
        if amplitudes.iter().chain(phases).any(|v| !v.is_finite()) {
            return Err(SpinError::InvalidControls("non-finite control".into()));
        }
        Ok(())
    }
}

/// `H₀` and the per-channel collective operators, built once.
#[derive(Clone, Debug)]
pub struct ControlOperators {
    system: SpinSystem,
    h0: ComplexMatrix,
    sx: Vec<ComplexMatrix>,
    sy: Vec<ComplexMatrix>,
    sz: Vec<Vec<f64>>,
}

impl ControlOperators {
    pub fn new(system: &SpinSystem) -> Self {
        let channels = 0..system.n_channels();
        let op = |k, a| system.collective_op(k, a).expect("valid channel");
        Self {
            h0: system.internal_hamiltonian(),
            sx: channels.clone().map(|k| op(k, Axis::X)).collect(),
            sy: channels.clone().map(|k| op(k, Axis::Y)).collect(),
            sz: channels
                .map(|k| system.collective_z_diag(k).expect("valid channel"))
                .collect(),
            system: system.clone(),
        }
    }

    pub fn system(&self) -> &SpinSystem {
        &self.system
    }

    pub fn h0(&self) -> &ComplexMatrix {
        &self.h0
    }

    pub fn sx(&self, k: usize) -> &ComplexMatrix {
        &self.sx[k]
    }

    pub fn sy(&self, k: usize) -> &ComplexMatrix {
        &self.sy[k]
    }

    /// Diagonal of `S_kz`.
    pub fn sz_diag(&self, k: usize) -> &[f64] {
        &self.sz[k]
    }

    /// `H₀ + Σ_k Ω_k (cos φ_k S_xk + sin φ_k S_yk)`.
    pub fn hamiltonian(&self, amplitudes: &[f64], phases: &[f64]) -> Result<ComplexMatrix, SpinError> {
        self.system.check_controls(amplitudes, phases)?;
        let mut h = self.h0.clone();
        for k in 0..self.sx.len() {
            let (s, c) = phases[k].sin_cos();
            h.axpy(C64::new(amplitudes[k] * c, 0.0), &self.sx[k]);
            h.axpy(C64::new(amplitudes[k] * s, 0.0), &self.sy[k]);
        }
        Ok(h)
    }

    /// Diagonal of `Z = exp(−i Σ_k φ_k S_kz)`.
    pub fn phase_rotation(&self, phases: &[f64]) -> Vec<C64> {
        let dim = self.h0.dim();
        (0..dim)
            .map(|s| {
                let a: f64 = phases.iter().zip(&self.sz).map(|(p, z)| p * z[s]).sum();
                C64::from_polar(1.0, -a)
            })
            .collect()
    }

    /// `exp(−iΔt(H₀ + 𝓗))` by Padé.
    pub fn full_propagator(
        &self,
        amplitudes: &[f64],
        phases: &[f64],
        dt: f64,
    ) -> Result<ComplexMatrix, SpinError> {
        let h = self.hamiltonian(amplitudes, phases)?;
        Ok(expm_pade(&h.scale(C64::new(0.0, -dt)))?)
    }
}

/// `(A + A†)/2`, removing rounding asymmetry from similarity transforms.
pub(crate) fn hermitize(a: &ComplexMatrix) -> ComplexMatrix {
    (a + &a.adjoint()).scale_real(0.5)
}

/// Piecewise-constant amplitudes and phases, stored segment-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSequence {
    n_segments: usize,
    n_channels: usize,
    dt: f64,
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

impl ControlSequence {
    pub fn zeros(n_segments: usize, n_channels: usize, dt: f64) -> Result<Self, SpinError> {
        let len = n_segments * n_channels;
        Self::new(n_segments, n_channels, dt, vec![0.0; len], vec![0.0; len])
    }

    pub fn new(
        n_segments: usize,
        n_channels: usize,
        dt: f64,
        amplitudes: Vec<f64>,
        phases: Vec<f64>,
    ) -> Result<Self, SpinError> {
        let bad = |m: String| Err(SpinError::InvalidControls(m));
        if n_segments == 0 || n_channels == 0 {
            return bad("need at least one segment and one channel".into());
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return bad(format!("segment length {dt}"));
        }
        let len = n_segments * n_channels;
        if amplitudes.len() != len || phases.len() != len {
            return bad(format!(
                "{} amplitudes and {} phases for {len} entries",
                amplitudes.len(),
                phases.len()
            ));
        }
        if amplitudes.iter().chain(&phases).any(|v| !v.is_finite()) {
            return bad("non-finite control".into());
        }
        if amplitudes.iter().any(|&a| a < 0.0) {
            return bad("negative amplitude".into());
        }
        Ok(Self {
            n_segments,
            n_channels,
            dt,
            amplitudes,
            phases,
        })
    }

    pub fn n_segments(&self) -> usize {
        self.n_segments
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn segment(&self, n: usize) -> (&[f64], &[f64]) {
        let r = n * self.n_channels..(n + 1) * self.n_channels;
        (&self.amplitudes[r.clone()], &self.phases[r])
    }

    pub fn amplitude(&self, n: usize, k: usize) -> f64 {
        self.amplitudes[n * self.n_channels + k]
    }

    pub fn phase(&self, n: usize, k: usize) -> f64 {
        self.phases[n * self.n_channels + k]
    }

    pub fn max_amplitude(&self) -> f64 {
        self.amplitudes.iter().copied().fold(0.0, f64::max)
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [f64] {
        &mut self.amplitudes
    }

    pub(crate) fn phases_mut(&mut self) -> &mut [f64] {
        &mut self.phases
    }
}

/// Time at which the Dirac-frame x operator is evaluated.
///
/// `End` uses `V(Δt)`, giving `U_n = exp(−iΔt 𝓗_n) V(Δt)` (first order in Δt);
/// `Midpoint` uses `V(Δt/2)`, giving the symmetric split
/// `V(Δt/2) exp(−iΔt 𝓗_n) V(Δt/2)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FrameTime {
    #[default]
    End,
    Midpoint,
}

impl FrameTime {
    pub fn tau(self, dt: f64) -> f64 {
        match self {
            FrameTime::End => dt,
            FrameTime::Midpoint => 0.5 * dt,
        }
    }
}

/// Segment propagators `U_n = V(Δt) Z_n (∏_k X̃_kn) Z_n†` from one table per
/// channel, plus the full-Hamiltonian Padé reference.
///
/// When every `S_kz` commutes with `H₀`, `V(Δt)` is folded into the first
/// channel's table so a single-channel segment costs at most `m − l` products
/// and two diagonal scalings.
pub struct SegmentEngine {
    ops: ControlOperators,
    dt: f64,
    frame_time: FrameTime,
    v: ComplexMatrix,
    tables: Vec<DiscreteOperatorTable>,
    folded: bool,
}

impl SegmentEngine {
    pub fn new(
        system: SpinSystem,
        dt: f64,
        specs: &[CoarseGrainSpec],
        frame_time: FrameTime,
        method: ExpmMethod,
    ) -> Result<Self, SpinError> {
        let channels = system.n_channels();
        if specs.len() != channels {
            return Err(SpinError::InvalidSystem(format!(
                "{} coarse-grain specs for {channels} channels",
                specs.len()
            )));
        }
        if let Some(s) = specs.iter().find(|s| (s.dt() - dt).abs() > 1e-12 * dt) {
            return Err(SpinError::InvalidSystem(format!(
                "spec segment length {} differs from {dt}",
                s.dt()
            )));
        }
        let ops = ControlOperators::new(&system);
        let h0 = ops.h0();
        let eig = HermitianEigen::new(h0)?;
        let v = eig.propagator(dt);
        let vt = eig.propagator(frame_time.tau(dt));
        let folded = (0..channels).all(|k| {
            let sz: Vec<C64> = ops.sz_diag(k).iter().map(|&z| C64::new(z, 0.0)).collect();
            let c = ComplexMatrix::from_diag(&sz)
                .commutator(h0)
                .expect("same dimension");
            c.frob_norm() <= 1e-12 * h0.frob_norm().max(1.0)
        });
        let mut tables = Vec::with_capacity(channels);
        for (k, spec) in specs.iter().enumerate() {
            let gen = hermitize(&(&vt.adjoint() * &(ops.sx(k) * &vt)));
            let mut table = DiscreteOperatorTable::build(*spec, gen, method)?;
            if k == 0 && folded {
                table = table.with_frame(v.clone())?;
            }
            tables.push(table);
        }
        Ok(Self {
            ops,
            dt,
            frame_time,
            v,
            tables,
            folded,
        })
    }

    pub fn with_memo(mut self, policy: MemoPolicy) -> Self {
        self.tables = self
            .tables
            .into_iter()
            .map(|t| t.with_memo(policy))
            .collect();
        self
    }

    pub fn system(&self) -> &SpinSystem {
        self.ops.system()
    }

    pub fn operators(&self) -> &ControlOperators {
        &self.ops
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn frame_time(&self) -> FrameTime {
        self.frame_time
    }

    pub fn frame(&self) -> &ComplexMatrix {
        &self.v
    }

    pub fn tables(&self) -> &[DiscreteOperatorTable] {
        &self.tables
    }

    /// Whether `V(Δt)` is folded into the first table.
    pub fn is_folded(&self) -> bool {
        self.folded
    }

    /// Segment propagator from the discrete operator tables.
    pub fn redo_segment(&self, amplitudes: &[f64], phases: &[f64]) -> Result<ComplexMatrix, SpinError> {
        self.system().check_controls(amplitudes, phases)?;
        let z = self.ops.phase_rotation(phases);
        let first = self.tables[0].propagator_for(amplitudes[0])?;
        let x = if self.tables.len() == 1 {
            first.conjugate_by_diag(&z)
        } else {
            let mut x = (*first).clone();
            for (k, table) in self.tables.iter().enumerate().skip(1) {
                x = &x * &*table.propagator_for(amplitudes[k])?;
            }
            x.conjugate_by_diag(&z)
        };
        Ok(if self.folded { x } else { &self.v * &x })
    }

    /// `exp(−iΔt(H₀ + 𝓗_n))` by Padé, without splitting or coarse-graining.
    pub fn pade_segment(&self, amplitudes: &[f64], phases: &[f64]) -> Result<ComplexMatrix, SpinError> {
        self.ops.full_propagator(amplitudes, phases, self.dt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli;
    use crate::redo::gate_fidelity;

    fn eigenvalues(h: &ComplexMatrix) -> Vec<f64> {
        HermitianEigen::new(h).unwrap().eigenvalues().to_vec()
    }

    #[test]
    fn single_spin_operators() {
        let z = spin_op(1, 0, Axis::Z).unwrap();
        assert_eq!(z, pauli::z().scale_real(0.5));
        assert_eq!(spin_op(1, 0, Axis::X).unwrap(), pauli::x().scale_real(0.5));
        assert_eq!(spin_op(1, 0, Axis::Y).unwrap(), pauli::y().scale_real(0.5));
        assert!(matches!(
            spin_op(2, 2, Axis::X),
            Err(SpinError::IndexOutOfRange { .. })
        ));
        assert!(spin_op(0, 0, Axis::X).is_err());
    }

    #[test]
    fn kronecker_placement() {
        let id = ComplexMatrix::identity(2);
        let hx = pauli::x().scale_real(0.5);
        assert_eq!(spin_op(2, 1, Axis::X).unwrap(), id.kron(&hx));
        assert_eq!(spin_op(2, 0, Axis::X).unwrap(), hx.kron(&id));
        let hy = pauli::y().scale_real(0.5);
        assert_eq!(spin_op(3, 1, Axis::Y).unwrap(), id.kron(&hy).kron(&id));
    }

    #[test]
    fn collective_x_spectrum() {
        let sys = SpinSystem::homonuclear(vec![0.0; 3]).unwrap();
        let sx = sys.collective_op(0, Axis::X).unwrap();
        assert!(sx.trace().norm() < 1e-15);
        let mut ev = eigenvalues(&sx);
        ev.sort_by(f64::total_cmp);
        let expect = [-1.5, -0.5, -0.5, -0.5, 0.5, 0.5, 0.5, 1.5];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(
            sys.collective_op(1, Axis::X),
            Err(SpinError::UnknownChannel(1))
        ));
        let one = SpinSystem::homonuclear(vec![0.0]).unwrap();
        assert_eq!(
            one.collective_op(0, Axis::X).unwrap(),
            spin_op(1, 0, Axis::X).unwrap()
        );
    }

    #[test]
    fn internal_hamiltonian_cases() {
        let sys = SpinSystem::homonuclear(vec![3.0]).unwrap();
        let h = sys.internal_hamiltonian();
        assert_eq!(h, ComplexMatrix::from_real_rows(&[&[-1.5, 0.0], &[0.0, 1.5]]).unwrap());

        let zero = SpinSystem::homonuclear(vec![0.0, 0.0]).unwrap();
        assert_eq!(zero.internal_hamiltonian(), ComplexMatrix::zeros(4));

        let jj = 7.0;
        let sys = SpinSystem::new(vec![0.0, 0.0], vec![(0, 1, jj)], vec![], vec![0, 0]).unwrap();
        let mut ev = eigenvalues(&sys.internal_hamiltonian());
        ev.sort_by(f64::total_cmp);
        let q = 2.0 * PI * jj / 4.0;
        for (a, b) in ev.iter().zip([-3.0 * q, q, q, q]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn couplings_without_dipolar_commute_with_total_z() {
        let sys = SpinSystem::new(
            vec![100.0, -250.0, 40.0],
            vec![(0, 1, 12.0), (1, 2, -7.5), (0, 2, 3.0)],
            vec![],
            vec![0, 0, 0],
        )
        .unwrap();
        let h = sys.internal_hamiltonian();
        assert!(h.is_hermitian(1e-14));
        let sz = sys.collective_op(0, Axis::Z).unwrap();
        assert!(h.commutator(&sz).unwrap().frob_norm() <= 1e-12);

        let dip = SpinSystem::new(vec![0.0, 0.0], vec![], vec![(0, 1, 5.0)], vec![0, 0]).unwrap();
        let hd = dip.internal_hamiltonian();
        assert!(hd.is_hermitian(1e-14));
        assert!(hd.trace().norm() < 1e-12);
    }

    #[test]
    fn system_validation() {
        assert!(SpinSystem::homonuclear(vec![]).is_err());
        assert!(SpinSystem::new(vec![0.0; 2], vec![(1, 0, 1.0)], vec![], vec![0, 0]).is_err());
        assert!(SpinSystem::new(vec![0.0; 2], vec![(0, 2, 1.0)], vec![], vec![0, 0]).is_err());
        assert!(
            SpinSystem::new(vec![0.0; 2], vec![(0, 1, 1.0), (0, 1, 2.0)], vec![], vec![0, 0])
                .is_err()
        );
        assert!(SpinSystem::new(vec![0.0; 2], vec![], vec![], vec![0, 2]).is_err());
        assert!(SpinSystem::new(vec![0.0; 2], vec![], vec![], vec![0]).is_err());
        let hetero = SpinSystem::new(vec![0.0; 3], vec![], vec![], vec![0, 1, 0]).unwrap();
        assert_eq!(hetero.n_channels(), 2);
        assert_eq!(hetero.spins_in_channel(0).unwrap(), vec![0, 2]);
    }

    #[test]
    fn frame_operator_properties() {
        let sys = SpinSystem::new(
            vec![300.0, -120.0],
            vec![(0, 1, 25.0)],
            vec![],
            vec![0, 0],
        )
        .unwrap();
        assert!(sys
            .frame_operator(0.0)
            .unwrap()
            .frob_dist(&ComplexMatrix::identity(4))
            .unwrap()
            < 1e-14);
        let t = 1.3e-3;
        let v = sys.frame_operator(t).unwrap();
        assert!(v.unitarity_error() < 1e-10);
        let v2 = sys.frame_operator(2.0 * t).unwrap();
        assert!(v2.frob_dist(&(&v * &v)).unwrap() < 1e-9);
    }

    #[test]
    fn dirac_operator_properties() {
        let sys = SpinSystem::new(
            vec![300.0, -120.0],
            vec![(0, 1, 25.0)],
            vec![],
            vec![0, 0],
        )
        .unwrap();
        let sx = sys.collective_op(0, Axis::X).unwrap();
        let d = sys.dirac_x_operator(0, 2e-3).unwrap();
        assert!(d.is_hermitian(0.0));
        assert!(d.trace().norm() < 1e-12);
        let (mut a, mut b) = (eigenvalues(&d), eigenvalues(&sx));
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let free = SpinSystem::homonuclear(vec![0.0, 0.0]).unwrap();
        assert!(free.dirac_x_operator(0, 1.0).unwrap().frob_dist(&sx).unwrap() < 1e-14);
        // isotropic coupling alone commutes with S_x
        let jonly = SpinSystem::new(vec![0.0, 0.0], vec![(0, 1, 40.0)], vec![], vec![0, 0]).unwrap();
        assert!(jonly.dirac_x_operator(0, 0.01).unwrap().frob_dist(&sx).unwrap() < 1e-12);
    }

    #[test]
    fn phase_rotation_cases() {
        let one = SpinSystem::homonuclear(vec![50.0]).unwrap();
        assert_eq!(one.phase_rotation(&[0.0]).unwrap(), vec![C64::new(1.0, 0.0); 2]);
        let z = one.phase_rotation(&[PI]).unwrap();
        assert!((z[0] - C64::from_polar(1.0, -PI / 2.0)).norm() < 1e-15);
        assert!((z[1] - C64::from_polar(1.0, PI / 2.0)).norm() < 1e-15);
        assert!(one.phase_rotation(&[0.0, 1.0]).is_err());

        let sys = SpinSystem::homonuclear(vec![100.0, -40.0]).unwrap();
        let zd = ComplexMatrix::from_diag(&sys.phase_rotation(&[0.7]).unwrap());
        let h0 = sys.internal_hamiltonian();
        assert!(zd.commutator(&h0).unwrap().frob_norm() <= 1e-12);
        // Z S_x Z† rotates the drive axis by φ
        let sx = sys.collective_op(0, Axis::X).unwrap();
        let sy = sys.collective_op(0, Axis::Y).unwrap();
        let rotated = sx.conjugate_by_diag(&sys.phase_rotation(&[0.7]).unwrap());
        let expect = &sx.scale_real(0.7f64.cos()) + &sy.scale_real(0.7f64.sin());
        assert!(rotated.frob_dist(&expect).unwrap() < 1e-14);
    }

    fn engine(sys: SpinSystem, frame: FrameTime) -> SegmentEngine {
        let spec = CoarseGrainSpec::new(64, 0, 2, 2.6e5, 5e-6, false).unwrap();
        let specs = vec![spec; sys.n_channels()];
        SegmentEngine::new(sys, 5e-6, &specs, frame, ExpmMethod::Eigen).unwrap()
    }

    #[test]
    fn zero_amplitude_segment_is_frame() {
        let sys = SpinSystem::new(vec![900.0, -300.0], vec![(0, 1, 30.0)], vec![], vec![0, 0])
            .unwrap();
        let e = engine(sys, FrameTime::End);
        assert!(e.is_folded());
        let u = e.redo_segment(&[0.0], &[1.1]).unwrap();
        assert!(u.frob_dist(e.frame()).unwrap() < 1e-13);
    }

    #[test]
    fn free_drive_matches_pade() {
        let sys = SpinSystem::homonuclear(vec![0.0, 0.0]).unwrap();
        let e = engine(sys.clone(), FrameTime::End);
        let sx = sys.collective_op(0, Axis::X).unwrap();
        for w in [1.0, 12345.0, 259999.0] {
            let u = e.redo_segment(&[w], &[0.0]).unwrap();
            let exact = expm_pade(&sx.scale(C64::new(0.0, -w * 5e-6))).unwrap();
            assert!(u.frob_dist(&exact).unwrap() < 1e-12);
        }
    }

    #[test]
    fn offset_segment_against_full_hamiltonian() {
        let sys = SpinSystem::homonuclear(vec![100.0]).unwrap();
        for frame in [FrameTime::End, FrameTime::Midpoint] {
            let e = engine(sys.clone(), frame);
            for (w, phi) in [(2.6e5, 0.0), (1.3e5, 2.0), (777.0, 4.0)] {
                let u = e.redo_segment(&[w], &[phi]).unwrap();
                let full = e.pade_segment(&[w], &[phi]).unwrap();
                assert!(gate_fidelity(&u, &full).unwrap() >= 1.0 - 1e-6);
            }
        }
    }

    #[test]
    fn unfolded_heteronuclear_segment() {
        // the flip-flop part of J does not commute with a single-channel S_z
        let sys = SpinSystem::new(
            vec![200.0, -150.0],
            vec![(0, 1, 20.0)],
            vec![],
            vec![0, 1],
        )
        .unwrap();
        let e = engine(sys.clone(), FrameTime::Midpoint);
        assert!(!e.is_folded());
        let amps = [3.0e4, 5.0e4];
        let phases = [0.3, 2.2];
        let u = e.redo_segment(&amps, &phases).unwrap();
        assert!(u.unitarity_error() < 1e-10);
        let full = e.pade_segment(&amps, &phases).unwrap();
        assert!(gate_fidelity(&u, &full).unwrap() >= 1.0 - 1e-6);
    }

    #[test]
    fn control_sequence_validation() {
        let c = ControlSequence::zeros(3, 2, 1e-6).unwrap();
        assert_eq!(c.segment(1), (&[0.0, 0.0][..], &[0.0, 0.0][..]));
        assert!(ControlSequence::zeros(0, 1, 1e-6).is_err());
        assert!(ControlSequence::zeros(1, 1, 0.0).is_err());
        assert!(ControlSequence::new(1, 1, 1e-6, vec![-1.0], vec![0.0]).is_err());
        assert!(ControlSequence::new(1, 1, 1e-6, vec![1.0], vec![]).is_err());
    }
}

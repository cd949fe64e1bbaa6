//! Gradient ascent over piecewise-constant amplitudes and phases.
//!
//! Amplitudes are optimized in units of `Ω_max` so that amplitude and phase
//! updates share one step size.

use std::f64::consts::TAU;
use std::time::Instant;

use rand::Rng;

use crate::linalg::{ComplexMatrix, ExpmMethod, SparseMatrix, C64};
use crate::redo::{CoarseGrainSpec, MemoPolicy, RedoError};
use crate::rng::seeded;
use crate::spin::{ControlOperators, ControlSequence, FrameTime, SegmentEngine, SpinError, SpinSystem};
use crate::Backend;

#[derive(Debug, thiserror::Error)]
pub enum GrapeError {
    #[error("invalid GRAPE configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite fidelity at iteration {iteration}")]
    NonFiniteFidelity { iteration: usize },
    #[error(transparent)]
    Spin(#[from] SpinError),
    #[error(transparent)]
    Redo(#[from] RedoError),
}

impl From<crate::linalg::LinalgError> for GrapeError {
    fn from(e: crate::linalg::LinalgError) -> Self {
        GrapeError::Spin(e.into())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    /// Maximize `|Tr(U_f† U)/Tr(U_f† U_f)|²`.
    Gate(ComplexMatrix),
    /// Maximize `|⟨ψ_f|U|ψ_0⟩|²`.
    State { initial: Vec<C64>, target: Vec<C64> },
}

#[derive(Clone, Debug)]
pub struct GrapeConfig {
    pub system: SpinSystem,
    pub target: Target,
    pub n_segments: usize,
    pub dt: f64,
    pub max_amplitude: f64,
    /// One coarse-grain spec per channel, used by the REDO backend.
    pub specs: Vec<CoarseGrainSpec>,
    pub step_size: f64,
    pub max_iterations: usize,
    pub goal: f64,
    pub seed: u64,
    pub backend: Backend,
    pub frame_time: FrameTime,
    pub table_method: ExpmMethod,
    /// Upper bound on the adaptive step, as a multiple of `step_size`.
    pub max_step_growth: f64,
}

impl GrapeConfig {
    /// Defaults: ε = 1 rad/s with base 64, midpoint frame, 1000 iterations.
    pub fn new(
        system: SpinSystem,
        target: Target,
        n_segments: usize,
        dt: f64,
        max_amplitude: f64,
    ) -> Result<Self, GrapeError> {
        let spec = CoarseGrainSpec::covering(64, 0, max_amplitude, dt, false)?;
        let cfg = Self {
            specs: vec![spec; system.n_channels()],
            system,
            target,
            n_segments,
            dt,
            max_amplitude,
            step_size: 0.5,
            max_iterations: 1000,
            goal: 0.999,
            seed: 0,
            backend: Backend::Redo,
            frame_time: FrameTime::Midpoint,
            table_method: ExpmMethod::Eigen,
            max_step_growth: 100.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Replaces every channel's spec with base `b`, low digit `l`, covering `Ω_max`.
    pub fn with_base(mut self, base: u32, low: i32) -> Result<Self, GrapeError> {
        let spec = CoarseGrainSpec::covering(base, low, self.max_amplitude, self.dt, false)?;
        self.specs = vec![spec; self.system.n_channels()];
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), GrapeError> {
        let bad = |m: String| Err(GrapeError::InvalidConfig(m));
        let dim = self.system.dim();
        if self.n_segments == 0 {
            return bad("need at least one segment".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("segment length {}", self.dt));
        }
        if !(self.max_amplitude > 0.0 && self.max_amplitude.is_finite()) {
            return bad(format!("maximum amplitude {}", self.max_amplitude));
        }
        if !(self.goal > 0.0 && self.goal <= 1.0) {
            return bad(format!("fidelity goal {} outside (0, 1]", self.goal));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad(format!("step size {}", self.step_size));
        }
        if !(self.max_step_growth >= 1.0) {
            return bad("step growth cap below 1".into());
        }
        if self.specs.len() != self.system.n_channels() {
            return bad(format!(
                "{} specs for {} channels",
                self.specs.len(),
                self.system.n_channels()
            ));
        }
        for s in &self.specs {
            if s.max_coefficient() < self.max_amplitude * (1.0 - 1e-12) {
                return bad(format!(
                    "spec covers {} below maximum amplitude {}",
                    s.max_coefficient(),
                    self.max_amplitude
                ));
            }
            if (s.dt() - self.dt).abs() > 1e-12 * self.dt {
                return bad("spec segment length differs from dt".into());
            }
        }
        match &self.target {
            Target::Gate(u) => {
                if u.dim() != dim {
                    return bad(format!("target dimension {} for {dim}-dim system", u.dim()));
                }
                if u.frob_norm() == 0.0 || !u.is_finite() {
                    return bad("target gate is zero or non-finite".into());
                }
            }
            Target::State { initial, target } => {
                if initial.len() != dim || target.len() != dim {
                    return bad("state length does not match system".into());
                }
                for v in [initial, target] {
                    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    if (n - 1.0).abs() > crate::redo::STATE_NORM_TOL {
                        return bad("states must be normalized".into());
                    }
                }
            }
        }
        Ok(())
    }
}

/// Uniform amplitudes in `[0, Ω_max]` and phases in `[0, 2π)`, fixed by the seed.
pub fn init_controls(cfg: &GrapeConfig) -> ControlSequence {
    let mut rng = seeded(cfg.seed);
    let len = cfg.n_segments * cfg.system.n_channels();
    let amplitudes = (0..len)
        .map(|_| rng.random_range(0.0..=cfg.max_amplitude))
        .collect();
    let phases = (0..len).map(|_| rng.random_range(0.0..TAU)).collect();
    ControlSequence::new(
        cfg.n_segments,
        cfg.system.n_channels(),
        cfg.dt,
        amplitudes,
        phases,
    )
    .expect("generated controls are valid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Goal,
    MaxIterations,
    StepUnderflow,
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub controls: ControlSequence,
    /// Fidelity before the first update, then after each accepted update.
    pub fidelity: Vec<f64>,
    /// Seconds spent building segment propagators, per iteration.
    pub t_prop: Vec<f64>,
    /// Seconds spent on everything else, per iteration.
    pub t_other: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub stop: StopReason,
    pub table_build_seconds: f64,
    /// Segment exponentials served from tables instead of computed.
    pub exponentials_avoided: u64,
}

impl OptimizationResult {
    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity.last().expect("trace starts with iteration 0")
    }

    pub fn iterations(&self) -> usize {
        self.fidelity.len() - 1
    }

    /// Per-iteration wall time, propagators plus the rest.
    pub fn iteration_seconds(&self) -> Vec<f64> {
        self.t_prop.iter().zip(&self.t_other).map(|(a, b)| a + b).collect()
    }
}

/// Per-segment derivatives of the fidelity.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    /// `∂F/∂Ω_kn` in s/rad, segment-major.
    pub amplitude: Vec<f64>,
    /// `∂F/∂φ_kn`, segment-major.
    pub phase: Vec<f64>,
}

struct ChannelOps {
    sx: SparseMatrix,
    sy: SparseMatrix,
    sz: SparseMatrix,
    // [S_x, H₀] and [S_y, H₀]
    ax: SparseMatrix,
    ay: SparseMatrix,
}

/// Forward pass at one control point.
pub struct Evaluation {
    segments: Vec<ComplexMatrix>,
    // X_0 = I, X_n = U_n X_{n-1}
    forward: Vec<ComplexMatrix>,
    overlap: C64,
    fidelity: f64,
    t_prop: f64,
}

impl Evaluation {
    pub fn fidelity(&self) -> f64 {
        self.fidelity
    }

    pub fn total(&self) -> &ComplexMatrix {
        self.forward.last().expect("at least one segment")
    }

    pub fn segments(&self) -> &[ComplexMatrix] {
        &self.segments
    }
}

/// Optimizer state that does not change between iterations: tables,
/// operators and the target.
pub struct Grape {
    cfg: GrapeConfig,
    ops: ControlOperators,
    engine: Option<SegmentEngine>,
    channels: Vec<ChannelOps>,
    // fidelity functional Tr(W U) / norm
    w: ComplexMatrix,
    norm: C64,
    table_build_seconds: f64,
}

impl Grape {
    pub fn new(cfg: GrapeConfig) -> Result<Self, GrapeError> {
        cfg.validate()?;
        let ops = ControlOperators::new(&cfg.system);
        let started = Instant::now();
        let engine = match cfg.backend {
            Backend::Redo => {
                let memo = MemoPolicy::lru(4 * cfg.n_segments.max(256));
                Some(
                    SegmentEngine::new(
                        cfg.system.clone(),
                        cfg.dt,
                        &cfg.specs,
                        cfg.frame_time,
                        cfg.table_method,
                    )?
                    .with_memo(memo),
                )
            }
            Backend::Pade => None,
        };
        let table_build_seconds = started.elapsed().as_secs_f64();

        let h0 = ops.h0();
        let channels = (0..cfg.system.n_channels())
            .map(|k| {
                let sz: Vec<C64> = ops.sz_diag(k).iter().map(|&z| C64::new(z, 0.0)).collect();
                ChannelOps {
                    sx: SparseMatrix::from_dense(ops.sx(k)),
                    sy: SparseMatrix::from_dense(ops.sy(k)),
                    sz: SparseMatrix::from_dense(&ComplexMatrix::from_diag(&sz)),
                    ax: SparseMatrix::from_dense(&ops.sx(k).commutator(h0).expect("same dim")),
                    ay: SparseMatrix::from_dense(&ops.sy(k).commutator(h0).expect("same dim")),
                }
            })
            .collect();

        let (w, norm) = match &cfg.target {
            Target::Gate(u) => {
                let w = u.adjoint();
                let norm = w.trace_of_product(u)?;
                (w, norm)
            }
            Target::State { initial, target } => {
                let dim = initial.len();
                let w = ComplexMatrix::from_fn(dim, |i, j| initial[i] * target[j].conj());
                (w, C64::new(1.0, 0.0))
            }
        };
        Ok(Self {
            cfg,
            ops,
            engine,
            channels,
            w,
            norm,
            table_build_seconds,
        })
    }

    pub fn config(&self) -> &GrapeConfig {
        &self.cfg
    }

    pub fn engine(&self) -> Option<&SegmentEngine> {
        self.engine.as_ref()
    }

    pub fn table_build_seconds(&self) -> f64 {
        self.table_build_seconds
    }

    fn check(&self, controls: &ControlSequence) -> Result<(), GrapeError> {
        if controls.n_segments() != self.cfg.n_segments
            || controls.n_channels() != self.cfg.system.n_channels()
        {
            return Err(GrapeError::InvalidConfig(
                "control sequence shape does not match configuration".into(),
            ));
        }
        if (controls.dt() - self.cfg.dt).abs() > 1e-12 * self.cfg.dt {
            return Err(GrapeError::InvalidConfig("control segment length differs".into()));
        }
        Ok(())
    }

    /// `U_n` for every segment, in time order.
    pub fn segment_propagators(
        &self,
        controls: &ControlSequence,
    ) -> Result<Vec<ComplexMatrix>, GrapeError> {
        self.check(controls)?;
        (0..controls.n_segments())
            .map(|n| {
                let (a, p) = controls.segment(n);
                Ok(match &self.engine {
                    Some(e) => e.redo_segment(a, p)?,
                    None => self.ops.full_propagator(a, p, self.cfg.dt)?,
                })
            })
            .collect()
    }

    /// `U = U_N ⋯ U_1`.
    pub fn total_propagator(&self, controls: &ControlSequence) -> Result<ComplexMatrix, GrapeError> {
        Ok(self.evaluate(controls)?.total().clone())
    }

    pub fn fidelity_of(&self, u: &ComplexMatrix) -> Result<f64, GrapeError> {
        let g = self.w.trace_of_product(u)? / self.norm;
        Ok(g.norm_sqr())
    }

    pub fn evaluate(&self, controls: &ControlSequence) -> Result<Evaluation, GrapeError> {
        let started = Instant::now();
        let segments = self.segment_propagators(controls)?;
        let t_prop = started.elapsed().as_secs_f64();
        let dim = self.ops.h0().dim();
        let mut forward = Vec::with_capacity(segments.len() + 1);
        forward.push(ComplexMatrix::identity(dim));
        for u in &segments {
            let mut next = ComplexMatrix::zeros(dim);
            ComplexMatrix::mul_into(u, forward.last().expect("nonempty"), &mut next);
            forward.push(next);
        }
        let overlap = self
            .w
            .trace_of_product(forward.last().expect("nonempty"))?
            / self.norm;
        Ok(Evaluation {
            segments,
            forward,
            overlap,
            fidelity: overlap.norm_sqr(),
            t_prop,
        })
    }

    /// Trapezoid estimate of `∂U_n/∂θ` with the first Euler–Maclaurin
    /// correction, contracted against the forward and backward products.
    pub fn gradient_at(&self, eval: &Evaluation, controls: &ControlSequence) -> Gradient {
        let n_seg = eval.segments.len();
        let dim = self.ops.h0().dim();
        let kk = self.channels.len();
        let dt = self.cfg.dt;

        // traces of (S_x, S_y, S_z, A_x, A_y) against M_n = X_n B_n
        let mut traces = vec![[C64::new(0.0, 0.0); 5]; (n_seg + 1) * kk];
        let mut b = self.w.clone();
        let mut m = ComplexMatrix::zeros(dim);
        let mut next_b = ComplexMatrix::zeros(dim);
        for n in (0..=n_seg).rev() {
            ComplexMatrix::mul_into(&eval.forward[n], &b, &mut m);
            for (k, ch) in self.channels.iter().enumerate() {
                traces[n * kk + k] = [
                    ch.sx.trace_with(&m),
                    ch.sy.trace_with(&m),
                    ch.sz.trace_with(&m),
                    ch.ax.trace_with(&m),
                    ch.ay.trace_with(&m),
                ];
            }
            if n > 0 {
                ComplexMatrix::mul_into(&b, &eval.segments[n - 1], &mut next_b);
                std::mem::swap(&mut b, &mut next_b);
            }
        }

        let g_conj = eval.overlap.conj();
        let half = C64::new(0.0, -0.5 * dt);
        let em = dt * dt / 12.0;
        let mut amplitude = vec![0.0; n_seg * kk];
        let mut phase = vec![0.0; n_seg * kk];
        for n in 0..n_seg {
            for k in 0..kk {
                // segment n sits between M_n (before) and M_{n+1} (after)
                let before = &traces[n * kk + k];
                let after = &traces[(n + 1) * kk + k];
                let omega = controls.amplitude(n, k);
                let (s, c) = controls.phase(n, k).sin_cos();
                let lin = |t: &[C64; 5], a: f64, b: f64, e: f64, f: f64| {
                    (t[0] * a + t[1] * b, t[3] * e + t[4] * f)
                };
                // ∂/∂Ω: D = c S_x + s S_y, C = c A_x + s A_y
                let (d1, c1) = lin(after, c, s, c, s);
                let (d0, c0) = lin(before, c, s, c, s);
                let t_amp = half * (d1 + d0) + (c1 - c0) * em;
                // ∂/∂φ: D = Ω(−s S_x + c S_y), C = Ω(−s A_x + c A_y) − iΩ² S_z
                let (d1, c1) = lin(after, -s * omega, c * omega, -s * omega, c * omega);
                let (d0, c0) = lin(before, -s * omega, c * omega, -s * omega, c * omega);
                let z = C64::new(0.0, -omega * omega);
                let c1 = c1 + z * after[2];
                let c0 = c0 + z * before[2];
                let t_phase = half * (d1 + d0) + (c1 - c0) * em;
                amplitude[n * kk + k] = 2.0 * (g_conj * t_amp / self.norm).re;
                phase[n * kk + k] = 2.0 * (g_conj * t_phase / self.norm).re;
            }
        }
        Gradient { amplitude, phase }
    }

    pub fn gradient(&self, controls: &ControlSequence) -> Result<Gradient, GrapeError> {
        let eval = self.evaluate(controls)?;
        Ok(self.gradient_at(&eval, controls))
    }

    fn step(&self, controls: &ControlSequence, grad: &Gradient, alpha: f64) -> ControlSequence {
        let mut next = controls.clone();
        let wmax = self.cfg.max_amplitude;
        for (a, g) in next.amplitudes_mut().iter_mut().zip(&grad.amplitude) {
            // normalized coordinate a/Ω_max, gradient Ω_max ∂F/∂Ω
            let x = *a / wmax + alpha * g * wmax;
            *a = x.clamp(0.0, 1.0) * wmax;
        }
        for (p, g) in next.phases_mut().iter_mut().zip(&grad.phase) {
            *p = (*p + alpha * g).rem_euclid(TAU);
        }
        next
    }

    /// Backtracking ascent from `initial` until the goal, the iteration
    /// limit, or a vanishing step.
    pub fn run_from(&self, initial: ControlSequence) -> Result<OptimizationResult, GrapeError> {
        self.check(&initial)?;
        let alpha0 = self.cfg.step_size;
        let alpha_max = alpha0 * self.cfg.max_step_growth;
        let mut alpha = alpha0;
        let mut controls = initial;
        let mut eval = self.evaluate(&controls)?;
        if !eval.fidelity.is_finite() {
            return Err(GrapeError::NonFiniteFidelity { iteration: 0 });
        }
        let mut result = OptimizationResult {
            controls: controls.clone(),
            fidelity: vec![eval.fidelity],
            t_prop: vec![],
            t_other: vec![],
            step_sizes: vec![],
            stop: StopReason::MaxIterations,
            table_build_seconds: self.table_build_seconds,
            exponentials_avoided: 0,
        };
        let per_eval = match self.engine {
            Some(_) => (self.cfg.n_segments * self.cfg.system.n_channels()) as u64,
            None => 0,
        };
        if eval.fidelity >= self.cfg.goal {
            result.stop = StopReason::Goal;
            return Ok(result);
        }

        for iteration in 1..=self.cfg.max_iterations {
            let started = Instant::now();
            let mut t_prop = 0.0;
            let grad = self.gradient_at(&eval, &controls);
            let accepted = loop {
                let trial = self.step(&controls, &grad, alpha);
                let trial_eval = self.evaluate(&trial)?;
                t_prop += trial_eval.t_prop;
                result.exponentials_avoided += per_eval;
                if !trial_eval.fidelity.is_finite() {
                    return Err(GrapeError::NonFiniteFidelity { iteration });
                }
                if trial_eval.fidelity >= eval.fidelity {
                    alpha = (alpha * 1.5).min(alpha_max);
                    break Some((trial, trial_eval));
                }
                alpha *= 0.5;
                if alpha < 1e-12 * alpha0 {
                    break None;
                }
            };
            let total = started.elapsed().as_secs_f64();
            result.t_prop.push(t_prop);
            result.t_other.push(total - t_prop);
            result.step_sizes.push(alpha);
            match accepted {
                Some((c, e)) => {
                    controls = c;
                    eval = e;
                    result.fidelity.push(eval.fidelity);
                }
                None => {
                    result.fidelity.push(eval.fidelity);
                    result.stop = StopReason::StepUnderflow;
                    break;
                }
            }
            if eval.fidelity >= self.cfg.goal {
                result.stop = StopReason::Goal;
                break;
            }
        }
        result.controls = controls;
        Ok(result)
    }

    pub fn run(&self) -> Result<OptimizationResult, GrapeError> {
        self.run_from(init_controls(&self.cfg))
    }
}

/// Runs the configured problem once with the given backend.
pub fn run(cfg: &GrapeConfig) -> Result<OptimizationResult, GrapeError> {
    Grape::new(cfg.clone())?.run()
}

/// Same seed and iteration budget on both backends.
#[derive(Clone, Debug)]
pub struct BenchmarkReport {
    pub redo: OptimizationResult,
    pub pade: OptimizationResult,
    /// Median seconds per iteration.
    pub t_redo: f64,
    pub t_pade: f64,
    /// Largest fidelity difference over the common prefix of the traces.
    pub max_trace_difference: f64,
    pub table_build_seconds: f64,
}

impl BenchmarkReport {
    pub fn speedup(&self) -> f64 {
        self.t_pade / self.t_redo
    }
}

/// Median per-iteration time of each backend over `iterations` iterations
/// (at least 20) from identical initial controls.
pub fn benchmark_iteration(cfg: &GrapeConfig, iterations: usize) -> Result<BenchmarkReport, GrapeError> {
    let iterations = iterations.max(20);
    let mut cfg = cfg.clone();
    cfg.max_iterations = iterations;
    cfg.goal = 1.0;
    let initial = init_controls(&cfg);

    let mut redo_cfg = cfg.clone();
    redo_cfg.backend = Backend::Redo;
    let redo = Grape::new(redo_cfg)?;
    let mut pade_cfg = cfg;
    pade_cfg.backend = Backend::Pade;
    let pade = Grape::new(pade_cfg)?;

    // warm caches and allocator once on each side
    redo.evaluate(&initial)?;
    pade.evaluate(&initial)?;
    let r = redo.run_from(initial.clone())?;
    let p = pade.run_from(initial)?;

    let max_trace_difference = r
        .fidelity
        .iter()
        .zip(&p.fidelity)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(BenchmarkReport {
        t_redo: median(&r.iteration_seconds()),
        t_pade: median(&p.iteration_seconds()),
        table_build_seconds: redo.table_build_seconds(),
        max_trace_difference,
        redo: r,
        pade: p,
    })
}

pub(crate) fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

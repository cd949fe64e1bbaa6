//! Command implementations. Each writes its CSVs under the output directory
//! and returns a summary for the caller.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use redo::freeze::{linspace, local_maxima, q_theory, FreezeConfig, FreezeSimulator, QSurface};
use redo::grape::{benchmark_iteration, Grape, GrapeConfig, OptimizationResult, Target};
use redo::linalg::{expm_pade, random_hermitian, ComplexMatrix, C64};
use redo::redo::{CoarseGrainSpec, DiscreteOperatorTable};
use redo::spin::{Axis, FrameTime, SpinSystem};
use redo::{rng, Backend, ExpmMethod};

use crate::bench::{collective_x, cost_model_rows, expm_bench, CostRow, ExpmBenchReport};
use crate::config::{FreezeSection, GrapeSection, LoadedConfig, TableSection};
use crate::output::{Csv, RunMetadata};
use crate::ConfigError;

/// Everything a command needs after flags and config are merged.
pub struct Context {
    pub loaded: LoadedConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub backends: Vec<Backend>,
    pub full_scale: bool,
    pub meta: RunMetadata,
}

impl Context {
    fn write(&self, csv: &Csv, name: &str) -> anyhow::Result<PathBuf> {
        let path = csv.write(&self.out_dir, name, &self.meta)?;
        eprintln!("wrote {}", path.display());
        Ok(path)
    }
}

pub fn parse_frame(s: &str) -> Result<FrameTime, ConfigError> {
    match s {
        "midpoint" => Ok(FrameTime::Midpoint),
        "end" => Ok(FrameTime::End),
        other => Err(ConfigError(format!("unknown frame {other:?}, expected midpoint or end"))),
    }
}

pub fn cost_model(ctx: &Context) -> anyhow::Result<Vec<CostRow>> {
    let c = &ctx.loaded.config.cost_model;
    let rows = cost_model_rows(&c.bases, c.ratio).map_err(|e| ConfigError(e.to_string()))?;
    let mut csv = Csv::new(&["base", "low", "high", "multiplications", "stored"]);
    for r in &rows {
        csv.push([
            r.base.to_string(),
            r.low.to_string(),
            r.high.to_string(),
            r.multiplications.to_string(),
            r.stored.to_string(),
        ]);
    }
    ctx.write(&csv, "cost_model.csv")?;
    Ok(rows)
}

pub fn expm_bench_cmd(ctx: &Context) -> anyhow::Result<ExpmBenchReport> {
    let report = expm_bench(&ctx.loaded.config.expm_bench, ctx.seed)?;
    let mut t = Csv::new(&["method", "qubits", "samples", "median_s", "mean_s", "min_s"]);
    for r in &report.timings {
        t.push([
            r.method.clone(),
            r.qubits.to_string(),
            r.samples.to_string(),
            format!("{:e}", r.median),
            format!("{:e}", r.mean),
            format!("{:e}", r.min),
        ]);
    }
    for (n, s) in &report.table_builds {
        t.push([
            "redo_table_build".to_string(),
            n.to_string(),
            "1".into(),
            format!("{s:e}"),
            format!("{s:e}"),
            format!("{s:e}"),
        ]);
    }
    ctx.write(&t, "expm_timing.csv")?;
    let mut d = Csv::new(&[
        "qubits",
        "samples",
        "max_infidelity",
        "mean_infidelity",
        "max_multiplications",
    ]);
    for r in &report.deviations {
        d.push([
            r.qubits.to_string(),
            r.samples.to_string(),
            format!("{:e}", r.max_infidelity),
            format!("{:e}", r.mean_infidelity),
            r.max_multiplications.to_string(),
        ]);
    }
    ctx.write(&d, "expm_deviation.csv")?;
    Ok(report)
}

/// Target unitary for the GRAPE section.
pub fn grape_target(g: &GrapeSection, system: &SpinSystem, seed: u64) -> anyhow::Result<Target> {
    let dim = system.dim();
    let n = system.n_spins();
    let sx0 = redo::spin::spin_op(n, 0, Axis::X)?;
    let target = match g.target.as_str() {
        "identity" => ComplexMatrix::identity(dim),
        "random" => {
            let mut r = rng::seeded(rng::sub_seed(seed, 1, 1));
            let h = random_hermitian(dim, &mut r);
            expm_pade(&h.scale(C64::new(0.0, -1.0)))?
        }
        // π rotation about x on spin 0
        "not" => expm_pade(&sx0.scale(C64::new(0.0, -PI)))?,
        "cnot" => {
            if n != 2 {
                return Err(ConfigError("cnot target needs exactly 2 spins".into()).into());
            }
            let one = C64::new(1.0, 0.0);
            let mut m = ComplexMatrix::zeros(4);
            m[(0, 0)] = one;
            m[(1, 1)] = one;
            m[(2, 3)] = one;
            m[(3, 2)] = one;
            m
        }
        other => return Err(ConfigError(format!("unknown GRAPE target {other:?}")).into()),
    };
    Ok(Target::Gate(target))
}

pub fn grape_config(g: &GrapeSection, seed: u64) -> anyhow::Result<GrapeConfig> {
    let n = g.offsets_hz.len();
    let system = SpinSystem::new(
        g.offsets_hz.iter().map(|f| TAU * f).collect(),
        g.couplings_hz.clone(),
        vec![],
        vec![0; n],
    )
    .map_err(|e| ConfigError(e.to_string()))?;
    let target = grape_target(g, &system, seed)?;
    let mut cfg = GrapeConfig::new(system, target, g.n_segments, g.dt, TAU * g.max_amplitude_hz)
        .and_then(|c| c.with_base(g.base, g.low))
        .map_err(|e| ConfigError(e.to_string()))?;
    cfg.seed = seed;
    cfg.max_iterations = g.iterations;
    cfg.goal = g.goal;
    cfg.step_size = g.step_size;
    cfg.frame_time = parse_frame(&g.frame)?;
    cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
    Ok(cfg)
}

#[derive(Debug)]
pub struct GrapeSummary {
    /// One result per backend run, in `ctx.backends` order.
    pub runs: Vec<(Backend, OptimizationResult)>,
    /// `t_pade / t_redo` per iteration when both backends ran.
    pub speedup: Option<f64>,
    pub max_trace_difference: Option<f64>,
}

pub fn grape_cmd(ctx: &Context) -> anyhow::Result<GrapeSummary> {
    let cfg = grape_config(&ctx.loaded.config.grape, ctx.seed)?;
    let both = ctx.backends.contains(&Backend::Redo) && ctx.backends.contains(&Backend::Pade);
    let summary = if both {
        let rep = benchmark_iteration(&cfg, cfg.max_iterations)?;
        eprintln!(
            "grape: redo {:.3e} s/it, pade {:.3e} s/it, ratio {:.2}, max trace difference {:.2e}",
            rep.t_redo,
            rep.t_pade,
            rep.speedup(),
            rep.max_trace_difference
        );
        GrapeSummary {
            speedup: Some(rep.speedup()),
            max_trace_difference: Some(rep.max_trace_difference),
            runs: vec![(Backend::Redo, rep.redo), (Backend::Pade, rep.pade)],
        }
    } else {
        let mut runs = Vec::new();
        for &b in &ctx.backends {
            let mut c = cfg.clone();
            c.backend = b;
            runs.push((b, Grape::new(c)?.run()?));
        }
        GrapeSummary {
            runs,
            speedup: None,
            max_trace_difference: None,
        }
    };

    let mut cols = vec!["iteration".to_string()];
    for (b, _) in &summary.runs {
        cols.push(format!("fidelity_{}", b.name()));
        cols.push(format!("seconds_{}", b.name()));
    }
    let mut trace = Csv::new(&cols);
    let len = summary.runs.iter().map(|(_, r)| r.fidelity.len()).max().unwrap_or(0);
    for i in 0..len {
        let mut row = vec![i.to_string()];
        for (_, r) in &summary.runs {
            row.push(r.fidelity.get(i).map_or(String::new(), |f| format!("{f:.12}")));
            let secs = if i == 0 {
                None
            } else {
                r.iteration_seconds().get(i - 1).copied()
            };
            row.push(secs.map_or(String::new(), |s| format!("{s:e}")));
        }
        trace.push(row);
    }
    ctx.write(&trace, "grape_trace.csv")?;

    let mut s = Csv::new(&[
        "backend",
        "iterations",
        "final_fidelity",
        "stop",
        "median_iteration_s",
        "table_build_s",
        "exponentials_avoided",
    ]);
    for (b, r) in &summary.runs {
        let mut it = r.iteration_seconds();
        it.sort_by(f64::total_cmp);
        let med = it.get(it.len() / 2).copied().unwrap_or(0.0);
        s.push([
            b.name().to_string(),
            r.iterations().to_string(),
            format!("{:.12}", r.final_fidelity()),
            format!("{:?}", r.stop),
            format!("{med:e}"),
            format!("{:e}", r.table_build_seconds),
            r.exponentials_avoided.to_string(),
        ]);
    }
    ctx.write(&s, "grape_summary.csv")?;

    if let Some((b, r)) = summary.runs.first() {
        let mut c = Csv::new(&["segment", "channel", "amplitude_rad_s", "phase_rad"]);
        for n in 0..r.controls.n_segments() {
            for k in 0..r.controls.n_channels() {
                c.push([
                    n.to_string(),
                    k.to_string(),
                    format!("{:.12e}", r.controls.amplitude(n, k)),
                    format!("{:.12}", r.controls.phase(n, k)),
                ]);
            }
        }
        ctx.write(&c, &format!("grape_controls_{}.csv", b.name()))?;
    }
    Ok(summary)
}

pub fn freeze_config(f: &FreezeSection, seed: u64) -> Result<FreezeConfig, ConfigError> {
    let mut cfg = FreezeConfig::standard(
        linspace(f.omega_min, f.omega_max, f.n_omega),
        linspace(f.lambda_min, f.lambda_max, f.n_lambda),
        f.n_time_points,
    );
    cfg.n_spins = f.n_spins;
    cfg.h0 = f.h0();
    cfg.j = f.j();
    cfg.total_time = f.total_time();
    cfg.base = f.base;
    cfg.low = f.low;
    cfg.high = f.high;
    cfg.periodic = f.periodic;
    cfg.frame_time = parse_frame(&f.frame)?;
    cfg.seed = seed;
    cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
    Ok(cfg)
}

#[derive(Debug)]
pub struct FreezeSummary {
    pub surfaces: Vec<QSurface>,
    /// `t_pade / t_redo` over the sweep, table build excluded.
    pub speedup: Option<f64>,
    pub max_difference: Option<f64>,
    /// λ = 0 peaks of the first surface and of the theory curve, rad/s.
    pub peaks: Vec<f64>,
    pub theory_peaks: Vec<f64>,
}

pub fn freeze_cmd(ctx: &Context) -> anyhow::Result<FreezeSummary> {
    let mut section = ctx.loaded.config.freeze.clone();
    if ctx.full_scale {
        section.full_scale();
        eprintln!(
            "warning: full-scale freezing sweep ({} × {} cells, {} time points) runs for hours",
            section.n_omega, section.n_lambda, section.n_time_points
        );
    }
    let cfg = freeze_config(&section, ctx.seed)?;
    let mut surfaces = Vec::new();
    for &b in &ctx.backends {
        let sim = FreezeSimulator::new(cfg.clone(), b)?;
        let s = sim.sweep()?;
        eprintln!(
            "freeze: {} {} cells in {:.3} s (table {:.3} s)",
            b.name(),
            s.q.len(),
            s.total_seconds,
            s.table_build_seconds
        );
        let mut cols = vec!["omega".to_string()];
        cols.extend(cfg.lambdas.iter().map(|l| format!("lambda={l}")));
        let mut csv = Csv::new(&cols);
        for (i, w) in cfg.omegas.iter().enumerate() {
            let mut row = vec![w.to_string()];
            row.extend((0..cfg.lambdas.len()).map(|j| format!("{:.12}", s.get(i, j))));
            csv.push(row);
        }
        ctx.write(&csv, &format!("q_surface_{}.csv", b.name()))?;
        surfaces.push(s);
    }

    let theory: Vec<f64> = cfg.omegas.iter().map(|&w| q_theory(w, cfg.h0)).collect();
    let mut t = Csv::new(&["omega", "q_theory"]);
    for (w, q) in cfg.omegas.iter().zip(&theory) {
        t.push([w.to_string(), format!("{q:.15}")]);
    }
    ctx.write(&t, "q_theory.csv")?;

    let mut timing = Csv::new(&[
        "backend",
        "cells",
        "total_s",
        "seconds_per_cell",
        "table_build_s",
        "saturations",
    ]);
    for s in &surfaces {
        timing.push([
            s.backend.name().to_string(),
            s.q.len().to_string(),
            format!("{:e}", s.total_seconds),
            format!("{:e}", s.cell_seconds_total() / s.q.len() as f64),
            format!("{:e}", s.table_build_seconds),
            s.saturations.to_string(),
        ]);
    }
    ctx.write(&timing, "freeze_timing.csv")?;

    let by = |b: Backend| surfaces.iter().find(|s| s.backend == b);
    let (speedup, max_difference) = match (by(Backend::Redo), by(Backend::Pade)) {
        (Some(r), Some(p)) => (
            Some(p.total_seconds / r.total_seconds),
            r.max_abs_difference(p),
        ),
        _ => (None, None),
    };
    if let (Some(s), Some(d)) = (speedup, max_difference) {
        eprintln!("freeze: pade/redo time ratio {s:.2}, max |ΔQ| {d:.3e}");
    }
    let zero = cfg.lambdas.iter().position(|&l| l == 0.0);
    let peaks = match (zero, surfaces.first()) {
        (Some(j), Some(s)) => local_maxima(&s.column(j))
            .into_iter()
            .map(|i| cfg.omegas[i])
            .collect(),
        _ => vec![],
    };
    let theory_peaks = local_maxima(&theory)
        .into_iter()
        .map(|i| cfg.omegas[i])
        .collect();
    Ok(FreezeSummary {
        surfaces,
        speedup,
        max_difference,
        peaks,
        theory_peaks,
    })
}

pub fn table_spec(t: &TableSection) -> Result<CoarseGrainSpec, ConfigError> {
    let low = t.precision.log(t.base as f64).round() as i32;
    CoarseGrainSpec::covering(t.base, low, t.max_amplitude, t.dt, false)
        .map_err(|e| ConfigError(e.to_string()))
}

/// Builds the configured table and saves it; returns the file path.
pub fn table_build(ctx: &Context) -> anyhow::Result<PathBuf> {
    let t = &ctx.loaded.config.table;
    let spec = table_spec(t)?;
    let table = DiscreteOperatorTable::build(spec, collective_x(t.n_spins)?, ExpmMethod::Eigen)?;
    std::fs::create_dir_all(&ctx.out_dir)?;
    let path = ctx.out_dir.join(&t.file);
    table.save(&path)?;
    eprintln!("wrote {}", path.display());
    Ok(path)
}

pub fn table_info(path: &Path) -> anyhow::Result<String> {
    let t = DiscreteOperatorTable::load(path)?;
    let s = t.spec();
    Ok(format!(
        "base {}\nlow {}\nhigh {}\nprecision {}\nmax_coefficient {}\ndt {}\nsigned {}\nmethod {}\ndim {}\noperators {}\nframe {}\n",
        s.base(),
        s.low(),
        s.high(),
        s.precision(),
        s.max_coefficient(),
        s.dt(),
        s.signed(),
        t.method().name(),
        t.dim(),
        t.len(),
        t.frame().is_some(),
    ))
}

/// Writes every stored operator as `(level, digit, row, col, re, im)` rows.
pub fn table_export(ctx: &Context, path: &Path, name: &str) -> anyhow::Result<PathBuf> {
    let t = DiscreteOperatorTable::load(path)?;
    let s = *t.spec();
    let mut csv = Csv::new(&["level", "digit", "row", "col", "re", "im"]);
    for level in s.low()..=s.high() {
        for digit in 1..s.base() {
            let op = t.operator(level, digit).expect("digit within table");
            for i in 0..op.dim() {
                for j in 0..op.dim() {
                    let v = op[(i, j)];
                    csv.push([
                        level.to_string(),
                        digit.to_string(),
                        i.to_string(),
                        j.to_string(),
                        format!("{:e}", v.re),
                        format!("{:e}", v.im),
                    ]);
                }
            }
        }
    }
    ctx.write(&csv, name)
}

/// Verifies a table file and copies it into the output directory.
pub fn table_import(ctx: &Context, path: &Path) -> anyhow::Result<PathBuf> {
    let t = DiscreteOperatorTable::load(path)?;
    std::fs::create_dir_all(&ctx.out_dir)?;
    let dest = ctx.out_dir.join(path.file_name().unwrap_or_else(|| "table.redo".as_ref()));
    t.save(&dest)?;
    eprintln!("imported {} operators into {}", t.len(), dest.display());
    Ok(dest)
}

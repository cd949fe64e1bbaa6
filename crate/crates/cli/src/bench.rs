//! Per-propagator timing of the exponentiation methods and the cost-model scan.

use std::hint::black_box;
use std::time::Instant;

use rand::Rng;
use redo::linalg::{expm, ComplexMatrix, ExpmMethod, C64};
use redo::redo::{cost_for_ratio, trace_fidelity, CoarseGrainSpec, DiscreteOperatorTable, MemoPolicy};
use redo::rng;
use redo::spin::{Axis, SpinSystem};

use crate::config::ExpmBenchConfig;
use crate::ConfigError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostRow {
    pub base: u32,
    pub low: i32,
    pub high: i32,
    pub multiplications: usize,
    pub stored: usize,
}

pub fn cost_model_rows(bases: &[u32], ratio: f64) -> Result<Vec<CostRow>, redo::RedoError> {
    bases
        .iter()
        .map(|&b| {
            let (low, high, c) = cost_for_ratio(b, ratio)?;
            Ok(CostRow {
                base: b,
                low,
                high,
                multiplications: c.multiplications,
                stored: c.stored,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Ed,
    Taylor,
    Pade,
    Redo,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ed => "ed",
            Method::Taylor => "taylor",
            Method::Pade => "pade",
            Method::Redo => "redo",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "ed" => Ok(Method::Ed),
            "taylor" => Ok(Method::Taylor),
            "pade" => Ok(Method::Pade),
            "redo" => Ok(Method::Redo),
            other => Err(ConfigError(format!("unknown method {other:?}"))),
        }
    }
}

/// Wall time per propagator for one method and system size.
#[derive(Clone, Debug)]
pub struct TimingRecord {
    pub method: String,
    pub qubits: usize,
    pub samples: usize,
    pub median: f64,
    pub mean: f64,
    pub min: f64,
}

impl TimingRecord {
    pub fn from_samples(method: &str, qubits: usize, times: &[f64]) -> Self {
        let mut v = times.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        Self {
            method: method.to_string(),
            qubits,
            samples: n,
            median,
            mean: v.iter().sum::<f64>() / n as f64,
            min: v[0],
        }
    }
}

/// 1−F of the table propagator against Padé for one size.
#[derive(Clone, Debug)]
pub struct DeviationRow {
    pub qubits: usize,
    pub samples: usize,
    pub max_infidelity: f64,
    pub mean_infidelity: f64,
    pub max_multiplications: u64,
}

#[derive(Clone, Debug, Default)]
pub struct ExpmBenchReport {
    pub timings: Vec<TimingRecord>,
    pub deviations: Vec<DeviationRow>,
    /// `(qubits, seconds)`
    pub table_builds: Vec<(usize, f64)>,
}

impl ExpmBenchReport {
    pub fn timing(&self, method: &str, qubits: usize) -> Option<&TimingRecord> {
        self.timings
            .iter()
            .find(|t| t.method == method && t.qubits == qubits)
    }
}

pub fn collective_x(qubits: usize) -> Result<ComplexMatrix, redo::spin::SpinError> {
    SpinSystem::homonuclear(vec![0.0; qubits])?.collective_op(0, Axis::X)
}

pub fn expm_bench(cfg: &ExpmBenchConfig, seed: u64) -> anyhow::Result<ExpmBenchReport> {
    let methods: Vec<Method> = cfg
        .methods
        .iter()
        .map(|m| Method::parse(m))
        .collect::<Result<_, _>>()?;
    if cfg.samples == 0 {
        return Err(ConfigError("expm_bench.samples must be positive".into()).into());
    }
    let low = cfg.precision.log(cfg.base as f64).round() as i32;
    let spec = CoarseGrainSpec::covering(cfg.base, low, cfg.max_amplitude, cfg.dt, false)
        .map_err(|e| ConfigError(e.to_string()))?;
    let mut report = ExpmBenchReport::default();
    for &n in &cfg.qubits {
        let s = collective_x(n)?;
        let mut r = rng::seeded(rng::sub_seed(seed, n as u64, 0));
        let omegas: Vec<f64> = (0..cfg.samples)
            .map(|_| r.random_range(0.0..=cfg.max_amplitude))
            .collect();
        let a_of = |w: f64| s.scale(C64::new(0.0, -w * cfg.dt));

        let start = Instant::now();
        let memo = if cfg.memo {
            MemoPolicy::Unbounded
        } else {
            MemoPolicy::Disabled
        };
        let table = DiscreteOperatorTable::build(spec, s.clone(), ExpmMethod::Eigen)?.with_memo(memo);
        report.table_builds.push((n, start.elapsed().as_secs_f64()));

        for &m in &methods {
            let call = |w: f64| -> anyhow::Result<()> {
                match m {
                    Method::Ed => drop(black_box(expm(ExpmMethod::Eigen, &a_of(w))?)),
                    Method::Taylor => drop(black_box(expm(ExpmMethod::Taylor, &a_of(w))?)),
                    Method::Pade => drop(black_box(expm(ExpmMethod::Pade, &a_of(w))?)),
                    Method::Redo => drop(black_box(table.propagator_for(w)?)),
                }
                Ok(())
            };
            for &w in omegas.iter().cycle().take(cfg.warmup) {
                call(w)?;
            }
            let mut times = Vec::with_capacity(omegas.len());
            for &w in &omegas {
                let t = Instant::now();
                call(w)?;
                times.push(t.elapsed().as_secs_f64());
            }
            report
                .timings
                .push(TimingRecord::from_samples(m.name(), n, &times));
        }

        if methods.contains(&Method::Redo) {
            table.reset_stats();
            let mut worst: f64 = 0.0;
            let mut sum = 0.0;
            let mut max_mults = 0;
            for &w in &omegas {
                let before = table.stats().multiplications;
                let u = table.propagator_for(w)?;
                max_mults = max_mults.max(table.stats().multiplications - before);
                let exact = expm(ExpmMethod::Pade, &a_of(w))?;
                let d = 1.0 - trace_fidelity(&exact, &u)?;
                worst = worst.max(d);
                sum += d;
            }
            report.deviations.push(DeviationRow {
                qubits: n,
                samples: omegas.len(),
                max_infidelity: worst,
                mean_infidelity: sum / omegas.len() as f64,
                max_multiplications: max_mults,
            });
        }
    }
    Ok(report)
}

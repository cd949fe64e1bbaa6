//! TOML run configuration. Unknown keys are rejected; relative paths are
//! resolved against the directory holding the config file.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::ConfigError;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub backends: Option<Vec<String>>,
    pub cost_model: CostModelConfig,
    pub expm_bench: ExpmBenchConfig,
    pub grape: GrapeSection,
    pub freeze: FreezeSection,
    pub table: TableSection,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostModelConfig {
    pub bases: Vec<u32>,
    /// `Ω_max / ε`
    pub ratio: f64,
}

impl Default for CostModelConfig {
    fn default() -> Self {
        Self {
            bases: (2..=512).collect(),
            ratio: 64f64.powi(3),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpmBenchConfig {
    pub qubits: Vec<usize>,
    pub methods: Vec<String>,
    pub samples: usize,
    pub warmup: usize,
    /// rad/s
    pub max_amplitude: f64,
    pub precision: f64,
    pub dt: f64,
    pub base: u32,
    /// Memoize assembled products; random amplitudes rarely repeat.
    pub memo: bool,
}

impl Default for ExpmBenchConfig {
    fn default() -> Self {
        Self {
            qubits: (1..=6).collect(),
            methods: ["ed", "taylor", "pade", "redo"].map(String::from).to_vec(),
            samples: 10_000,
            warmup: 200,
            max_amplitude: 2.6e5,
            precision: 1.0,
            dt: 5e-6,
            base: 64,
            memo: false,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrapeSection {
    pub offsets_hz: Vec<f64>,
    /// `(i, j, J)` scalar couplings in Hz, zero-based spin indices.
    pub couplings_hz: Vec<(usize, usize, f64)>,
    /// `random`, `identity`, `not` (on spin 0) or `cnot` (spins 0, 1).
    pub target: String,
    pub n_segments: usize,
    pub dt: f64,
    pub max_amplitude_hz: f64,
    pub base: u32,
    pub low: i32,
    pub iterations: usize,
    pub goal: f64,
    pub step_size: f64,
    /// `midpoint` or `end`
    pub frame: String,
}

impl Default for GrapeSection {
    fn default() -> Self {
        Self {
            offsets_hz: vec![120.0, -80.0, 45.0],
            couplings_hz: vec![(0, 1, 20.0), (1, 2, 12.0)],
            target: "random".into(),
            n_segments: 100,
            dt: 5e-6,
            max_amplitude_hz: 5e3,
            base: 512,
            low: 0,
            iterations: 50,
            goal: 0.999,
            step_size: 0.5,
            frame: "midpoint".into(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FreezeSection {
    pub n_spins: usize,
    /// rad/s; defaults to `h0 / 20`
    pub j: Option<f64>,
    /// rad/s; defaults to `5π`
    pub h0: Option<f64>,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_omega: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub n_lambda: usize,
    /// s; defaults to `20π`
    pub total_time: Option<f64>,
    pub n_time_points: usize,
    pub base: u32,
    pub low: i32,
    pub high: i32,
    pub periodic: bool,
    pub frame: String,
}

impl Default for FreezeSection {
    fn default() -> Self {
        Self {
            n_spins: 3,
            j: None,
            h0: None,
            omega_min: 1.0,
            omega_max: 25.0,
            n_omega: 50,
            lambda_min: 0.0,
            lambda_max: 1.0,
            n_lambda: 5,
            total_time: None,
            n_time_points: 2000,
            base: 100,
            low: -2,
            high: -1,
            periodic: false,
            frame: "midpoint".into(),
        }
    }
}

impl FreezeSection {
    pub fn h0(&self) -> f64 {
        self.h0.unwrap_or(5.0 * PI)
    }

    pub fn j(&self) -> f64 {
        self.j.unwrap_or(self.h0() / 20.0)
    }

    pub fn total_time(&self) -> f64 {
        self.total_time.unwrap_or(20.0 * PI)
    }

    /// 500 ω × 1000 λ × 10⁴ time points.
    pub fn full_scale(&mut self) {
        self.n_omega = 500;
        self.n_lambda = 1000;
        self.n_time_points = 10_000;
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TableSection {
    pub n_spins: usize,
    pub max_amplitude: f64,
    pub precision: f64,
    pub dt: f64,
    pub base: u32,
    pub file: PathBuf,
}

impl Default for TableSection {
    fn default() -> Self {
        Self {
            n_spins: 2,
            max_amplitude: 2.6e5,
            precision: 1.0,
            dt: 5e-6,
            base: 64,
            file: PathBuf::from("table.redo"),
        }
    }
}

/// Parsed config plus the raw text and its directory.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub text: String,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn defaults() -> Self {
        Self {
            config: RunConfig::default(),
            text: String::new(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let mut loaded = Self::parse(&text)?;
        loaded.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(loaded)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        Ok(Self {
            config,
            text: text.to_string(),
            base_dir: PathBuf::from("."),
        })
    }

    /// `path` if absolute, otherwise relative to the config directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }
}

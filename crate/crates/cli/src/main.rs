use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use redo::Backend;
use redo_cli::commands::{self, Context};
use redo_cli::config::LoadedConfig;
use redo_cli::output::RunMetadata;
use redo_cli::{exit_code, ConfigError};

#[derive(Parser, Debug)]
#[command(name = "redo", version, about = "Discrete-operator matrix exponentiation benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config; relative paths inside it resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default `results`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// redo, pade or both
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Full-size freezing grid (500 x 1000 x 10^4); slow.
    #[arg(long, global = true)]
    full_scale: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Multiplications and stored operators versus base.
    CostModel,
    /// Time per propagator for ed, taylor, pade and redo.
    ExpmBench,
    /// Pulse optimization, optionally on both backends.
    Grape,
    /// Dynamical freezing sweep over (ω, λ).
    Freeze,
    /// Build, inspect, export or import operator tables.
    Table {
        #[command(subcommand)]
        action: TableAction,
    },
}

#[derive(Subcommand, Debug)]
enum TableAction {
    Build,
    Info { path: PathBuf },
    Export { path: PathBuf, #[arg(default_value = "table_operators.csv")] name: String },
    Import { path: PathBuf },
}

fn parse_backends(s: &str) -> Result<Vec<Backend>, ConfigError> {
    match s {
        "both" => Ok(vec![Backend::Redo, Backend::Pade]),
        other => other
            .parse::<Backend>()
            .map(|b| vec![b])
            .map_err(|_| ConfigError(format!("unknown backend {other:?}"))),
    }
}

fn context(cli: &Cli) -> anyhow::Result<Context> {
    let loaded = match &cli.config {
        Some(p) => LoadedConfig::load(p)?,
        None => LoadedConfig::defaults(),
    };
    let cfg = &loaded.config;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let out_dir = match (&cli.out, &cfg.out) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => loaded.resolve(p),
        (None, None) => PathBuf::from("results"),
    };
    let backends = match (&cli.backend, &cfg.backends) {
        (Some(s), _) => parse_backends(s)?,
        (None, Some(list)) => {
            let mut v = Vec::new();
            for s in list {
                v.extend(parse_backends(s)?);
            }
            v.dedup();
            v
        }
        (None, None) => vec![Backend::Redo, Backend::Pade],
    };
    if backends.is_empty() {
        return Err(ConfigError("no backend selected".into()).into());
    }
    if let Some(n) = cli.threads.or(cfg.threads) {
        if n == 0 {
            return Err(ConfigError("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ConfigError(e.to_string()))?;
    }
    let command_line = std::env::args().collect::<Vec<_>>().join(" ");
    let meta = RunMetadata::new(command_line, seed, &loaded.text);
    Ok(Context {
        loaded,
        out_dir,
        seed,
        backends,
        full_scale: cli.full_scale,
        meta,
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let ctx = context(&cli)?;
    match &cli.command {
        Command::CostModel => {
            for r in commands::cost_model(&ctx)? {
                if r.base == 64 {
                    println!("b=64: p={} s={}", r.multiplications, r.stored);
                }
            }
        }
        Command::ExpmBench => {
            let rep = commands::expm_bench_cmd(&ctx)?;
            for t in &rep.timings {
                println!("{:>6} n={} median {:.3e} s mean {:.3e} s", t.method, t.qubits, t.median, t.mean);
            }
        }
        Command::Grape => {
            let s = commands::grape_cmd(&ctx)?;
            for (b, r) in &s.runs {
                println!("{}: F = {:.6} after {} iterations", b.name(), r.final_fidelity(), r.iterations());
            }
            if let Some(x) = s.speedup {
                println!("pade/redo per-iteration ratio {x:.2}");
            }
        }
        Command::Freeze => {
            let s = commands::freeze_cmd(&ctx)?;
            println!("λ=0 peaks: {:?}", s.peaks);
            println!("theory peaks: {:?}", s.theory_peaks);
            if let Some(x) = s.speedup {
                println!("pade/redo time ratio {x:.2}");
            }
        }
        Command::Table { action } => match action {
            TableAction::Build => {
                commands::table_build(&ctx)?;
            }
            TableAction::Info { path } => print!("{}", commands::table_info(path)?),
            TableAction::Export { path, name } => {
                commands::table_export(&ctx, path, name)?;
            }
            TableAction::Import { path } => {
                commands::table_import(&ctx, path)?;
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => redo_cli::EXIT_CONFIG,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

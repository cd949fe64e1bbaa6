use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use redo::freeze::q_theory;
use redo_cli::output::data_lines;

fn redo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_redo"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) {
    fs::write(
        dir.join("run.toml"),
        r#"
seed = 11
out = "res"

[cost_model]
bases = [2, 4, 8, 16, 32, 64, 128, 512, 4096, 262144]

[expm_bench]
qubits = [1, 2]
samples = 200
warmup = 10

[grape]
offsets_hz = [120.0, -80.0]
couplings_hz = [[0, 1, 20.0]]
iterations = 20

[freeze]
n_omega = 6
n_lambda = 3
n_time_points = 200

[table]
n_spins = 1
"#,
    )
    .unwrap();
}

fn read_data(path: &Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    data_lines(&text).into_iter().map(String::from).collect()
}

#[test]
fn cost_model_rows_and_header() {
    let tmp = tempfile::tempdir().unwrap();
    small_config(tmp.path());
    let out = redo(tmp.path(), &["cost-model", "--config", "run.toml"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("b=64: p=2 s=189"));

    let path = tmp.path().join("res/cost_model.csv");
    let text = fs::read_to_string(&path).unwrap();
    for key in ["# tool: redo", "# command:", "# seed: 11", "# config_sha256:", "# date:"] {
        assert!(text.contains(key), "missing {key}");
    }
    let rows: Vec<Vec<u64>> = read_data(&path)[1..]
        .iter()
        .map(|l| l.split(',').map(|v| v.parse::<i64>().unwrap() as u64).collect())
        .collect();
    // p never increases with the base
    assert!(rows.windows(2).all(|w| w[1][3] <= w[0][3]));
    // b equal to the ratio: one level of b−1 operators, no products
    let last = rows.last().unwrap();
    assert_eq!(last[0], 262144);
    assert_eq!(last[3], 0);
    assert_eq!(last[4], 262144 - 1);
}

#[test]
fn outputs_are_reproducible_and_thread_independent() {
    let tmp = tempfile::tempdir().unwrap();
    small_config(tmp.path());
    let a = redo(tmp.path(), &["freeze", "--config", "run.toml", "--out", "a", "--threads", "1"]);
    let b = redo(tmp.path(), &["freeze", "--config", "run.toml", "--out", "b", "--threads", "3"]);
    assert!(a.status.success() && b.status.success());
    for name in ["q_surface_redo.csv", "q_surface_pade.csv", "q_theory.csv"] {
        assert_eq!(
            read_data(&tmp.path().join("a").join(name)),
            read_data(&tmp.path().join("b").join(name)),
            "{name}"
        );
    }
    let c = redo(tmp.path(), &["freeze", "--config", "run.toml", "--out", "c", "--seed", "12"]);
    assert!(c.status.success());
    let surface = |d: &str| read_data(&tmp.path().join(d).join("q_surface_redo.csv"));
    // the λ = 0 column ignores the noise seed, the others do not
    let col = |rows: &[String], j: usize| -> Vec<String> {
        rows[1..].iter().map(|r| r.split(',').nth(j).unwrap().to_string()).collect()
    };
    assert_eq!(col(&surface("a"), 1), col(&surface("c"), 1));
    assert_ne!(col(&surface("a"), 2), col(&surface("c"), 2));
}

#[test]
fn theory_csv_matches_formula() {
    let tmp = tempfile::tempdir().unwrap();
    small_config(tmp.path());
    let out = redo(tmp.path(), &["freeze", "--config", "run.toml", "--backend", "redo"]);
    assert!(out.status.success());
    assert!(!tmp.path().join("res/q_surface_pade.csv").exists());
    let h0 = 5.0 * std::f64::consts::PI;
    for row in &read_data(&tmp.path().join("res/q_theory.csv"))[1..] {
        let v: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] - q_theory(v[0], h0)).abs() <= 1e-10);
    }
    let timing = read_data(&tmp.path().join("res/freeze_timing.csv"));
    assert_eq!(timing.len(), 2);
    assert!(timing[1].starts_with("redo,18,"));
}

#[test]
fn grape_dual_backend_traces_agree() {
    let tmp = tempfile::tempdir().unwrap();
    small_config(tmp.path());
    let out = redo(tmp.path(), &["grape", "--config", "run.toml"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = read_data(&tmp.path().join("res/grape_trace.csv"));
    assert_eq!(trace[0], "iteration,fidelity_redo,seconds_redo,fidelity_pade,seconds_pade");
    for row in &trace[1..] {
        let f: Vec<&str> = row.split(',').collect();
        let (r, p): (f64, f64) = (f[1].parse().unwrap(), f[3].parse().unwrap());
        assert!((r - p).abs() <= 1e-4);
    }
    assert!(tmp.path().join("res/grape_controls_redo.csv").exists());
}

#[test]
fn identity_grape_target_stops_at_once() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("id.toml"),
        "[grape]\noffsets_hz = [0.0]\ncouplings_hz = []\ntarget = \"identity\"\nmax_amplitude_hz = 1e-9\n",
    )
    .unwrap();
    let out = redo(tmp.path(), &["grape", "--config", "id.toml", "--backend", "pade"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_data(&tmp.path().join("results/grape_summary.csv"));
    let f: Vec<&str> = summary[1].split(',').collect();
    assert_eq!(f[0], "pade");
    assert_eq!(f[1], "0");
    assert!((f[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(f[3], "Goal");
}

#[test]
fn expm_bench_reports_deviation_and_builds() {
    let tmp = tempfile::tempdir().unwrap();
    small_config(tmp.path());
    let out = redo(tmp.path(), &["expm-bench", "--config", "run.toml"]);
    assert!(out.status.success());
    let timing = read_data(&tmp.path().join("res/expm_timing.csv"));
    assert_eq!(timing.len(), 1 + 4 * 2 + 2);
    assert!(timing.iter().any(|r| r.starts_with("redo_table_build,2,")));
    for row in &read_data(&tmp.path().join("res/expm_deviation.csv"))[1..] {
        let f: Vec<&str> = row.split(',').collect();
        assert!(f[2].parse::<f64>().unwrap() <= 1e-8);
        assert!(f[4].parse::<u64>().unwrap() <= 2);
    }
}

#[test]
fn table_build_info_export_import() {
    let tmp = tempfile::tempdir().unwrap();
    small_config(tmp.path());
    let dir = tmp.path();
    assert!(redo(dir, &["table", "build", "--config", "run.toml"]).status.success());
    let file = dir.join("res/table.redo");
    assert!(file.exists());

    let info = redo(dir, &["table", "info", file.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&info.stdout);
    assert!(text.contains("operators 189"));
    assert!(text.contains("dim 2"));

    let exp = redo(dir, &["table", "export", file.to_str().unwrap(), "--out", "x"]);
    assert!(exp.status.success());
    assert_eq!(read_data(&dir.join("x/table_operators.csv")).len(), 1 + 189 * 4);

    assert!(redo(dir, &["table", "import", file.to_str().unwrap(), "--out", "imp"]).status.success());
    assert_eq!(fs::read(&file).unwrap(), fs::read(dir.join("imp/table.redo")).unwrap());

    // a corrupted file is a numeric failure
    let mut bytes = fs::read(&file).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xff;
    fs::write(dir.join("bad.redo"), bytes).unwrap();
    assert_eq!(redo(dir, &["table", "info", "bad.redo"]).status.code(), Some(3));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("typo.toml"), "[freeze]\nn_omgea = 3\n").unwrap();
    assert_eq!(redo(dir, &["freeze", "--config", "typo.toml"]).status.code(), Some(2));
    assert_eq!(redo(dir, &["freeze", "--backend", "gpu"]).status.code(), Some(2));
    assert_eq!(redo(dir, &["cost-model", "--config", "missing.toml"]).status.code(), Some(2));
    assert_eq!(redo(dir, &["no-such-command"]).status.code(), Some(2));
    fs::write(dir.join("neg.toml"), "[freeze]\nlambda_max = 2.0\n").unwrap();
    assert_eq!(redo(dir, &["freeze", "--config", "neg.toml"]).status.code(), Some(2));
    fs::write(dir.join("m.toml"), "[expm_bench]\nmethods = [\"svd\"]\n").unwrap();
    assert_eq!(redo(dir, &["expm-bench", "--config", "m.toml"]).status.code(), Some(2));
}

#[test]
fn out_path_resolves_against_config_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let sub = tmp.path().join("cfg");
    fs::create_dir(&sub).unwrap();
    fs::write(sub.join("c.toml"), "out = \"here\"\n[cost_model]\nbases = [64]\n").unwrap();
    let out = redo(tmp.path(), &["cost-model", "--config", "cfg/c.toml"]);
    assert!(out.status.success());
    assert!(sub.join("here/cost_model.csv").exists());
}

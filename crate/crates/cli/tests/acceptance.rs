//! Acceptance suite. Every criterion runs at its pinned tolerance and prints
//! one PASS/FAIL line; the test fails if any criterion fails.
//!
//! Run with `cargo test -p redo-cli --test acceptance -- --nocapture`.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use rand::Rng;
use redo::freeze::{linspace, local_maxima, FreezeConfig, FreezeSimulator};
use redo::grape::{benchmark_iteration, init_controls, Grape, GrapeConfig, Target};
use redo::linalg::{
    expm, expm_pade, random_hermitian, spectral_radius_hermitian, ComplexMatrix, ExpmMethod, C64,
};
use redo::redo::{cost_model, trace_fidelity, CoarseGrainSpec, DiscreteOperatorTable};
use redo::rng;
use redo::spin::{Axis, ControlOperators, ControlSequence, SpinSystem};
use redo::Backend;
use redo_cli::bench::{collective_x, expm_bench};
use redo_cli::config::ExpmBenchConfig;

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &'static str, pass: bool, detail: String, seconds: f64) -> Outcome {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {id}. {name}: {detail} ({seconds:.1} s)");
    Outcome {
        id,
        name,
        pass,
        detail,
    }
}

fn criterion_1() -> (bool, String) {
    let spec = CoarseGrainSpec::new(64, 0, 2, 2.6e5, 5e-6, false).unwrap();
    let c = cost_model(&spec);
    (
        c.multiplications == 2 && c.stored == 189,
        format!("b=64 l=0 m=2 gives p={} s={}", c.multiplications, c.stored),
    )
}

fn criterion_2() -> (bool, String) {
    let spec = CoarseGrainSpec::new(64, 0, 2, 2.6e5, 5e-6, false).unwrap();
    let mut r = rng::seeded(2);
    let mut worst: f64 = 0.0;
    for n in 1..=5 {
        let s = collective_x(n).unwrap();
        let table = DiscreteOperatorTable::build(spec, s.clone(), ExpmMethod::Eigen).unwrap();
        for _ in 0..10_000 {
            let w: f64 = r.random_range(0.0..=2.6e5);
            let u = table.propagator_for(w).unwrap();
            let exact = expm_pade(&s.scale(C64::new(0.0, -w * 5e-6))).unwrap();
            worst = worst.max(1.0 - trace_fidelity(&exact, &u).unwrap());
        }
    }
    (
        worst <= 1e-8,
        format!("worst 1-F = {worst:.3e} over 5 x 10^4 draws (limit 1e-8)"),
    )
}

fn criterion_3() -> (bool, String) {
    let cfg = ExpmBenchConfig {
        qubits: vec![4, 5, 6],
        methods: vec!["pade".into(), "redo".into()],
        samples: 10_000,
        ..Default::default()
    };
    let rep = expm_bench(&cfg, 3).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [4, 5, 6] {
        let p = rep.timing("pade", n).unwrap().mean;
        let r = rep.timing("redo", n).unwrap().mean;
        pass &= r <= 0.5 * p;
        parts.push(format!("n={n} pade/redo {:.2}", p / r));
    }
    let build: f64 = rep.table_builds.iter().map(|b| b.1).sum();
    (
        pass,
        format!("{} (need >= 2); table builds {build:.3} s", parts.join(", ")),
    )
}

fn criterion_4() -> (bool, String) {
    let mut r = rng::seeded(4);
    let mut worst: f64 = 0.0;
    for dim in [2, 4, 8, 16, 32, 64] {
        for _ in 0..50 {
            let h = random_hermitian(dim, &mut r);
            let norm: f64 = r.random_range(0.1..=50.0);
            let h = h.scale_real(norm / spectral_radius_hermitian(&h).unwrap());
            let a = h.scale(C64::new(0.0, -1.0));
            let p = expm(ExpmMethod::Pade, &a).unwrap();
            let e = expm(ExpmMethod::Eigen, &a).unwrap();
            let t = expm(ExpmMethod::Taylor, &a).unwrap();
            for d in [p.frob_dist(&e), p.frob_dist(&t), e.frob_dist(&t)] {
                worst = worst.max(d.unwrap());
            }
        }
    }
    (
        worst <= 1e-9,
        format!("worst pairwise frob distance {worst:.3e} (limit 1e-9)"),
    )
}

fn random_unitary(dim: usize, r: &mut rng::Rng) -> ComplexMatrix {
    expm_pade(&random_hermitian(dim, r).scale(C64::new(0.0, -1.0))).unwrap()
}

fn finite_difference(g: &Grape, c: &ControlSequence, wmax: f64) -> (Vec<f64>, Vec<f64>) {
    let f = |c: &ControlSequence| g.fidelity_of(&g.total_propagator(c).unwrap()).unwrap();
    let shifted = |amp: bool, i: usize, h: f64| {
        let mut a = c.amplitudes().to_vec();
        let mut p = c.phases().to_vec();
        if amp {
            a[i] += h;
        } else {
            p[i] += h;
        }
        ControlSequence::new(c.n_segments(), c.n_channels(), c.dt(), a, p).unwrap()
    };
    let n = c.amplitudes().len();
    let (ha, hp) = (1e-6 * wmax, 1e-6);
    let amp = (0..n)
        .map(|i| (f(&shifted(true, i, ha)) - f(&shifted(true, i, -ha))) / (2.0 * ha))
        .collect();
    let phase = (0..n)
        .map(|i| (f(&shifted(false, i, hp)) - f(&shifted(false, i, -hp))) / (2.0 * hp))
        .collect();
    (amp, phase)
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn criterion_5() -> (bool, String) {
    let mut r = rng::seeded(5);
    let mut worst: f64 = 0.0;
    let mut in_regime = true;
    for case in 0..20 {
        let n = 1 + case % 2;
        let offsets: Vec<f64> = (0..n).map(|_| r.random_range(-300.0..300.0)).collect();
        let scalar = if n == 2 {
            vec![(0, 1, r.random_range(-40.0..40.0))]
        } else {
            vec![]
        };
        let sys = SpinSystem::new(offsets, scalar, vec![], vec![0; n]).unwrap();
        let target = Target::Gate(random_unitary(sys.dim(), &mut r));
        let mut cfg = GrapeConfig::new(sys, target, 8, 1e-4, 500.0).unwrap();
        cfg.backend = Backend::Pade;
        cfg.seed = r.random();
        let c = init_controls(&cfg);
        let ops = ControlOperators::new(&cfg.system);
        for k in 0..c.n_segments() {
            let (a, p) = c.segment(k);
            let h = ops.hamiltonian(a, p).unwrap();
            in_regime &= cfg.dt * spectral_radius_hermitian(&h).unwrap() <= 0.1;
        }
        let g = Grape::new(cfg).unwrap();
        let an = g.gradient(&c).unwrap();
        let (fa, fp) = finite_difference(&g, &c, 500.0);
        worst = worst
            .max(relative_error(&an.amplitude, &fa))
            .max(relative_error(&an.phase, &fp));
    }

    let sys = SpinSystem::homonuclear(vec![0.0]).unwrap();
    let sx = sys.collective_op(0, Axis::X).unwrap();
    let not = expm_pade(&sx.scale(C64::new(0.0, -PI))).unwrap();
    let mut cfg = GrapeConfig::new(sys.clone(), Target::Gate(not), 50, 5e-6, 2.6e5).unwrap();
    cfg.goal = 0.99;
    cfg.seed = 1;
    let not_f = Grape::new(cfg).unwrap().run().unwrap().final_fidelity();

    let cfg = GrapeConfig::new(sys, Target::Gate(ComplexMatrix::identity(2)), 50, 5e-6, 2.6e5).unwrap();
    let zero = ControlSequence::zeros(50, 1, 5e-6).unwrap();
    let id = Grape::new(cfg).unwrap().run_from(zero).unwrap();
    let id_ok = (id.fidelity[0] - 1.0).abs() < 1e-12 && id.iterations() == 0;

    (
        in_regime && worst <= 1e-3 && not_f >= 0.99 && id_ok,
        format!(
            "gradient rel. error {worst:.2e} (limit 1e-3), NOT F = {not_f:.5}, identity F0 = {:.15}",
            id.fidelity[0]
        ),
    )
}

fn criterion_6() -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut r = rng::seeded(6);
    let systems = [
        (vec![120.0, -80.0, 45.0], vec![(0, 1, 20.0), (1, 2, 12.0)]),
        (
            vec![120.0, -80.0, 45.0, -150.0],
            vec![(0, 1, 20.0), (1, 2, 12.0), (2, 3, 15.0)],
        ),
    ];
    for (offsets, couplings) in systems {
        let n = offsets.len();
        let sys = SpinSystem::new(
            offsets.iter().map(|f| TAU * f).collect(),
            couplings,
            vec![],
            vec![0; n],
        )
        .unwrap();
        let target = Target::Gate(random_unitary(sys.dim(), &mut r));
        let mut cfg = GrapeConfig::new(sys, target, 100, 5e-6, TAU * 5e3)
            .unwrap()
            .with_base(512, 0)
            .unwrap();
        cfg.seed = 60 + n as u64;
        // median over repeated runs; single runs are sensitive to scheduler noise
        let mut ratios = Vec::new();
        let mut diff: f64 = 0.0;
        let mut iterations = 0;
        for _ in 0..5 {
            let rep = benchmark_iteration(&cfg, 50).unwrap();
            ratios.push(rep.speedup());
            diff = diff.max(rep.max_trace_difference);
            iterations = rep.redo.iterations();
        }
        ratios.sort_by(f64::total_cmp);
        let ratio = ratios[2];
        pass &= ratio >= 2.0 && diff <= 1e-4;
        parts.push(format!(
            "{n} qubits pade/redo {ratio:.2} (runs {:.2}..{:.2}, {iterations} iterations), trace diff {diff:.1e}",
            ratios[0], ratios[4]
        ));
    }
    (pass, format!("{} (need >= 2, <= 1e-4)", parts.join("; ")))
}

fn criterion_7() -> (bool, String) {
    let omegas = linspace(1.0, 25.0, 100);
    let cfg = FreezeConfig::standard(omegas.clone(), vec![0.0], 2000);
    let mut pass = true;
    let mut parts = Vec::new();
    for b in [Backend::Redo, Backend::Pade] {
        let s = FreezeSimulator::new(cfg.clone(), b).unwrap().sweep().unwrap();
        let peaks: Vec<f64> = local_maxima(&s.column(0)).iter().map(|&i| omegas[i]).collect();
        for target in [13.06, 5.69] {
            let nearest = peaks
                .iter()
                .copied()
                .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
                .unwrap_or(f64::NAN);
            let ok = (nearest - target).abs() <= 0.05 * target;
            pass &= ok;
            parts.push(format!("{} {target} -> {nearest:.3}", b.name()));
        }
    }
    (pass, format!("nearest maxima {} (within 5%)", parts.join(", ")))
}

fn criteria_8_9() -> ((bool, String), (bool, String)) {
    let mut cfg = FreezeConfig::standard(linspace(1.0, 25.0, 50), linspace(0.0, 1.0, 5), 20_000);
    cfg.seed = 8;
    let redo = FreezeSimulator::new(cfg.clone(), Backend::Redo).unwrap();
    let pade = FreezeSimulator::new(cfg, Backend::Pade).unwrap();
    let r = redo.sweep().unwrap();
    let p = pade.sweep().unwrap();
    let d = r.max_abs_difference(&p).unwrap();
    let ratio = p.total_seconds / r.total_seconds;
    (
        (
            d <= 1e-3,
            format!("max |dQ| = {d:.3e} on 50x5 cells, 20000 time points (limit 1e-3)"),
        ),
        (
            ratio >= 3.0,
            format!(
                "pade {:.2} s / redo {:.2} s = {ratio:.2} (need >= 3); table build {:.3} s",
                p.total_seconds, r.total_seconds, r.table_build_seconds
            ),
        ),
    )
}

#[test]
fn acceptance_criteria() {
    println!("\nacceptance criteria");
    let mut out = Vec::new();
    let mut timed = |id, name, f: &dyn Fn() -> (bool, String)| {
        let t = Instant::now();
        let (pass, detail) = f();
        out.push(report(id, name, pass, detail, t.elapsed().as_secs_f64()));
    };
    timed(1, "cost-model exactness", &criterion_1);
    timed(2, "coarse-graining accuracy", &criterion_2);
    timed(3, "repeated-exponentiation speedup", &criterion_3);
    timed(4, "baseline cross-validation", &criterion_4);
    timed(5, "GRAPE correctness", &criterion_5);
    timed(6, "REDO-GRAPE speedup", &criterion_6);
    timed(7, "freezing frequencies", &criterion_7);

    let t = Instant::now();
    let (c8, c9) = criteria_8_9();
    let secs = t.elapsed().as_secs_f64();
    out.push(report(8, "backend equivalence on the freezing surface", c8.0, c8.1, secs));
    out.push(report(9, "freezing-simulation speedup", c9.0, c9.1, secs));
    println!("[SKIP] 10. full 500x1000x10^4 surface and absolute wall-clock values: not a desk-scale gate");

    let failed: Vec<String> = out
        .iter()
        .filter(|o| !o.pass)
        .map(|o| format!("{}. {}: {}", o.id, o.name, o.detail))
        .collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}

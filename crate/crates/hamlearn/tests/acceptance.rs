//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `HAMLEARN_CRITERIA=1,3,5` restricts the run to the listed criteria.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use hamlearn::commands::{learn, scaling};
use hamlearn::output::OutDir;
use hamlearn::{run_command, Command, RunConfig};
use hamlearn_core::dataset::{generate_dataset, BasesSpec, Engine, SampleCounts};
use hamlearn_core::exact::{exact_evolve_times, ExactConfig};
use hamlearn_core::hamiltonian::{draw_target, Heisenberg};
use hamlearn_core::learner::{score_mean, Problem, ScoreEngine};
use hamlearn_core::linalg_ad::{svd_jvp, SvdJvpConfig, TangentBundle};
use hamlearn_core::tebd::{evolve, SimConfig};
use hamlearn_core::tensor::{svd_full, SvdFactors};
use hamlearn_core::{ComplexTensor, Mps, PauliBasis, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexTensor {
    let data = (0..rows * cols).map(|_| C64::new(r.sample(StandardNormal), r.sample(StandardNormal))).collect();
    ComplexTensor::new(&[rows, cols], data).unwrap()
}

fn matmul(a: &ComplexTensor, b: &ComplexTensor) -> ComplexTensor {
    let (m, k, n) = (a.shape()[0], a.shape()[1], b.shape()[1]);
    let mut out = vec![C64::new(0.0, 0.0); m * n];
    for i in 0..m {
        for p in 0..k {
            let x = a.data()[i * k + p];
            for j in 0..n {
                out[i * n + j] += x * b.data()[p * n + j];
            }
        }
    }
    ComplexTensor::new(&[m, n], out).unwrap()
}

fn diag(s: &ComplexTensor) -> ComplexTensor {
    ComplexTensor::from_diag(s.data())
}

fn rel(a: &ComplexTensor, b: &ComplexTensor) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm()
}

// ---------------------------------------------------------------- 1

/// Factors re-phased so the entry of `u` at each base-point pivot row is real positive.
fn regauge(f: &SvdFactors, pivots: &[usize]) -> [ComplexTensor; 3] {
    let (rows, k) = (f.u.shape()[0], f.u.shape()[1]);
    let m = f.vh.shape()[1];
    let (mut u, mut vh) = (f.u.clone(), f.vh.clone());
    for (c, &p) in pivots.iter().enumerate() {
        let z = f.u.data()[p * k + c];
        let ph = z.conj() / z.norm();
        (0..rows).for_each(|r| u.data_mut()[r * k + c] *= ph);
        (0..m).for_each(|j| vh.data_mut()[c * m + j] *= ph.conj());
    }
    let s = ComplexTensor::new(&[f.s.len()], f.s.iter().map(|&x| C64::new(x, 0.0)).collect()).unwrap();
    [u, s, vh]
}

fn svd_jvp_vs_fd() -> Outcome {
    let mut r = rng(7);
    let step = 1e-5;
    let mut worst = [0.0f64; 4];
    for trial in 0..100 {
        let (n, m) = [(20, 20), (40, 60), (60, 40)][trial % 3];
        let a = normal_matrix(&mut r, n, m);
        let da = normal_matrix(&mut r, n, m);
        let j = svd_jvp(&TangentBundle::new(a.clone(), vec![da.clone()]).unwrap(), n.min(m), &SvdJvpConfig::default()).unwrap();
        let base = svd_full(&a).unwrap();
        let k = base.u.shape()[1];
        let pivots: Vec<usize> =
            (0..k).map(|c| (0..n).max_by(|&x, &y| base.u.data()[x * k + c].norm().total_cmp(&base.u.data()[y * k + c].norm())).unwrap()).collect();
        let at = |h: f64| {
            let mut p = a.clone();
            p.axpy(C64::new(h, 0.0), &da).unwrap();
            regauge(&svd_full(&p).unwrap(), &pivots)
        };
        let (p, q) = (at(step), at(-step));
        let analytic = [&j.u.tangents[0], &j.s.tangents[0], &j.vh.tangents[0]];
        for i in 0..3 {
            let fd = p[i].sub(&q[i]).unwrap().scale(C64::new(0.5 / step, 0.0));
            worst[i] = worst[i].max(rel(analytic[i], &fd));
        }
        let (u, s, vh) = (&j.u.primal, diag(&j.s.primal), &j.vh.primal);
        let re = matmul(&matmul(analytic[0], &s), vh)
            .add(&matmul(&matmul(u, &diag(analytic[1])), vh))
            .unwrap()
            .add(&matmul(&matmul(u, &s), analytic[2]))
            .unwrap();
        worst[3] = worst[3].max(rel(&re, &da));
    }
    let pass = worst[..3].iter().all(|&w| w <= 1e-6) && worst[3] <= 1e-8;
    outcome(pass, format!("worst rel dU {:.1e}, dS {:.1e}, dV† {:.1e} (≤ 1e-6); reassembly {:.1e} (≤ 1e-8)", worst[0], worst[1], worst[2], worst[3]))
}

// ---------------------------------------------------------------- 2

/// Mean `‖df/dp − JVP‖_HS` for `f(p) = Re(U S V†)`, `USV† = SVD(exp∘(A + pB))`.
fn alpha_errors(alphas: &[f64], pairs: usize, size: usize, p: f64) -> Vec<f64> {
    let mut r = rng(2);
    let mut sums = vec![0.0; alphas.len()];
    for _ in 0..pairs {
        let mut draw = || -> Vec<C64> { (0..size * size).map(|_| C64::new(r.random(), r.random())).collect() };
        let (a, b) = (draw(), draw());
        let e: Vec<C64> = a.iter().zip(&b).map(|(x, y)| (x + y * p).exp()).collect();
        let grad: Vec<C64> = e.iter().zip(&b).map(|(x, y)| x * y).collect();
        let exact: Vec<f64> = grad.iter().map(|z| z.re).collect();
        let m = ComplexTensor::new(&[size, size], e).unwrap();
        let dm = ComplexTensor::new(&[size, size], grad).unwrap();
        let bundle = TangentBundle::new(m, vec![dm]).unwrap();
        for (i, &alpha) in alphas.iter().enumerate() {
            let cfg = SvdJvpConfig { alpha, fix_gauge: false, ..SvdJvpConfig::default() };
            let j = svd_jvp(&bundle, size, &cfg).unwrap();
            let (u, s, vh) = (&j.u.primal, diag(&j.s.primal), &j.vh.primal);
            let df = matmul(&matmul(&j.u.tangents[0], &s), vh)
                .add(&matmul(&matmul(u, &diag(&j.s.tangents[0])), vh))
                .unwrap()
                .add(&matmul(&matmul(u, &s), &j.vh.tangents[0]))
                .unwrap();
            let err: f64 = df.data().iter().zip(&exact).map(|(z, x)| (z.re - x) * (z.re - x)).sum::<f64>().sqrt();
            sums[i] += err;
        }
    }
    sums.iter().map(|s| s / pairs as f64).collect()
}

fn alpha_splitting() -> Outcome {
    let e = alpha_errors(&[0.0, 0.5, 1.0], 100, 100, 20.0);
    let pass = e[1] <= e[0] && e[1] <= e[2];
    outcome(pass, format!("mean HS error α=0: {:.4e}, α=0.5: {:.4e}, α=1: {:.4e}", e[0], e[1], e[2]))
}

// ---------------------------------------------------------------- 3

fn overlap_error(a: &[C64], b: &[C64]) -> f64 {
    1.0 - a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm()
}

fn tebd_vs_exact() -> Outcome {
    let n = 6;
    let model = Heisenberg::new(n).unwrap();
    let star = draw_target(n, 3).unwrap().to_theta();
    let exact = exact_evolve_times(&model, &star, &[1.0], &ExactConfig::default()).unwrap();
    let psi = exact[0].amplitudes();
    let tebd = |dt: f64| evolve(&Mps::product_state(n).unwrap(), &model, &star, &[1.0], &SimConfig::new(dt, 64), false).unwrap();
    let ev = tebd(0.01);
    let fid = overlap_error(psi, &ev.snapshots[0].to_statevector().unwrap());
    // χ = 64 exceeds every bond of six sites, so the error is pure Trotter error.
    let discarded = ev.snapshots[0].discarded_weight();
    let dist = |dt: f64| (2.0 * overlap_error(psi, &tebd(dt).snapshots[0].to_statevector().unwrap())).max(0.0).sqrt();
    let (e1, e2) = (dist(0.02), dist(0.01));
    let ratio = e1 / e2;
    let pass = fid <= 1e-4 && (3.0..=5.0).contains(&ratio) && discarded == 0.0;
    outcome(pass, format!("fidelity error {fid:.2e} (≤ 1e-4); state error dt 0.02 → 0.01: {e1:.3e} → {e2:.3e}, ratio {ratio:.3} (4 ± 25%); discarded {discarded:e}"))
}

// ---------------------------------------------------------------- 4

fn gradient_vs_fd() -> Outcome {
    let mut r = rng(31);
    let mut worst: f64 = 0.0;
    for trial in 0..10u64 {
        let n = 2 + (trial as usize % 5);
        let model = Heisenberg::new(n).unwrap();
        let star = draw_target(n, 50 + trial).unwrap().to_theta();
        let bases = BasesSpec::Random { count: 3, seed: trial };
        let ds = generate_dataset(&model, &star, &[0.2, 0.5], &bases, &SampleCounts::Uniform(20), &Engine::Exact(ExactConfig::default()), 60 + trial).unwrap();
        let p = Problem::new(&ds, &model, SimConfig::default()).unwrap();
        let theta: Vec<f64> = star.iter().map(|x| x + r.random_range(-0.3..0.3)).collect();
        let g = p.loss(&theta, true).unwrap().gradient.unwrap();
        let h = 1e-5;
        for i in 0..theta.len() {
            let (mut a, mut b) = (theta.clone(), theta.clone());
            a[i] += h;
            b[i] -= h;
            let fd = (p.loss(&a, false).unwrap().value - p.loss(&b, false).unwrap().value) / (2.0 * h);
            worst = worst.max((g[i] - fd).abs() / fd.abs());
        }
    }
    outcome(worst <= 1e-5, format!("worst component relative error {worst:.2e} over 10 pairs, n = 2..6 (≤ 1e-5)"))
}

// ---------------------------------------------------------------- 5

fn zero_mean_score() -> Outcome {
    let model = Heisenberg::new(3).unwrap();
    let star = draw_target(3, 11).unwrap().to_theta();
    let bases = BasesSpec::Random { count: 5, seed: 12 }.resolve(3).unwrap();
    let times = [0.2, 0.6, 1.0];
    let max = |v: Vec<f64>| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let exact = max(score_mean(&model, &star, &times, &bases, &ScoreEngine::Exact).unwrap());
    let tebd = max(score_mean(&model, &star, &times, &bases, &ScoreEngine::Tebd(SimConfig::new(0.05, 8))).unwrap());
    outcome(exact <= 1e-8 && tebd <= 1e-6, format!("max |mean score| exact {exact:.2e} (≤ 1e-8), TEBD {tebd:.2e} (≤ 1e-6)"))
}

// ---------------------------------------------------------------- 6

fn sampling_tv() -> Outcome {
    let n = 4;
    let m = 100_000;
    let model = Heisenberg::new(n).unwrap();
    let star = draw_target(n, 13).unwrap().to_theta();
    let times = [0.2, 0.6, 1.0];
    let bases: Vec<PauliBasis> = ["ZZZZ", "XXXX", "YYYY", "XYZY"].iter().map(|b| b.parse().unwrap()).collect();
    let ds = generate_dataset(&model, &star, &times, &BasesSpec::Explicit(bases.clone()), &SampleCounts::Uniform(m), &Engine::Exact(ExactConfig::default()), 14).unwrap();
    let states = exact_evolve_times(&model, &star, &times, &ExactConfig::default()).unwrap();
    let mut hist = vec![vec![vec![0usize; 1 << n]; bases.len()]; times.len()];
    ds.records.iter().for_each(|r| hist[r.j][r.k][r.bits.index()] += 1);
    let mut worst: f64 = 0.0;
    for (j, st) in states.iter().enumerate() {
        for (k, b) in bases.iter().enumerate() {
            let p = st.distribution(b).unwrap();
            worst = worst.max(0.5 * p.iter().zip(&hist[j][k]).map(|(p, &c)| (p - c as f64 / m as f64).abs()).sum::<f64>());
        }
    }
    outcome(worst <= 0.01, format!("worst TV distance {worst:.4} over 3 times × 4 bases (≤ 0.01)"))
}

// ---------------------------------------------------------------- 7

fn recovery_config(seed: u64) -> RunConfig {
    let sets: Vec<String> = ["model.n=6", "protocol.stamps=5", "protocol.tau=0.2", "protocol.bases=20", "protocol.samples=100", "learn.inits=10"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    RunConfig::load(None, &sets, seed).unwrap()
}

fn recovery(dir: &Path) -> Outcome {
    let cfg = recovery_config(7);
    let out = OutDir::create(dir).unwrap();
    out.record_run("learn", &cfg, &[]).unwrap();
    let rep = learn::run(&cfg, &out).unwrap();
    let eps: Vec<String> = rep.records.iter().map(|r| format!("{:.3}", r.epsilon.unwrap())).collect();
    let accurate = rep.accurate.unwrap();
    let pass = accurate >= 6 && rep.separated != Some(false);
    outcome(pass, format!("{accurate}/10 runs with ε < 0.1 (≥ 6); separation {:?}; ε by loss rank [{}]", rep.separated, eps.join(", ")))
}

// ---------------------------------------------------------------- 8

fn error_scaling(dir: &Path) -> Outcome {
    let sets: Vec<String> = [
        "model.n=6",
        "protocol.stamps=5",
        "protocol.bases=20",
        "scaling.repetitions=4",
        "scaling.inits=3",
        "optimizer.adam.max_steps=1500",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let cfg = RunConfig::load(None, &sets, 8).unwrap();
    let out = OutDir::create(dir).unwrap();
    out.record_run("scaling", &cfg, &sets).unwrap();
    match scaling::run(&cfg, &out) {
        Ok(rep) => {
            let pts: Vec<String> = rep
                .points
                .iter()
                .map(|p| format!("{}:{}", p.d_actual, p.median_epsilon.map_or("-".into(), |e| format!("{e:.4}"))))
                .collect();
            let pass = (-0.65..=-0.35).contains(&rep.slope);
            outcome(pass, format!("slope {:.3} (in [-0.65, -0.35]); median ε [{}]; monotone {}", rep.slope, pts.join(", "), rep.monotone))
        }
        Err(e) => outcome(false, format!("scaling failed: {e}")),
    }
}

// ---------------------------------------------------------------- 9

fn linear_cost() -> Outcome {
    let sim = SimConfig::new(0.05, 30);
    let time = |n: usize| {
        let model = Heisenberg::new(n).unwrap();
        let theta = draw_target(n, 21).unwrap().to_theta();
        let psi0 = Mps::product_state(n).unwrap();
        (0..3)
            .map(|_| {
                let t = Instant::now();
                evolve(&psi0, &model, &theta, &[1.0], &sim, false).unwrap();
                t.elapsed().as_secs_f64()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let ns = [10usize, 20, 40, 80];
    let ts: Vec<f64> = ns.iter().map(|&n| time(n)).collect();
    // Least squares through the origin.
    let a = ns.iter().zip(&ts).map(|(&n, t)| n as f64 * t).sum::<f64>() / ns.iter().map(|&n| (n * n) as f64).sum::<f64>();
    let ratios: Vec<f64> = ns.iter().zip(&ts).map(|(&n, t)| t / (a * n as f64)).collect();
    let within = ratios.iter().all(|r| (0.5..=2.0).contains(r));
    let model = Heisenberg::new(100).unwrap();
    let theta = draw_target(100, 22).unwrap().to_theta();
    let smoke = evolve(&Mps::product_state(100).unwrap(), &model, &theta, &[1.0], &sim, false);
    let pts: Vec<String> = ns.iter().zip(&ts).zip(&ratios).map(|((n, t), r)| format!("n={n}: {:.3}s ({r:.2}×)", t)).collect();
    outcome(within && smoke.is_ok(), format!("{}; fit a = {a:.2e} s/site; n=100 smoke {}", pts.join(", "), if smoke.is_ok() { "ok" } else { "failed" }))
}

// ---------------------------------------------------------------- 10

/// Every `.csv` and `.txt` file in `dir`, by name.
fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "txt")))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn reproducibility(dir: &Path) -> Outcome {
    let small = |extra: &[&str]| {
        let mut v: Vec<String> = ["model.n=4", "protocol.stamps=2", "protocol.bases=3", "protocol.samples=20", "learn.inits=2", "optimizer.adam.max_epochs=3"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        v.extend(extra.iter().map(|s| s.to_string()));
        v
    };
    let cases: Vec<(Command, Vec<String>)> = vec![
        (Command::Generate, small(&[])),
        (Command::Learn, small(&[])),
        (Command::Scaling, small(&["model.n=2", "scaling.sizes=[3000, 12000]", "scaling.repetitions=2", "scaling.inits=3", "optimizer.adam.max_epochs=20"])),
        (Command::Landscape, small(&["landscape.x.points=3", "landscape.y.points=2", "landscape.samples=30"])),
        (Command::Selftest, vec![]),
    ];
    let mut notes = Vec::new();
    let mut pass = true;
    for (cmd, sets) in cases {
        let cfg = RunConfig::load(None, &sets, 5).unwrap();
        let mut failed = false;
        let runs: Vec<BTreeMap<String, Vec<u8>>> = (0..2)
            .map(|i| {
                let d = dir.join(format!("{}-{i}", cmd.name()));
                if let Err(e) = run_command(cmd, &cfg, &d, &sets) {
                    notes.push(format!("{} run {i} failed: {e}", cmd.name()));
                    failed = true;
                }
                outputs(&d)
            })
            .collect();
        let same = !failed && runs[0] == runs[1] && !runs[0].is_empty();
        pass &= same;
        notes.push(format!("{} {} files {}", cmd.name(), runs[0].len(), if same { "identical" } else { "DIFFER" }));
    }
    outcome(pass, notes.join("; "))
}

fn main() -> ExitCode {
    let only: Option<Vec<u32>> = std::env::var("HAMLEARN_CRITERIA").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().to_path_buf();
    type Check = Box<dyn Fn() -> Outcome>;
    let criteria: Vec<(u32, &str, f64, Check)> = vec![
        (1, "SVD JVP vs finite differences", 60.0, Box::new(svd_jvp_vs_fd)),
        (2, "α-splitting of the SVD JVP diagonal", 300.0, Box::new(alpha_splitting)),
        (3, "TEBD vs exact oracle", 60.0, Box::new(tebd_vs_exact)),
        (4, "loss gradient vs finite differences", 300.0, Box::new(gradient_vs_fd)),
        (5, "zero-mean score", 60.0, Box::new(zero_mean_score)),
        (6, "sampling statistics", 60.0, Box::new(sampling_tv)),
        (7, "end-to-end recovery", 1800.0, Box::new({
            let d = root.join("recovery");
            move || recovery(&d)
        })),
        (8, "error scaling", 7200.0, Box::new({
            let d = root.join("scaling");
            move || error_scaling(&d)
        })),
        (9, "linear-in-n cost", 600.0, Box::new(linear_cost)),
        (10, "reproducibility", f64::INFINITY, Box::new({
            let d = root.join("repro");
            move || reproducibility(&d)
        })),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in &criteria {
        if only.as_ref().is_some_and(|o| !o.contains(id)) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed().as_secs_f64();
        let in_time = secs < *budget;
        let pass = o.pass && in_time;
        failed += usize::from(!pass);
        let limit = if budget.is_finite() { format!(" < {budget:.0}s") } else { String::new() };
        println!(
            "criterion {id:>2} {} {name}: {} [runtime {secs:.1}s{limit}{}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            if in_time { "" } else { ", OVER BUDGET" }
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}

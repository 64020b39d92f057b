//! Quick oracle suites behind `hamlearn selftest`.

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
use serde::Serialize;

use crate::error::Result;
use crate::output::{num, OutDir};

pub const SUITES: [&str; 5] = ["svd_jvp", "tebd_exact", "sampling", "score_mean", "gradient"];

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub suite: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub suites: Vec<SuiteResult>,
    pub all_pass: bool,
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> ComplexTensor {
    let data = (0..r * c).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    ComplexTensor::new(&[r, c], data).expect("shape matches data")
}

fn rel(a: &ComplexTensor, b: &ComplexTensor) -> f64 {
    a.sub(b).expect("same shape").frobenius_norm() / b.frobenius_norm().max(1e-300)
}

/// Factors re-phased so the entries at the given rows of `u` are real positive.
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
    let s = ComplexTensor::new(&[f.s.len()], f.s.iter().map(|&x| C64::new(x, 0.0)).collect()).expect("vector");
    [u, s, vh]
}

/// Worst relative error of the SVD factor tangents against central differences.
fn svd_suite() -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (r, c) in [(12, 8), (8, 12), (10, 10)] {
        let a = random_matrix(&mut rng, r, c);
        let da = random_matrix(&mut rng, r, c);
        let j = svd_jvp(&TangentBundle::new(a.clone(), vec![da.clone()])?, r.min(c), &SvdJvpConfig::default())?;
        let base = svd_full(&a)?;
        let k = base.u.shape()[1];
        let pivots: Vec<usize> = (0..k)
            .map(|col| (0..r).max_by(|&x, &y| base.u.data()[x * k + col].norm().total_cmp(&base.u.data()[y * k + col].norm())).expect("rows"))
            .collect();
        let shift = |t: f64| -> Result<[ComplexTensor; 3]> {
            let mut m = a.clone();
            m.axpy(C64::new(t, 0.0), &da)?;
            Ok(regauge(&svd_full(&m)?, &pivots))
        };
        let (p, q) = (shift(h)?, shift(-h)?);
        let analytic = [&j.u.tangents[0], &j.s.tangents[0], &j.vh.tangents[0]];
        for i in 0..3 {
            let fd = p[i].sub(&q[i])?.scale(C64::new(0.5 / h, 0.0));
            worst = worst.max(rel(analytic[i], &fd));
        }
    }
    Ok(worst)
}

/// `1 − |⟨ψ_exact|ψ_tebd⟩|` for n = 6 at t = 1.
fn tebd_suite() -> Result<f64> {
    let n = 6;
    let model = Heisenberg::new(n)?;
    let star = draw_target(n, 1)?.to_theta();
    let exact = exact_evolve_times(&model, &star, &[1.0], &ExactConfig::default())?;
    let ev = evolve(&Mps::product_state(n)?, &model, &star, &[1.0], &SimConfig::new(0.01, 64), false)?;
    Ok(exact[0].infidelity(&ev.snapshots[0].to_statevector()?))
}

/// Largest total-variation distance between empirical and Born frequencies.
fn sampling_suite() -> Result<f64> {
    let n = 4;
    let m = 100_000;
    let model = Heisenberg::new(n)?;
    let star = draw_target(n, 2)?.to_theta();
    let bases: Vec<PauliBasis> = ["ZZZZ", "XYZX"].iter().map(|b| b.parse()).collect::<Result<_, _>>()?;
    let times = [0.4];
    let ds = generate_dataset(&model, &star, &times, &BasesSpec::Explicit(bases.clone()), &SampleCounts::Uniform(m), &Engine::Exact(ExactConfig::default()), 3)?;
    let st = &exact_evolve_times(&model, &star, &times, &ExactConfig::default())?[0];
    let mut worst: f64 = 0.0;
    for (k, b) in bases.iter().enumerate() {
        let mut hist = vec![0usize; 1 << n];
        ds.records.iter().filter(|r| r.k == k).for_each(|r| hist[r.bits.index()] += 1);
        let p = st.distribution(b)?;
        let tv = 0.5 * p.iter().zip(&hist).map(|(p, &c)| (p - c as f64 / m as f64).abs()).sum::<f64>();
        worst = worst.max(tv);
    }
    Ok(worst)
}

fn score_suite() -> Result<f64> {
    let model = Heisenberg::new(3)?;
    let star = draw_target(3, 4)?.to_theta();
    let bases = BasesSpec::Random { count: 4, seed: 5 }.resolve(3)?;
    let s = score_mean(&model, &star, &[0.3, 0.9], &bases, &ScoreEngine::Exact)?;
    Ok(s.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Worst relative gap between analytic and finite-difference loss gradients.
fn gradient_suite() -> Result<f64> {
    let n = 4;
    let model = Heisenberg::new(n)?;
    let star = draw_target(n, 6)?.to_theta();
    let ds = generate_dataset(&model, &star, &[0.2, 0.5], &BasesSpec::Random { count: 3, seed: 7 }, &SampleCounts::Uniform(15), &Engine::Exact(ExactConfig::default()), 8)?;
    let p = Problem::new(&ds, &model, SimConfig::default())?;
    let theta: Vec<f64> = star.iter().enumerate().map(|(i, x)| x + 0.1 * ((i % 3) as f64 - 1.0)).collect();
    let g = p.loss(&theta, true)?.gradient.expect("requested");
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..theta.len() {
        let (mut a, mut b) = (theta.clone(), theta.clone());
        a[i] += h;
        b[i] -= h;
        let fd = (p.loss(&a, false)?.value - p.loss(&b, false)?.value) / (2.0 * h);
        worst = worst.max((g[i] - fd).abs() / fd.abs().max(1e-300));
    }
    Ok(worst)
}

/// Runs every suite; `corrupt` names one whose tolerance is replaced by an
/// unattainable negative value.
pub fn run_suites(corrupt: Option<&str>) -> Result<SelftestReport> {
    let table: [(&'static str, fn() -> Result<f64>, f64); 5] = [
        ("svd_jvp", svd_suite, 1e-6),
        ("tebd_exact", tebd_suite, 1e-4),
        ("sampling", sampling_suite, 0.01),
        ("score_mean", score_suite, 1e-8),
        ("gradient", gradient_suite, 1e-5),
    ];
    let mut suites = Vec::new();
    for (suite, f, tol) in table {
        let tolerance = if corrupt == Some(suite) { -1.0 } else { tol };
        let value = f()?;
        suites.push(SuiteResult { suite, value, tolerance, pass: value <= tolerance });
    }
    let all_pass = suites.iter().all(|s| s.pass);
    Ok(SelftestReport { suites, all_pass })
}

pub fn table(rep: &SelftestReport) -> String {
    let mut s = String::from("suite\tstatus\tvalue\ttolerance\n");
    for r in &rep.suites {
        s.push_str(&format!("{}\t{}\t{:e}\t{:e}\n", r.suite, if r.pass { "pass" } else { "FAIL" }, r.value, r.tolerance));
    }
    s
}

pub fn run(corrupt: Option<&str>, out: &OutDir) -> Result<SelftestReport> {
    let rep = run_suites(corrupt)?;
    out.csv(
        "selftest.csv",
        &["suite", "status", "value", "tolerance"],
        rep.suites.iter().map(|r| vec![r.suite.to_string(), if r.pass { "pass" } else { "fail" }.to_string(), num(r.value), num(r.tolerance)]),
    )?;
    Ok(rep)
}

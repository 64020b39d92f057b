//! Two-stage fitting: mini-batch ADAM, then full-batch BFGS.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{bfgs, Adam, AdamConfig, BfgsConfig, Objective};
use super::{CellBatch, Problem};
use crate::error::{bail, Result};
use crate::hamiltonian::HamiltonianModel;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub adam: AdamConfig,
    pub bfgs: BfgsConfig,
    /// Go straight to BFGS.
    pub skip_adam: bool,
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        self.adam.validate()?;
        self.bfgs.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Adam,
    Bfgs,
}

/// One row of the optimization trace. ADAM rows are per epoch and carry the
/// epoch-mean mini-batch loss; BFGS rows are per accepted step and carry the
/// full-batch loss.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub stage: Stage,
    pub iteration: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnResult {
    /// Position in the multi-start list before sorting.
    pub run: usize,
    pub theta_init: Vec<f64>,
    pub theta_hat: Vec<f64>,
    /// Full-batch loss at `theta_hat`.
    pub final_loss: f64,
    pub final_grad_norm: f64,
    pub trace: Vec<TraceEntry>,
    pub adam_steps: usize,
    pub adam_epochs: usize,
    pub bfgs_iterations: usize,
    pub fallback_steps: usize,
    pub converged: bool,
    pub seed: u64,
    /// Seconds; filled in by callers that have a clock.
    pub wall_clock: Option<f64>,
}

struct FullBatch<'p, 'a, M: HamiltonianModel + ?Sized>(&'p Problem<'a, M>);

impl<M: HamiltonianModel + ?Sized> Objective for FullBatch<'_, '_, M> {
    fn nu(&self) -> usize {
        self.0.nu()
    }

    fn value_grad(&mut self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let l = self.0.loss(theta, true)?;
        Ok((l.value, l.gradient.unwrap_or_default()))
    }
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

/// Mini-batch ADAM until the epoch-mean loss plateaus. Returns the endpoint.
fn run_adam<M: HamiltonianModel + ?Sized>(
    problem: &Problem<'_, M>,
    theta: &mut [f64],
    cfg: &AdamConfig,
    rng: &mut ChaCha8Rng,
    trace: &mut Vec<TraceEntry>,
) -> Result<(usize, usize)> {
    let cells = problem.full_batch();
    let records = problem.cell_records();
    let steps_per_epoch = records.iter().map(Vec::len).max().unwrap_or(0);
    let mut adam = Adam::new(*cfg, theta.len());
    let mut epoch_means: Vec<f64> = Vec::new();
    let mut steps = 0;
    let mut orders: Vec<Vec<usize>> = records.iter().map(|r| (0..r.len()).collect()).collect();
    'epochs: for epoch in 0..cfg.max_epochs {
        for o in orders.iter_mut() {
            o.shuffle(rng);
        }
        let mut sum = 0.0;
        let mut taken = 0;
        let mut last_norm = 0.0;
        for s in 0..steps_per_epoch {
            if cfg.max_steps > 0 && steps >= cfg.max_steps {
                if taken > 0 {
                    epoch_means.push(sum / taken as f64);
                    trace.push(TraceEntry { stage: Stage::Adam, iteration: epoch, loss: sum / taken as f64, grad_norm: last_norm, fallback: false });
                }
                break 'epochs;
            }
            let batch: Vec<CellBatch> = cells
                .iter()
                .zip(records)
                .zip(&orders)
                .map(|((c, r), o)| CellBatch { j: c.j, k: c.k, entries: alloc::vec![(r[o[s % r.len()]].clone(), 1.0)] })
                .collect();
            let l = problem.loss_on(theta, &batch, true)?;
            let g = l.gradient.unwrap_or_default();
            adam.step(theta, &g);
            if theta.iter().any(|x| !x.is_finite()) {
                bail!(Numeric, "ADAM produced a non-finite θ at step {}", steps);
            }
            sum += l.value;
            taken += 1;
            last_norm = norm(&g);
            steps += 1;
        }
        let mean = sum / taken.max(1) as f64;
        epoch_means.push(mean);
        trace.push(TraceEntry { stage: Stage::Adam, iteration: epoch, loss: mean, grad_norm: last_norm, fallback: false });
        let e = epoch_means.len() - 1;
        if e >= cfg.plateau_window {
            let old = epoch_means[e - cfg.plateau_window];
            if old - mean < cfg.plateau_tol * old.abs() {
                break;
            }
        }
    }
    Ok((steps, epoch_means.len()))
}

/// Fits `θ` starting from `theta_init`. `seed` drives the mini-batch shuffling.
pub fn fit<M: HamiltonianModel + ?Sized>(problem: &Problem<'_, M>, theta_init: &[f64], cfg: &OptimizerConfig, seed: u64) -> Result<LearnResult> {
    cfg.validate()?;
    if theta_init.len() != problem.nu() {
        bail!(Dimension, "θ_init has {} entries, model expects {}", theta_init.len(), problem.nu());
    }
    let mut theta = theta_init.to_vec();
    let mut trace = Vec::new();
    let (adam_steps, adam_epochs) = if cfg.skip_adam {
        (0, 0)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        run_adam(problem, &mut theta, &cfg.adam, &mut rng, &mut trace)?
    };
    let mut obj = FullBatch(problem);
    let out = bfgs(&mut obj, &theta, &cfg.bfgs, |_, step| {
        trace.push(TraceEntry { stage: Stage::Bfgs, iteration: 0, loss: step.loss, grad_norm: step.grad_norm, fallback: step.fallback });
    })?;
    let mut it = 0;
    for t in trace.iter_mut().filter(|t| t.stage == Stage::Bfgs) {
        it += 1;
        t.iteration = it;
    }
    Ok(LearnResult {
        run: 0,
        theta_init: theta_init.to_vec(),
        final_grad_norm: norm(&out.gradient),
        theta_hat: out.theta,
        final_loss: out.loss,
        trace,
        adam_steps,
        adam_epochs,
        bfgs_iterations: out.iterations,
        fallback_steps: out.steps.iter().filter(|s| s.fallback).count(),
        converged: out.converged,
        seed,
        wall_clock: None,
    })
}

/// Half-width of the uniform initialization box.
pub const INIT_RANGE: f64 = 2.0;

/// `count` starting points drawn i.i.d. from `Uniform[−2,2]^ν`, plus the
/// shuffle seed of each run.
pub fn multi_start_inits(nu: usize, count: usize, init_seed: u64) -> Vec<(Vec<f64>, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
    (0..count)
        .map(|_| {
            let theta = (0..nu).map(|_| rng.random_range(-INIT_RANGE..=INIT_RANGE)).collect();
            (theta, rng.random())
        })
        .collect()
}

/// Sorts by final loss, ascending; the first entry is the best run.
pub fn sort_results(results: &mut [LearnResult]) {
    results.sort_by(|a, b| a.final_loss.total_cmp(&b.final_loss).then(a.run.cmp(&b.run)));
}

/// Sequential multi-start. The `hamlearn` crate runs the fits in parallel.
pub fn multi_start<M: HamiltonianModel + ?Sized>(problem: &Problem<'_, M>, count: usize, init_seed: u64, cfg: &OptimizerConfig) -> Result<Vec<LearnResult>> {
    if count == 0 {
        bail!(Domain, "multi-start needs at least one run");
    }
    let mut out = Vec::with_capacity(count);
    for (run, (theta, seed)) in multi_start_inits(problem.nu(), count, init_seed).into_iter().enumerate() {
        let mut r = fit(problem, &theta, cfg, seed)?;
        r.run = run;
        out.push(r);
    }
    sort_results(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_dataset, BasesSpec, Engine, SampleCounts};
    use crate::exact::ExactConfig;
    use crate::hamiltonian::{draw_target, Heisenberg};
    use crate::tebd::SimConfig;

    #[test]
    fn inits_are_seeded_and_bounded() {
        let a = multi_start_inits(5, 3, 7);
        assert_eq!(a, multi_start_inits(5, 3, 7));
        assert_ne!(a, multi_start_inits(5, 3, 8));
        assert!(a.iter().flat_map(|(t, _)| t).all(|x| x.abs() <= INIT_RANGE));
    }

    #[test]
    fn short_fit_runs_both_stages() {
        let m = Heisenberg::new(3).unwrap();
        let star = draw_target(3, 2).unwrap().to_theta();
        let ds = generate_dataset(&m, &star, &[0.3, 0.6], &BasesSpec::Random { count: 3, seed: 1 }, &SampleCounts::Uniform(20), &Engine::Exact(ExactConfig::default()), 5).unwrap();
        let p = Problem::new(&ds, &m, SimConfig::default()).unwrap();
        let cfg = OptimizerConfig {
            adam: AdamConfig { max_epochs: 2, ..AdamConfig::default() },
            bfgs: BfgsConfig { max_iterations: 5, ..BfgsConfig::default() },
            skip_adam: false,
        };
        let r = fit(&p, &star, &cfg, 3).unwrap();
        assert_eq!(r.adam_epochs, 2);
        assert_eq!(r.adam_steps, 40);
        assert!(r.bfgs_iterations <= 5);
        let again = p.loss(&r.theta_hat, false).unwrap().value;
        assert!((again - r.final_loss).abs() < 1e-10);
    }

    #[test]
    fn wrong_init_length() {
        let m = Heisenberg::new(2).unwrap();
        let ds = generate_dataset(&m, &[0.1; 5], &[0.3], &BasesSpec::Random { count: 1, seed: 1 }, &SampleCounts::Uniform(2), &Engine::Exact(ExactConfig::default()), 5).unwrap();
        let p = Problem::new(&ds, &m, SimConfig::default()).unwrap();
        assert!(fit(&p, &[0.0; 3], &OptimizerConfig::default(), 0).is_err());
    }
}

pub mod generate;
pub mod landscape;
pub mod learn;
pub mod scaling;

use std::time::Instant;

use hamlearn_core::dataset::{generate_dataset, BasesSpec, Dataset, SampleCounts};
use hamlearn_core::hamiltonian::HamiltonianModel;
use hamlearn_core::learner::{fit, multi_start_inits, sort_results, LearnResult, OptimizerConfig, Problem};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Error, Result};

/// Samples `samples` bit-strings per cell from the configured target.
pub fn synthesize(cfg: &RunConfig, bases: &BasesSpec, samples: usize, seed: u64) -> Result<Dataset> {
    let model = cfg.model()?;
    let star = cfg.theta_star()?;
    Ok(generate_dataset(&model, &star, &cfg.times(), bases, &SampleCounts::Uniform(samples), &cfg.engine(), seed)?)
}

/// Fits from `count` random inits, concurrently; sorted by final loss.
pub fn multi_start_par<M: HamiltonianModel + ?Sized>(problem: &Problem<'_, M>, count: usize, init_seed: u64, opt: &OptimizerConfig) -> Result<Vec<LearnResult>> {
    let inits = multi_start_inits(problem.nu(), count, init_seed);
    let mut results = inits
        .into_par_iter()
        .enumerate()
        .map(|(run, (theta, seed))| {
            let start = Instant::now();
            let mut r = fit(problem, &theta, opt, seed).map_err(|source| Error::Run { run, source })?;
            r.run = run;
            r.wall_clock = Some(start.elapsed().as_secs_f64());
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    sort_results(&mut results);
    Ok(results)
}

pub(crate) fn progress(msg: impl std::fmt::Display) {
    eprintln!("[hamlearn] {msg}");
}

//! Negative log-likelihood of a dataset under `H(θ)`, its gradient, and the
//! two-stage optimizer.

mod fit;
mod optim;

pub use fit::{fit, multi_start, multi_start_inits, sort_results, LearnResult, OptimizerConfig, Stage, TraceEntry, INIT_RANGE};
pub use optim::{bfgs, AdamConfig, BfgsConfig, BfgsOutcome, BfgsStep, Objective};

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::error::{bail, Result};
use crate::exact::exact_evolve_jvp;
use crate::hamiltonian::HamiltonianModel;
use crate::mps::{BitString, Mps, PauliBasis};
use crate::tebd::{born_probability, born_probability_rotated, evolve, SimConfig};

/// Probabilities below this are clamped before taking the logarithm.
pub const P_FLOOR: f64 = 1e-12;
/// Largest chain for which outcome distributions are enumerated.
pub const ENUMERATION_MAX_SITES: usize = 8;

/// Mean negative log-probability of one `(j, k)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellLoss {
    pub j: usize,
    pub k: usize,
    /// Total weight (number of bit-strings) evaluated in this cell.
    pub weight: f64,
    pub mean_nll: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
    pub per_cell: Vec<CellLoss>,
    /// Number of distinct outcomes whose probability hit the floor.
    pub clamp_count: usize,
}

/// Weighted bit-strings of one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellBatch {
    pub j: usize,
    pub k: usize,
    pub entries: Vec<(BitString, f64)>,
}

/// Precomputed view of a dataset: identical bit-strings within a cell are
/// grouped with multiplicities.
#[derive(Clone, Debug)]
pub struct Problem<'a, M: HamiltonianModel + ?Sized> {
    pub dataset: &'a Dataset,
    pub model: &'a M,
    pub sim: SimConfig,
    /// Grouped cells in `(j, k)` order.
    full: Vec<CellBatch>,
    /// Raw bit-strings per cell, in file order, for mini-batching.
    raw: Vec<Vec<BitString>>,
}

impl<'a, M: HamiltonianModel + ?Sized> Problem<'a, M> {
    pub fn new(dataset: &'a Dataset, model: &'a M, sim: SimConfig) -> Result<Self> {
        if dataset.n != model.n() {
            bail!(Domain, "dataset has {} sites, model {}", dataset.n, model.n());
        }
        dataset.validate()?;
        let mut cells: BTreeMap<(usize, usize), (BTreeMap<BitString, usize>, Vec<BitString>)> = BTreeMap::new();
        for r in &dataset.records {
            let e = cells.entry((r.j, r.k)).or_default();
            *e.0.entry(r.bits.clone()).or_insert(0) += 1;
            e.1.push(r.bits.clone());
        }
        let mut full = Vec::with_capacity(cells.len());
        let mut raw = Vec::with_capacity(cells.len());
        for ((j, k), (groups, records)) in cells {
            full.push(CellBatch { j, k, entries: groups.into_iter().map(|(b, c)| (b, c as f64)).collect() });
            raw.push(records);
        }
        if full.is_empty() {
            bail!(Domain, "dataset has no records");
        }
        Ok(Self { dataset, model, sim, full, raw })
    }

    pub fn nu(&self) -> usize {
        self.model.nu()
    }

    /// The whole dataset as grouped batches.
    pub fn full_batch(&self) -> &[CellBatch] {
        &self.full
    }

    /// Raw bit-strings of each non-empty cell, aligned with [`Problem::full_batch`].
    pub fn cell_records(&self) -> &[Vec<BitString>] {
        &self.raw
    }

    /// Loss over the full dataset.
    pub fn loss(&self, theta: &[f64], with_gradient: bool) -> Result<LossValue> {
        self.loss_on(theta, &self.full, with_gradient)
    }

    /// Loss over an arbitrary weighted selection of bit-strings.
    pub fn loss_on(&self, theta: &[f64], batch: &[CellBatch], with_gradient: bool) -> Result<LossValue> {
        self.model.check_theta(theta)?;
        let nu = self.nu();
        let last_j = match batch.iter().map(|c| c.j).max() {
            Some(j) => j,
            None => bail!(Domain, "empty batch"),
        };
        let times = &self.dataset.times[..=last_j];
        let psi0 = Mps::product_state(self.dataset.n)?;
        let ev = evolve(&psi0, self.model, theta, times, &self.sim, with_gradient)?;

        let mut total = 0.0;
        let mut total_w = 0.0;
        let mut grad = vec![0.0; if with_gradient { nu } else { 0 }];
        let mut per_cell = Vec::with_capacity(batch.len());
        let mut clamp_count = 0;
        for cell in batch {
            let basis: &PauliBasis = &self.dataset.bases[cell.k];
            let snap = &ev.snapshots[cell.j];
            let mut cell_sum = 0.0;
            let mut cell_w = 0.0;
            for (bits, w) in &cell.entries {
                let (p, dp) = born_probability(snap, basis, bits)?;
                if !p.is_finite() {
                    bail!(Numeric, "non-finite probability at θ = {:?}", theta);
                }
                cell_w += w;
                if p < P_FLOOR {
                    clamp_count += 1;
                    cell_sum -= w * libm::log(P_FLOOR);
                    continue;
                }
                cell_sum -= w * libm::log(p);
                for (g, d) in grad.iter_mut().zip(&dp) {
                    *g -= w * d / p;
                }
            }
            total += cell_sum;
            total_w += cell_w;
            per_cell.push(CellLoss { j: cell.j, k: cell.k, weight: cell_w, mean_nll: cell_sum / cell_w.max(f64::MIN_POSITIVE) });
        }
        if total_w <= 0.0 {
            bail!(Domain, "batch carries no weight");
        }
        let value = total / total_w;
        if !value.is_finite() {
            bail!(Numeric, "loss is not finite at θ = {:?}", theta);
        }
        let gradient = if with_gradient {
            grad.iter_mut().for_each(|g| *g /= total_w);
            if grad.iter().any(|g| !g.is_finite()) {
                bail!(Numeric, "gradient is not finite at θ = {:?}", theta);
            }
            Some(grad)
        } else {
            None
        };
        Ok(LossValue { value, gradient, per_cell, clamp_count })
    }
}

impl<M: HamiltonianModel + ?Sized> Objective for Problem<'_, M> {
    fn nu(&self) -> usize {
        self.model.nu()
    }

    fn value_grad(&mut self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let l = self.loss(theta, true)?;
        Ok((l.value, l.gradient.expect("requested")))
    }
}

/// Convenience wrapper around [`Problem::loss`].
pub fn loss<M: HamiltonianModel + ?Sized>(dataset: &Dataset, model: &M, theta: &[f64], sim: &SimConfig, with_gradient: bool) -> Result<LossValue> {
    Problem::new(dataset, model, *sim)?.loss(theta, with_gradient)
}

/// Which simulator defines the outcome distribution in [`score_mean`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScoreEngine {
    Exact,
    Tebd(SimConfig),
}

/// `Σ_s P(s|θ)·∇log P(s|θ)` by exhaustive enumeration, averaged over all
/// `(t_j, p_k)` cells. Outcomes of probability zero are skipped.
pub fn score_mean<M: HamiltonianModel + ?Sized>(
    model: &M,
    theta: &[f64],
    times: &[f64],
    bases: &[PauliBasis],
    engine: &ScoreEngine,
) -> Result<Vec<f64>> {
    let n = model.n();
    if n > ENUMERATION_MAX_SITES {
        bail!(Resource, "enumeration over 2^{} outcomes exceeds the cap of {} sites", n, ENUMERATION_MAX_SITES);
    }
    if times.is_empty() || bases.is_empty() {
        bail!(Domain, "need at least one time and one basis");
    }
    let nu = model.nu();
    let mut acc = vec![0.0; nu];
    let mut add = |p: f64, dp: &[f64]| {
        if p > 0.0 {
            for (a, d) in acc.iter_mut().zip(dp) {
                *a += p * (d / p);
            }
        }
    };
    match engine {
        ScoreEngine::Exact => {
            for st in exact_evolve_jvp(model, theta, times)? {
                for b in bases {
                    let (p, dp) = st.distribution_jvp(b)?;
                    for s in 0..p.len() {
                        let col: Vec<f64> = dp.iter().map(|d| d[s]).collect();
                        add(p[s], &col);
                    }
                }
            }
        }
        ScoreEngine::Tebd(sim) => {
            let ev = evolve(&Mps::product_state(n)?, model, theta, times, sim, true)?;
            for snap in &ev.snapshots {
                for b in bases {
                    let rotated = snap.rotate_to_basis(b)?;
                    for s in 0..1usize << n {
                        let (p, dp) = born_probability_rotated(&rotated, &BitString::from_index(s, n))?;
                        add(p, &dp);
                    }
                }
            }
        }
    }
    let cells = (times.len() * bases.len()) as f64;
    Ok(acc.into_iter().map(|a| a / cells).collect())
}

/// `ε(θ) = ‖θ − θ*‖₂ / ‖θ*‖₂`.
pub fn relative_error(theta: &[f64], theta_star: &[f64]) -> Result<f64> {
    if theta.len() != theta_star.len() {
        bail!(Dimension, "θ has {} entries, θ* {}", theta.len(), theta_star.len());
    }
    let denom = libm::sqrt(theta_star.iter().map(|x| x * x).sum());
    if denom == 0.0 {
        bail!(Domain, "relative error undefined for θ* = 0");
    }
    let num = libm::sqrt(theta.iter().zip(theta_star).map(|(a, b)| (a - b) * (a - b)).sum());
    Ok(num / denom)
}

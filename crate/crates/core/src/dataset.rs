//! Measurement datasets and their synthetic generation.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::exact::{exact_evolve_times, ExactConfig};
use crate::hamiltonian::HamiltonianModel;
use crate::mps::{BitString, Mps, PauliBasis};
use crate::tebd::{evolve, SimConfig};

/// One observed bit-string, measured at `times[j]` in `bases[k]` (0-based).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Record {
    pub j: usize,
    pub k: usize,
    pub bits: BitString,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub n: usize,
    pub times: Vec<f64>,
    pub bases: Vec<PauliBasis>,
    pub records: Vec<Record>,
    pub metadata: Metadata,
}

impl Dataset {
    pub fn new(n: usize, times: Vec<f64>, bases: Vec<PauliBasis>, records: Vec<Record>, metadata: Metadata) -> Result<Self> {
        let d = Self { n, times, bases, records, metadata };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() || self.bases.is_empty() {
            bail!(Domain, "a dataset needs at least one time and one basis");
        }
        let mut prev = 0.0;
        for &t in &self.times {
            if !(t > prev) || !t.is_finite() {
                bail!(Domain, "times must be positive and strictly ascending");
            }
            prev = t;
        }
        if let Some(b) = self.bases.iter().find(|b| b.len() != self.n) {
            bail!(Dimension, "basis {} has length {}, expected {}", b, b.len(), self.n);
        }
        for r in &self.records {
            if r.j >= self.times.len() || r.k >= self.bases.len() {
                bail!(Domain, "record cell ({}, {}) out of range", r.j, r.k);
            }
            if r.bits.len() != self.n {
                bail!(Dimension, "record of length {}, expected {}", r.bits.len(), self.n);
            }
        }
        Ok(())
    }

    /// Total number of bit-strings `d`.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `d_{j,k}` indexed `[j][k]`.
    pub fn counts(&self) -> Vec<Vec<usize>> {
        let mut c = vec![vec![0; self.bases.len()]; self.times.len()];
        for r in &self.records {
            c[r.j][r.k] += 1;
        }
        c
    }
}

/// How measurement bases are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum BasesSpec {
    Explicit(Vec<PauliBasis>),
    /// `count` bases drawn uniformly from `{X,Y,Z}ⁿ`.
    Random { count: usize, seed: u64 },
}

impl BasesSpec {
    pub fn resolve(&self, n: usize) -> Result<Vec<PauliBasis>> {
        match self {
            BasesSpec::Explicit(b) => {
                if b.is_empty() {
                    bail!(Domain, "no bases given");
                }
                Ok(b.clone())
            }
            BasesSpec::Random { count, seed } => {
                if *count == 0 {
                    bail!(Domain, "basis count must be positive");
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok((0..*count).map(|_| PauliBasis::random(n, &mut rng)).collect())
            }
        }
    }
}

/// Number of bit-strings drawn per `(j, k)` cell.
#[derive(Clone, Debug, PartialEq)]
pub enum SampleCounts {
    Uniform(usize),
    /// Indexed `[j][k]`.
    PerCell(Vec<Vec<usize>>),
}

impl SampleCounts {
    fn get(&self, j: usize, k: usize) -> Result<usize> {
        match self {
            SampleCounts::Uniform(m) => Ok(*m),
            SampleCounts::PerCell(c) => c
                .get(j)
                .and_then(|row| row.get(k))
                .copied()
                .ok_or_else(|| crate::Error::Dimension(alloc::format!("no count for cell ({j}, {k})"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Engine {
    Exact(ExactConfig),
    Tebd(SimConfig),
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Exact(_) => "exact",
            Engine::Tebd(_) => "tebd",
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of the `(j, k)` cell; draw `i` of that cell uses stream `i`.
pub fn cell_seed(seed: u64, j: usize, k: usize) -> u64 {
    splitmix64(seed ^ splitmix64(((j as u64) << 32) | k as u64))
}

/// Samples bit-strings from `H(θ*)`-evolved states at every `(t_j, p_k)`.
#[allow(clippy::too_many_arguments)]
pub fn generate_dataset<M: HamiltonianModel + ?Sized>(
    model: &M,
    theta_star: &[f64],
    times: &[f64],
    bases: &BasesSpec,
    counts: &SampleCounts,
    engine: &Engine,
    seed: u64,
) -> Result<Dataset> {
    model.check_theta(theta_star)?;
    let n = model.n();
    let bases = bases.resolve(n)?;
    let mut ds = Dataset {
        n,
        times: times.to_vec(),
        bases,
        records: Vec::new(),
        metadata: Metadata {
            model: model.name().into(),
            seed: Some(seed),
            theta_star: Some(theta_star.to_vec()),
            chi: None,
            dt: None,
            engine: Some(engine.name().into()),
        },
    };
    ds.validate()?;
    match engine {
        Engine::Exact(cfg) => {
            let states = exact_evolve_times(model, theta_star, times, cfg)?;
            for (j, st) in states.iter().enumerate() {
                for (k, b) in ds.bases.iter().enumerate() {
                    let m = counts.get(j, k)?;
                    for bits in st.sample(b, m, cell_seed(seed, j, k))? {
                        ds.records.push(Record { j, k, bits });
                    }
                }
            }
        }
        Engine::Tebd(sim) => {
            ds.metadata.chi = Some(sim.chi);
            ds.metadata.dt = Some(sim.dt);
            let psi0 = Mps::product_state(n)?;
            let ev = evolve(&psi0, model, theta_star, times, sim, false)?;
            for (j, st) in ev.snapshots.iter().enumerate() {
                for (k, b) in ds.bases.iter().enumerate() {
                    let m = counts.get(j, k)?;
                    for bits in st.sample(b, m, cell_seed(seed, j, k))? {
                        ds.records.push(Record { j, k, bits });
                    }
                }
            }
        }
    }
    Ok(ds)
}

/// `τ, 2τ, …, Jτ`.
pub fn uniform_times(count: usize, spacing: f64) -> Vec<f64> {
    (1..=count).map(|j| j as f64 * spacing).collect()
}

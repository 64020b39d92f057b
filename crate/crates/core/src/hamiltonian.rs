//! Parametrized nearest-neighbour Hamiltonians and their Trotter splitting.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::linalg_ad::TangentBundle;
use crate::tensor::ComplexTensor;
use crate::C64;

/// A family `θ ↦ H(θ) = Σ_i h_{i,i+1}(θ)` of nearest-neighbour Hamiltonians.
pub trait HamiltonianModel: Send + Sync {
    fn name(&self) -> &str;
    fn n(&self) -> usize;
    fn nu(&self) -> usize;
    fn theta_names(&self) -> Vec<String>;
    /// Hermitian 4×4 generator on bond `(i, i+1)` with `∂h/∂θ_l` for every `l`.
    fn bond_generator(&self, theta: &[f64], i: usize) -> Result<TangentBundle>;

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.nu() {
            bail!(Dimension, "θ has {} entries, model expects {}", theta.len(), self.nu());
        }
        if theta.iter().any(|x| !x.is_finite()) {
            bail!(Numeric, "non-finite parameter");
        }
        Ok(())
    }
}

impl<M: HamiltonianModel + ?Sized> HamiltonianModel for Box<M> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn n(&self) -> usize {
        (**self).n()
    }
    fn nu(&self) -> usize {
        (**self).nu()
    }
    fn theta_names(&self) -> Vec<String> {
        (**self).theta_names()
    }
    fn bond_generator(&self, theta: &[f64], i: usize) -> Result<TangentBundle> {
        (**self).bond_generator(theta, i)
    }
}

fn pauli(c: char) -> [[C64; 2]; 2] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match c {
        'I' => [[o, z], [z, o]],
        'X' => [[z, o], [o, z]],
        'Y' => [[z, -i], [i, z]],
        'Z' => [[o, z], [z, -o]],
        _ => unreachable!("pauli label"),
    }
}

/// `a ⊗ b` for two single-qubit Pauli labels, as a 4×4 matrix.
pub fn pauli_pair(a: char, b: char) -> ComplexTensor {
    let (pa, pb) = (pauli(a), pauli(b));
    let mut data = vec![C64::new(0.0, 0.0); 16];
    for r1 in 0..2 {
        for r2 in 0..2 {
            for c1 in 0..2 {
                for c2 in 0..2 {
                    data[(r1 * 2 + r2) * 4 + c1 * 2 + c2] = pa[r1][c1] * pb[r2][c2];
                }
            }
        }
    }
    ComplexTensor::new(&[4, 4], data).expect("4x4")
}

/// Heisenberg chain with transverse fields,
/// `H = Σ_i (Jx XX + Jy YY + Jz ZZ)_{i,i+1} + Σ_i h_i X_i`.
///
/// Parameters are ordered `θ = (Jx, Jy, Jz, h_0, …, h_{n−1})`. The field of
/// site `i` is carried by bond `(i, i+1)`; the last site's field sits on the
/// last bond.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Heisenberg {
    n: usize,
}

impl Heisenberg {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            bail!(Domain, "Heisenberg chain needs at least 2 sites, got {}", n);
        }
        Ok(Self { n })
    }
}

impl HamiltonianModel for Heisenberg {
    fn name(&self) -> &str {
        "heisenberg"
    }

    fn n(&self) -> usize {
        self.n
    }

    fn nu(&self) -> usize {
        3 + self.n
    }

    fn theta_names(&self) -> Vec<String> {
        let mut names: Vec<String> = ["jx", "jy", "jz"].iter().map(|s| String::from(*s)).collect();
        names.extend((0..self.n).map(|i| format!("h{i}")));
        names
    }

    fn bond_generator(&self, theta: &[f64], i: usize) -> Result<TangentBundle> {
        self.check_theta(theta)?;
        if i + 1 >= self.n {
            bail!(Domain, "bond {} out of range for {} sites", i, self.n);
        }
        let mut terms: Vec<(usize, ComplexTensor)> = vec![
            (0, pauli_pair('X', 'X')),
            (1, pauli_pair('Y', 'Y')),
            (2, pauli_pair('Z', 'Z')),
            (3 + i, pauli_pair('X', 'I')),
        ];
        if i + 2 == self.n {
            terms.push((3 + i + 1, pauli_pair('I', 'X')));
        }
        let mut primal = ComplexTensor::zeros(&[4, 4]);
        let mut tangents = vec![ComplexTensor::zeros(&[4, 4]); self.nu()];
        for (l, op) in terms {
            primal.axpy(C64::new(theta[l], 0.0), &op)?;
            tangents[l] = op;
        }
        TangentBundle::new(primal, tangents)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergParams {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub h: Vec<f64>,
}

impl HeisenbergParams {
    pub fn to_theta(&self) -> Vec<f64> {
        let mut t = vec![self.jx, self.jy, self.jz];
        t.extend_from_slice(&self.h);
        t
    }

    pub fn from_theta(theta: &[f64]) -> Result<Self> {
        if theta.len() < 5 {
            bail!(Dimension, "Heisenberg θ needs at least 5 entries, got {}", theta.len());
        }
        Ok(Self { jx: theta[0], jy: theta[1], jz: theta[2], h: theta[3..].to_vec() })
    }
}

/// Target couplings `(Jx, Jy, Jz)` of the benchmark chain.
pub const TARGET_COUPLINGS: [f64; 3] = [-1.0, -0.5, -0.4];

/// Benchmark target: fixed couplings, fields drawn uniformly from `[−1, 1]`.
pub fn draw_target(n: usize, seed: u64) -> Result<HeisenbergParams> {
    if n < 2 {
        bail!(Domain, "a chain needs at least 2 sites, got {}", n);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let [jx, jy, jz] = TARGET_COUPLINGS;
    Ok(HeisenbergParams { jx, jy, jz, h })
}

/// One layer of mutually commuting gates `exp(−i·tau·h_b)` on `bonds`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub bonds: Vec<usize>,
    pub tau: f64,
}

/// Second-order splitting `A(dt/2) B(dt) A(dt/2)` per step, with the
/// half-steps of neighbouring steps merged. Layer A holds the bonds starting
/// on even sites, layer B those starting on odd sites.
#[derive(Clone, Debug, PartialEq)]
pub struct TrotterPlan {
    pub t: f64,
    /// Step actually used; may be smaller than requested so that it divides `t`.
    pub dt: f64,
    pub steps: usize,
    /// `true` when the requested step did not divide `t`.
    pub dt_adjusted: bool,
    pub layers: Vec<Layer>,
}

impl TrotterPlan {
    /// Distinct gate durations used by the layers.
    pub fn taus(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for l in &self.layers {
            if !out.iter().any(|&x| x == l.tau) {
                out.push(l.tau);
            }
        }
        out
    }
}

pub fn build_trotter_plan<M: HamiltonianModel + ?Sized>(model: &M, t: f64, dt: f64) -> Result<TrotterPlan> {
    let n_sites = model.n();
    if !(t > 0.0) || !t.is_finite() {
        bail!(Domain, "evolution time must be positive, got {}", t);
    }
    if !(dt > 0.0) || !dt.is_finite() {
        bail!(Domain, "Trotter step must be positive, got {}", dt);
    }
    if n_sites < 2 {
        bail!(Domain, "a chain needs at least 2 sites, got {}", n_sites);
    }
    let ratio = t / dt;
    let steps = (libm::ceil(ratio - 1e-9 * ratio.max(1.0)) as usize).max(1);
    let dt_eff = t / steps as f64;
    let dt_adjusted = (ratio - libm::round(ratio)).abs() > 1e-9 * ratio.max(1.0) || ratio < 1.0;

    let a: Vec<usize> = (0..n_sites - 1).step_by(2).collect();
    let b: Vec<usize> = (1..n_sites - 1).step_by(2).collect();
    let mut layers = Vec::with_capacity(2 * steps + 1);
    let mut push = |bonds: &Vec<usize>, tau: f64| {
        if !bonds.is_empty() {
            layers.push(Layer { bonds: bonds.clone(), tau });
        }
    };
    push(&a, dt_eff / 2.0);
    for s in 0..steps {
        push(&b, dt_eff);
        push(&a, if s + 1 == steps { dt_eff / 2.0 } else { dt_eff });
    }
    Ok(TrotterPlan { t, dt: dt_eff, steps, dt_adjusted, layers })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn zz_generator_is_diagonal() {
        let m = Heisenberg::new(3).unwrap();
        let g = m.bond_generator(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0], 0).unwrap();
        assert_eq!(g.primal, ComplexTensor::from_diag(&[c(1.0), c(-1.0), c(-1.0), c(1.0)]));
    }

    #[test]
    fn xx_generator_is_antidiagonal() {
        let m = Heisenberg::new(2).unwrap();
        let g = m.bond_generator(&[1.0, 0.0, 0.0, 0.0, 0.0], 0).unwrap();
        for r in 0..4 {
            for col in 0..4 {
                let want = if r + col == 3 { 1.0 } else { 0.0 };
                assert_eq!(g.primal.data()[r * 4 + col], c(want));
            }
        }
    }

    #[test]
    fn tangents_are_the_pauli_terms() {
        let m = Heisenberg::new(4).unwrap();
        let theta = [0.3, -0.2, 0.7, 0.1, 0.2, 0.3, 0.4];
        let last = m.bond_generator(&theta, 2).unwrap();
        assert_eq!(last.tangents[1], pauli_pair('Y', 'Y'));
        assert_eq!(last.tangents[5], pauli_pair('X', 'I'));
        assert_eq!(last.tangents[6], pauli_pair('I', 'X'));
        assert!(last.tangents[3].frobenius_norm() == 0.0);
        let first = m.bond_generator(&theta, 0).unwrap();
        assert!(first.tangents[6].frobenius_norm() == 0.0);
        assert!(m.bond_generator(&theta, 3).is_err());
    }

    #[test]
    fn target_draw() {
        let a = draw_target(8, 42).unwrap();
        assert_eq!((a.jx, a.jy, a.jz), (-1.0, -0.5, -0.4));
        assert!(a.h.iter().all(|h| h.abs() <= 1.0));
        assert_eq!(a, draw_target(8, 42).unwrap());
        assert_ne!(a, draw_target(8, 43).unwrap());
        assert_eq!(HeisenbergParams::from_theta(&a.to_theta()).unwrap(), a);
    }

    #[test]
    fn single_step_plan() {
        let p = build_trotter_plan(&Heisenberg::new(4).unwrap(), 0.05, 0.05).unwrap();
        assert_eq!(p.steps, 1);
        let taus: Vec<f64> = p.layers.iter().map(|l| l.tau).collect();
        assert_eq!(taus, vec![0.025, 0.05, 0.025]);
        assert_eq!(p.layers[0].bonds, vec![0, 2]);
        assert_eq!(p.layers[1].bonds, vec![1]);
    }

    #[test]
    fn plan_time_adds_up() {
        let h6 = Heisenberg::new(6).unwrap();
        let p = build_trotter_plan(&h6, 0.2, 0.05).unwrap();
        assert_eq!(p.steps, 4);
        assert!(!p.dt_adjusted);
        let a_time: f64 = p.layers.iter().filter(|l| l.bonds[0] == 0).map(|l| l.tau).sum();
        let b_time: f64 = p.layers.iter().filter(|l| l.bonds[0] == 1).map(|l| l.tau).sum();
        assert!((a_time - 0.2).abs() < 1e-12 && (b_time - 0.2).abs() < 1e-12);
        let q = build_trotter_plan(&h6, 0.2, 0.03).unwrap();
        assert!(q.dt_adjusted && q.steps == 7);
        assert!(build_trotter_plan(&h6, 0.0, 0.05).is_err());
    }
}

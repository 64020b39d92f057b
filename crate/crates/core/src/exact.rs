//! Dense state-vector reference solver.
//!
//! Small chains are exponentiated through a Hermitian eigendecomposition of
//! the full Hamiltonian; larger ones are integrated with an adaptive
//! Dormand–Prince Runge–Kutta scheme applying `H` bond by bond.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{bail, Result};
use crate::hamiltonian::HamiltonianModel;
use crate::linalg_ad::expm::{exprel, hermitian_eigen};
use crate::mps::{choose_bit, BitString, Pauli, PauliBasis, MAX_DENSE_SITES};
use crate::tensor::ComplexTensor;
use crate::C64;

/// Chains up to this size are exponentiated densely.
pub const DENSE_EXPM_MAX_SITES: usize = 8;
/// Default refusal threshold of the exact engine.
pub const DEFAULT_EXACT_CAP: usize = 20;
const NORM_DRIFT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExactMethod {
    /// Dense exponential up to [`DENSE_EXPM_MAX_SITES`], Runge–Kutta above.
    Auto,
    Eigen,
    RungeKutta,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactConfig {
    /// Largest chain accepted; at most [`MAX_DENSE_SITES`].
    pub max_sites: usize,
    /// Relative tolerance of the Runge–Kutta integrator.
    pub rtol: f64,
    pub method: ExactMethod,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self { max_sites: DEFAULT_EXACT_CAP, rtol: 1e-10, method: ExactMethod::Auto }
    }
}

/// Normalized dense state, site 0 as the most significant bit.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactState {
    n: usize,
    amplitudes: Vec<C64>,
}

/// A dense state with its derivatives along every parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactStateJvp {
    pub state: ExactState,
    pub tangents: Vec<Vec<C64>>,
}

impl ExactState {
    pub fn new(n: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if n > MAX_DENSE_SITES || amplitudes.len() != 1usize << n {
            bail!(Dimension, "{} amplitudes for {} sites", amplitudes.len(), n);
        }
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            bail!(Numeric, "state norm {} differs from 1", norm);
        }
        Ok(Self { n, amplitudes })
    }

    pub fn zeros_state(n: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << n];
        amplitudes[0] = C64::new(1.0, 0.0);
        Self { n, amplitudes }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// Outcome distribution of measuring every site in `basis`.
    pub fn distribution(&self, basis: &PauliBasis) -> Result<Vec<f64>> {
        Ok(rotate_dense(&self.amplitudes, self.n, basis)?.iter().map(|z| z.norm_sqr()).collect())
    }

    pub fn probability(&self, basis: &PauliBasis, s: &BitString) -> Result<f64> {
        if s.len() != self.n {
            bail!(Dimension, "bit-string of length {} for {} sites", s.len(), self.n);
        }
        Ok(self.distribution(basis)?[s.index()])
    }

    /// `1 − |⟨self|other⟩|`.
    pub fn infidelity(&self, other: &[C64]) -> f64 {
        let overlap: C64 = self.amplitudes.iter().zip(other).map(|(a, b)| a.conj() * b).sum();
        1.0 - overlap.norm()
    }

    /// Draws outcomes with the same per-draw streams and bit-by-bit decision
    /// rule as [`crate::Mps::sample`], so equal distributions give equal draws.
    pub fn sample(&self, basis: &PauliBasis, count: usize, seed: u64) -> Result<Vec<BitString>> {
        let p = self.distribution(basis)?;
        // tree[level] holds the marginal mass of every prefix of that length.
        let mut tree: Vec<Vec<f64>> = vec![p];
        for _ in 0..self.n {
            let last = tree.last().expect("non-empty");
            let up: Vec<f64> = last.chunks(2).map(|c| c[0] + c[1]).collect();
            tree.push(up);
        }
        tree.reverse();
        (0..count)
            .map(|d| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(d as u64);
                let mut prefix = 0usize;
                let mut bits = Vec::with_capacity(self.n);
                for level in tree.iter().skip(1) {
                    let (p0, p1) = (level[2 * prefix], level[2 * prefix + 1]);
                    let u: f64 = rng.random();
                    let b = choose_bit(u, p0, p1);
                    prefix = 2 * prefix + b as usize;
                    bits.push(b);
                }
                BitString::new(bits)
            })
            .collect()
    }
}

impl ExactStateJvp {
    /// Outcome distribution in `basis` with `∂p/∂θ_l` for every outcome.
    pub fn distribution_jvp(&self, basis: &PauliBasis) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let n = self.state.n;
        let a = rotate_dense(&self.state.amplitudes, n, basis)?;
        let p = a.iter().map(|z| z.norm_sqr()).collect();
        let dp = self
            .tangents
            .iter()
            .map(|t| {
                let da = rotate_dense(t, n, basis)?;
                Ok(a.iter().zip(&da).map(|(x, dx)| 2.0 * (x.conj() * dx).re).collect())
            })
            .collect::<Result<_>>()?;
        Ok((p, dp))
    }
}

fn rotate_dense(psi: &[C64], n: usize, basis: &PauliBasis) -> Result<Vec<C64>> {
    if basis.len() != n {
        bail!(Dimension, "basis of length {} for {} sites", basis.len(), n);
    }
    let mut out = psi.to_vec();
    for (i, p) in basis.axes().iter().enumerate() {
        if *p == Pauli::Z {
            continue;
        }
        let r = p.rotation();
        let shift = n - 1 - i;
        for idx in 0..out.len() {
            if (idx >> shift) & 1 == 0 {
                let j = idx | (1 << shift);
                let (x0, x1) = (out[idx], out[j]);
                out[idx] = r[0][0] * x0 + r[0][1] * x1;
                out[j] = r[1][0] * x0 + r[1][1] * x1;
            }
        }
    }
    Ok(out)
}

fn check_size<M: HamiltonianModel + ?Sized>(model: &M, cfg: &ExactConfig) -> Result<()> {
    if cfg.max_sites > MAX_DENSE_SITES {
        bail!(Resource, "exact engine cap {} exceeds the hard limit {}", cfg.max_sites, MAX_DENSE_SITES);
    }
    if model.n() > cfg.max_sites {
        bail!(Resource, "exact engine refuses {} sites (cap {})", model.n(), cfg.max_sites);
    }
    Ok(())
}

fn check_times(times: &[f64]) -> Result<()> {
    let mut prev = 0.0;
    for &t in times {
        if !(t >= prev) || !t.is_finite() {
            bail!(Domain, "times must be ascending and non-negative");
        }
        prev = t;
    }
    Ok(())
}

/// The bond generators of `H(θ)` evaluated once.
struct Bonds {
    n: usize,
    gens: Vec<ComplexTensor>,
    dgens: Vec<Vec<ComplexTensor>>,
}

impl Bonds {
    fn new<M: HamiltonianModel + ?Sized>(model: &M, theta: &[f64]) -> Result<Self> {
        model.check_theta(theta)?;
        let mut gens = Vec::new();
        let mut dgens = Vec::new();
        for b in 0..model.n() - 1 {
            let g = model.bond_generator(theta, b)?;
            gens.push(g.primal);
            dgens.push(g.tangents);
        }
        Ok(Self { n: model.n(), gens, dgens })
    }

    /// `out += Σ_b op_b · psi` where `op_b` acts on sites `(b, b+1)`.
    fn apply(&self, ops: &[&ComplexTensor], psi: &[C64], out: &mut [C64]) {
        for (b, op) in ops.iter().enumerate() {
            let shift = self.n - 2 - b;
            let g = op.data();
            for (idx, &amp) in psi.iter().enumerate() {
                if amp.re == 0.0 && amp.im == 0.0 {
                    continue;
                }
                let pair = (idx >> shift) & 3;
                let base = idx & !(3 << shift);
                for row in 0..4 {
                    let c = g[row * 4 + pair];
                    if c.re != 0.0 || c.im != 0.0 {
                        out[base | (row << shift)] += c * amp;
                    }
                }
            }
        }
    }

    fn dense(&self, ops: &[&ComplexTensor]) -> DMatrix<C64> {
        let dim = 1usize << self.n;
        let mut h = DMatrix::<C64>::zeros(dim, dim);
        let mut e = vec![C64::new(0.0, 0.0); dim];
        let mut col = vec![C64::new(0.0, 0.0); dim];
        for j in 0..dim {
            e[j] = C64::new(1.0, 0.0);
            col.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            self.apply(ops, &e, &mut col);
            for (i, &z) in col.iter().enumerate() {
                h[(i, j)] = z;
            }
            e[j] = C64::new(0.0, 0.0);
        }
        h
    }
}

/// Dense `H(θ)` as a `2ⁿ × 2ⁿ` matrix.
pub fn dense_hamiltonian<M: HamiltonianModel + ?Sized>(model: &M, theta: &[f64]) -> Result<ComplexTensor> {
    if model.n() > DENSE_EXPM_MAX_SITES + 4 {
        bail!(Resource, "dense Hamiltonian of {} sites is too large", model.n());
    }
    let bonds = Bonds::new(model, theta)?;
    let ops: Vec<&ComplexTensor> = bonds.gens.iter().collect();
    Ok(crate::tensor::svd::from_dmatrix(&bonds.dense(&ops)))
}

/// `e^{−iH(θ)t}|0ⁿ⟩`.
pub fn exact_evolve<M: HamiltonianModel + ?Sized>(model: &M, theta: &[f64], t: f64) -> Result<ExactState> {
    Ok(exact_evolve_times(model, theta, &[t], &ExactConfig::default())?.remove(0))
}

/// `e^{−iH(θ)t_j}|0ⁿ⟩` for ascending `times`.
pub fn exact_evolve_times<M: HamiltonianModel + ?Sized>(
    model: &M,
    theta: &[f64],
    times: &[f64],
    cfg: &ExactConfig,
) -> Result<Vec<ExactState>> {
    check_size(model, cfg)?;
    check_times(times)?;
    let bonds = Bonds::new(model, theta)?;
    let n = model.n();
    let dense = match cfg.method {
        ExactMethod::Auto => n <= DENSE_EXPM_MAX_SITES,
        ExactMethod::Eigen if n > DENSE_EXPM_MAX_SITES + 4 => {
            bail!(Resource, "dense exponential of {} sites is too large", n)
        }
        ExactMethod::Eigen => true,
        ExactMethod::RungeKutta => false,
    };
    if dense {
        let ops: Vec<&ComplexTensor> = bonds.gens.iter().collect();
        let h = crate::tensor::svd::from_dmatrix(&bonds.dense(&ops));
        let eig = hermitian_eigen(&h)?;
        let w = &eig.vectors;
        let c0: DVector<C64> = w.row(0).adjoint();
        return times
            .iter()
            .map(|&t| {
                let phased = DVector::from_fn(c0.len(), |a, _| c0[a] * C64::new(0.0, -t * eig.values[a]).exp());
                let psi = w * phased;
                finish(n, psi.iter().copied().collect())
            })
            .collect();
    }
    let ops: Vec<&ComplexTensor> = bonds.gens.iter().collect();
    let mut psi = ExactState::zeros_state(n).amplitudes;
    let mut out = Vec::with_capacity(times.len());
    let mut now = 0.0;
    let mut h_step = 0.0;
    for &t in times {
        if t > now {
            psi = dopri(&bonds, &ops, psi, t - now, cfg.rtol, &mut h_step)?;
        }
        now = t;
        out.push(finish(n, psi.clone())?);
    }
    Ok(out)
}

/// As [`exact_evolve_times`], with derivatives along every parameter.
///
/// Uses the dense exponential, so the chain must fit the dense threshold.
pub fn exact_evolve_jvp<M: HamiltonianModel + ?Sized>(model: &M, theta: &[f64], times: &[f64]) -> Result<Vec<ExactStateJvp>> {
    check_times(times)?;
    let n = model.n();
    if n > DENSE_EXPM_MAX_SITES {
        bail!(Resource, "exact derivatives need at most {} sites, got {}", DENSE_EXPM_MAX_SITES, n);
    }
    let bonds = Bonds::new(model, theta)?;
    let ops: Vec<&ComplexTensor> = bonds.gens.iter().collect();
    let h = crate::tensor::svd::from_dmatrix(&bonds.dense(&ops));
    let eig = hermitian_eigen(&h)?;
    let w = &eig.vectors;
    let wh = w.adjoint();
    let c0: DVector<C64> = w.row(0).adjoint();
    // ∂H/∂θ_l in the eigenbasis.
    let dh_tilde: Vec<DMatrix<C64>> = (0..model.nu())
        .map(|l| {
            let ops: Vec<&ComplexTensor> = bonds.dgens.iter().map(|d| &d[l]).collect();
            &wh * bonds.dense(&ops) * w
        })
        .collect();
    let dim = c0.len();
    times
        .iter()
        .map(|&t| {
            let scale = C64::new(0.0, -t);
            let mu: Vec<C64> = eig.values.iter().map(|&l| scale * l).collect();
            let phased = DVector::from_fn(dim, |a, _| c0[a] * mu[a].exp());
            let state = finish(n, (w * &phased).iter().copied().collect())?;
            let phi = DMatrix::from_fn(dim, dim, |a, b| scale * mu[b].exp() * exprel(mu[a] - mu[b]) * c0[b]);
            let tangents = dh_tilde
                .iter()
                .map(|v| {
                    let inner = DVector::from_fn(dim, |a, _| (0..dim).map(|b| v[(a, b)] * phi[(a, b)]).sum::<C64>());
                    (w * inner).iter().copied().collect()
                })
                .collect();
            Ok(ExactStateJvp { state, tangents })
        })
        .collect()
}

fn finish(n: usize, amplitudes: Vec<C64>) -> Result<ExactState> {
    let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
    if !norm.is_finite() || (norm - 1.0).abs() > NORM_DRIFT_TOL {
        bail!(Numeric, "norm drifted to {}", norm);
    }
    Ok(ExactState { n, amplitudes })
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `ψ' = −iHψ` over `span`, reusing the step size across calls.
fn dopri(bonds: &Bonds, ops: &[&ComplexTensor], mut psi: Vec<C64>, span: f64, rtol: f64, h: &mut f64) -> Result<Vec<C64>> {
    let dim = psi.len();
    let atol = rtol * 1e-3;
    let rhs = |y: &[C64], out: &mut Vec<C64>| {
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        bonds.apply(ops, y, out);
        out.iter_mut().for_each(|z| *z *= C64::new(0.0, -1.0));
    };
    if *h <= 0.0 {
        let scale: f64 = bonds.gens.iter().map(|g| g.frobenius_norm()).sum::<f64>().max(1.0);
        *h = 0.05 / scale;
    }
    let mut k: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); dim]; 7];
    let mut stage = vec![C64::new(0.0, 0.0); dim];
    let mut t = 0.0;
    let mut rejects = 0usize;
    while t < span {
        let step = h.min(span - t);
        rhs(&psi, &mut k[0]);
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = psi[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    if A[s][j] != 0.0 {
                        acc += kj[i] * (step * A[s][j]);
                    }
                }
                stage[i] = acc;
            }
            let (_, rest) = k.split_at_mut(s);
            rhs(&stage, &mut rest[0]);
        }
        let mut err = 0.0f64;
        let mut next = vec![C64::new(0.0, 0.0); dim];
        for i in 0..dim {
            let mut y5 = psi[i];
            let mut e = C64::new(0.0, 0.0);
            for s in 0..7 {
                y5 += k[s][i] * (step * B5[s]);
                e += k[s][i] * (step * (B5[s] - B4[s]));
            }
            let sc = atol + rtol * psi[i].norm().max(y5.norm());
            err = err.max(e.norm() / sc);
            next[i] = y5;
        }
        if !err.is_finite() {
            bail!(Numeric, "Runge–Kutta error estimate is not finite");
        }
        if err <= 1.0 {
            t += step;
            psi = next;
            rejects = 0;
        } else {
            rejects += 1;
            if rejects > 50 {
                bail!(Numeric, "Runge–Kutta step control failed");
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0) };
        if step == *h || err > 1.0 {
            *h = step * factor;
        }
    }
    Ok(psi)
}

//! Open-boundary matrix-product states with optional forward tangents.
//!
//! Site tensors have shape `(χ_left, 2, χ_right)`. The state is kept in mixed
//! canonical form: sites left of [`Mps::center`] are left-isometric, sites to
//! the right are right-isometric. Every bond split goes through
//! [`svd_jvp`], with or without tangents.

mod basis;

pub use basis::{BitString, Pauli, PauliBasis};

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{bail, Result};
use crate::linalg_ad::{contract_bundles, svd_jvp, SvdJvpConfig, TangentBundle};
use crate::tensor::ComplexTensor;
use crate::C64;

/// Bond dimension used when none is given.
pub const DEFAULT_CHI: usize = 30;

const UNITARITY_TOL: f64 = 1e-12;
const SAMPLING_TOL: f64 = 1e-8;
/// Largest chain that may be expanded into a dense state vector.
pub const MAX_DENSE_SITES: usize = 26;

/// Which side of a split bond receives the orthogonality center.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sweep {
    Right,
    Left,
}

#[derive(Clone, Debug)]
pub struct Mps {
    sites: Vec<TangentBundle>,
    chi: usize,
    nu: usize,
    center: usize,
    discarded_weight: f64,
    svd_cfg: SvdJvpConfig,
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

impl Mps {
    /// `|0⟩^{⊗n}` with all bonds of dimension one.
    pub fn product_state(n: usize) -> Result<Self> {
        if n < 2 {
            bail!(Domain, "a chain needs at least 2 sites, got {}", n);
        }
        let mut t = ComplexTensor::zeros(&[1, 2, 1]);
        t.data_mut()[0] = one();
        Ok(Self {
            sites: vec![TangentBundle::constant(t); n],
            chi: DEFAULT_CHI,
            nu: 0,
            center: 0,
            discarded_weight: 0.0,
            svd_cfg: SvdJvpConfig::default(),
        })
    }

    /// Builds a normalized state from arbitrary site tensors, bringing it into
    /// canonical form with the center on site 0.
    pub fn from_tensors(tensors: Vec<ComplexTensor>, chi: usize) -> Result<Self> {
        let n = tensors.len();
        if n < 2 {
            bail!(Domain, "a chain needs at least 2 sites, got {}", n);
        }
        if chi == 0 {
            bail!(Domain, "chi must be positive");
        }
        for (i, t) in tensors.iter().enumerate() {
            let s = t.shape();
            if s.len() != 3 || s[1] != 2 {
                bail!(Dimension, "site {} has shape {:?}, expected (χl, 2, χr)", i, s);
            }
            if s[0] > chi || s[2] > chi {
                bail!(Dimension, "site {} bond exceeds chi = {}", i, chi);
            }
            let left = if i == 0 { 1 } else { tensors[i - 1].shape()[2] };
            if s[0] != left || (i + 1 == n && s[2] != 1) {
                bail!(Dimension, "bond mismatch at site {}", i);
            }
        }
        let mut psi = Self {
            sites: tensors.into_iter().map(TangentBundle::constant).collect(),
            chi,
            nu: 0,
            center: n - 1,
            discarded_weight: 0.0,
            svd_cfg: SvdJvpConfig::default(),
        };
        psi.move_center(0)?;
        psi.normalize_center();
        Ok(psi)
    }

    pub fn with_chi(mut self, chi: usize) -> Self {
        self.chi = chi.max(1);
        self
    }

    pub fn with_svd_config(mut self, cfg: SvdJvpConfig) -> Self {
        self.svd_cfg = cfg;
        self
    }

    /// Attaches `nu` zero tangents to every site, replacing existing ones.
    pub fn with_tangents(mut self, nu: usize) -> Self {
        self.attach_tangents(nu);
        self
    }

    fn attach_tangents(&mut self, nu: usize) {
        for s in &mut self.sites {
            s.tangents = vec![ComplexTensor::zeros(s.shape()); nu];
        }
        self.nu = nu;
    }

    /// Non-differentiable copy.
    pub fn strip_tangents(&self) -> Self {
        let mut out = self.clone();
        for s in &mut out.sites {
            s.tangents.clear();
        }
        out.nu = 0;
        out
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn chi(&self) -> usize {
        self.chi
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn center(&self) -> usize {
        self.center
    }

    /// Accumulated relative weight dropped by truncations.
    pub fn discarded_weight(&self) -> f64 {
        self.discarded_weight
    }

    pub fn sites(&self) -> &[TangentBundle] {
        &self.sites
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.n() - 1].iter().map(|s| s.shape()[2]).collect()
    }

    /// Moves the orthogonality center to `target` by exact (untruncated) splits.
    pub fn move_center(&mut self, target: usize) -> Result<()> {
        if target >= self.n() {
            bail!(Domain, "site {} out of range for {} sites", target, self.n());
        }
        while self.center < target {
            let c = self.center;
            let (l, _, r) = dims3(self.sites[c].shape());
            let m = self.sites[c].reshape(&[l * 2, r])?;
            let (u, rest, _) = split(&m, usize::MAX, Sweep::Right, &self.svd_cfg)?;
            let k = u.shape()[1];
            self.sites[c] = u.reshape(&[l, 2, k])?;
            self.sites[c + 1] = contract_bundles(&rest, &self.sites[c + 1], &[(1, 0)])?;
            self.center += 1;
        }
        while self.center > target {
            let c = self.center;
            let (l, _, r) = dims3(self.sites[c].shape());
            let m = self.sites[c].reshape(&[l, 2 * r])?;
            let (rest, vh, _) = split(&m, usize::MAX, Sweep::Left, &self.svd_cfg)?;
            let k = vh.shape()[0];
            self.sites[c] = vh.reshape(&[k, 2, r])?;
            self.sites[c - 1] = contract_bundles(&self.sites[c - 1], &rest, &[(2, 0)])?;
            self.center -= 1;
        }
        Ok(())
    }

    fn normalize_center(&mut self) {
        let c = self.center;
        self.sites[c] = normalize(&self.sites[c]);
    }

    /// Applies a two-site gate on `(i, i+1)` and truncates the bond to `chi`.
    ///
    /// The gate may be given as a 4×4 matrix or a `(2,2,2,2)` tensor indexed
    /// `[out_i, out_{i+1}, in_i, in_{i+1}]`, optionally with tangents.
    pub fn apply_two_site_gate(&self, i: usize, gate: &TangentBundle, chi: usize) -> Result<Self> {
        let mut out = self.clone();
        let dir = if self.center <= i { Sweep::Right } else { Sweep::Left };
        out.apply_gate_mut(i, gate, chi, dir)?;
        Ok(out)
    }

    /// In-place gate application; the center ends on `i+1` for [`Sweep::Right`]
    /// and on `i` for [`Sweep::Left`].
    pub fn apply_gate_mut(&mut self, i: usize, gate: &TangentBundle, chi: usize, dir: Sweep) -> Result<()> {
        let n = self.n();
        if i + 1 >= n {
            bail!(Domain, "bond {} out of range for {} sites", i, n);
        }
        if chi == 0 {
            bail!(Domain, "chi must be positive");
        }
        let g = check_gate(gate)?;
        if g.nu() > 0 && self.nu == 0 {
            self.attach_tangents(g.nu());
        } else if g.nu() > 0 && g.nu() != self.nu {
            bail!(Dimension, "gate carries {} tangents, state {}", g.nu(), self.nu);
        }
        if self.center <= i {
            self.move_center(i)?;
        } else {
            self.move_center(i + 1)?;
        }
        let (l, _, _) = dims3(self.sites[i].shape());
        let (_, _, r) = dims3(self.sites[i + 1].shape());
        let theta = contract_bundles(&self.sites[i], &self.sites[i + 1], &[(2, 0)])?;
        let theta = contract_bundles(&g, &theta, &[(2, 1), (3, 2)])?
            .transpose(&[2, 0, 1, 3])?
            .reshape(&[2 * l, 2 * r])?;
        let (a, b, dropped) = split(&theta, chi, dir, &self.svd_cfg)?;
        let k = a.shape()[1];
        self.sites[i] = a.reshape(&[l, 2, k])?;
        self.sites[i + 1] = b.reshape(&[k, 2, r])?;
        self.center = if dir == Sweep::Right { i + 1 } else { i };
        self.discarded_weight += dropped;
        self.chi = chi;
        Ok(())
    }

    /// Applies a constant single-site operator `op` (2×2) to site `i`.
    fn apply_single_site(&mut self, i: usize, op: &ComplexTensor) -> Result<()> {
        let op = TangentBundle::constant(op.clone());
        self.sites[i] = contract_bundles(&op, &self.sites[i], &[(1, 1)])?.transpose(&[1, 0, 2])?;
        Ok(())
    }

    /// Maps each site's measurement eigenbasis onto the computational basis.
    pub fn rotate_to_basis(&self, basis: &PauliBasis) -> Result<Self> {
        self.rotate(basis, false)
    }

    /// Inverse of [`Mps::rotate_to_basis`].
    pub fn rotate_from_basis(&self, basis: &PauliBasis) -> Result<Self> {
        self.rotate(basis, true)
    }

    fn rotate(&self, basis: &PauliBasis, inverse: bool) -> Result<Self> {
        if basis.len() != self.n() {
            bail!(Dimension, "basis of length {} for {} sites", basis.len(), self.n());
        }
        let mut out = self.clone();
        for (i, p) in basis.axes().iter().enumerate() {
            if *p == Pauli::Z {
                continue;
            }
            let r = p.rotation_tensor();
            let r = if inverse { r.adjoint()? } else { r };
            out.apply_single_site(i, &r)?;
        }
        Ok(out)
    }

    /// `⟨s|ψ⟩`.
    pub fn amplitude(&self, s: &BitString) -> Result<C64> {
        self.check_bits(s)?;
        let mut v = vec![one()];
        for (site, &b) in self.sites.iter().zip(s.bits()) {
            v = row_times_slice(&v, &site.primal, b as usize);
        }
        Ok(v[0])
    }

    /// `⟨s|ψ⟩` together with its derivative along every tangent.
    pub fn amplitude_jvp(&self, s: &BitString) -> Result<(C64, Vec<C64>)> {
        self.check_bits(s)?;
        let (one, zero) = (one(), C64::new(0.0, 0.0));
        Ok(self.projected_amplitude_jvp(s.bits().iter().map(|&b| if b == 0 { [one, zero] } else { [zero, one] })))
    }

    /// Amplitude of outcome `s` when every site is measured in `basis`,
    /// `⟨s|R|ψ⟩`, without building the rotated state.
    pub fn basis_amplitude_jvp(&self, basis: &PauliBasis, s: &BitString) -> Result<(C64, Vec<C64>)> {
        self.check_bits(s)?;
        if basis.len() != self.n() {
            bail!(Dimension, "basis of length {} for {} sites", basis.len(), self.n());
        }
        Ok(self.projected_amplitude_jvp(basis.axes().iter().zip(s.bits()).map(|(p, &b)| p.rotation()[b as usize])))
    }

    /// Contracts site `i` with the covector `w_i` on its physical leg.
    fn projected_amplitude_jvp(&self, weights: impl Iterator<Item = [C64; 2]>) -> (C64, Vec<C64>) {
        let nu = self.nu;
        let mut v = vec![one()];
        let mut dv: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0)]; nu];
        for (site, w) in self.sites.iter().zip(weights) {
            for (l, d) in dv.iter_mut().enumerate() {
                let mut next = row_times_combo(d, &site.primal, w);
                let extra = row_times_combo(&v, &site.tangents[l], w);
                for (x, y) in next.iter_mut().zip(extra) {
                    *x += y;
                }
                *d = next;
            }
            v = row_times_combo(&v, &site.primal, w);
        }
        (v[0], dv.into_iter().map(|d| d[0]).collect())
    }

    /// `⟨ψ|ψ⟩` by transfer matrices.
    pub fn norm_sqr(&self) -> f64 {
        let mut e = vec![one()];
        let mut dim = 1;
        for site in &self.sites {
            let (l, _, r) = dims3(site.shape());
            debug_assert_eq!(l, dim);
            let a = site.primal.data();
            let mut next = vec![C64::new(0.0, 0.0); r * r];
            for b in 0..2 {
                // tmp = E · A[b]  (l × r)
                let mut tmp = vec![C64::new(0.0, 0.0); l * r];
                for x in 0..l {
                    for y in 0..l {
                        let exy = e[x * l + y];
                        for c in 0..r {
                            tmp[x * r + c] += exy * a[(y * 2 + b) * r + c];
                        }
                    }
                }
                for x in 0..l {
                    for c1 in 0..r {
                        let ac = a[(x * 2 + b) * r + c1].conj();
                        for c2 in 0..r {
                            next[c1 * r + c2] += ac * tmp[x * r + c2];
                        }
                    }
                }
            }
            e = next;
            dim = r;
        }
        e[0].re
    }

    /// Dense `2ⁿ` amplitude vector, site 0 as the most significant bit.
    pub fn to_statevector(&self) -> Result<Vec<C64>> {
        if self.n() > MAX_DENSE_SITES {
            bail!(Resource, "dense expansion of {} sites exceeds the cap of {}", self.n(), MAX_DENSE_SITES);
        }
        let mut acc = ComplexTensor::new(&[1, 1], vec![one()])?;
        for site in &self.sites {
            let (l, _, r) = dims3(site.shape());
            let rows = acc.shape()[0];
            let a = site.primal.reshape(&[l, 2 * r])?;
            acc = acc.matmul(&a)?.into_reshape(&[rows * 2, r])?;
        }
        Ok(acc.into_data())
    }

    /// Multiplies bond `i` (between sites `i` and `i+1`) by a diagonal phase
    /// matrix and its inverse. The state is unchanged; only its gauge is.
    pub fn rephase_bond(&mut self, i: usize, phases: &[C64]) -> Result<()> {
        if i + 1 >= self.n() {
            bail!(Domain, "bond {} out of range", i);
        }
        let k = self.sites[i].shape()[2];
        if phases.len() != k || phases.iter().any(|p| (p.norm() - 1.0).abs() > 1e-12) {
            bail!(Domain, "need {} unit-modulus phases", k);
        }
        let scale_right = |t: &mut ComplexTensor| {
            for (idx, z) in t.data_mut().iter_mut().enumerate() {
                *z *= phases[idx % k];
            }
        };
        let left = &mut self.sites[i];
        scale_right(&mut left.primal);
        left.tangents.iter_mut().for_each(scale_right);
        let stride = 2 * self.sites[i + 1].shape()[2];
        let scale_left = |t: &mut ComplexTensor| {
            for (idx, z) in t.data_mut().iter_mut().enumerate() {
                *z *= phases[idx / stride].conj();
            }
        };
        let right = &mut self.sites[i + 1];
        scale_left(&mut right.primal);
        right.tangents.iter_mut().for_each(scale_left);
        Ok(())
    }

    /// Draws `count` outcomes of measuring every site in `basis`.
    ///
    /// Draw `d` uses its own ChaCha8 stream `(seed, d)`, so results do not
    /// depend on how draws are scheduled.
    pub fn sample(&self, basis: &PauliBasis, count: usize, seed: u64) -> Result<Vec<BitString>> {
        let mut psi = self.strip_tangents().rotate_to_basis(basis)?;
        psi.move_center(0)?;
        psi.normalize_center();
        let sampler = Sampler::new(&psi);
        (0..count)
            .map(|d| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(d as u64);
                sampler.draw(&mut rng)
            })
            .collect()
    }

    fn check_bits(&self, s: &BitString) -> Result<()> {
        if s.len() != self.n() {
            bail!(Dimension, "bit-string of length {} for {} sites", s.len(), self.n());
        }
        Ok(())
    }
}

/// Site tensors of a right-canonical state, used for sequential sampling.
struct Sampler<'a> {
    sites: Vec<&'a ComplexTensor>,
}

impl<'a> Sampler<'a> {
    fn new(psi: &'a Mps) -> Self {
        Self { sites: psi.sites.iter().map(|s| &s.primal).collect() }
    }

    fn draw(&self, rng: &mut impl Rng) -> Result<BitString> {
        let mut v = vec![one()];
        let mut bits = Vec::with_capacity(self.sites.len());
        for site in &self.sites {
            let w0 = row_times_slice(&v, site, 0);
            let w1 = row_times_slice(&v, site, 1);
            let p0: f64 = w0.iter().map(|z| z.norm_sqr()).sum();
            let p1: f64 = w1.iter().map(|z| z.norm_sqr()).sum();
            if !(((p0 + p1) - 1.0).abs() <= SAMPLING_TOL) {
                bail!(Numeric, "conditional probabilities sum to {}", p0 + p1);
            }
            let u: f64 = rng.random();
            let (b, w, p) = if choose_bit(u, p0, p1) == 0 { (0, w0, p0) } else { (1, w1, p1) };
            let inv = 1.0 / libm::sqrt(p);
            v = w.into_iter().map(|z| z * inv).collect();
            bits.push(b);
        }
        BitString::new(bits)
    }
}

/// Bit drawn from the conditional masses `(p0, p1)` with uniform `u`.
pub(crate) fn choose_bit(u: f64, p0: f64, p1: f64) -> u8 {
    if u * (p0 + p1) < p0 {
        0
    } else {
        1
    }
}

fn dims3(shape: &[usize]) -> (usize, usize, usize) {
    (shape[0], shape[1], shape[2])
}

/// `v · A[:, b, :]` for a site tensor `A` of shape `(l, 2, r)`.
/// `Σ_b w[b] · v · A[:, b, :]`.
fn row_times_combo(v: &[C64], a: &ComplexTensor, w: [C64; 2]) -> Vec<C64> {
    let (l, _, r) = dims3(a.shape());
    let d = a.data();
    let mut out = vec![C64::new(0.0, 0.0); r];
    for (x, &vx) in v.iter().enumerate().take(l) {
        for (b, &wb) in w.iter().enumerate() {
            if wb == C64::new(0.0, 0.0) {
                continue;
            }
            let c = vx * wb;
            let row = &d[(x * 2 + b) * r..(x * 2 + b + 1) * r];
            for (o, &ay) in out.iter_mut().zip(row) {
                *o += c * ay;
            }
        }
    }
    out
}

fn row_times_slice(v: &[C64], a: &ComplexTensor, b: usize) -> Vec<C64> {
    let (l, _, r) = dims3(a.shape());
    let d = a.data();
    let mut out = vec![C64::new(0.0, 0.0); r];
    for (x, &vx) in v.iter().enumerate().take(l) {
        let row = &d[(x * 2 + b) * r..(x * 2 + b + 1) * r];
        for (o, &ay) in out.iter_mut().zip(row) {
            *o += vx * ay;
        }
    }
    out
}

fn check_gate(gate: &TangentBundle) -> Result<TangentBundle> {
    let g = match gate.shape() {
        [4, 4] => gate.reshape(&[2, 2, 2, 2])?,
        [2, 2, 2, 2] => gate.clone(),
        s => bail!(Dimension, "gate shape {:?}, expected 4×4 or (2,2,2,2)", s),
    };
    let m = g.primal.reshape(&[4, 4])?;
    let err = m.adjoint()?.matmul(&m)?.sub(&ComplexTensor::identity(4))?.frobenius_norm();
    if err > UNITARITY_TOL {
        bail!(Contract, "gate is not unitary (‖G†G − 1‖ = {:e})", err);
    }
    Ok(g)
}

fn adjoint_bundle(b: &TangentBundle) -> Result<TangentBundle> {
    Ok(TangentBundle {
        primal: b.primal.adjoint()?,
        tangents: b.tangents.iter().map(|t| t.adjoint()).collect::<Result<_>>()?,
    })
}

/// `x / ‖x‖` with tangents `dx/‖x‖ − x·Re⟨x, dx⟩/‖x‖³`.
fn normalize(x: &TangentBundle) -> TangentBundle {
    let nrm = x.primal.frobenius_norm();
    let inv = C64::new(1.0 / nrm, 0.0);
    let primal = x.primal.scale(inv);
    let tangents = x
        .tangents
        .iter()
        .map(|dx| {
            let overlap: f64 = x.primal.data().iter().zip(dx.data()).map(|(a, b)| (a.conj() * b).re).sum();
            let mut t = dx.scale(inv);
            t.axpy(C64::new(-overlap / (nrm * nrm), 0.0), &primal).expect("same shape");
            t
        })
        .collect();
    TangentBundle { primal, tangents }
}

/// Splits a matrix into an isometry and a center factor, keeping at most
/// `max_rank` singular values.
///
/// `Sweep::Right` returns `(U, U†θ)`, `Sweep::Left` returns `(θV, V†)`. The
/// center factor is renormalized when anything was truncated, and its
/// tangent is taken from the product rule on `U†θ` (resp. `θV`), which agrees
/// with `dS·V† + S·dV†` wherever the SVD is differentiable and remains exact
/// when zero singular values are present. The third value is the relative
/// weight dropped.
fn split(theta: &TangentBundle, max_rank: usize, dir: Sweep, cfg: &SvdJvpConfig) -> Result<(TangentBundle, TangentBundle, f64)> {
    let (rows, cols) = (theta.shape()[0], theta.shape()[1]);
    let rank = max_rank.min(rows).min(cols);
    let f = svd_jvp(theta, rank, cfg)?;
    let kept: f64 = f.singular_values().iter().map(|s| s * s).sum();
    let total = kept + f.discarded_weight;
    let dropped = if total > 0.0 { f.discarded_weight / total } else { 0.0 };
    let truncated = rank < rows.min(cols);
    let (iso, center) = match dir {
        Sweep::Right => {
            let center = contract_bundles(&adjoint_bundle(&f.u)?, theta, &[(1, 0)])?;
            (f.u, center)
        }
        Sweep::Left => {
            let center = contract_bundles(theta, &adjoint_bundle(&f.vh)?, &[(1, 0)])?;
            (f.vh, center)
        }
    };
    let center = if truncated { normalize(&center) } else { center };
    if !center.is_finite() || !iso.is_finite() {
        bail!(Numeric, "non-finite factors after split");
    }
    Ok(match dir {
        Sweep::Right => (iso, center, dropped),
        Sweep::Left => (center, iso, dropped),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn swap() -> TangentBundle {
        let mut g = ComplexTensor::zeros(&[4, 4]);
        for (r, col) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            g.data_mut()[r * 4 + col] = c(1.0);
        }
        TangentBundle::constant(g)
    }

    #[test]
    fn product_state_amplitudes() {
        let psi = Mps::product_state(3).unwrap();
        assert_eq!(psi.amplitude(&bits("000")).unwrap(), c(1.0));
        assert_eq!(psi.amplitude(&bits("010")).unwrap(), c(0.0));
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-15);
        assert!(Mps::product_state(1).is_err());
    }

    #[test]
    fn large_product_state_is_cheap() {
        let psi = Mps::product_state(100).unwrap();
        assert!(psi.bond_dims().iter().all(|&d| d == 1));
    }

    #[test]
    fn identity_gate_leaves_state() {
        let psi = Mps::product_state(3).unwrap();
        let id = TangentBundle::constant(ComplexTensor::identity(4));
        let out = psi.apply_two_site_gate(1, &id, 4).unwrap();
        for i in 0..8 {
            let s = BitString::from_index(i, 3);
            assert!((out.amplitude(&s).unwrap() - psi.amplitude(&s).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn swap_moves_excitation() {
        let mut x = ComplexTensor::zeros(&[2, 2]);
        x.data_mut()[1] = c(1.0);
        x.data_mut()[2] = c(1.0);
        let mut psi = Mps::product_state(2).unwrap();
        psi.apply_single_site(1, &x).unwrap();
        assert_eq!(psi.amplitude(&bits("01")).unwrap(), c(1.0));
        let out = psi.apply_two_site_gate(0, &swap(), 2).unwrap();
        assert!((out.amplitude(&bits("10")).unwrap() - c(1.0)).norm() < 1e-12);
        assert!(out.amplitude(&bits("01")).unwrap().norm() < 1e-12);
    }

    #[test]
    fn non_unitary_gate_is_rejected() {
        let psi = Mps::product_state(2).unwrap();
        let g = TangentBundle::constant(ComplexTensor::identity(4).scale(c(1.1)));
        assert!(matches!(psi.apply_two_site_gate(0, &g, 2), Err(crate::Error::Contract(_))));
    }

    #[test]
    fn basis_rotation_of_zero_state() {
        let psi = Mps::product_state(2).unwrap();
        for p in [Pauli::X, Pauli::Y] {
            let rot = psi.rotate_to_basis(&PauliBasis::uniform(2, p)).unwrap();
            for i in 0..4 {
                let a = rot.amplitude(&BitString::from_index(i, 2)).unwrap();
                assert!((a.norm_sqr() - 0.25).abs() < 1e-15);
            }
        }
        let z = psi.rotate_to_basis(&PauliBasis::uniform(2, Pauli::Z)).unwrap();
        assert_eq!(z.amplitude(&bits("00")).unwrap(), c(1.0));
        assert!(psi.rotate_to_basis(&PauliBasis::uniform(3, Pauli::Z)).is_err());
    }

    #[test]
    fn zero_state_samples_zero() {
        let psi = Mps::product_state(4).unwrap();
        let draws = psi.sample(&PauliBasis::uniform(4, Pauli::Z), 50, 3).unwrap();
        assert!(draws.iter().all(|s| s.index() == 0));
    }

    #[test]
    fn x_basis_frequency_of_zero() {
        let psi = Mps::product_state(2).unwrap();
        let draws = psi.sample(&PauliBasis::uniform(2, Pauli::X), 100_000, 11).unwrap();
        let zeros = draws.iter().filter(|s| s.bits()[0] == 0).count() as f64 / 1e5;
        assert!((zeros - 0.5).abs() < 0.01, "{zeros}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let psi = Mps::product_state(3).unwrap();
        let b = PauliBasis::uniform(3, Pauli::Y);
        assert_eq!(psi.sample(&b, 20, 5).unwrap(), psi.sample(&b, 20, 5).unwrap());
        assert_ne!(psi.sample(&b, 20, 5).unwrap(), psi.sample(&b, 20, 6).unwrap());
    }
}

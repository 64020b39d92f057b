//! Exponential of a scaled Hermitian matrix and its directional derivative.
//!
//! For `E = exp(c·h)` with `h = W Λ W†`, the derivative along `dh` is the
//! Daleckii–Krein form of `∫₀¹ e^{(1−τ)A} V e^{τA} dτ` (`A = c·h`, `V = c·dh`):
//! in the eigenbasis `dE_ab = Ṽ_ab · (e^{μ_a} − e^{μ_b}) / (μ_a − μ_b)`, with
//! `μ = c·λ` and the limit `e^{μ_a}` for coinciding eigenvalues.

use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use super::TangentBundle;
use crate::error::{bail, Result};
use crate::tensor::svd::{from_dmatrix, to_dmatrix};
use crate::tensor::ComplexTensor;
use crate::C64;

const HERMITICITY_TOL: f64 = 1e-12;

pub(crate) struct Eigen {
    pub(crate) vectors: DMatrix<C64>,
    pub(crate) values: Vec<f64>,
}

pub(crate) fn hermitian_eigen(h: &ComplexTensor) -> Result<Eigen> {
    if h.rank() != 2 || h.shape()[0] != h.shape()[1] {
        bail!(Dimension, "matrix exponential of non-square tensor {:?}", h.shape());
    }
    if !h.is_finite() {
        bail!(Numeric, "non-finite generator");
    }
    let hm = to_dmatrix(h);
    let skew = (&hm - hm.adjoint()).norm();
    if skew > HERMITICITY_TOL * hm.norm().max(1.0) {
        bail!(Contract, "generator is not Hermitian (‖h − h†‖ = {:e})", skew);
    }
    let herm = (&hm + hm.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::try_new(herm, f64::EPSILON, 10_000)
        .ok_or_else(|| crate::Error::Numeric("eigendecomposition did not converge".into()))?;
    Ok(Eigen { vectors: eig.eigenvectors, values: eig.eigenvalues.iter().copied().collect() })
}

/// `(e^z − 1) / z`, accurate near zero.
pub(crate) fn exprel(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        let one = C64::new(1.0, 0.0);
        one + z * (one / 2.0 + z * (one / 6.0 + z * (one / 24.0 + z / 120.0)))
    } else {
        (z.exp() - 1.0) / z
    }
}

fn exp_in_basis(eig: &Eigen, mu: &[C64]) -> DMatrix<C64> {
    let w = &eig.vectors;
    let mut scaled = w.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= mu[j].exp();
    }
    scaled * w.adjoint()
}

/// `exp(scale · h)` for Hermitian `h`.
pub fn herm_expm(h: &ComplexTensor, scale: C64) -> Result<ComplexTensor> {
    let eig = hermitian_eigen(h)?;
    let mu: Vec<C64> = eig.values.iter().map(|&l| scale * l).collect();
    Ok(from_dmatrix(&exp_in_basis(&eig, &mu)))
}

/// `exp(scale · h)` with one tangent per tangent of `h`.
pub fn herm_expm_jvp(h: &TangentBundle, scale: C64) -> Result<TangentBundle> {
    let eig = hermitian_eigen(&h.primal)?;
    let n = eig.values.len();
    let mu: Vec<C64> = eig.values.iter().map(|&l| scale * l).collect();
    let primal = from_dmatrix(&exp_in_basis(&eig, &mu));

    let w = &eig.vectors;
    let wh = w.adjoint();
    let phi = DMatrix::from_fn(n, n, |a, b| mu[b].exp() * exprel(mu[a] - mu[b]));

    let tangents = h
        .tangents
        .iter()
        .map(|dh| {
            let vt = &wh * to_dmatrix(dh) * w * scale;
            from_dmatrix(&(w * vt.component_mul(&phi) * &wh))
        })
        .collect();
    Ok(TangentBundle { primal, tangents })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn expansion_at_zero() {
        let dh = ComplexTensor::new(&[4, 4], (0..16).map(|i| C64::new(i as f64, 0.0)).collect()).unwrap();
        let dt = 0.05;
        let scale = C64::new(0.0, -dt);
        let b = TangentBundle::new(ComplexTensor::zeros(&[4, 4]), vec![dh.clone()]).unwrap();
        let out = herm_expm_jvp(&b, scale).unwrap();
        assert!(out.primal.sub(&ComplexTensor::identity(4)).unwrap().frobenius_norm() < 1e-15);
        let expect = dh.scale(scale);
        assert!(out.tangents[0].sub(&expect).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn commuting_diagonal_case() {
        let h = ComplexTensor::from_diag(&[c(1.0), c(2.0)]);
        let dh = ComplexTensor::from_diag(&[c(1.0), c(0.0)]);
        let out = herm_expm_jvp(&TangentBundle::new(h, vec![dh]).unwrap(), c(1.0)).unwrap();
        let expect = ComplexTensor::from_diag(&[c(core::f64::consts::E), c(0.0)]);
        assert!(out.tangents[0].sub(&expect).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn non_hermitian_generator_is_rejected() {
        let h = ComplexTensor::from_rows(&[&[c(0.0), c(1.0)], &[c(0.0), c(0.0)]]).unwrap();
        assert!(matches!(herm_expm(&h, c(1.0)), Err(crate::Error::Contract(_))));
    }

    #[test]
    fn exprel_is_continuous_across_branch() {
        let a = exprel(C64::new(0.0, 0.999e-3));
        let b = exprel(C64::new(0.0, 1.001e-3));
        assert!((a - b).norm() < 2e-6);
    }
}

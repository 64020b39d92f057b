//! Forward-mode derivative rules for the two non-linear primitives of TEBD.
//!
//! Every differentiable quantity is carried as a [`TangentBundle`]: the primal
//! value plus one tangent per model parameter. Linear operations act on the
//! primal and each tangent alike; the SVD and the Hermitian matrix exponential
//! need the dedicated rules in [`svd_jvp`] and [`herm_expm_jvp`].

pub(crate) mod expm;
mod svd_jvp;

pub use expm::{herm_expm, herm_expm_jvp};
pub use svd_jvp::{svd_jvp, SvdJvp, SvdJvpConfig};

use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::tensor::{contract, ComplexTensor};
use crate::C64;

/// A primal tensor together with its directional derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentBundle {
    pub primal: ComplexTensor,
    pub tangents: Vec<ComplexTensor>,
}

impl TangentBundle {
    pub fn new(primal: ComplexTensor, tangents: Vec<ComplexTensor>) -> Result<Self> {
        if let Some(t) = tangents.iter().find(|t| t.shape() != primal.shape()) {
            bail!(
                Dimension,
                "tangent shape {:?} differs from primal {:?}",
                t.shape(),
                primal.shape()
            );
        }
        Ok(Self { primal, tangents })
    }

    /// Bundle with no tangent directions.
    pub fn constant(primal: ComplexTensor) -> Self {
        Self { primal, tangents: Vec::new() }
    }

    /// Bundle with `nu` zero tangents.
    pub fn with_zero_tangents(primal: ComplexTensor, nu: usize) -> Self {
        let zero = ComplexTensor::zeros(primal.shape());
        Self { primal, tangents: alloc::vec![zero; nu] }
    }

    pub fn nu(&self) -> usize {
        self.tangents.len()
    }

    pub fn shape(&self) -> &[usize] {
        self.primal.shape()
    }

    pub fn strip(self) -> Self {
        Self::constant(self.primal)
    }

    pub fn is_finite(&self) -> bool {
        self.primal.is_finite() && self.tangents.iter().all(ComplexTensor::is_finite)
    }

    /// Applies the same reshape to the primal and every tangent.
    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        Ok(Self {
            primal: self.primal.reshape(shape)?,
            tangents: self.tangents.iter().map(|t| t.reshape(shape)).collect::<Result<_>>()?,
        })
    }

    pub fn transpose(&self, perm: &[usize]) -> Result<Self> {
        Ok(Self {
            primal: self.primal.transpose(perm)?,
            tangents: self.tangents.iter().map(|t| t.transpose(perm)).collect::<Result<_>>()?,
        })
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            primal: self.primal.scale(c),
            tangents: self.tangents.iter().map(|t| t.scale(c)).collect(),
        }
    }
}

/// Product rule for a bilinear contraction.
///
/// Either bundle may carry zero tangents (a constant); otherwise both must
/// carry the same number.
pub fn contract_bundles(a: &TangentBundle, b: &TangentBundle, axes: &[(usize, usize)]) -> Result<TangentBundle> {
    let primal = contract(&a.primal, &b.primal, axes)?;
    let nu = a.nu().max(b.nu());
    if a.nu() != 0 && b.nu() != 0 && a.nu() != b.nu() {
        bail!(Dimension, "tangent counts {} and {} differ", a.nu(), b.nu());
    }
    let mut tangents = Vec::with_capacity(nu);
    for l in 0..nu {
        let mut t = match a.tangents.get(l) {
            Some(da) => contract(da, &b.primal, axes)?,
            None => ComplexTensor::zeros(primal.shape()),
        };
        if let Some(db) = b.tangents.get(l) {
            t.axpy(C64::new(1.0, 0.0), &contract(&a.primal, db, axes)?)?;
        }
        tangents.push(t);
    }
    Ok(TangentBundle { primal, tangents })
}

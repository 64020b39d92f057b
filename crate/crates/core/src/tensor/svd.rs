use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::ComplexTensor;
use crate::error::{bail, Result};

const SVD_MAX_ITER: usize = 10_000;

/// Thin SVD `A ≈ U · diag(s) · Vh`, singular values descending.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdFactors {
    /// n × k, orthonormal columns.
    pub u: ComplexTensor,
    /// Length k, non-negative, descending.
    pub s: Vec<f64>,
    /// k × m, orthonormal rows.
    pub vh: ComplexTensor,
    /// Sum of squares of the singular values that were dropped.
    pub discarded_weight: f64,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `U · diag(s) · Vh`.
    pub fn reconstruct(&self) -> ComplexTensor {
        let k = self.s.len();
        let mut us = self.u.clone();
        let cols = us.shape()[1];
        debug_assert_eq!(cols, k);
        for (idx, z) in us.data_mut().iter_mut().enumerate() {
            *z *= self.s[idx % k];
        }
        us.matmul(&self.vh).expect("factor shapes are consistent")
    }

    /// Keeps the leading `max_rank` triplets, adding the dropped weight.
    pub fn truncate(mut self, max_rank: usize) -> Self {
        let k = self.s.len();
        if max_rank >= k {
            return self;
        }
        let (n, m) = (self.u.shape()[0], self.vh.shape()[1]);
        let dropped: f64 = self.s[max_rank..].iter().map(|x| x * x).sum();
        self.discarded_weight += dropped;
        self.s.truncate(max_rank);
        let u: Vec<C64> = (0..n)
            .flat_map(|r| self.u.data()[r * k..r * k + max_rank].iter().copied())
            .collect();
        self.u = ComplexTensor::new(&[n, max_rank], u).expect("truncated shape");
        let vh = self.vh.data()[..max_rank * m].to_vec();
        self.vh = ComplexTensor::new(&[max_rank, m], vh).expect("truncated shape");
        self
    }
}

pub(crate) fn to_dmatrix(a: &ComplexTensor) -> DMatrix<C64> {
    let (n, m) = (a.shape()[0], a.shape()[1]);
    DMatrix::from_row_slice(n, m, a.data())
}

pub(crate) fn from_dmatrix(m: &DMatrix<C64>) -> ComplexTensor {
    let (r, c) = m.shape();
    let mut data = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            data.push(m[(i, j)]);
        }
    }
    ComplexTensor::new(&[r, c], data).expect("dmatrix shape")
}

/// Full thin SVD (k = min(n, m)) in the fixed phase gauge.
///
/// Singular triplets are ordered by descending value with ties kept in the
/// order the bidiagonal solver produced them. Each left singular vector is
/// then rotated so that its largest-magnitude entry (first one on ties) is
/// real and positive, with the conjugate phase pushed onto the matching row
/// of `Vh`.
pub fn svd_full(a: &ComplexTensor) -> Result<SvdFactors> {
    if a.rank() != 2 {
        bail!(Dimension, "svd of rank-{} tensor", a.rank());
    }
    if !a.is_finite() {
        bail!(Numeric, "svd input contains non-finite entries");
    }
    let (n, m) = (a.shape()[0], a.shape()[1]);
    let k = n.min(m);
    let svd = nalgebra::SVD::try_new_unordered(to_dmatrix(a), true, true, f64::EPSILON, SVD_MAX_ITER)
        .ok_or_else(|| crate::Error::Numeric("svd did not converge".into()))?;
    let (Some(u), Some(vt)) = (svd.u, svd.v_t) else {
        bail!(Numeric, "svd factors missing");
    };
    let sv = svd.singular_values;

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap_or(core::cmp::Ordering::Equal));

    let mut u_data = alloc::vec![C64::new(0.0, 0.0); n * k];
    let mut vh_data = alloc::vec![C64::new(0.0, 0.0); k * m];
    let mut s = Vec::with_capacity(k);
    for (col, &src) in order.iter().enumerate() {
        s.push(sv[src]);
        let mut best = 0;
        let mut best_mag = -1.0;
        for r in 0..n {
            let mag = u[(r, src)].norm_sqr();
            if mag > best_mag {
                best_mag = mag;
                best = r;
            }
        }
        let pivot = u[(best, src)];
        let norm = pivot.norm();
        let phase = if norm > 0.0 { pivot / norm } else { C64::new(1.0, 0.0) };
        let inv = phase.conj();
        for r in 0..n {
            u_data[r * k + col] = u[(r, src)] * inv;
        }
        for c in 0..m {
            vh_data[col * m + c] = vt[(src, c)] * phase;
        }
    }
    let out = SvdFactors {
        u: ComplexTensor::new(&[n, k], u_data)?,
        s,
        vh: ComplexTensor::new(&[k, m], vh_data)?,
        discarded_weight: 0.0,
    };
    if !out.u.is_finite() || !out.vh.is_finite() || out.s.iter().any(|x| !x.is_finite()) {
        bail!(Numeric, "svd produced non-finite factors");
    }
    Ok(out)
}

/// Thin SVD keeping at most `max_rank` leading singular triplets.
pub fn svd_truncated(a: &ComplexTensor, max_rank: usize) -> Result<SvdFactors> {
    if max_rank == 0 {
        bail!(Domain, "max_rank must be at least 1");
    }
    Ok(svd_full(a)?.truncate(max_rank))
}

//! Dense complex tensors in row-major layout.
//!
//! [`ComplexTensor`] is the value type for states, gates and every
//! intermediate the simulator produces. Contraction is done by permuting the
//! operands into matrix form and running a plain row-major matrix product, so
//! results are bit-for-bit reproducible for a given input.

pub(crate) mod svd;

pub use svd::{svd_full, svd_truncated, SvdFactors};

use alloc::{vec, vec::Vec};
use core::fmt;

use num_complex::Complex64 as C64;
use num_traits::Zero;

use crate::error::{bail, Result};

/// Dense multi-dimensional complex array with row-major storage.
#[derive(Clone, PartialEq)]
pub struct ComplexTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComplexTensor")
            .field("shape", &self.shape)
            .field("data", &self.data)
            .finish()
    }
}

impl ComplexTensor {
    pub fn new(shape: &[usize], data: Vec<C64>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            bail!(Dimension, "zero-length axis in shape {:?}", shape);
        }
        let len: usize = shape.iter().product();
        if len != data.len() {
            bail!(
                Dimension,
                "shape {:?} needs {} entries, got {}",
                shape,
                len,
                data.len()
            );
        }
        Ok(Self { shape: shape.to_vec(), data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![C64::zero(); len] }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = C64::new(1.0, 0.0);
        }
        t
    }

    /// Square matrix with `diag` on the diagonal.
    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut t = Self::zeros(&[n, n]);
        for (i, &d) in diag.iter().enumerate() {
            t.data[i * n + i] = d;
        }
        t
    }

    /// Matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[&[C64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            bail!(Dimension, "ragged rows");
        }
        Self::new(&[r, c], rows.iter().flat_map(|row| row.iter().copied()).collect())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        strides_of(&self.shape)
    }

    pub fn get(&self, index: &[usize]) -> Option<C64> {
        if index.len() != self.shape.len() {
            return None;
        }
        let mut off = 0;
        for (&i, &d) in index.iter().zip(&self.shape) {
            if i >= d {
                return None;
            }
            off = off * d + i;
        }
        Some(self.data[off])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        self.clone().into_reshape(shape)
    }

    pub fn into_reshape(mut self, shape: &[usize]) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != self.data.len() || shape.iter().any(|&d| d == 0) {
            bail!(
                Dimension,
                "cannot reshape {:?} ({} entries) into {:?}",
                self.shape,
                self.data.len(),
                shape
            );
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// Reorders axes so that output axis `a` is input axis `perm[a]`.
    pub fn transpose(&self, perm: &[usize]) -> Result<Self> {
        let r = self.rank();
        if perm.len() != r {
            bail!(Dimension, "permutation {:?} for rank {}", perm, r);
        }
        let mut seen = vec![false; r];
        for &p in perm {
            if p >= r || seen[p] {
                bail!(Dimension, "invalid permutation {:?}", perm);
            }
            seen[p] = true;
        }
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let in_strides = self.strides();
        let out_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let src_strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        let mut idx = vec![0usize; r];
        let mut src = 0usize;
        for _ in 0..self.data.len() {
            data.push(self.data[src]);
            // odometer increment over the output index
            for ax in (0..r).rev() {
                idx[ax] += 1;
                src += src_strides[ax];
                if idx[ax] < out_shape[ax] {
                    break;
                }
                src -= src_strides[ax] * out_shape[ax];
                idx[ax] = 0;
            }
        }
        Ok(Self { shape: out_shape, data })
    }

    pub fn conj(&self) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|z| z.conj()).collect() }
    }

    /// Conjugate transpose of a matrix.
    pub fn adjoint(&self) -> Result<Self> {
        if self.rank() != 2 {
            bail!(Dimension, "adjoint of rank-{} tensor", self.rank());
        }
        Ok(self.transpose(&[1, 0])?.conj())
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|&z| z * c).collect() }
    }

    pub fn scale_mut(&mut self, c: C64) {
        self.data.iter_mut().for_each(|z| *z *= c);
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(C64::new(1.0, 0.0), other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: C64, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            bail!(Dimension, "shape mismatch {:?} vs {:?}", self.shape, other.shape);
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.norm_sqr())
    }

    /// Matrix product of two rank-2 tensors.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.rank() != 2 || other.rank() != 2 {
            bail!(Dimension, "matmul needs matrices, got {:?} and {:?}", self.shape, other.shape);
        }
        let (m, k) = (self.shape[0], self.shape[1]);
        let (k2, n) = (other.shape[0], other.shape[1]);
        if k != k2 {
            bail!(Dimension, "inner dimensions {} and {} differ", k, k2);
        }
        let mut out = vec![C64::zero(); m * n];
        matmul_into(&self.data, &other.data, &mut out, m, k, n);
        Ok(Self { shape: vec![m, n], data: out })
    }

    /// Element-wise product with a same-shape tensor.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            bail!(Dimension, "shape mismatch {:?} vs {:?}", self.shape, other.shape);
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(),
        })
    }

    pub fn trace(&self) -> Result<C64> {
        if self.rank() != 2 || self.shape[0] != self.shape[1] {
            bail!(Dimension, "trace of non-square tensor {:?}", self.shape);
        }
        let n = self.shape[0];
        Ok((0..n).map(|i| self.data[i * n + i]).sum())
    }
}

pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

/// `out += a (m×k) · b (k×n)`, all row-major.
pub(crate) fn matmul_into(a: &[C64], b: &[C64], out: &mut [C64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip.re == 0.0 && aip.im == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += aip * bv;
            }
        }
    }
}

/// Sums over paired axes `(axis of a, axis of b)`. The result carries the
/// free axes of `a` followed by the free axes of `b`, each in original order.
pub fn contract(a: &ComplexTensor, b: &ComplexTensor, axes: &[(usize, usize)]) -> Result<ComplexTensor> {
    let (ra, rb) = (a.rank(), b.rank());
    let mut used_a = vec![false; ra];
    let mut used_b = vec![false; rb];
    for &(ia, ib) in axes {
        if ia >= ra || ib >= rb {
            bail!(Dimension, "axis pair ({}, {}) out of range for ranks {} and {}", ia, ib, ra, rb);
        }
        if used_a[ia] || used_b[ib] {
            bail!(Dimension, "axis paired twice in {:?}", axes);
        }
        if a.shape[ia] != b.shape[ib] {
            bail!(
                Dimension,
                "contracted axes have lengths {} and {}",
                a.shape[ia],
                b.shape[ib]
            );
        }
        used_a[ia] = true;
        used_b[ib] = true;
    }
    let free_a: Vec<usize> = (0..ra).filter(|&i| !used_a[i]).collect();
    let free_b: Vec<usize> = (0..rb).filter(|&i| !used_b[i]).collect();

    let mut perm_a = free_a.clone();
    perm_a.extend(axes.iter().map(|&(ia, _)| ia));
    let mut perm_b: Vec<usize> = axes.iter().map(|&(_, ib)| ib).collect();
    perm_b.extend(free_b.iter().copied());

    let m: usize = free_a.iter().map(|&i| a.shape[i]).product();
    let k: usize = axes.iter().map(|&(ia, _)| a.shape[ia]).product();
    let n: usize = free_b.iter().map(|&i| b.shape[i]).product();

    let at = a.transpose(&perm_a)?;
    let bt = b.transpose(&perm_b)?;
    let mut out = vec![C64::zero(); m * n];
    matmul_into(&at.data, &bt.data, &mut out, m, k, n);

    let mut shape: Vec<usize> = free_a.iter().map(|&i| a.shape[i]).collect();
    shape.extend(free_b.iter().map(|&i| b.shape[i]));
    if shape.is_empty() {
        shape.push(1);
    }
    Ok(ComplexTensor { shape, data: out })
}

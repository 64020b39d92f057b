//! Jacobian-vector product of the complex SVD.
//!
//! With `A = U S V†` and `dÃ = U† dA V`:
//!
//! ```text
//! dS      = Re diag(dÃ)
//! dŨ      = F ∘ (dÃ S + S dÃ†) + α · D
//! dṼ      = F ∘ (S dÃ + dÃ† S) − (1 − α) · D
//! D       = diag(S⁻¹ ∘ ½(dÃ − dÃ†))
//! F_ij    = 1 / (s_j² − s_i²),  i ≠ j
//! dU      = U dŨ + (1 − U U†) dA V S⁻¹
//! dV      = V dṼ + (1 − V V†) dA† U S⁻¹
//! ```
//!
//! The completion terms vanish for square inputs. `F` and `S⁻¹` are computed
//! as Tikhonov-regularized reciprocals so coincident or vanishing singular
//! values yield finite tangents.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::TangentBundle;
use crate::error::{bail, Result};
use crate::tensor::svd::{from_dmatrix, svd_full, to_dmatrix};
use crate::tensor::ComplexTensor;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvdJvpConfig {
    /// Share of the imaginary diagonal assigned to `dŨ`; the rest goes to `dṼ†`.
    pub alpha: f64,
    /// Regularizer for `1 / (s_j² − s_i²)`.
    pub f_cutoff: f64,
    /// Regularizer for `1 / s_i`.
    pub s_cutoff: f64,
    /// Rotate tangents into the phase gauge used by [`crate::svd_truncated`],
    /// so factor tangents are directly comparable with finite differences.
    pub fix_gauge: bool,
}

impl Default for SvdJvpConfig {
    fn default() -> Self {
        Self { alpha: 0.5, f_cutoff: 1e-12, s_cutoff: 1e-12, fix_gauge: true }
    }
}

/// Factors of a differentiated SVD. `s` is a rank-1 tensor with real entries.
#[derive(Clone, Debug)]
pub struct SvdJvp {
    pub u: TangentBundle,
    pub s: TangentBundle,
    pub vh: TangentBundle,
    pub discarded_weight: f64,
}

impl SvdJvp {
    pub fn singular_values(&self) -> Vec<f64> {
        self.s.primal.data().iter().map(|z| z.re).collect()
    }
}

/// Differentiates `svd_truncated(a.primal, max_rank)` along every tangent of `a`.
///
/// The full thin SVD is differentiated first; truncation then drops the
/// trailing singular triplets together with their tangents.
pub fn svd_jvp(a: &TangentBundle, max_rank: usize, cfg: &SvdJvpConfig) -> Result<SvdJvp> {
    if a.primal.rank() != 2 {
        bail!(Dimension, "svd_jvp of rank-{} tensor", a.primal.rank());
    }
    if !(0.0..=1.0).contains(&cfg.alpha) || cfg.f_cutoff <= 0.0 || cfg.s_cutoff <= 0.0 {
        bail!(Domain, "invalid svd_jvp configuration {:?}", cfg);
    }
    let (n, m) = (a.primal.shape()[0], a.primal.shape()[1]);
    let k = n.min(m);
    if max_rank == 0 || max_rank > k {
        bail!(Dimension, "rank {} requested for a {}x{} matrix", max_rank, n, m);
    }
    if a.tangents.iter().any(|t| !t.is_finite()) {
        bail!(Numeric, "non-finite tangent passed to svd_jvp");
    }
    let full = svd_full(&a.primal)?;

    let u = to_dmatrix(&full.u);
    let vh = to_dmatrix(&full.vh);
    let v = vh.adjoint();
    let uh = u.adjoint();
    let s = &full.s;

    let s_inv: Vec<f64> = s.iter().map(|&x| x / (x * x + cfg.s_cutoff * cfg.s_cutoff)).collect();
    let f = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            0.0
        } else {
            let gap = s[j] * s[j] - s[i] * s[i];
            gap / (gap * gap + cfg.f_cutoff * cfg.f_cutoff)
        }
    });
    let pivots: Vec<usize> = (0..k)
        .map(|c| {
            let mut best = 0;
            let mut mag = -1.0;
            for r in 0..n {
                let x = u[(r, c)].norm_sqr();
                if x > mag {
                    mag = x;
                    best = r;
                }
            }
            best
        })
        .collect();

    // Projectors onto the orthogonal complements, only needed for the long side.
    let has_tangents = a.nu() > 0;
    let u_perp = (has_tangents && n > k).then(|| DMatrix::<C64>::identity(n, n) - &u * &uh);
    let v_perp = (has_tangents && m > k).then(|| DMatrix::<C64>::identity(m, m) - &v * &vh);

    let r = max_rank;
    let mut du_out = Vec::with_capacity(a.nu());
    let mut ds_out = Vec::with_capacity(a.nu());
    let mut dvh_out = Vec::with_capacity(a.nu());

    for da_t in &a.tangents {
        let da = to_dmatrix(da_t);
        let dat = &uh * &da * &v;
        let dath = dat.adjoint();

        let ds: Vec<f64> = (0..k).map(|i| dat[(i, i)].re).collect();
        let diag: Vec<C64> = (0..k)
            .map(|i| C64::new(0.0, dat[(i, i)].im * s_inv[i]))
            .collect();

        let mut du_t = DMatrix::from_fn(k, k, |i, j| {
            f[(i, j)] * (dat[(i, j)] * s[j] + s[i] * dath[(i, j)])
        });
        let mut dv_t = DMatrix::from_fn(k, k, |i, j| {
            f[(i, j)] * (s[i] * dat[(i, j)] + dath[(i, j)] * s[j])
        });
        for i in 0..k {
            du_t[(i, i)] += diag[i] * cfg.alpha;
            dv_t[(i, i)] -= diag[i] * (1.0 - cfg.alpha);
        }

        let mut du = &u * du_t;
        if let Some(p) = &u_perp {
            let mut comp = p * &da * &v;
            scale_columns(&mut comp, &s_inv);
            du += comp;
        }
        let mut dv = &v * dv_t;
        if let Some(p) = &v_perp {
            let mut comp = p * da.adjoint() * &u;
            scale_columns(&mut comp, &s_inv);
            dv += comp;
        }
        let mut dvh = dv.adjoint();

        if cfg.fix_gauge {
            for c in 0..k {
                let pivot = u[(pivots[c], c)].re;
                if pivot <= 0.0 {
                    continue;
                }
                let phi = -du[(pivots[c], c)].im / pivot;
                let rot = C64::new(0.0, phi);
                for row in 0..n {
                    du[(row, c)] += rot * u[(row, c)];
                }
                for col in 0..m {
                    dvh[(c, col)] -= rot * vh[(c, col)];
                }
            }
        }

        du_out.push(from_dmatrix(&du.columns(0, r).into_owned()));
        ds_out.push(real_vector(&ds[..r]));
        dvh_out.push(from_dmatrix(&dvh.rows(0, r).into_owned()));
    }

    let trunc = full.truncate(r);
    Ok(SvdJvp {
        u: TangentBundle { primal: trunc.u, tangents: du_out },
        s: TangentBundle { primal: real_vector(&trunc.s), tangents: ds_out },
        vh: TangentBundle { primal: trunc.vh, tangents: dvh_out },
        discarded_weight: trunc.discarded_weight,
    })
}

fn scale_columns(m: &mut DMatrix<C64>, factors: &[f64]) {
    for (j, mut col) in m.column_iter_mut().enumerate() {
        col *= C64::new(factors[j], 0.0);
    }
}

fn real_vector(values: &[f64]) -> ComplexTensor {
    ComplexTensor::new(&[values.len()], values.iter().map(|&x| C64::new(x, 0.0)).collect())
        .expect("non-empty vector")
}

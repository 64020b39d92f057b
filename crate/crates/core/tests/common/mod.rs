#![allow(dead_code)]

use hamlearn_core::{ComplexTensor, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut impl Rng, shape: &[usize]) -> ComplexTensor {
    let len: usize = shape.iter().product();
    let data = (0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im)
        })
        .collect();
    ComplexTensor::new(shape, data).unwrap()
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> ComplexTensor {
    let a = random_complex(rng, &[n, n]);
    a.add(&a.adjoint().unwrap()).unwrap().scale(C64::new(0.5, 0.0))
}

/// ‖a − b‖_F / ‖b‖_F (absolute when b vanishes).
pub fn rel_err(a: &ComplexTensor, b: &ComplexTensor) -> f64 {
    let diff = a.sub(b).unwrap().frobenius_norm();
    let scale = b.frobenius_norm();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Naive triple loop, independent of the crate's contraction path.
pub fn naive_matmul(a: &ComplexTensor, b: &ComplexTensor) -> ComplexTensor {
    let (m, k) = (a.shape()[0], a.shape()[1]);
    let n = b.shape()[1];
    let mut out = vec![C64::new(0.0, 0.0); m * n];
    for i in 0..m {
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for p in 0..k {
                acc += a.data()[i * k + p] * b.data()[p * n + j];
            }
            out[i * n + j] = acc;
        }
    }
    ComplexTensor::new(&[m, n], out).unwrap()
}

pub fn axpy(a: &ComplexTensor, c: f64, b: &ComplexTensor) -> ComplexTensor {
    let mut out = a.clone();
    out.axpy(C64::new(c, 0.0), b).unwrap();
    out
}

/// Random MPS site tensors with the given internal bond dimensions.
pub fn random_sites(rng: &mut impl Rng, bonds: &[usize]) -> Vec<ComplexTensor> {
    let n = bonds.len() + 1;
    (0..n)
        .map(|i| {
            let l = if i == 0 { 1 } else { bonds[i - 1] };
            let r = if i + 1 == n { 1 } else { bonds[i] };
            random_complex(rng, &[l, 2, r])
        })
        .collect()
}

/// Dense state of raw site tensors by explicit index sums (site 0 most significant).
pub fn dense_from_sites(sites: &[ComplexTensor]) -> Vec<C64> {
    let n = sites.len();
    (0..1usize << n)
        .map(|idx| {
            let mut v = vec![C64::new(1.0, 0.0)];
            for (i, a) in sites.iter().enumerate() {
                let b = (idx >> (n - 1 - i)) & 1;
                let (l, r) = (a.shape()[0], a.shape()[2]);
                let mut next = vec![C64::new(0.0, 0.0); r];
                for x in 0..l {
                    for y in 0..r {
                        next[y] += v[x] * a.get(&[x, b, y]).unwrap();
                    }
                }
                v = next;
            }
            v[0]
        })
        .collect()
}

/// Applies a 4×4 matrix to sites (i, i+1) of a dense state.
pub fn dense_apply_two(psi: &[C64], n: usize, i: usize, g: &ComplexTensor) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    let shift = n - 2 - i;
    for (idx, &amp) in psi.iter().enumerate() {
        let pair = (idx >> shift) & 3;
        let base = idx & !(3 << shift);
        for row in 0..4 {
            out[base | (row << shift)] += g.data()[row * 4 + pair] * amp;
        }
    }
    out
}

/// Applies a 2×2 matrix to site i of a dense state.
pub fn dense_apply_one(psi: &[C64], n: usize, i: usize, g: &ComplexTensor) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    let shift = n - 1 - i;
    for (idx, &amp) in psi.iter().enumerate() {
        let b = (idx >> shift) & 1;
        let base = idx & !(1 << shift);
        for row in 0..2 {
            out[base | (row << shift)] += g.data()[row * 2 + b] * amp;
        }
    }
    out
}

/// Haar-ish random unitary via QR-free Gram–Schmidt on a Gaussian matrix.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> ComplexTensor {
    let a = random_complex(rng, &[n, n]);
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| (0..n).map(|i| a.data()[i * n + j]).collect()).collect();
    for j in 0..n {
        for p in 0..j {
            let dot: C64 = (0..n).map(|i| cols[p][i].conj() * cols[j][i]).sum();
            for i in 0..n {
                let v = cols[p][i];
                cols[j][i] -= dot * v;
            }
        }
        let nrm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|z| *z /= nrm);
    }
    let data = (0..n * n).map(|k| cols[k % n][k / n]).collect();
    ComplexTensor::new(&[n, n], data).unwrap()
}

pub fn vec_dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

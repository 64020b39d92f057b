//! Learning spin-chain Hamiltonians from measured bit-strings.
//!
//! The crate is the numerical core: dense complex tensors, forward-mode
//! differentiation rules for the SVD and the Hermitian matrix exponential,
//! matrix-product states evolved with second-order TEBD, a dense reference
//! solver, synthetic data generation, and the negative log-likelihood with a
//! two-stage ADAM/BFGS optimizer. File formats and the command-line driver
//! live in the `hamlearn` crate.
//!
//! Builds without `std` (disable the default `std` feature); only `alloc`
//! is required.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod tensor;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use tensor::{contract, svd_truncated, ComplexTensor, SvdFactors};
pub mod linalg_ad;
pub mod mps;
pub mod hamiltonian;
pub mod tebd;
pub mod exact;
pub mod dataset;
pub mod learner;

pub use mps::{BitString, Mps, Pauli, PauliBasis};

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};
use crate::tensor::ComplexTensor;
use crate::C64;

/// Single-qubit measurement axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Unitary taking this axis's eigenbasis to the computational basis
    /// (+1 eigenvector ↦ |0⟩), row-major 2×2.
    pub fn rotation(self) -> [[C64; 2]; 2] {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let r = |x: f64| C64::new(x * h, 0.0);
        let i = |x: f64| C64::new(0.0, x * h);
        match self {
            Pauli::Z => [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]],
            Pauli::X => [[r(1.0), r(1.0)], [r(1.0), r(-1.0)]],
            Pauli::Y => [[r(1.0), i(-1.0)], [r(1.0), i(1.0)]],
        }
    }

    pub fn rotation_tensor(self) -> ComplexTensor {
        let m = self.rotation();
        ComplexTensor::from_rows(&[&m[0], &m[1]]).expect("2x2")
    }
}

/// Per-site measurement bases, e.g. `XYZZ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliBasis(Vec<Pauli>);

impl PauliBasis {
    pub fn new(axes: Vec<Pauli>) -> Self {
        Self(axes)
    }

    pub fn uniform(n: usize, p: Pauli) -> Self {
        Self(alloc::vec![p; n])
    }

    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        Self((0..n).map(|_| Pauli::ALL[rng.random_range(0..3)]).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn axes(&self) -> &[Pauli] {
        &self.0
    }
}

impl FromStr for PauliBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let axes = s
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::Domain(alloc::format!("unknown basis letter {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if axes.is_empty() {
            bail!(Domain, "empty basis string");
        }
        Ok(Self(axes))
    }
}

impl fmt::Display for PauliBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl Serialize for PauliBasis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliBasis {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Measurement outcome, one bit per site; site 0 first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            bail!(Domain, "bits must be 0 or 1");
        }
        Ok(Self(bits))
    }

    pub fn zeros(n: usize) -> Self {
        Self(alloc::vec![0; n])
    }

    /// Bits of `index` with site 0 as the most significant bit.
    pub fn from_index(index: usize, n: usize) -> Self {
        Self((0..n).map(|i| ((index >> (n - 1 - i)) & 1) as u8).collect())
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::Domain(alloc::format!("invalid bit {c:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        if bits.is_empty() {
            bail!(Domain, "empty bit-string");
        }
        Ok(Self(bits))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

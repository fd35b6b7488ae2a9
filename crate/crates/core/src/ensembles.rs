//! Sensing matrices, sparse test signals and phaseless measurements.

use alloc::vec::Vec;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{dot, Matrix};
use crate::rng::{self, domain, GENERATOR_ID};
use crate::{Error, Result};

/// Upper limit on either matrix dimension.
pub const MAX_DIM: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    /// i.i.d. `N(0, 1/m)` entries.
    Gaussian,
    /// i.i.d. `+-1/sqrt(m)` entries with equal probability.
    Bernoulli,
    /// User-supplied entries; not regenerable from a seed.
    Custom,
}

impl Ensemble {
    fn tag(self) -> u8 {
        match self {
            Ensemble::Gaussian => 1,
            Ensemble::Bernoulli => 2,
            Ensemble::Custom => 3,
        }
    }
}

/// An `m x n` measurement matrix `A = [a_1, ..., a_m]^T` with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingMatrix {
    entries: Matrix,
    ensemble: Ensemble,
    seed: u64,
    fingerprint: u64,
}

impl SensingMatrix {
    /// Wraps explicit entries as a [`Ensemble::Custom`] matrix.
    pub fn from_matrix(entries: Matrix) -> Result<Self> {
        check_dims(entries.rows(), entries.cols())?;
        Ok(Self::assemble(entries, Ensemble::Custom, 0))
    }

    /// Bernoulli matrix with entries `sign / sqrt(rows)`, signs row-major.
    pub fn from_bernoulli_signs(rows: usize, cols: usize, signs: &[i8]) -> Result<Self> {
        check_dims(rows, cols)?;
        check_len(rows * cols, signs.len())?;
        let scale = 1.0 / libm::sqrt(rows as f64);
        let data = signs
            .iter()
            .map(|&e| match e {
                1 => Ok(scale),
                -1 => Ok(-scale),
                bad => Err(Error::InvalidSign(bad)),
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self::assemble(Matrix::from_row_major(rows, cols, data), Ensemble::Bernoulli, 0))
    }

    fn assemble(entries: Matrix, ensemble: Ensemble, seed: u64) -> Self {
        let fingerprint = fingerprint(&entries, ensemble, seed);
        Self { entries, ensemble, seed, fingerprint }
    }

    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn cols(&self) -> usize {
        self.entries.cols()
    }

    pub fn ensemble(&self) -> Ensemble {
        self.ensemble
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// FNV-1a hash over generator id, ensemble, seed, shape and entry bits.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn matrix(&self) -> &Matrix {
        &self.entries
    }

    pub fn row(&self, j: usize) -> &[f64] {
        self.entries.row(j)
    }

    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.entries.get(j, i)
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols(), x.len())?;
        Ok(self.entries.mul_vec(x))
    }
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || m > MAX_DIM {
        return Err(Error::InvalidDimension { what: "m", value: m });
    }
    if n == 0 || n > MAX_DIM {
        return Err(Error::InvalidDimension { what: "n", value: n });
    }
    Ok(())
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
}

fn fingerprint(entries: &Matrix, ensemble: Ensemble, seed: u64) -> u64 {
    let mut h = Fnv::new();
    h.write(GENERATOR_ID.as_bytes());
    h.write(&[ensemble.tag()]);
    h.write(&seed.to_le_bytes());
    h.write(&(entries.rows() as u64).to_le_bytes());
    h.write(&(entries.cols() as u64).to_le_bytes());
    for v in entries.as_slice() {
        h.write(&v.to_bits().to_le_bytes());
    }
    h.0
}

/// Draws an `m x n` matrix from `ensemble`, row-major from a single stream.
pub fn gen_matrix(m: usize, n: usize, ensemble: Ensemble, seed: u64) -> Result<SensingMatrix> {
    check_dims(m, n)?;
    let scale = 1.0 / libm::sqrt(m as f64);
    let mut rng = rng::stream(seed, domain::MATRIX, 0);
    let data: Vec<f64> = match ensemble {
        Ensemble::Gaussian => (0..m * n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            })
            .collect(),
        Ensemble::Bernoulli => (0..m * n).map(|_| if rng.random::<bool>() { scale } else { -scale }).collect(),
        Ensemble::Custom => return Err(Error::InvalidSignal("custom ensembles cannot be generated from a seed")),
    };
    Ok(SensingMatrix::assemble(Matrix::from_row_major(m, n, data), ensemble, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueDist {
    UnitGaussian,
    Rademacher,
}

/// A k-sparse vector in `R^n` stored by support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSignal {
    dim: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSignal {
    /// Validates: strictly increasing support inside `0..dim`, aligned,
    /// nonzero values.
    pub fn new(dim: usize, support: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension { what: "n", value: dim });
        }
        check_len(support.len(), values.len())?;
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSignal("support must be strictly increasing"));
        }
        if support.last().is_some_and(|&i| i >= dim) {
            return Err(Error::InvalidSignal("support index out of range"));
        }
        if values.iter().any(|&v| v == 0.0 || !v.is_finite()) {
            return Err(Error::InvalidSignal("stored values must be finite and nonzero"));
        }
        Ok(Self { dim, support, values })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new(), Vec::new())
    }

    /// Keeps the nonzero coordinates of a dense vector.
    pub fn from_dense(x: &[f64]) -> Result<Self> {
        let (support, values) = x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, &v)| (i, v)).unzip();
        Self::new(x.len(), support, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = alloc::vec![0.0; self.dim];
        for (&i, &v) in self.support.iter().zip(&self.values) {
            x[i] = v;
        }
        x
    }

    pub fn negated(&self) -> Self {
        Self { dim: self.dim, support: self.support.clone(), values: self.values.iter().map(|v| -v).collect() }
    }
}

/// Uniform k-subset support with i.i.d. values from `dist`.
pub fn gen_sparse_signal(n: usize, k: usize, dist: ValueDist, seed: u64) -> Result<SparseSignal> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::InvalidDimension { what: "n", value: n });
    }
    if k == 0 || k > n {
        return Err(Error::SparsityExceedsDim { k, n });
    }
    let mut rng = rng::stream(seed, domain::SIGNAL, 0);
    let mut support = index::sample(&mut rng, n, k).into_vec();
    support.sort_unstable();
    let values = (0..k)
        .map(|_| match dist {
            ValueDist::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            ValueDist::UnitGaussian => loop {
                let v: f64 = StandardNormal.sample(&mut rng);
                if v != 0.0 {
                    break v;
                }
            },
        })
        .collect();
    SparseSignal::new(n, support, values)
}

/// Observed moduli `b = |Ax|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurements {
    b: Vec<f64>,
    matrix_fingerprint: u64,
}

impl Measurements {
    pub fn new(b: Vec<f64>, matrix_fingerprint: u64) -> Result<Self> {
        if let Some(&bad) = b.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::OutOfRange { name: "b_j", value: bad });
        }
        Ok(Self { b, matrix_fingerprint })
    }

    pub fn values(&self) -> &[f64] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn matrix_fingerprint(&self) -> u64 {
        self.matrix_fingerprint
    }
}

pub fn phaseless_measure(a: &SensingMatrix, x: &SparseSignal) -> Result<Measurements> {
    check_len(a.cols(), x.dim())?;
    let b = (0..a.rows())
        .map(|j| {
            let row = a.row(j);
            let s: f64 = x.support().iter().zip(x.values()).map(|(&i, &v)| row[i] * v).sum();
            libm::fabs(s)
        })
        .collect();
    Measurements::new(b, a.fingerprint())
}

/// Phaseless measurements of a dense vector.
pub fn phaseless_measure_dense(a: &SensingMatrix, x: &[f64]) -> Result<Measurements> {
    check_len(a.cols(), x.len())?;
    let b = (0..a.rows()).map(|j| libm::fabs(dot(a.row(j), x))).collect();
    Measurements::new(b, a.fingerprint())
}

/// An element of `{+1, -1}^m`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SignPattern {
    eps: Vec<i8>,
}

impl SignPattern {
    pub fn new(eps: Vec<i8>) -> Result<Self> {
        if let Some(&bad) = eps.iter().find(|&&e| e != 1 && e != -1) {
            return Err(Error::InvalidSign(bad));
        }
        Ok(Self { eps })
    }

    pub fn ones(m: usize) -> Self {
        Self { eps: alloc::vec![1; m] }
    }

    /// Bit `j` of `bits` set means `eps_j = -1`.
    pub fn from_bits(m: usize, bits: u64) -> Self {
        Self { eps: (0..m).map(|j| if (bits >> j) & 1 == 1 { -1 } else { 1 }).collect() }
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.eps
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    /// Representative of `{eps, -eps}` with `eps[0] = +1`.
    pub fn canonical(mut self) -> Self {
        if self.eps.first() == Some(&-1) {
            self.eps.iter_mut().for_each(|e| *e = -*e);
        }
        self
    }

    pub fn is_canonical(&self) -> bool {
        self.eps.first() != Some(&-1)
    }
}

/// `eps o b`, the signed measurement vector.
pub fn apply_signs(b: &Measurements, eps: &SignPattern) -> Result<Vec<f64>> {
    check_len(b.len(), eps.len())?;
    Ok(b.values().iter().zip(eps.as_slice()).map(|(&v, &e)| if e < 0 { -v } else { v }).collect())
}

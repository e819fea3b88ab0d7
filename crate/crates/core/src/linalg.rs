//! Small dense/sparse linear algebra used by the operator encoders.
//!
//! Vectors are plain `Vec<f64>` / `&[f64]`; matrices are square and symmetric
//! (every matrix the encoders build is), stored either dense row-major or CSR.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `a + s * b`
pub fn add_scaled(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

/// `y += s * x`
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// Compressed sparse row storage for a square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets. Duplicates are summed and
    /// explicit zeros are kept so that a triplet list round-trips exactly.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(r, c, v) in &sorted {
            if r >= n || c >= n {
                return Err(Error::InvalidParameter(format!(
                    "sparse entry ({r}, {c}) outside {n}x{n}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("sparse matrix entry"));
            }
        }
        sorted.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out.push((r, self.col_idx[k], self.values[k]));
            }
        }
        out
    }

    fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yr = s;
        }
    }
}

/// Fill fraction from which [`SymMatrix::from_triplets`] stores dense.
pub const DENSE_FILL: f64 = 0.3;

/// Square symmetric matrix, dense or sparse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub enum SymMatrix {
    Dense { n: usize, data: Vec<f64> },
    Sparse(CsrMatrix),
}

/// On-disk matrix block: dense row-major values or `(row, col, value)` entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MatrixRepr {
    Dense { n: usize, data: Vec<f64> },
    Sparse { n: usize, entries: Vec<(usize, usize, f64)> },
}

impl TryFrom<MatrixRepr> for SymMatrix {
    type Error = Error;

    fn try_from(repr: MatrixRepr) -> Result<Self> {
        match repr {
            MatrixRepr::Dense { n, data } => SymMatrix::dense(n, data),
            MatrixRepr::Sparse { n, entries } => Ok(SymMatrix::Sparse(CsrMatrix::from_triplets(
                n, &entries,
            )?)),
        }
    }
}

impl From<SymMatrix> for MatrixRepr {
    fn from(m: SymMatrix) -> Self {
        match m {
            SymMatrix::Dense { n, data } => MatrixRepr::Dense { n, data },
            SymMatrix::Sparse(csr) => MatrixRepr::Sparse {
                n: csr.n,
                entries: csr.triplets(),
            },
        }
    }
}

impl SymMatrix {
    pub fn dense(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dense matrix entry"));
        }
        Ok(SymMatrix::Dense { n, data })
    }

    /// Builds from `(row, col, value)` entries (duplicates summed), stored
    /// sparse below `DENSE_FILL` fill and dense otherwise.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let csr = CsrMatrix::from_triplets(n, triplets)?;
        if (csr.nnz() as f64) < DENSE_FILL * (n * n) as f64 {
            return Ok(SymMatrix::Sparse(csr));
        }
        let mut data = vec![0.0; n * n];
        for (r, c, v) in csr.triplets() {
            data[r * n + c] = v;
        }
        SymMatrix::dense(n, data)
    }

    pub fn identity(n: usize, scale: f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = scale;
        }
        SymMatrix::Dense { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix::Sparse(CsrMatrix {
            n,
            row_ptr: vec![0; n + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            SymMatrix::Dense { n, .. } => *n,
            SymMatrix::Sparse(csr) => csr.n,
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            SymMatrix::Dense { data, .. } => data.iter().filter(|v| **v != 0.0).count(),
            SymMatrix::Sparse(csr) => csr.nnz(),
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        match self {
            SymMatrix::Dense { n, data } => data[r * n + c],
            SymMatrix::Sparse(csr) => (csr.row_ptr[r]..csr.row_ptr[r + 1])
                .find(|&k| csr.col_idx[k] == c)
                .map_or(0.0, |k| csr.values[k]),
        }
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(y.len(), self.dim());
        match self {
            SymMatrix::Dense { n, data } => {
                for (r, yr) in y.iter_mut().enumerate() {
                    *yr = dot(&data[r * n..(r + 1) * n], x);
                }
            }
            SymMatrix::Sparse(csr) => csr.matvec_into(x, y),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.matvec_into(x, &mut y);
        y
    }

    /// `xᵀ M x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    /// Returns `M + shift * I`, keeping the storage kind.
    pub fn shifted(&self, shift: f64) -> Self {
        match self {
            SymMatrix::Dense { n, data } => {
                let mut data = data.clone();
                for i in 0..*n {
                    data[i * n + i] += shift;
                }
                SymMatrix::Dense { n: *n, data }
            }
            SymMatrix::Sparse(csr) => {
                let mut t = csr.triplets();
                t.extend((0..csr.n).map(|i| (i, i, shift)));
                SymMatrix::Sparse(
                    CsrMatrix::from_triplets(csr.n, &t).expect("shifted entries stay in range"),
                )
            }
        }
    }

    /// Largest symmetric-part asymmetry `max |M_rc − M_cr|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        match self {
            SymMatrix::Dense { data, .. } => {
                for r in 0..n {
                    for c in 0..r {
                        worst = worst.max((data[r * n + c] - data[c * n + r]).abs());
                    }
                }
            }
            SymMatrix::Sparse(csr) => {
                for (r, c, v) in csr.triplets() {
                    worst = worst.max((v - self.get(c, r)).abs());
                }
            }
        }
        worst
    }

    /// Spectral norm estimate, see [`spectral_norm`].
    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(self)
    }
}

/// Seed of the power-iteration start vector. Fixed so norm estimates are reproducible.
const POWER_ITERATION_SEED: u64 = 0x0005_eed0_fb0f;

/// Power iteration for `‖M‖₂` of a symmetric matrix: relative tolerance 1e-6,
/// at most `10 · dim` iterations, deterministic start vector.
pub fn spectral_norm(m: &SymMatrix) -> f64 {
    let n = m.dim();
    if n == 0 || m.nnz() == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_ITERATION_SEED);
    let mut v: Vec<f64> = (0..n).map(|_| 0.5 + rng.random::<f64>()).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut w = vec![0.0; n];
    let mut estimate = 0.0;
    let cap = (10 * n).max(10);
    for _ in 0..cap {
        m.matvec_into(&v, &mut w);
        let nw = norm(&w);
        if nw == 0.0 {
            return estimate;
        }
        let converged = (nw - estimate).abs() <= 1e-6 * nw;
        estimate = nw;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
        if converged {
            break;
        }
    }
    estimate
}

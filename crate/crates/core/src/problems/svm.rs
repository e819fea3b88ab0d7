//! Gaussian-kernel SVM training as QCQPs.
//!
//! The multiple-kernel problem on a training set `(d_j, l_j)` is
//!
//! ```text
//! min  ½xᵀx/C − eᵀx + m·x₀
//! s.t. ½xᵀ(Gᵢ/trace Kᵢ)x − x₀ ≤ 0   (i = 1..m),   Σ l_j x_j = 0,   x ≥ 0
//! ```
//!
//! with `[Gᵢ]_{jj'} = l_j l_{j'} κᵢ(d_j, d_{j'})`. The single-kernel problem is
//! `min ½xᵀGx − eᵀx` over `x ∈ [0, C]ⁿ` with the same equality.

use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{run_solver, LineSearchParams, SolverKind};
use crate::error::{Error, Result};
use crate::linalg::{dist, dot, norm_sq, SymMatrix};
use crate::solver::{RunReport, SolverConfig};

use super::qcqp::{Constraint, QcqpInstance};
use super::synthetic::rng;

/// Bundled 40-point, 2-D, linearly separable dataset.
pub const TOY_SEPARABLE_CSV: &str = include_str!("../../data/toy_separable.csv");

/// Tolerance on the smallest eigenvalue of a trace-normalized kernel matrix.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Kernel width of the single-kernel classifier.
pub const SINGLE_KERNEL_SIGMA2: f64 = 7.0;

/// Dimension up to which kernel PSD checks use a full eigendecomposition.
const EIGEN_CHECK_MAX_DIM: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmDataset {
    pub points: Vec<Vec<f64>>,
    /// Labels in `{−1, +1}`.
    pub labels: Vec<f64>,
}

impl SvmDataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: labels.len(),
            });
        }
        if let Some(first) = points.first() {
            for p in &points {
                if p.len() != first.len() {
                    return Err(Error::DimensionMismatch {
                        expected: first.len(),
                        got: p.len(),
                    });
                }
                if p.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("dataset feature"));
                }
            }
        }
        if let Some(l) = labels.iter().find(|&&l| l != 1.0 && l != -1.0) {
            return Err(Error::Dataset(format!("label {l} is not ±1")));
        }
        Ok(Self { points, labels })
    }

    /// Reads a headed CSV with a `label` column in `{−1, +1}` or `{0, 1}`; all
    /// other columns are numeric features.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let label_col = headers
            .iter()
            .position(|h| h.trim() == "label")
            .ok_or_else(|| Error::Dataset("no 'label' column".into()))?;
        let mut points = Vec::new();
        let mut raw = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| {
                    Error::Dataset(format!("row {}: '{}' is not a number", line + 1, s))
                })
            };
            let mut feats = Vec::with_capacity(rec.len().saturating_sub(1));
            for (i, field) in rec.iter().enumerate() {
                if i == label_col {
                    raw.push(parse(field)?);
                } else {
                    feats.push(parse(field)?);
                }
            }
            points.push(feats);
        }
        let zero_one = raw.iter().all(|&l| l == 0.0 || l == 1.0);
        let labels = raw
            .into_iter()
            .map(|l| if zero_one && l == 0.0 { -1.0 } else { l })
            .collect();
        Self::new(points, labels)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    pub fn toy_separable() -> Self {
        Self::from_csv(TOY_SEPARABLE_CSV.as_bytes()).expect("bundled dataset parses")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn subset(&self, idx: &[usize]) -> Self {
        Self {
            points: idx.iter().map(|&i| self.points[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    fn has_both_classes(&self) -> bool {
        self.labels.contains(&1.0) && self.labels.contains(&-1.0)
    }

    /// Seeded shuffle into `round(fraction·n)` training and remaining test
    /// points. If the training part misses a class, the first test point of
    /// that class is swapped in.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "train fraction {train_fraction} outside ]0, 1["
            )));
        }
        if !self.has_both_classes() {
            return Err(Error::Dataset("dataset has a single class".into()));
        }
        let n = self.len();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng(seed));
        let n_tr = ((train_fraction * n as f64).round() as usize).clamp(2, n);
        for class in [1.0, -1.0] {
            if !idx[..n_tr].iter().any(|&i| self.labels[i] == class) {
                let from = (n_tr..n).find(|&j| self.labels[idx[j]] == class).expect("class exists");
                let to = (0..n_tr)
                    .rev()
                    .find(|&j| {
                        let l = self.labels[idx[j]];
                        idx[..n_tr].iter().filter(|&&i| self.labels[i] == l).count() > 1
                    })
                    .expect("other class has two points");
                idx.swap(from, to);
            }
        }
        Ok((self.subset(&idx[..n_tr]), self.subset(&idx[n_tr..])))
    }

    /// Per-feature mean and standard deviation (1 for constant features).
    pub fn feature_scaling(&self) -> Vec<(f64, f64)> {
        let n = self.len() as f64;
        let dim = self.points.first().map_or(0, Vec::len);
        (0..dim)
            .map(|f| {
                let mean = self.points.iter().map(|p| p[f]).sum::<f64>() / n;
                let var = self.points.iter().map(|p| (p[f] - mean).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                (mean, if sd > 0.0 { sd } else { 1.0 })
            })
            .collect()
    }

    pub fn scaled(&self, scaling: &[(f64, f64)]) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| p.iter().zip(scaling).map(|(v, (m, s))| (v - m) / s).collect())
                .collect(),
            labels: self.labels.clone(),
        }
    }
}

/// Standardizes both splits with the training split's statistics.
pub fn standardize(train: &SvmDataset, test: &SvmDataset) -> (SvmDataset, SvmDataset) {
    let s = train.feature_scaling();
    (train.scaled(&s), test.scaled(&s))
}

pub fn gaussian_kernel(a: &[f64], b: &[f64], sigma2: f64) -> f64 {
    (-dist(a, b).powi(2) / (2.0 * sigma2)).exp()
}

/// Dense row-major kernel matrix over `points`.
pub fn kernel_matrix(points: &[Vec<f64>], sigma2: f64) -> Vec<f64> {
    let n = points.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = gaussian_kernel(&points[i], &points[j], sigma2);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// `m` geometrically spaced widths over `[lo, hi]`; the geometric midpoint
/// when `m = 1`.
pub fn sigma_grid(m: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if m == 0 || !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma grid needs m ≥ 1 and 0 < lo ≤ hi, got m = {m}, [{lo}, {hi}]"
        )));
    }
    if m == 1 {
        return Ok(vec![(lo * hi).sqrt()]);
    }
    let ratio = hi / lo;
    Ok((0..m)
        .map(|i| {
            if i + 1 == m {
                hi
            } else {
                lo * ratio.powf(i as f64 / (m - 1) as f64)
            }
        })
        .collect())
}

/// Smallest eigenvalue of a symmetric dense matrix: exact for small
/// dimensions, otherwise the minimum of 64 seeded Rayleigh quotients.
pub fn min_eigenvalue_estimate(n: usize, data: &[f64]) -> f64 {
    if n <= EIGEN_CHECK_MAX_DIM {
        let m = DMatrix::from_row_slice(n, n, data);
        return m.symmetric_eigenvalues().min();
    }
    let mut r = rng(0x9a55_d00d);
    let mut best = f64::INFINITY;
    for _ in 0..64 {
        let v: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let mut mv = vec![0.0; n];
        for (i, o) in mv.iter_mut().enumerate() {
            *o = dot(&data[i * n..(i + 1) * n], &v);
        }
        best = best.min(dot(&v, &mv) / norm_sq(&v));
    }
    best
}

/// `(l lᵀ) ∘ K / scale` embedded in the top-left block of a `dim × dim` matrix.
fn signed_kernel(labels: &[f64], k: &[f64], scale: f64, dim: usize) -> Result<SymMatrix> {
    let n = labels.len();
    let mut t = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let v = labels[i] * labels[j] * k[i * n + j] / scale;
            if v != 0.0 {
                t.push((i, j, v));
            }
        }
    }
    SymMatrix::from_triplets(dim, &t)
}

fn normalized_kernel(train: &SvmDataset, sigma2: f64) -> Result<(Vec<f64>, f64)> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidParameter(format!("kernel width {sigma2} must be positive")));
    }
    let n = train.len();
    let k = kernel_matrix(&train.points, sigma2);
    let trace: f64 = (0..n).map(|i| k[i * n + i]).sum();
    if !(trace > 0.0) {
        return Err(Error::DegenerateKernel(format!("kernel σ² = {sigma2} has zero trace")));
    }
    let scaled: Vec<f64> = k.iter().map(|v| v / trace).collect();
    let lam = min_eigenvalue_estimate(n, &scaled);
    if lam < -PSD_TOLERANCE {
        return Err(Error::DegenerateKernel(format!(
            "normalized kernel σ² = {sigma2} has eigenvalue {lam}"
        )));
    }
    Ok((k, trace))
}

fn check_training_set(train: &SvmDataset, c_margin: f64) -> Result<()> {
    if train.is_empty() {
        return Err(Error::Dataset("empty training set".into()));
    }
    if !train.has_both_classes() {
        return Err(Error::Dataset("training set has a single class".into()));
    }
    if !(c_margin > 0.0 && c_margin.is_finite()) {
        return Err(Error::InvalidParameter(format!("C = {c_margin} must be positive")));
    }
    Ok(())
}

fn equality_constraint(labels: &[f64], dim: usize) -> Constraint {
    let mut l = vec![0.0; dim];
    l[..labels.len()].copy_from_slice(labels);
    Constraint { q: None, l, r: 0.0 }
}

/// Multiple-kernel problem over `(x, x₀)` with duals `(y₁..y_m, y_eq)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiKernelSvm {
    pub instance: QcqpInstance,
    pub sigmas: Vec<f64>,
    /// `trace Kᵢ` before normalization.
    pub traces: Vec<f64>,
    pub c_margin: f64,
}

pub fn build_svm_qcqp(train: &SvmDataset, sigmas: &[f64], c_margin: f64) -> Result<MultiKernelSvm> {
    check_training_set(train, c_margin)?;
    if sigmas.is_empty() {
        return Err(Error::InvalidParameter("at least one kernel is required".into()));
    }
    let n_tr = train.len();
    let n = n_tr + 1;
    let m = sigmas.len();
    let mut constraints = Vec::with_capacity(m + 1);
    let mut traces = Vec::with_capacity(m);
    for &s in sigmas {
        let (k, trace) = normalized_kernel(train, s)?;
        let mut l = vec![0.0; n];
        l[n_tr] = -1.0;
        constraints.push(Constraint {
            q: Some(signed_kernel(&train.labels, &k, trace, n)?),
            l,
            r: 0.0,
        });
        traces.push(trace);
    }
    constraints.push(equality_constraint(&train.labels, n));
    let q0 = SymMatrix::from_triplets(n, &(0..n_tr).map(|i| (i, i, 1.0 / c_margin)).collect::<Vec<_>>())?;
    let mut b = vec![-1.0; n];
    b[n_tr] = m as f64;
    let instance = QcqpInstance {
        n,
        m_bar: m,
        q0,
        b,
        constraints,
        nonneg_primal: true,
        free_indices: vec![n_tr],
        upper_bound: None,
        start: Some(vec![0.0; n + m + 1]),
    };
    instance.validate()?;
    Ok(MultiKernelSvm {
        instance,
        sigmas: sigmas.to_vec(),
        traces,
        c_margin,
    })
}

/// Relative threshold below which a dual coordinate is not a support vector.
const SUPPORT_THRESHOLD: f64 = 1e-3;

impl MultiKernelSvm {
    pub fn n_train(&self) -> usize {
        self.instance.n - 1
    }

    /// Quadratic-constraint duals `yᵢ` read from a solver point `(x, x₀, y)`.
    pub fn kernel_duals<'a>(&self, z: &'a [f64]) -> &'a [f64] {
        &z[self.instance.n..self.instance.n + self.sigmas.len()]
    }

    /// Classifier `Σ_j x_j l_j Σᵢ (yᵢ/trace Kᵢ) κᵢ(d_j, ·) + bias`, the bias
    /// averaged over support vectors.
    pub fn model(&self, train: &SvmDataset, z: &[f64]) -> SvmModel {
        let n_tr = self.n_train();
        let x = &z[..n_tr];
        let y = self.kernel_duals(z);
        let kernels = self
            .sigmas
            .iter()
            .zip(y.iter().zip(&self.traces))
            .map(|(&s, (&yi, &tr))| (s, yi.max(0.0) / tr))
            .collect();
        let mut model = SvmModel {
            points: train.points.clone(),
            coef: x.iter().zip(&train.labels).map(|(a, l)| a * l).collect(),
            kernels,
            bias: 0.0,
        };
        let xmax = x.iter().cloned().fold(0.0, f64::max);
        let c = self.c_margin;
        let support: Vec<usize> = (0..n_tr).filter(|&j| x[j] > SUPPORT_THRESHOLD * xmax).collect();
        model.bias = if support.is_empty() {
            z[self.instance.n + self.sigmas.len()]
        } else {
            support
                .iter()
                .map(|&j| {
                    train.labels[j] * (1.0 - x[j] / c) - model.expansion(&train.points[j])
                })
                .sum::<f64>()
                / support.len() as f64
        };
        model
    }
}

/// Single-kernel box-constrained problem over `x ∈ [0, C]ⁿ` with dual `y_eq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleKernelSvm {
    pub instance: QcqpInstance,
    pub sigma2: f64,
    pub c_margin: f64,
}

pub fn build_single_kernel_qp(train: &SvmDataset, sigma2: f64, c_margin: f64) -> Result<SingleKernelSvm> {
    check_training_set(train, c_margin)?;
    let n = train.len();
    let (k, _) = normalized_kernel(train, sigma2)?;
    let instance = QcqpInstance {
        n,
        m_bar: 0,
        q0: signed_kernel(&train.labels, &k, 1.0, n)?,
        b: vec![-1.0; n],
        constraints: vec![equality_constraint(&train.labels, n)],
        nonneg_primal: true,
        free_indices: Vec::new(),
        upper_bound: Some(c_margin),
        start: Some(vec![0.0; n + 1]),
    };
    instance.validate()?;
    Ok(SingleKernelSvm {
        instance,
        sigma2,
        c_margin,
    })
}

impl SingleKernelSvm {
    /// Classifier `Σ_j x_j l_j κ(d_j, ·) + bias`, the bias averaged over
    /// margin support vectors `0 < x_j < C`.
    pub fn model(&self, train: &SvmDataset, z: &[f64]) -> SvmModel {
        let n = self.instance.n;
        let x = &z[..n];
        let mut model = SvmModel {
            points: train.points.clone(),
            coef: x.iter().zip(&train.labels).map(|(a, l)| a * l).collect(),
            kernels: vec![(self.sigma2, 1.0)],
            bias: 0.0,
        };
        let c = self.c_margin;
        let margin: Vec<usize> = (0..n)
            .filter(|&j| x[j] > SUPPORT_THRESHOLD * c && x[j] < (1.0 - SUPPORT_THRESHOLD) * c)
            .collect();
        model.bias = if margin.is_empty() {
            z[n]
        } else {
            margin
                .iter()
                .map(|&j| train.labels[j] - model.expansion(&train.points[j]))
                .sum::<f64>()
                / margin.len() as f64
        };
        model
    }
}

/// Kernel expansion classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub points: Vec<Vec<f64>>,
    /// `x_j l_j` per training point.
    pub coef: Vec<f64>,
    /// `(σ², weight)` per kernel.
    pub kernels: Vec<(f64, f64)>,
    pub bias: f64,
}

impl SvmModel {
    fn expansion(&self, d: &[f64]) -> f64 {
        let mut s = 0.0;
        for (p, &c) in self.points.iter().zip(&self.coef) {
            if c == 0.0 {
                continue;
            }
            let k: f64 = self
                .kernels
                .iter()
                .map(|&(s2, w)| w * gaussian_kernel(p, d, s2))
                .sum();
            s += c * k;
        }
        s
    }

    pub fn decision(&self, d: &[f64]) -> f64 {
        self.expansion(d) + self.bias
    }

    /// `+1` when the decision value is nonnegative, `−1` otherwise.
    pub fn predict(&self, d: &[f64]) -> f64 {
        if self.decision(d) >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Fraction of correctly labelled points; `None` on an empty set.
    pub fn accuracy(&self, data: &SvmDataset) -> Option<f64> {
        if data.is_empty() {
            return None;
        }
        let hits = data
            .points
            .iter()
            .zip(&data.labels)
            .filter(|(p, &l)| self.predict(p) == l)
            .count();
        Some(hits as f64 / data.len() as f64)
    }
}

/// `max(|f(x) − f*|, |equality residuals|, max(0, inequality values))`.
pub fn composite_measure(inst: &QcqpInstance, x: &[f64], f_star: f64) -> f64 {
    let mut worst = (inst.objective(x) - f_star).abs();
    for (i, g) in inst.constraint_values(x).into_iter().enumerate() {
        worst = worst.max(if i < inst.m_bar { g.max(0.0) } else { g.abs() });
    }
    worst
}

/// `‖u‖` tolerance of the reference solve that supplies `f*`.
pub const REFERENCE_TOLERANCE: f64 = 1e-8;

/// High-accuracy AFBF solve of `inst` from its start point.
pub fn reference_solve(inst: &QcqpInstance, max_iters: usize) -> Result<RunReport> {
    let triple = inst.encode()?;
    let x0 = inst.start.clone().unwrap_or_else(|| vec![0.0; inst.dim()]);
    let config = SolverConfig {
        tol_residual: REFERENCE_TOLERANCE,
        max_iters,
        ..SolverConfig::default()
    };
    run_solver(SolverKind::Afbf, &triple, &x0, &config, &LineSearchParams::tseng(), None, None)
}

/// Runs `kind` until [`composite_measure`] at `p_k` drops to `tol`.
pub fn solve_composite(
    inst: &QcqpInstance,
    kind: SolverKind,
    config: &SolverConfig,
    ls: &LineSearchParams,
    f_star: f64,
    tol: f64,
) -> Result<RunReport> {
    let triple = inst.encode()?;
    let x0 = inst.start.clone().unwrap_or_else(|| vec![0.0; inst.dim()]);
    let n = inst.n;
    let stop = move |p: &[f64], _u: f64| composite_measure(inst, &p[..n], f_star) <= tol;
    run_solver(kind, &triple, &x0, config, ls, None, Some(&stop))
}

/// Line-search parameters of the SVM experiments: `(θ, σ, β) = (0.99, 1, 0.1)`.
pub fn svm_line_search() -> LineSearchParams {
    LineSearchParams {
        theta: 0.99,
        sigma: 1.0,
        beta: 0.1,
        ..LineSearchParams::tseng()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::OperatorTriple;

    #[test]
    fn kernel_values() {
        assert_eq!(gaussian_kernel(&[1.0, 2.0], &[1.0, 2.0], 0.3), 1.0);
        // ‖a − b‖² = 2σ² gives e⁻¹
        let v = gaussian_kernel(&[0.0, 0.0], &[1.0, 1.0], 1.0);
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn coincident_points_normalize_to_half() {
        let data = SvmDataset::new(vec![vec![0.5], vec![0.5]], vec![1.0, 1.0]).unwrap();
        let (k, trace) = normalized_kernel(&data, 1.0).unwrap();
        assert!(k.iter().all(|&v| v == 1.0));
        assert_eq!(trace, 2.0);
        assert!(k.iter().all(|&v| v / trace == 0.5));
    }

    #[test]
    fn csv_remaps_zero_one() {
        let a = SvmDataset::from_csv("f,label\n1.0,1\n2.0,0\n".as_bytes()).unwrap();
        let b = SvmDataset::from_csv("label,f\n1,1.0\n-1,2.0\n".as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.labels, vec![1.0, -1.0]);
        assert!(SvmDataset::from_csv("f,y\n1,1\n".as_bytes()).is_err());
        assert!(SvmDataset::from_csv("f,label\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn toy_dataset_loads() {
        let d = SvmDataset::toy_separable();
        assert_eq!(d.len(), 40);
        assert_eq!(d.points[0].len(), 2);
        assert_eq!(d.labels.iter().filter(|&&l| l == 1.0).count(), 20);
    }

    #[test]
    fn split_keeps_both_classes() {
        let d = SvmDataset::new(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            vec![1.0, 1.0, 1.0, 1.0, -1.0],
        )
        .unwrap();
        for seed in 0..20 {
            let (tr, te) = d.split(0.4, seed).unwrap();
            assert_eq!(tr.len(), 2);
            assert_eq!(te.len(), 3);
            assert!(tr.has_both_classes());
        }
        let (a, _) = d.split(0.8, 3).unwrap();
        let (b, _) = d.split(0.8, 3).unwrap();
        assert_eq!(a, b);
        let single = SvmDataset::new(vec![vec![0.0]; 2], vec![1.0; 2]).unwrap();
        assert!(single.split(0.5, 0).is_err());
    }

    #[test]
    fn standardization_uses_train_statistics() {
        let tr = SvmDataset::new(vec![vec![1.0, 5.0], vec![3.0, 5.0]], vec![1.0, -1.0]).unwrap();
        let te = SvmDataset::new(vec![vec![2.0, 7.0]], vec![1.0]).unwrap();
        let (a, b) = standardize(&tr, &te);
        assert_eq!(a.points, vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(b.points, vec![vec![0.0, 2.0]]);
    }

    #[test]
    fn grids() {
        let g = sigma_grid(3, 0.1, 10.0).unwrap();
        assert!((g[0] - 0.1).abs() < 1e-15 && (g[1] - 1.0).abs() < 1e-12 && g[2] == 10.0);
        assert_eq!(sigma_grid(1, 0.1, 10.0).unwrap().len(), 1);
        assert!(sigma_grid(0, 0.1, 10.0).is_err());
    }

    #[test]
    fn multi_kernel_layout() {
        let d = SvmDataset::new(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 3.0]],
            vec![1.0, -1.0, 1.0],
        )
        .unwrap();
        let svm = build_svm_qcqp(&d, &[0.5, 2.0], 1.0).unwrap();
        let inst = &svm.instance;
        assert_eq!((inst.n, inst.m(), inst.m_bar), (4, 3, 2));
        assert_eq!(inst.b, vec![-1.0, -1.0, -1.0, 2.0]);
        for (c, &s2) in inst.constraints[..2].iter().zip(&svm.sigmas) {
            let q = c.q.as_ref().unwrap();
            let tr: f64 = (0..3).map(|i| q.get(i, i)).sum();
            assert!((tr - 1.0).abs() < 1e-12);
            assert_eq!(q.get(3, 3), 0.0);
            let k01 = gaussian_kernel(&d.points[0], &d.points[1], s2);
            assert!((q.get(0, 1) + q.get(0, 0) * k01).abs() < 1e-15);
        }
        assert_eq!(inst.constraints[2].l, vec![1.0, -1.0, 1.0, 0.0]);
        // x₀ is free, x ≥ 0, inequality duals ≥ 0, equality dual free
        let t = inst.encode().unwrap();
        assert_eq!(
            t.project(&[-1.0, 2.0, -3.0, -4.0, -5.0, 6.0, -7.0]),
            vec![0.0, 2.0, 0.0, -4.0, 0.0, 6.0, -7.0]
        );
    }

    #[test]
    fn zero_duals_predict_bias_sign() {
        let model = SvmModel {
            points: vec![vec![0.0], vec![1.0]],
            coef: vec![0.0, 0.0],
            kernels: vec![(1.0, 1.0)],
            bias: -0.3,
        };
        assert_eq!(model.predict(&[0.0]), -1.0);
        assert_eq!(model.predict(&[5.0]), -1.0);
    }

    #[test]
    fn composite_measure_terms() {
        let d = SvmDataset::new(vec![vec![0.0], vec![1.0]], vec![1.0, -1.0]).unwrap();
        let svm = build_svm_qcqp(&d, &[1.0], 1.0).unwrap();
        // x = (1, 0), x₀ = 0: f = ½ − 1, lᵀx = 1, g₁ = ½·½ − 0
        let v = composite_measure(&svm.instance, &[1.0, 0.0, 0.0], -0.5);
        assert!((v - 1.0).abs() < 1e-15);
    }
}

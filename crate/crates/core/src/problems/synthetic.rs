//! Seeded random instance generators.
//!
//! All generators draw from a single `ChaCha8Rng` seeded with the caller's
//! 64-bit seed, in a fixed order, so instances are identical across platforms.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

use super::fractional::{FractionalInstance, FractionalVariant};
use super::qcqp::{Constraint, QcqpInstance};

/// Default fraction of nonzero entries in the random factors `Rᵢ`.
pub const DEFAULT_DENSITY: f64 = 0.05;

/// Relative diagonal shift added to each `Qᵢ` in strongly convex instances.
pub const STRONG_CONVEXITY_SHIFT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticQcqp {
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub strongly_convex: bool,
    pub density: f64,
}

impl SyntheticQcqp {
    pub fn new(n: usize, p: usize, m: usize) -> Self {
        Self {
            n,
            p,
            m,
            strongly_convex: false,
            density: DEFAULT_DENSITY,
        }
    }

    pub fn strongly_convex(mut self, on: bool) -> Self {
        self.strongly_convex = on;
        self
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn uniforms(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// `RᵀR` for a `p × n` random `R` with `round(density·p·n)` entries drawn
/// U[0,1] at uniformly sampled positions.
fn gram_of_sparse(rng: &mut ChaCha8Rng, n: usize, p: usize, density: f64) -> Result<SymMatrix> {
    let count = ((density * (p * n) as f64).round() as usize).max(1);
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p];
    for _ in 0..count {
        let r = rng.random_range(0..p);
        let c = rng.random_range(0..n);
        rows[r].push((c, rng.random::<f64>()));
    }
    let mut triplets = Vec::new();
    for row in &rows {
        for &(i, vi) in row {
            for &(j, vj) in row {
                triplets.push((i, j, vi * vj));
            }
        }
    }
    SymMatrix::from_triplets(n, &triplets)
}

/// Random convex QCQP: `Qᵢ = RᵢᵀRᵢ` (`i = 0..m`), `b, lᵢ ~ N(0,1)`,
/// `rᵢ ~ U[0,1]`, all constraints inequalities, unconstrained primal block and
/// a U[0,1] starting point on `(x, y)`. With `strongly_convex`, each `Qᵢ`
/// gets `δI` added, `δ = 1e−3·‖Qᵢ‖`.
pub fn gen_synthetic_qcqp(spec: &SyntheticQcqp, seed: u64) -> Result<QcqpInstance> {
    let SyntheticQcqp {
        n,
        p,
        m,
        strongly_convex,
        density,
    } = *spec;
    if n == 0 || p == 0 || m == 0 {
        return Err(Error::InvalidParameter("n, p and m must be at least 1".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParameter(format!("density = {density} outside ]0, 1]")));
    }
    let mut rng = rng(seed);
    let mut quad = || -> Result<SymMatrix> {
        let q = gram_of_sparse(&mut rng, n, p, density)?;
        if !strongly_convex {
            return Ok(q);
        }
        let norm = q.spectral_norm();
        Ok(q.shifted(STRONG_CONVEXITY_SHIFT * if norm > 0.0 { norm } else { 1.0 }))
    };
    let q0 = quad()?;
    let mut qs = Vec::with_capacity(m);
    for _ in 0..m {
        qs.push(quad()?);
    }
    let b = normals(&mut rng, n);
    let mut constraints = Vec::with_capacity(m);
    for q in qs {
        let l = normals(&mut rng, n);
        let r = rng.random::<f64>();
        constraints.push(Constraint { q: Some(q), l, r });
    }
    let start = uniforms(&mut rng, n + m);
    Ok(QcqpInstance {
        n,
        m_bar: m,
        q0,
        b,
        constraints,
        nonneg_primal: false,
        free_indices: Vec::new(),
        upper_bound: None,
        start: Some(start),
    })
}

fn halfspace_start(rng: &mut ChaCha8Rng, inst: &FractionalInstance) -> Vec<f64> {
    let t = normals(rng, inst.dim());
    inst.project(&t)
}

/// Linear fractional program with `d, h₀ ~ N(0,1)`, `r = ηd`,
/// `h = d + 0.01ν` with `ν ~ U[0,1]`, `d₀ ~ U]0,1]` and starting point
/// `proj_D(t)`, `t ~ N(0,1)`.
pub fn gen_linear_fractional(n: usize, eta: f64, seed: u64) -> Result<FractionalInstance> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("eta = {eta} must be nonnegative")));
    }
    let mut rng = rng(seed);
    let d = normals(&mut rng, n);
    let h0 = StandardNormal.sample(&mut rng);
    let nu = uniforms(&mut rng, n);
    let d0 = 1.0 - rng.random::<f64>();
    let mut inst = FractionalInstance {
        variant: FractionalVariant::LinearFractional,
        q: None,
        r: Some(d.iter().map(|v| eta * v).collect()),
        h: d.iter().zip(&nu).map(|(di, vi)| di + 0.01 * vi).collect(),
        h0,
        d,
        d0,
        start: None,
    };
    inst.start = Some(halfspace_start(&mut rng, &inst));
    Ok(inst)
}

/// Quadratic fractional program with `Q = MᵀM/n + 0.1·I`, `M` an `n × n`
/// N(0,1) matrix, `h, d ~ N(0, 1/n)`, `h₀ ~ N(0,1)` and `d₀ ~ U[1,2[`.
/// `Q ≻ 0` makes `f` pseudo-convex and coercive on `D`, so a minimizer
/// exists; the scaling keeps the generalized Lipschitz constants moderate.
pub fn gen_quadratic_fractional(n: usize, seed: u64) -> Result<FractionalInstance> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut rng = rng(seed);
    let mt = normals(&mut rng, n * n);
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = (0..n).map(|k| mt[k * n + i] * mt[k * n + j]).sum::<f64>() / n as f64;
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
        q[i * n + i] += 0.1;
    }
    let s = 1.0 / (n as f64).sqrt();
    let h = normals(&mut rng, n).into_iter().map(|v| s * v).collect();
    let h0 = StandardNormal.sample(&mut rng);
    let d = normals(&mut rng, n).into_iter().map(|v| s * v).collect();
    let d0 = 1.0 + rng.random::<f64>();
    let mut inst = FractionalInstance {
        variant: FractionalVariant::QuadraticFractional,
        q: Some(SymMatrix::dense(n, q)?),
        r: None,
        h,
        h0,
        d,
        d0,
        start: None,
    };
    inst.start = Some(halfspace_start(&mut rng, &inst));
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_is_deterministic() {
        let spec = SyntheticQcqp::new(20, 20, 3);
        let a = gen_synthetic_qcqp(&spec, 7).unwrap();
        let b = gen_synthetic_qcqp(&spec, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_synthetic_qcqp(&spec, 8).unwrap());
        assert_eq!(a.m(), 3);
        assert_eq!(a.m_bar, 3);
        assert_eq!(a.start.as_ref().unwrap().len(), 23);
        assert!(a.q0.asymmetry() < 1e-15);
    }

    #[test]
    fn strongly_convex_shift() {
        let spec = SyntheticQcqp::new(15, 10, 2).strongly_convex(true);
        let inst = gen_synthetic_qcqp(&spec, 1).unwrap();
        let plain = gen_synthetic_qcqp(&SyntheticQcqp::new(15, 10, 2), 1).unwrap();
        let diff = inst.q0.get(3, 3) - plain.q0.get(3, 3);
        assert!((diff - 1e-3 * plain.q0.spectral_norm()).abs() < 1e-12);
    }

    #[test]
    fn linear_fractional_structure() {
        let inst = gen_linear_fractional(50, 10.0, 1).unwrap();
        let r = inst.r.as_ref().unwrap();
        for (ri, di) in r.iter().zip(&inst.d) {
            assert_eq!(*ri, 10.0 * di);
        }
        for (hi, di) in inst.h.iter().zip(&inst.d) {
            assert!((0.0..=0.01).contains(&(hi - di)));
        }
        assert!(inst.d0 > 0.0 && inst.d0 <= 1.0);
        let x0 = inst.start.as_ref().unwrap();
        assert!(crate::linalg::dot(&inst.d, x0) >= -1e-12);
    }

    #[test]
    fn quadratic_fractional_valid() {
        let inst = gen_quadratic_fractional(8, 3).unwrap();
        inst.validate().unwrap();
        assert!(inst.q.as_ref().unwrap().asymmetry() == 0.0);
    }
}

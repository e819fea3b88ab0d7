//! Quadratically constrained quadratic programs in primal-dual form.
//!
//! ```text
//! min ½xᵀQ₀x + bᵀx   s.t.  gᵢ(x) = ½xᵀQᵢx + lᵢᵀx − rᵢ ≤ 0   (i < m̄)
//!                           gᵢ(x) = lᵢᵀx − rᵢ = 0            (i ≥ m̄)
//! ```
//!
//! over a primal box (by default `x ≥ 0`), encoded on `z = (x, y)` as
//! `A(x, y) = (Σ yᵢ∇gᵢ(x), −g(x))`, `B(x, y) = (Q₀x + b, 0)` and `C` the normal
//! cone of `box × [0,∞)^{m̄} × ℝ^{m−m̄}`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{dot, norm_sq, SymMatrix};
use crate::operators::{
    Coefficients, Exponents, GeneralizedLipschitz, OperatorConstants, OperatorTriple, DEFAULT_TAU,
    ZERO_B_LIPSCHITZ,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    /// Quadratic part; `None` for affine constraints.
    #[serde(default)]
    pub q: Option<SymMatrix>,
    pub l: Vec<f64>,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcqpInstance {
    pub n: usize,
    /// The first `m_bar` constraints are inequalities, the rest equalities.
    pub m_bar: usize,
    pub q0: SymMatrix,
    pub b: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// Primal block restricted to `x ≥ 0`.
    pub nonneg_primal: bool,
    /// Primal coordinates exempt from the box.
    #[serde(default)]
    pub free_indices: Vec<usize>,
    /// Common upper bound on the boxed primal coordinates.
    #[serde(default)]
    pub upper_bound: Option<f64>,
    /// Suggested starting point on `(x, y)`.
    #[serde(default)]
    pub start: Option<Vec<f64>>,
}

impl QcqpInstance {
    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    pub fn dim(&self) -> usize {
        self.n + self.m()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        ensure_dim(n, self.q0.dim())?;
        ensure_dim(n, self.b.len())?;
        if self.m_bar > self.m() {
            return Err(Error::InvalidParameter(format!(
                "m_bar = {} exceeds m = {}",
                self.m_bar,
                self.m()
            )));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            ensure_dim(n, c.l.len())?;
            if let Some(q) = &c.q {
                ensure_dim(n, q.dim())?;
                if i >= self.m_bar && q.nnz() > 0 {
                    return Err(Error::InvalidParameter(format!(
                        "equality constraint {i} has a quadratic term"
                    )));
                }
            }
            if !c.r.is_finite() {
                return Err(Error::NonFinite("constraint offset"));
            }
        }
        if let Some(&j) = self.free_indices.iter().find(|&&j| j >= n) {
            return Err(Error::InvalidParameter(format!("free index {j} >= n = {n}")));
        }
        if let Some(u) = self.upper_bound {
            if !(u > 0.0) {
                return Err(Error::InvalidParameter(format!("upper bound {u} must be positive")));
            }
        }
        if let Some(s) = &self.start {
            ensure_dim(self.dim(), s.len())?;
        }
        Ok(())
    }

    /// Primal box bounds per coordinate.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut out = vec![
            (
                if self.nonneg_primal { 0.0 } else { f64::NEG_INFINITY },
                self.upper_bound.unwrap_or(f64::INFINITY)
            );
            self.n
        ];
        for &j in &self.free_indices {
            out[j] = (f64::NEG_INFINITY, f64::INFINITY);
        }
        out
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        0.5 * self.q0.quad_form(x) + dot(&self.b, x)
    }

    /// `(gᵢ(x), ∇gᵢ(x))`.
    pub fn constraint_value_grad(&self, i: usize, x: &[f64]) -> (f64, Vec<f64>) {
        let c = &self.constraints[i];
        match &c.q {
            Some(q) => {
                let qx = q.matvec(x);
                let g = 0.5 * dot(x, &qx) + dot(&c.l, x) - c.r;
                let grad = qx.iter().zip(&c.l).map(|(a, b)| a + b).collect();
                (g, grad)
            }
            None => (dot(&c.l, x) - c.r, c.l.clone()),
        }
    }

    pub fn constraint_values(&self, x: &[f64]) -> Vec<f64> {
        (0..self.m())
            .map(|i| self.constraint_value_grad(i, x).0)
            .collect()
    }

    /// Largest violation of the constraints and of the primal box.
    pub fn primal_infeasibility(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (i, g) in self.constraint_values(x).into_iter().enumerate() {
            worst = worst.max(if i < self.m_bar { g.max(0.0) } else { g.abs() });
        }
        for (xi, (lo, hi)) in x.iter().zip(self.bounds()) {
            worst = worst.max(lo - xi).max(xi - hi);
        }
        worst
    }

    /// Projection onto `box × [0,∞)^{m̄} × ℝ^{m−m̄}`.
    pub fn project(&self, w: &[f64]) -> Vec<f64> {
        let mut out = w.to_vec();
        for (v, (lo, hi)) in out.iter_mut().zip(self.bounds()) {
            *v = v.clamp(lo, hi);
        }
        for v in &mut out[self.n..self.n + self.m_bar] {
            *v = v.max(0.0);
        }
        out
    }

    pub fn encode(&self) -> Result<QcqpTriple> {
        QcqpTriple::new(self.clone())
    }
}

/// Generalized Lipschitz model of the QCQP operator `A`: `μ = 2`, `θ = 4`,
/// `c = 0`, `b = (5/2)Σ L_{gᵢ}²` and `a(x, y) = 2(ρ(x, y) + Σ‖∇gᵢ(x)‖²)` with
/// `ρ(x, y) = 2 max(m maxᵢ‖∇gᵢ(x)‖², (Σ L_{gᵢ}|yᵢ|)²)`, `L_{gᵢ} = ‖Qᵢ‖`.
#[derive(Debug, Clone)]
pub struct QcqpModel {
    instance: QcqpInstance,
    lipschitz_g: Vec<f64>,
}

impl GeneralizedLipschitz for QcqpModel {
    fn exponents(&self) -> Exponents {
        Exponents {
            mu: 2.0,
            theta: 4.0,
            beta: 4.0,
        }
    }

    fn coefficients(&self, z: &[f64]) -> Coefficients {
        let inst = &self.instance;
        let (x, y) = z.split_at(inst.n);
        let m = inst.m();
        let mut max_grad = 0.0f64;
        let mut sum_grad = 0.0;
        let mut weighted = 0.0;
        for (i, (lg, yi)) in self.lipschitz_g.iter().zip(y).enumerate() {
            let g2 = norm_sq(&inst.constraint_value_grad(i, x).1);
            max_grad = max_grad.max(g2);
            sum_grad += g2;
            weighted += lg * yi.abs();
        }
        let rho = 2.0 * (m as f64 * max_grad).max(weighted * weighted);
        Coefficients {
            a: 2.0 * (rho + sum_grad),
            b: 2.5 * self.lipschitz_g.iter().map(|l| l * l).sum::<f64>(),
            c: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QcqpTriple {
    model: QcqpModel,
    lipschitz_b: f64,
}

impl QcqpTriple {
    pub fn new(instance: QcqpInstance) -> Result<Self> {
        instance.validate()?;
        let lipschitz_g = instance
            .constraints
            .iter()
            .map(|c| c.q.as_ref().map_or(0.0, SymMatrix::spectral_norm))
            .collect();
        let l0 = instance.q0.spectral_norm();
        Ok(Self {
            lipschitz_b: if l0 > 0.0 { l0 } else { ZERO_B_LIPSCHITZ },
            model: QcqpModel {
                instance,
                lipschitz_g,
            },
        })
    }

    pub fn instance(&self) -> &QcqpInstance {
        &self.model.instance
    }

    /// `L_{gᵢ} = ‖Qᵢ‖`.
    pub fn constraint_lipschitz(&self) -> &[f64] {
        &self.model.lipschitz_g
    }
}

impl OperatorTriple for QcqpTriple {
    fn dim(&self) -> usize {
        self.instance().dim()
    }

    fn eval_a(&self, z: &[f64]) -> Result<Vec<f64>> {
        let inst = self.instance();
        ensure_dim(inst.dim(), z.len())?;
        let (x, y) = z.split_at(inst.n);
        let mut out = vec![0.0; inst.dim()];
        for i in 0..inst.m() {
            let (g, grad) = inst.constraint_value_grad(i, x);
            if y[i] != 0.0 {
                for (o, gi) in out[..inst.n].iter_mut().zip(&grad) {
                    *o += y[i] * gi;
                }
            }
            out[inst.n + i] = -g;
        }
        Ok(out)
    }

    fn eval_b(&self, z: &[f64]) -> Result<Vec<f64>> {
        let inst = self.instance();
        ensure_dim(inst.dim(), z.len())?;
        let mut out = vec![0.0; inst.dim()];
        inst.q0.matvec_into(&z[..inst.n], &mut out[..inst.n]);
        for (o, bi) in out.iter_mut().zip(&inst.b) {
            *o += bi;
        }
        Ok(out)
    }

    fn resolvent(&self, _gamma: f64, z: &[f64]) -> Vec<f64> {
        self.instance().project(z)
    }

    fn project(&self, w: &[f64]) -> Vec<f64> {
        self.instance().project(w)
    }

    fn constants(&self) -> OperatorConstants {
        OperatorConstants {
            lipschitz_b: self.lipschitz_b,
            zeta: 1.0,
            tau: DEFAULT_TAU,
        }
    }

    fn model(&self) -> &dyn GeneralizedLipschitz {
        &self.model
    }

    fn objective(&self, z: &[f64]) -> Option<f64> {
        Some(self.instance().objective(&z[..self.instance().n]))
    }
}

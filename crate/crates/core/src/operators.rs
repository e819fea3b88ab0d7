//! The operator-triple contract `(A, B, C)` and its generalized Lipschitz model.
//!
//! An [`OperatorTriple`] exposes forward evaluations of `A` and `B`, the
//! resolvent `J_{γC} = (Id + γC)⁻¹`, the projection onto `dom C`, and the
//! constants `(L_B, ζ, τ)` bounding how far the resolvent moves feasible points.
//! `A` is described by a [`GeneralizedLipschitz`] model:
//!
//! ```text
//! ‖Az₁ − Az₂‖² ≤ a(z₁)‖z₁ − z₂‖^μ + b(z₁)‖z₁ − z₂‖^θ + c(z₁)‖z₁ − z₂‖^β
//! ```
//!
//! Both bounds are only checkable on samples; [`check_lipschitz_model`] and
//! [`check_resolvent_bound`] report the worst ratio observed.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::linalg::{dist, norm, sub};

/// `τ` used when no Lipschitz term of `C` forces a value.
pub const DEFAULT_TAU: f64 = 1e-8;

/// `L_B` used when `B = 0`.
pub const ZERO_B_LIPSCHITZ: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub mu: f64,
    pub theta: f64,
    pub beta: f64,
}

impl Exponents {
    pub fn new(mu: f64, theta: f64, beta: f64) -> Result<Self> {
        if !(mu > 0.0 && mu <= 2.0) {
            return Err(Error::InvalidParameter(format!("mu = {mu} outside ]0, 2]")));
        }
        if !(theta >= 2.0 && theta.is_finite()) || !(beta >= 2.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "theta = {theta}, beta = {beta} must lie in [2, inf)"
            )));
        }
        Ok(Self { mu, theta, beta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

pub trait GeneralizedLipschitz: Send + Sync {
    fn exponents(&self) -> Exponents;

    /// `(a(x), b(x), c(x))`, all nonnegative.
    fn coefficients(&self, x: &[f64]) -> Coefficients;

    /// Right-hand side of the model at `x` for a displacement of length `r`.
    fn bound(&self, x: &[f64], r: f64) -> f64 {
        let e = self.exponents();
        let k = self.coefficients(x);
        k.a * r.powf(e.mu) + k.b * r.powf(e.theta) + k.c * r.powf(e.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorConstants {
    /// Lipschitz constant of `B`.
    pub lipschitz_b: f64,
    pub zeta: f64,
    pub tau: f64,
}

impl OperatorConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lipschitz_b", self.lipschitz_b),
            ("zeta", self.zeta),
            ("tau", self.tau),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

/// A problem instance `0 ∈ Ax + Bx + Cx`.
///
/// Implementations must be pure: evaluation never mutates shared state, so one
/// triple can serve concurrent solver runs.
pub trait OperatorTriple: Send + Sync {
    fn dim(&self) -> usize;

    /// `Ax` for `x ∈ dom C`.
    fn eval_a(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn eval_b(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// `J_{γC}(z)`.
    fn resolvent(&self, gamma: f64, z: &[f64]) -> Vec<f64>;

    /// Euclidean projection onto `dom C`.
    fn project(&self, w: &[f64]) -> Vec<f64>;

    fn constants(&self) -> OperatorConstants;

    fn model(&self) -> &dyn GeneralizedLipschitz;

    /// Objective value when the inclusion comes from a minimization problem.
    fn objective(&self, _x: &[f64]) -> Option<f64> {
        None
    }
}

/// `Ax + Bx`, checked for dimension and finiteness.
pub fn eval_sum(triple: &dyn OperatorTriple, x: &[f64]) -> Result<Vec<f64>> {
    let n = triple.dim();
    ensure_dim(n, x.len())?;
    let mut s = triple.eval_a(x)?;
    ensure_dim(n, s.len())?;
    ensure_finite(&s, "A(x)")?;
    let b = triple.eval_b(x)?;
    ensure_dim(n, b.len())?;
    ensure_finite(&b, "B(x)")?;
    for (si, bi) in s.iter_mut().zip(&b) {
        *si += bi;
    }
    Ok(s)
}

/// `d(x) = ζ‖Ax + Bx‖ + τ`.
pub fn d_of_x(triple: &dyn OperatorTriple, x: &[f64]) -> Result<f64> {
    let s = eval_sum(triple, x)?;
    Ok(d_from_sum(&triple.constants(), &s))
}

pub(crate) fn d_from_sum(k: &OperatorConstants, sum: &[f64]) -> f64 {
    k.zeta * norm(sum) + k.tau
}

/// `num / den` with `0/0 = 0` and `x/0 = ∞`.
pub(crate) fn safe_ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleCheck {
    /// Largest observed left/right ratio; `≤ 1` certifies the bound on the sample.
    pub worst_ratio: f64,
    pub samples: usize,
}

/// Worst ratio `‖Az₁ − Az₂‖² / (a(z₁)‖Δ‖^μ + b(z₁)‖Δ‖^θ + c(z₁)‖Δ‖^β)` over
/// `n_samples` pairs drawn from `sampler`. Pairs must lie in `dom C`.
pub fn check_lipschitz_model<F>(
    triple: &dyn OperatorTriple,
    mut sampler: F,
    n_samples: usize,
) -> Result<SampleCheck>
where
    F: FnMut() -> (Vec<f64>, Vec<f64>),
{
    if n_samples == 0 {
        return Err(Error::EmptySample);
    }
    let model = triple.model();
    let mut worst = 0.0f64;
    for _ in 0..n_samples {
        let (z1, z2) = sampler();
        ensure_dim(triple.dim(), z1.len())?;
        ensure_dim(triple.dim(), z2.len())?;
        let a1 = triple.eval_a(&z1)?;
        let a2 = triple.eval_a(&z2)?;
        let lhs = dist(&a1, &a2).powi(2);
        let rhs = model.bound(&z1, dist(&z1, &z2));
        worst = worst.max(safe_ratio(lhs, rhs));
    }
    Ok(SampleCheck {
        worst_ratio: worst,
        samples: n_samples,
    })
}

/// Worst ratio `‖q − J_{γC}(q − γu)‖ / (γ(ζ‖u‖ + τ))` with `q = proj_{dom C}(w)`
/// over `(u, w, γ)` triples drawn from `sampler`.
pub fn check_resolvent_bound<F>(
    triple: &dyn OperatorTriple,
    mut sampler: F,
    n_samples: usize,
) -> Result<SampleCheck>
where
    F: FnMut() -> (Vec<f64>, Vec<f64>, f64),
{
    if n_samples == 0 {
        return Err(Error::EmptySample);
    }
    let k = triple.constants();
    let mut worst = 0.0f64;
    for _ in 0..n_samples {
        let (u, w, gamma) = sampler();
        ensure_dim(triple.dim(), u.len())?;
        ensure_dim(triple.dim(), w.len())?;
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma = {gamma} must be positive")));
        }
        let q = triple.project(&w);
        let z: Vec<f64> = q.iter().zip(&u).map(|(qi, ui)| qi - gamma * ui).collect();
        let moved = norm(&sub(&q, &triple.resolvent(gamma, &z)));
        worst = worst.max(safe_ratio(moved, gamma * (k.zeta * norm(&u) + k.tau)));
    }
    Ok(SampleCheck {
        worst_ratio: worst,
        samples: n_samples,
    })
}

type VecFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type ResolventFn = Box<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
type CoefFn = Box<dyn Fn(&[f64]) -> Coefficients + Send + Sync>;
type ScalarFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Generalized Lipschitz model given by a closure.
pub struct FnModel {
    exponents: Exponents,
    coefficients: CoefFn,
}

impl FnModel {
    pub fn new<F>(exponents: Exponents, coefficients: F) -> Self
    where
        F: Fn(&[f64]) -> Coefficients + Send + Sync + 'static,
    {
        Self {
            exponents,
            coefficients: Box::new(coefficients),
        }
    }

    pub fn constant(exponents: Exponents, k: Coefficients) -> Self {
        Self::new(exponents, move |_| k)
    }
}

impl GeneralizedLipschitz for FnModel {
    fn exponents(&self) -> Exponents {
        self.exponents
    }

    fn coefficients(&self, x: &[f64]) -> Coefficients {
        (self.coefficients)(x)
    }
}

/// Operator triple assembled from closures. Defaults: `A = 0`, `B = 0` with
/// `L_B = 1e−8`, `C = 0` (identity resolvent), `ζ = 1`, `τ = 1e−8`, and a zero
/// model with `μ = θ = β = 2`.
pub struct FnTriple {
    dim: usize,
    a: VecFn,
    b: VecFn,
    resolvent: ResolventFn,
    project: VecFn,
    constants: OperatorConstants,
    model: FnModel,
    objective: Option<ScalarFn>,
}

impl FnTriple {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            a: Box::new(move |x| vec![0.0; x.len()]),
            b: Box::new(move |x| vec![0.0; x.len()]),
            resolvent: Box::new(|_, z| z.to_vec()),
            project: Box::new(|w| w.to_vec()),
            constants: OperatorConstants {
                lipschitz_b: ZERO_B_LIPSCHITZ,
                zeta: 1.0,
                tau: DEFAULT_TAU,
            },
            model: FnModel::constant(
                Exponents {
                    mu: 2.0,
                    theta: 2.0,
                    beta: 2.0,
                },
                Coefficients::default(),
            ),
            objective: None,
        }
    }

    pub fn with_a<F>(mut self, a: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.a = Box::new(a);
        self
    }

    pub fn with_b<F>(mut self, b: F, lipschitz: f64) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.b = Box::new(b);
        self.constants.lipschitz_b = lipschitz;
        self
    }

    /// `C = N_S` for a closed convex `S`: resolvent and domain projection are
    /// both the projection onto `S`.
    pub fn with_normal_cone<F>(mut self, proj: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Clone + Send + Sync + 'static,
    {
        let p = proj.clone();
        self.resolvent = Box::new(move |_, z| p(z));
        self.project = Box::new(proj);
        self
    }

    pub fn with_resolvent<R, P>(mut self, resolvent: R, project: P) -> Self
    where
        R: Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
        P: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.resolvent = Box::new(resolvent);
        self.project = Box::new(project);
        self
    }

    pub fn with_zeta_tau(mut self, zeta: f64, tau: f64) -> Self {
        self.constants.zeta = zeta;
        self.constants.tau = tau;
        self
    }

    pub fn with_model(mut self, model: FnModel) -> Self {
        self.model = model;
        self
    }

    pub fn with_objective<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.objective = Some(Box::new(f));
        self
    }
}

impl OperatorTriple for FnTriple {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_a(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dim, x.len())?;
        Ok((self.a)(x))
    }

    fn eval_b(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dim, x.len())?;
        Ok((self.b)(x))
    }

    fn resolvent(&self, gamma: f64, z: &[f64]) -> Vec<f64> {
        (self.resolvent)(gamma, z)
    }

    fn project(&self, w: &[f64]) -> Vec<f64> {
        (self.project)(w)
    }

    fn constants(&self) -> OperatorConstants {
        self.constants
    }

    fn model(&self) -> &dyn GeneralizedLipschitz {
        &self.model
    }

    fn objective(&self, x: &[f64]) -> Option<f64> {
        self.objective.as_ref().map(|f| f(x))
    }
}

//! Adaptive stepsizes.
//!
//! Both strategies pick `γ̄` as the positive root of a strictly increasing
//! power sum built from the generalized Lipschitz model at the current point:
//!
//! * `Choice1` (`μ = 2`): `b d^{θ−2}γ^θ + c d^{β−2}γ^β + (L_B² + a)γ² = α/2`.
//! * `Choice2` (`μ < 2`): the minimum of the roots of
//!   `L_B²γ² + b d^{θ−2}γ^θ + c d^{β−2}γ^β + 2^{2−μ}aε^{μ−2}γ^μ = α/2` and
//!   `L_B²d^{2−μ}γ² + b d^{θ−μ}γ^θ + c d^{β−μ}γ^β + aγ^μ = ε^{2−μ}α/2^{3−μ}`.
//!
//! with `d = ζ‖Ax + Bx‖ + τ`. The selected stepsize is always `γ = γ̄`, the
//! right end of the admissible interval `[min(σ, γ̄), γ̄]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    d_from_sum, eval_sum, Coefficients, Exponents, OperatorConstants, OperatorTriple,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Choice1,
    Choice2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepsizeParams {
    pub strategy: Strategy,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Lower end of the admissible stepsize interval; 0 means always `γ̄`.
    #[serde(default)]
    pub sigma: f64,
    /// Target accuracy `ε` of `Choice2`.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    1e-2
}

impl Default for StepsizeParams {
    fn default() -> Self {
        Self {
            strategy: Strategy::Choice1,
            alpha_min: 0.99,
            alpha_max: 0.99,
            sigma: 0.0,
            epsilon: default_epsilon(),
        }
    }
}

impl StepsizeParams {
    pub fn choice2(epsilon: f64) -> Self {
        Self {
            strategy: Strategy::Choice2,
            epsilon,
            ..Self::default()
        }
    }

    /// `α_k`, held constant at `alpha_max`.
    pub fn alpha(&self) -> f64 {
        self.alpha_max
    }

    pub fn validate(&self, mu: f64) -> Result<()> {
        if !(self.alpha_min > 0.0 && self.alpha_min <= self.alpha_max && self.alpha_max < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < alpha_min <= alpha_max < 1, got {} and {}",
                self.alpha_min, self.alpha_max
            )));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!("sigma = {} < 0", self.sigma)));
        }
        match self.strategy {
            Strategy::Choice1 if mu != 2.0 => Err(Error::InvalidParameter(format!(
                "Choice1 needs mu = 2, model has mu = {mu}"
            ))),
            Strategy::Choice2 if !(mu > 0.0 && mu < 2.0) => Err(Error::InvalidParameter(format!(
                "Choice2 needs mu in ]0, 2[, model has mu = {mu}"
            ))),
            Strategy::Choice2 if !(self.epsilon > 0.0 && self.epsilon < 1.0) => Err(
                Error::InvalidParameter(format!("epsilon = {} outside ]0, 1[", self.epsilon)),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepsizeResult {
    pub gamma: f64,
    pub gamma_bar: f64,
    /// `Choice2` only: roots of the two defining equations.
    pub gamma_bar_1: Option<f64>,
    pub gamma_bar_2: Option<f64>,
    pub alpha: f64,
    pub d_x: f64,
    /// Value of the binding equation at `γ̄` (left side minus right side).
    pub root_residual: f64,
}

/// `Σ exp(ln cᵢ) γ^{eᵢ} − rhs` with positive coefficients kept in log form, so
/// large or tiny powers of `d` never overflow before they meet `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSum {
    terms: Vec<(f64, f64)>,
    rhs: f64,
}

impl PowerSum {
    pub fn new(rhs: f64) -> Self {
        Self {
            terms: Vec::new(),
            rhs,
        }
    }

    /// Adds `coef · d^{d_exp} · γ^{exp}`; zero coefficients are dropped.
    pub fn term(mut self, coef: f64, d: f64, d_exp: f64, exp: f64) -> Self {
        if coef > 0.0 {
            self.terms.push((coef.ln() + d_exp * d.ln(), exp));
        }
        self
    }

    pub fn value(&self, gamma: f64) -> f64 {
        self.value_and_slope(gamma).0
    }

    fn value_and_slope(&self, gamma: f64) -> (f64, f64) {
        if gamma <= 0.0 {
            let slope = self
                .terms
                .iter()
                .filter(|(_, e)| *e <= 1.0)
                .map(|(_, e)| if *e < 1.0 { f64::INFINITY } else { 1.0 })
                .fold(0.0, f64::max);
            return (-self.rhs, slope);
        }
        let lg = gamma.ln();
        let mut v = 0.0;
        let mut s = 0.0;
        for &(lc, e) in &self.terms {
            let t = (lc + e * lg).exp();
            v += t;
            s += e * t / gamma;
        }
        (v - self.rhs, s)
    }

    /// Bracket `[lo, hi]` with `value(lo) ≤ 0 ≤ value(hi)`: each term alone
    /// reaching `rhs` bounds the root above, all terms at `rhs/N` bound it below.
    fn bracket(&self) -> Option<(f64, f64)> {
        if self.terms.is_empty() || !(self.rhs > 0.0) {
            return None;
        }
        let n = self.terms.len() as f64;
        let lr = self.rhs.ln();
        let mut hi = f64::INFINITY;
        let mut lo = f64::INFINITY;
        for &(lc, e) in &self.terms {
            hi = hi.min(((lr - lc) / e).exp());
            lo = lo.min(((lr - n.ln() - lc) / e).exp());
        }
        Some((lo, hi))
    }

    /// Unique positive root, searched inside `[0, cap]` intersected with the
    /// term bracket. The returned point has `value ≤ 0` and
    /// `|value| ≤ ftol` unless the bracket collapsed to machine precision.
    pub fn root(&self, cap: f64, ftol: f64) -> Result<f64> {
        let (mut lo, mut hi) = self.bracket().ok_or(Error::RootBracket {
            f_lo: -self.rhs,
            f_hi: -self.rhs,
        })?;
        if cap.is_finite() && cap > 0.0 && cap < hi {
            let fc = self.value(cap);
            if fc < 0.0 {
                return Err(Error::RootBracket {
                    f_lo: -self.rhs,
                    f_hi: fc,
                });
            }
            hi = cap;
        }
        // The term bound is exact in real arithmetic; rounding can leave it a hair short.
        let mut nudges = 0;
        while self.value(hi) < 0.0 && nudges < 8 {
            hi *= 1.0 + 1e-12;
            nudges += 1;
        }
        lo = lo.min(hi);
        if self.value(lo) > 0.0 {
            lo = 0.0;
        }
        root_search(|g| self.value_and_slope(g), lo, hi, ftol)
    }
}

/// Root of a continuous, strictly increasing `f` on `[0, hi]` with `f(0) < 0 ≤ f(hi)`.
///
/// Returns `γ` with `f(γ) ≤ 0` and `|f(γ)| ≤ 1e−12·max(1, |f(hi)|)`, or the
/// lower end of a bracket narrower than `1e−15·hi`.
pub fn root_increasing<F>(f: F, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(hi > 0.0 && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("upper bracket {hi} must be positive")));
    }
    let f_lo = f(0.0);
    let f_hi = f(hi);
    if !(f_lo < 0.0 && f_hi >= 0.0) {
        return Err(Error::RootBracket { f_lo, f_hi });
    }
    let ftol = 1e-12 * f_hi.abs().max(1.0);
    root_search(|g| (f(g), f64::NAN), 0.0, hi, ftol)
}

const MAX_ROOT_ITERATIONS: usize = 200;

/// Safeguarded Newton / regula falsi / bisection on a bracket.
fn root_search<F>(f: F, mut lo: f64, mut hi: f64, ftol: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (mut f_lo, mut s_lo) = f(lo);
    let (mut f_hi, mut s_hi) = f(hi);
    if !(f_lo <= 0.0 && f_hi >= 0.0) || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::RootBracket { f_lo, f_hi });
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    // Illinois weights for regula falsi.
    let mut w_lo = 1.0;
    let mut w_hi = 1.0;
    let mut width_before = [f64::INFINITY; 2];
    for _ in 0..MAX_ROOT_ITERATIONS {
        let width = hi - lo;
        if width <= 1e-15 * hi {
            return Ok(lo);
        }
        let stalled = width > 0.5 * width_before[0];
        width_before = [width_before[1], width];
        let inside = |c: f64| c > lo && c < hi && c.is_finite();
        let mut c = f64::NAN;
        if !stalled {
            let (fe, se, e) = if -f_lo < f_hi {
                (f_lo, s_lo, lo)
            } else {
                (f_hi, s_hi, hi)
            };
            if se.is_finite() && se > 0.0 {
                c = e - fe / se;
            }
            if !inside(c) {
                let (a, b) = (w_lo * f_lo, w_hi * f_hi);
                c = (lo * b - hi * a) / (b - a);
            }
        }
        if !inside(c) {
            c = if lo > 0.0 && hi / lo > 16.0 {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
            if !inside(c) {
                return Ok(lo);
            }
        }
        let (fc, sc) = f(c);
        if fc.is_nan() {
            return Err(Error::NonFinite("root finder residual"));
        }
        if fc <= 0.0 {
            if -fc <= ftol {
                return Ok(c);
            }
            lo = c;
            f_lo = fc;
            s_lo = sc;
            w_lo = 1.0;
            w_hi *= 0.5;
        } else {
            hi = c;
            f_hi = fc;
            s_hi = sc;
            w_hi = 1.0;
            w_lo *= 0.5;
            if fc <= ftol && sc.is_finite() && sc > 0.0 {
                // Step just past the root so the returned point is feasible.
                let back = c - 2.0 * fc / sc;
                if back > lo {
                    let (fb, _) = f(back);
                    if fb <= 0.0 && -fb <= ftol {
                        return Ok(back);
                    }
                }
            }
        }
    }
    Err(Error::RootNotConverged {
        iterations: MAX_ROOT_ITERATIONS,
        lo,
        hi,
    })
}

/// Relative accuracy requested from the root finder, in units of `α`.
const ROOT_TOL: f64 = 1e-13;

/// `η = sqrt(α_max / (2 L_B²))`, the `Choice1` stepsize ceiling.
pub fn choice1_ceiling(lipschitz_b: f64, alpha_max: f64) -> f64 {
    (alpha_max / 2.0).sqrt() / lipschitz_b
}

/// `η̄ = (ε^{2−μ} α_max / (2^{3−μ} L_B² τ^{2−μ}))^{1/2}`, the ceiling of the
/// second `Choice2` root.
pub fn choice2_ceiling(lipschitz_b: f64, tau: f64, mu: f64, alpha_max: f64, epsilon: f64) -> f64 {
    let l = (2.0 - mu) * (epsilon.ln() - tau.ln()) + alpha_max.ln()
        - (3.0 - mu) * 2f64.ln()
        - 2.0 * lipschitz_b.ln();
    (0.5 * l).exp()
}

/// The `Choice1` equation as a power sum in `γ`.
pub fn choice1_equation(
    lipschitz_b: f64,
    k: Coefficients,
    e: Exponents,
    d: f64,
    alpha: f64,
) -> PowerSum {
    PowerSum::new(alpha / 2.0)
        .term(lipschitz_b * lipschitz_b + k.a, d, 0.0, 2.0)
        .term(k.b, d, e.theta - 2.0, e.theta)
        .term(k.c, d, e.beta - 2.0, e.beta)
}

/// The two `Choice2` equations.
pub fn choice2_equations(
    lipschitz_b: f64,
    k: Coefficients,
    e: Exponents,
    d: f64,
    alpha: f64,
    epsilon: f64,
) -> (PowerSum, PowerSum) {
    let mu = e.mu;
    let l2 = lipschitz_b * lipschitz_b;
    let h1 = PowerSum::new(alpha / 2.0)
        .term(l2, d, 0.0, 2.0)
        .term(k.b, d, e.theta - 2.0, e.theta)
        .term(k.c, d, e.beta - 2.0, e.beta)
        .term(k.a * 2f64.powf(2.0 - mu) * epsilon.powf(mu - 2.0), d, 0.0, mu);
    let h2 = PowerSum::new(epsilon.powf(2.0 - mu) * alpha / 2f64.powf(3.0 - mu))
        .term(l2, d, 2.0 - mu, 2.0)
        .term(k.b, d, e.theta - mu, e.theta)
        .term(k.c, d, e.beta - mu, e.beta)
        .term(k.a, d, 0.0, mu);
    (h1, h2)
}

/// Quartic closed form for `θ = 4`, `c = 0`: with `B = L_B² + a`,
/// `γ̄² = α / (B + sqrt(B² + 2α b d²))`.
pub fn choice1_closed_form(lipschitz_b: f64, a: f64, b: f64, d: f64, alpha: f64) -> f64 {
    let big_b = lipschitz_b * lipschitz_b + a;
    let bd2 = b * d * d;
    (alpha / (big_b + (big_b * big_b + 2.0 * alpha * bd2).sqrt())).sqrt()
}

fn validate_inputs(lipschitz_b: f64, k: &Coefficients, d: f64, alpha: f64) -> Result<()> {
    if !(lipschitz_b > 0.0 && lipschitz_b.is_finite()) {
        return Err(Error::InvalidParameter(format!("L_B = {lipschitz_b} must be positive")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside ]0, 1[")));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::NonFinite("d(x)"));
    }
    for v in [k.a, k.b, k.c] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "model coefficients must be finite and nonnegative, got {k:?}"
            )));
        }
    }
    Ok(())
}

/// Moves `γ` down by a few ulps until the equation is nonpositive there.
fn feasible_side(eq: &PowerSum, mut gamma: f64) -> (f64, f64) {
    let mut r = eq.value(gamma);
    let mut guard = 0;
    while r > 0.0 && guard < 64 {
        let (v, s) = eq.value_and_slope(gamma);
        let step = if s.is_finite() && s > 0.0 { v / s } else { 0.0 };
        gamma -= step.max(4.0 * f64::EPSILON * gamma);
        r = eq.value(gamma);
        guard += 1;
    }
    (gamma, r)
}

/// `Choice1` stepsize from model values at the current point.
pub fn choice1_from_coefficients(
    lipschitz_b: f64,
    k: Coefficients,
    e: Exponents,
    d: f64,
    alpha: f64,
) -> Result<StepsizeResult> {
    validate_inputs(lipschitz_b, &k, d, alpha)?;
    let eq = choice1_equation(lipschitz_b, k, e, d, alpha);
    let tol = ROOT_TOL * alpha;
    let mut gamma_bar = f64::NAN;
    if e.theta == 4.0 && k.c == 0.0 {
        let g = choice1_closed_form(lipschitz_b, k.a, k.b, d, alpha);
        if eq.value(g).abs() <= tol {
            gamma_bar = g;
        }
    }
    if gamma_bar.is_nan() {
        gamma_bar = eq.root(alpha.sqrt() / lipschitz_b, tol)?;
    }
    let (gamma_bar, residual) = feasible_side(&eq, gamma_bar);
    Ok(StepsizeResult {
        gamma: gamma_bar,
        gamma_bar,
        gamma_bar_1: None,
        gamma_bar_2: None,
        alpha,
        d_x: d,
        root_residual: residual,
    })
}

/// `Choice2` stepsize from model values at the current point.
pub fn choice2_from_coefficients(
    lipschitz_b: f64,
    k: Coefficients,
    e: Exponents,
    d: f64,
    alpha: f64,
    epsilon: f64,
) -> Result<StepsizeResult> {
    validate_inputs(lipschitz_b, &k, d, alpha)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} outside ]0, 1[")));
    }
    let (h1, h2) = choice2_equations(lipschitz_b, k, e, d, alpha, epsilon);
    let tol = ROOT_TOL * alpha;
    let g1 = h1.root(alpha.sqrt() / lipschitz_b, tol)?;
    let cap2 = (0.5 * alpha.ln() - lipschitz_b.ln() - 0.5 * (2.0 - e.mu) * d.ln()).exp();
    let g2 = h2.root(cap2, ROOT_TOL * h2.rhs)?;
    let (g1, r1) = feasible_side(&h1, g1);
    let (g2, r2) = feasible_side(&h2, g2);
    let (gamma_bar, residual) = if g1 <= g2 { (g1, r1) } else { (g2, r2) };
    Ok(StepsizeResult {
        gamma: gamma_bar,
        gamma_bar,
        gamma_bar_1: Some(g1),
        gamma_bar_2: Some(g2),
        alpha,
        d_x: d,
        root_residual: residual,
    })
}

/// Stepsize at `x` given `Ax + Bx` already evaluated there.
pub(crate) fn from_sum(
    triple: &dyn OperatorTriple,
    constants: &OperatorConstants,
    x: &[f64],
    sum: &[f64],
    params: &StepsizeParams,
) -> Result<StepsizeResult> {
    let model = triple.model();
    let e = model.exponents();
    params.validate(e.mu)?;
    let d = d_from_sum(constants, sum);
    let k = model.coefficients(x);
    let alpha = params.alpha();
    match params.strategy {
        Strategy::Choice1 => choice1_from_coefficients(constants.lipschitz_b, k, e, d, alpha),
        Strategy::Choice2 => {
            choice2_from_coefficients(constants.lipschitz_b, k, e, d, alpha, params.epsilon)
        }
    }
}

/// `Choice1` stepsize at `x`. `sigma` only widens the admissible interval; the
/// selected stepsize is `γ̄`.
pub fn solve_choice1(
    triple: &dyn OperatorTriple,
    x: &[f64],
    alpha: f64,
    sigma: f64,
) -> Result<StepsizeResult> {
    let params = StepsizeParams {
        strategy: Strategy::Choice1,
        alpha_min: alpha,
        alpha_max: alpha,
        sigma,
        ..StepsizeParams::default()
    };
    compute(triple, x, &params)
}

pub fn solve_choice2(
    triple: &dyn OperatorTriple,
    x: &[f64],
    alpha: f64,
    sigma: f64,
    epsilon: f64,
) -> Result<StepsizeResult> {
    let params = StepsizeParams {
        strategy: Strategy::Choice2,
        alpha_min: alpha,
        alpha_max: alpha,
        sigma,
        epsilon,
    };
    compute(triple, x, &params)
}

/// Stepsize at `x` for the configured strategy.
pub fn compute(
    triple: &dyn OperatorTriple,
    x: &[f64],
    params: &StepsizeParams,
) -> Result<StepsizeResult> {
    let sum = eval_sum(triple, x)?;
    from_sum(triple, &triple.constants(), x, &sum, params)
}

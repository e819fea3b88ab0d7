//! The AFBF iteration.
//!
//! One step from `x_k ∈ dom C`:
//!
//! ```text
//! z_k = x_k − γ_k(Ax_k + Bx_k)
//! p_k = J_{γ_k C}(z_k)
//! q_k = p_k − γ_k(Ap_k + Bp_k)
//! x̂_k = q_k − z_k + x_k
//! x_{k+1} = proj_{dom C}(x̂_k)
//! ```
//!
//! The residual `u_k = (z_k − p_k)/γ_k + Ap_k + Bp_k` lies in `(A + B + C)p_k`,
//! so `‖u_k‖` certifies `p_k` and drives the stopping test.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::linalg::{dist, norm, norm_sq};
use crate::operators::{eval_sum, safe_ratio, OperatorConstants, OperatorTriple};
use crate::stepsize::{self, StepsizeParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub stepsize: StepsizeParams,
    /// Stop once `‖u_k‖ ≤ tol_residual`.
    pub tol_residual: f64,
    pub max_iters: usize,
    #[serde(default)]
    pub record_history: bool,
    #[serde(default)]
    pub time_limit_seconds: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            stepsize: StepsizeParams::default(),
            tol_residual: 1e-2,
            max_iters: 100_000,
            record_history: false,
            time_limit_seconds: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol_residual = {} must be positive",
                self.tol_residual
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if let Some(t) = self.time_limit_seconds {
            if !(t > 0.0) {
                return Err(Error::InvalidParameter(format!("time limit {t} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Converged,
    MaxIters,
    TimeLimit,
    Error,
}

/// One iteration as seen by the history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub gamma: f64,
    pub gamma_bar: f64,
    pub alpha: f64,
    pub p: Vec<f64>,
    pub u_norm: f64,
    /// `γ²‖(A+B)x − (A+B)p‖² / (α‖x − p‖²)`; at most 1 for AFBF stepsizes.
    pub lipschitz_certificate: f64,
    /// `‖x_k − z̄‖` when a reference point is supplied.
    pub fejer_gap: Option<f64>,
    pub x_minus_p: f64,
    /// `‖z_k − q_k‖ = ‖x_k − x̂_k‖`.
    pub x_minus_xhat: f64,
    pub objective: Option<f64>,
    pub elapsed_seconds: f64,
    /// Line-search trials spent in this iteration (baselines).
    pub line_search_evals: usize,
    /// Backtracking hit its cap and accepted the smallest trial.
    pub flagged: bool,
}

/// Quantities accumulated over every iteration, recorded or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_certificate: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// `Σ_k ‖x_k − p_k‖²`.
    pub sum_sq_x_minus_p: f64,
    /// `max_k ‖z_k − q_k‖ / ((1 + √α_k)‖x_k − p_k‖)`.
    pub max_displacement_ratio: f64,
    /// `max_k (‖x_{k+1} − z̄‖ − ‖x_k − z̄‖)` against the reference.
    pub max_fejer_increase: Option<f64>,
    pub initial_gap: Option<f64>,
    pub final_gap: Option<f64>,
    /// `max_k √k · min_{j<k} ‖x_j − x̂_j‖ / ε₀` with `ε₀ = ‖x₀ − z̄‖/√(1 − α_max)`.
    pub max_sublinear_ratio: Option<f64>,
    pub flagged_iterations: usize,
}

impl Diagnostics {
    fn new() -> Self {
        Self {
            max_certificate: 0.0,
            gamma_min: f64::INFINITY,
            gamma_max: 0.0,
            sum_sq_x_minus_p: 0.0,
            max_displacement_ratio: 0.0,
            max_fejer_increase: None,
            initial_gap: None,
            final_gap: None,
            max_sublinear_ratio: None,
            flagged_iterations: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub solver: String,
    pub status: RunStatus,
    pub error: Option<String>,
    /// Index of the last step taken; for a converged run, the first `k` meeting the stop rule.
    pub iterations: usize,
    /// `p_k` of the last step, the point certified by `u_k`.
    pub final_x: Vec<f64>,
    /// `x_{k+1}` produced by the last step.
    pub last_iterate: Vec<f64>,
    pub final_u_norm: f64,
    pub history: Vec<IterateRecord>,
    pub wall_time_seconds: f64,
    pub line_search_evals: usize,
    pub diagnostics: Diagnostics,
}

impl RunReport {
    /// Copy with every wall-clock field zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.wall_time_seconds = 0.0;
        for rec in &mut r.history {
            rec.elapsed_seconds = 0.0;
        }
        r
    }

    pub fn summary(&self) -> SummaryRow {
        SummaryRow {
            solver: self.solver.clone(),
            status: self.status,
            iter: self.iterations,
            cpu: self.wall_time_seconds,
            lse: self.line_search_evals,
            final_u_norm: self.final_u_norm,
        }
    }
}

/// Table row with the benchmark columns ITER, CPU, LSE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub solver: String,
    pub status: RunStatus,
    pub iter: usize,
    pub cpu: f64,
    pub lse: usize,
    pub final_u_norm: f64,
}

/// Result of one step of an FBF-type method from `x_k`.
#[derive(Debug, Clone)]
pub(crate) struct Step {
    pub p: Vec<f64>,
    pub x_next: Vec<f64>,
    pub u_norm: f64,
    pub gamma: f64,
    pub gamma_bar: f64,
    /// Certificate scale: `α_k` for AFBF, `θ²` for line searches.
    pub alpha: f64,
    pub certificate: f64,
    pub x_minus_p: f64,
    pub x_minus_xhat: f64,
    pub trials: usize,
    pub flagged: bool,
}

/// Quantities of one AFBF step, public through [`afbf_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub z: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub x_next: Vec<f64>,
    pub u: Vec<f64>,
    pub stepsize: stepsize::StepsizeResult,
}

/// AFBF step at `x` with `sx = Ax + Bx` already known.
fn afbf_trace(
    triple: &dyn OperatorTriple,
    k: &OperatorConstants,
    x: &[f64],
    sx: &[f64],
    params: &StepsizeParams,
) -> Result<(StepTrace, Vec<f64>)> {
    let st = stepsize::from_sum(triple, k, x, sx, params)?;
    let g = st.gamma;
    let z: Vec<f64> = x.iter().zip(sx).map(|(xi, si)| xi - g * si).collect();
    let p = triple.resolvent(g, &z);
    ensure_dim(x.len(), p.len())?;
    ensure_finite(&p, "resolvent output")?;
    let sp = eval_sum(triple, &p)?;
    let q: Vec<f64> = p.iter().zip(&sp).map(|(pi, si)| pi - g * si).collect();
    let x_hat: Vec<f64> = q
        .iter()
        .zip(&z)
        .zip(x)
        .map(|((qi, zi), xi)| qi - zi + xi)
        .collect();
    let x_next = triple.project(&x_hat);
    let u = z
        .iter()
        .zip(&p)
        .zip(&sp)
        .map(|((zi, pi), si)| (zi - pi) / g + si)
        .collect();
    Ok((
        StepTrace {
            z,
            p,
            q,
            x_hat,
            x_next,
            u,
            stepsize: st,
        },
        sp,
    ))
}

fn afbf_core(
    triple: &dyn OperatorTriple,
    k: &OperatorConstants,
    x: &[f64],
    sx: &[f64],
    params: &StepsizeParams,
) -> Result<Step> {
    let (t, sp) = afbf_trace(triple, k, x, sx, params)?;
    let g = t.stepsize.gamma;
    let x_minus_p = dist(x, &t.p);
    let ds = dist(sx, &sp);
    Ok(Step {
        certificate: safe_ratio(g * g * ds * ds, t.stepsize.alpha * x_minus_p * x_minus_p),
        x_minus_xhat: dist(&t.z, &t.q),
        u_norm: norm(&t.u),
        p: t.p,
        x_next: t.x_next,
        gamma: g,
        gamma_bar: t.stepsize.gamma_bar,
        alpha: t.stepsize.alpha,
        x_minus_p,
        trials: 0,
        flagged: false,
    })
}

/// One AFBF step from `x ∈ dom C`: two evaluations each of `A` and `B`.
pub fn afbf_step(
    triple: &dyn OperatorTriple,
    x: &[f64],
    params: &StepsizeParams,
) -> Result<StepTrace> {
    let sx = eval_sum(triple, x)?;
    Ok(afbf_trace(triple, &triple.constants(), x, &sx, params)?.0)
}

/// `u = (z − p)/γ + Ap + Bp`.
pub fn residual(triple: &dyn OperatorTriple, z: &[f64], p: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must be positive")));
    }
    ensure_dim(p.len(), z.len())?;
    let sp = eval_sum(triple, p)?;
    Ok(z.iter()
        .zip(p)
        .zip(&sp)
        .map(|((zi, pi), si)| (zi - pi) / gamma + si)
        .collect())
}

/// `γ²‖(A+B)x − (A+B)p‖² / (α‖x − p‖²)` with `0/0 = 0`.
pub fn certify_iteration(
    triple: &dyn OperatorTriple,
    x: &[f64],
    p: &[f64],
    gamma: f64,
    alpha: f64,
) -> Result<f64> {
    let d = dist(x, p);
    let ds = dist(&eval_sum(triple, x)?, &eval_sum(triple, p)?);
    Ok(safe_ratio(gamma * gamma * ds * ds, alpha * d * d))
}

/// Whether iteration `k` is kept in a down-sampled history: every iterate up
/// to 10⁴, then every `⌈k/10⁴⌉`-th.
pub fn keep_record(k: usize) -> bool {
    const FULL: usize = 10_000;
    k < FULL || k.is_multiple_of(k.div_ceil(FULL))
}

struct Tracker<'a> {
    config: &'a SolverConfig,
    reference: Option<&'a [f64]>,
    triple: &'a dyn OperatorTriple,
    start: Instant,
    history: Vec<IterateRecord>,
    diag: Diagnostics,
    line_search_evals: usize,
    prev_gap: Option<f64>,
    eps0: Option<f64>,
    running_min_step: f64,
}

impl<'a> Tracker<'a> {
    fn new(
        triple: &'a dyn OperatorTriple,
        config: &'a SolverConfig,
        reference: Option<&'a [f64]>,
        x0: &[f64],
    ) -> Self {
        let mut diag = Diagnostics::new();
        let gap0 = reference.map(|r| dist(x0, r));
        diag.initial_gap = gap0;
        diag.final_gap = gap0;
        let eps0 = gap0.map(|g| g / (1.0 - config.stepsize.alpha_max).sqrt());
        Self {
            config,
            reference,
            triple,
            start: Instant::now(),
            history: Vec::new(),
            diag,
            line_search_evals: 0,
            prev_gap: gap0,
            eps0,
            running_min_step: f64::INFINITY,
        }
    }

    fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn observe(&mut self, k: usize, x: &[f64], s: &Step, force_record: bool) {
        let d = &mut self.diag;
        d.max_certificate = d.max_certificate.max(s.certificate);
        d.gamma_min = d.gamma_min.min(s.gamma);
        d.gamma_max = d.gamma_max.max(s.gamma);
        d.sum_sq_x_minus_p += s.x_minus_p * s.x_minus_p;
        d.max_displacement_ratio = d
            .max_displacement_ratio
            .max(safe_ratio(s.x_minus_xhat, (1.0 + s.alpha.sqrt()) * s.x_minus_p));
        if s.flagged {
            d.flagged_iterations += 1;
        }
        self.line_search_evals += s.trials;

        let gap = self.prev_gap;
        if let Some(r) = self.reference {
            let next_gap = dist(&s.x_next, r);
            let inc = next_gap - gap.unwrap_or(next_gap);
            d.max_fejer_increase = Some(d.max_fejer_increase.map_or(inc, |m: f64| m.max(inc)));
            d.final_gap = Some(next_gap);
            self.prev_gap = Some(next_gap);
        }
        self.running_min_step = self.running_min_step.min(s.x_minus_xhat);
        if let Some(e0) = self.eps0 {
            let ratio = safe_ratio(self.running_min_step * ((k + 1) as f64).sqrt(), e0);
            d.max_sublinear_ratio = Some(d.max_sublinear_ratio.map_or(ratio, |m: f64| m.max(ratio)));
        }

        if self.config.record_history && (force_record || keep_record(k)) {
            self.history.push(IterateRecord {
                k,
                x: x.to_vec(),
                gamma: s.gamma,
                gamma_bar: s.gamma_bar,
                alpha: s.alpha,
                p: s.p.clone(),
                u_norm: s.u_norm,
                lipschitz_certificate: s.certificate,
                fejer_gap: gap,
                x_minus_p: s.x_minus_p,
                x_minus_xhat: s.x_minus_xhat,
                objective: self.triple.objective(x),
                elapsed_seconds: self.elapsed(),
                line_search_evals: s.trials,
                flagged: s.flagged,
            });
        }
    }
}

/// Stop test applied to `(p_k, ‖u_k‖)` after every step.
pub type StopRule<'a> = &'a dyn Fn(&[f64], f64) -> bool;

/// Shared driver for AFBF and the line-search baselines.
pub(crate) fn run<F>(
    name: &str,
    triple: &dyn OperatorTriple,
    x0: &[f64],
    config: &SolverConfig,
    reference: Option<&[f64]>,
    stop: Option<StopRule<'_>>,
    mut step: F,
) -> Result<RunReport>
where
    F: FnMut(&[f64], &[f64]) -> Result<Step>,
{
    config.validate()?;
    let n = triple.dim();
    ensure_dim(n, x0.len())?;
    ensure_finite(x0, "starting point")?;
    if let Some(r) = reference {
        ensure_dim(n, r.len())?;
    }
    triple.constants().validate()?;

    let mut x = triple.project(x0);
    let mut tracker = Tracker::new(triple, config, reference, &x);
    let tol = config.tol_residual;
    let mut status = RunStatus::MaxIters;
    let mut error = None;
    let mut last: Option<Step> = None;
    let mut iterations = 0;

    for k in 0..config.max_iters {
        iterations = k;
        let outcome = eval_sum(triple, &x).and_then(|sx| step(&x, &sx));
        let s = match outcome {
            Ok(s) => s,
            Err(e) => {
                status = RunStatus::Error;
                error = Some(
                    Error::SolverFailure {
                        iteration: k,
                        cause: e.to_string(),
                    }
                    .to_string(),
                );
                break;
            }
        };
        let done = match stop {
            Some(rule) => rule(&s.p, s.u_norm),
            None => s.u_norm <= tol,
        };
        let timed_out = config
            .time_limit_seconds
            .is_some_and(|t| tracker.elapsed() > t);
        let is_last = done || timed_out || k + 1 == config.max_iters;
        tracker.observe(k, &x, &s, is_last);
        x = s.x_next.clone();
        last = Some(s);
        if done {
            status = RunStatus::Converged;
            break;
        }
        if timed_out {
            status = RunStatus::TimeLimit;
            break;
        }
    }

    let wall = tracker.elapsed();
    let (final_x, final_u_norm) = match &last {
        Some(s) => (s.p.clone(), s.u_norm),
        None => (x.clone(), f64::NAN),
    };
    Ok(RunReport {
        solver: name.to_string(),
        status,
        error,
        iterations,
        final_x,
        last_iterate: x,
        final_u_norm,
        history: tracker.history,
        wall_time_seconds: wall,
        line_search_evals: tracker.line_search_evals,
        diagnostics: tracker.diag,
    })
}

/// Runs AFBF from `x0` (projected onto `dom C` first) until `‖u_k‖ ≤ tol`,
/// the iteration cap or the time limit. With a reference point the Fejér
/// gaps `‖x_k − z̄‖` are tracked.
pub fn solve(
    triple: &dyn OperatorTriple,
    x0: &[f64],
    config: &SolverConfig,
    reference: Option<&[f64]>,
) -> Result<RunReport> {
    solve_with_stop(triple, x0, config, reference, None)
}

/// [`solve`] with a caller-supplied stop rule replacing `‖u_k‖ ≤ tol`.
pub fn solve_with_stop(
    triple: &dyn OperatorTriple,
    x0: &[f64],
    config: &SolverConfig,
    reference: Option<&[f64]>,
    stop: Option<StopRule<'_>>,
) -> Result<RunReport> {
    let e = triple.model().exponents();
    config.stepsize.validate(e.mu)?;
    let k = triple.constants();
    let params = config.stepsize;
    run("afbf", triple, x0, config, reference, stop, |x, sx| {
        afbf_core(triple, &k, x, sx, &params)
    })
}

/// One point of a sublinear envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopePoint {
    pub k: usize,
    pub observed: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinResidualEnvelope {
    pub k0: usize,
    pub eps_k0: f64,
    /// `(1 + √α_max) min_{k₀≤j<k₀+k} ‖x_j − p_j‖` against `ε_{k₀}/√k`.
    pub points: Vec<EnvelopePoint>,
}

impl MinResidualEnvelope {
    /// Largest `observed / bound` ratio (0/0 counts as 0).
    pub fn worst_ratio(&self) -> f64 {
        self.points
            .iter()
            .map(|p| safe_ratio(p.observed, p.bound))
            .fold(0.0, f64::max)
    }
}

/// Min-residual envelope over windows starting at iteration `k0`:
/// `(1 + √α_max) min_{k₀≤j≤k₀+k−1} ‖x_j − p_j‖ ≤ ε_{k₀}/√k` with
/// `ε_{k₀} = ‖x_{k₀} − z̄‖/√(1 − α_max)`.
pub fn min_residual_envelope(
    history: &[IterateRecord],
    k0: usize,
    alpha_max: f64,
    reference: &[f64],
) -> Result<MinResidualEnvelope> {
    let start = history
        .iter()
        .position(|r| r.k >= k0)
        .ok_or(Error::EmptySample)?;
    let first = &history[start];
    let eps = dist(&first.x, reference) / (1.0 - alpha_max).sqrt();
    let scale = 1.0 + alpha_max.sqrt();
    let mut running = f64::INFINITY;
    let points = history[start..]
        .iter()
        .map(|r| {
            running = running.min(r.x_minus_p);
            let k = r.k - first.k + 1;
            EnvelopePoint {
                k,
                observed: scale * running,
                bound: eps / (k as f64).sqrt(),
            }
        })
        .collect();
    Ok(MinResidualEnvelope {
        k0: first.k,
        eps_k0: eps,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformEnvelope {
    pub q: f64,
    /// `R = max_k ‖p_k − z̄‖` over the recorded history.
    pub radius: f64,
    /// `r = min{1 − α_max, γ_min ν R^{q−2}}`.
    pub r: f64,
    /// `r̄ = r / (2^{q−1} R^{q−2})`, used when `q > 2`.
    pub r_bar: Option<f64>,
    /// `‖x_k − z̄‖` against the envelope.
    pub points: Vec<EnvelopePoint>,
}

impl UniformEnvelope {
    pub fn holds(&self, slack: f64) -> bool {
        self.points.iter().all(|p| p.observed <= p.bound + slack)
    }
}

/// Rate envelopes for a uniformly pseudo-monotone inclusion with modulus `q`
/// and constant `ν`: geometric `(1 − r/2)^{k/2}` for `q ∈ [1, 2]`, and the
/// sublinear `‖x₀−z̄‖ / ((q−2)/2 · r̄ ‖x₀−z̄‖^{q−2} k + 1)^{1/(q−2)}` for `q > 2`.
pub fn rate_envelopes_uniform(
    history: &[IterateRecord],
    q: f64,
    nu: f64,
    gamma_min: f64,
    alpha_max: f64,
    reference: &[f64],
) -> Result<UniformEnvelope> {
    if !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("modulus q = {q} must be >= 1")));
    }
    if !(nu > 0.0 && gamma_min > 0.0) {
        return Err(Error::InvalidParameter("nu and gamma_min must be positive".into()));
    }
    let first = history.first().ok_or(Error::EmptySample)?;
    let gap0 = dist(&first.x, reference);
    let radius = history
        .iter()
        .map(|r| dist(&r.p, reference))
        .fold(0.0, f64::max);
    let rq = if radius > 0.0 { radius.powf(q - 2.0) } else { 0.0 };
    let r = if radius > 0.0 {
        (1.0 - alpha_max).min(gamma_min * nu * rq)
    } else {
        1.0 - alpha_max
    };
    let r_bar = (q > 2.0 && radius > 0.0).then(|| r / (2f64.powf(q - 1.0) * rq));
    let points = history
        .iter()
        .map(|rec| {
            let k = rec.k - first.k;
            let bound = match r_bar {
                Some(rb) => crate::verification::sublinear_envelope(gap0, rb, q, k)
                    .expect("q > 2 checked above"),
                None => (1.0 - r / 2.0).powf(k as f64 / 2.0) * gap0,
            };
            EnvelopePoint {
                k: rec.k,
                observed: dist(&rec.x, reference),
                bound,
            }
        })
        .collect();
    Ok(UniformEnvelope {
        q,
        radius,
        r,
        r_bar,
        points,
    })
}

/// Largest weak-Minty constant for which convergence is still guaranteed:
/// `ρ_max = 2^{−3/2}√α_min(1 − √α_max) / ((1 + √α_max)√(L_B² + R_a + R_b η^{θ−2} + R_c η^{β−2}))`
/// with `η = √(α_max/(2L_B²))`.
#[allow(clippy::too_many_arguments)]
pub fn weak_minty_rho_max(
    lipschitz_b: f64,
    r_a: f64,
    r_b: f64,
    r_c: f64,
    theta: f64,
    beta: f64,
    alpha_min: f64,
    alpha_max: f64,
) -> f64 {
    let eta = stepsize::choice1_ceiling(lipschitz_b, alpha_max);
    let den = (1.0 + alpha_max.sqrt())
        * (lipschitz_b * lipschitz_b + r_a + r_b * eta.powf(theta - 2.0) + r_c * eta.powf(beta - 2.0))
            .sqrt();
    2f64.powf(-1.5) * alpha_min.sqrt() * (1.0 - alpha_max.sqrt()) / den
}

/// `Σ ‖x_k − p_k‖²` bound `‖x₀ − z̄‖²/(1 − α_max)` from the Fejér inequality.
pub fn summability_bound(x0: &[f64], reference: &[f64], alpha_max: f64) -> f64 {
    norm_sq(&crate::linalg::sub(x0, reference)) / (1.0 - alpha_max)
}

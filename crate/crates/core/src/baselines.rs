//! Line-search forward-backward-forward baselines.
//!
//! Both methods take, at `x_k` with `s = (A+B)x_k`, the largest trial
//! `γ ∈ {σβʲ}` such that `p = J_{γC}(x_k − γs)` satisfies
//! `γ‖s − (A+B)p‖ ≤ θ‖x_k − p‖`, then update
//! `x_{k+1} = proj_{dom C}(p − γ((A+B)p − s))`.
//!
//! Tseng's method runs with `(θ, σ, β) = (0.995, 1, 0.5)`; the Thong–Vuong
//! variant with acceptance factor 0.995, initial stepsize 1 and reduction
//! ratio `l = 0.001`. Every trial costs one resolvent and one evaluation of
//! `A + B` and is counted in `line_search_evals`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::linalg::{dist, norm};
use crate::operators::{eval_sum, safe_ratio, OperatorTriple};
use crate::solver::{run, RunReport, SolverConfig, Step, StopRule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchParams {
    /// Acceptance factor in `]0, 1[`.
    pub theta: f64,
    /// First trial stepsize.
    pub sigma: f64,
    /// Backtracking ratio in `]0, 1[`.
    pub beta: f64,
    pub max_backtracks: usize,
    /// Start each search from the previous accepted stepsize instead of `σ`.
    #[serde(default)]
    pub warm_start: bool,
}

impl LineSearchParams {
    pub fn tseng() -> Self {
        Self {
            theta: 0.995,
            sigma: 1.0,
            beta: 0.5,
            max_backtracks: 60,
            warm_start: false,
        }
    }

    pub fn thong_vuong() -> Self {
        Self {
            theta: 0.995,
            sigma: 1.0,
            beta: 0.001,
            max_backtracks: 60,
            warm_start: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidParameter(format!("theta = {} outside ]0, 1[", self.theta)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter(format!("beta = {} outside ]0, 1[", self.beta)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma = {} must be positive", self.sigma)));
        }
        if self.max_backtracks == 0 {
            return Err(Error::InvalidParameter("max_backtracks must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of one backtracking search.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub gamma: f64,
    pub p: Vec<f64>,
    /// `(A+B)p` at the accepted trial.
    pub sp: Vec<f64>,
    pub trials: usize,
    /// No trial passed; the smallest one was kept.
    pub exhausted: bool,
}

/// Backtracking search at `x` with `sx = (A+B)x`, starting from `first`.
pub fn backtrack(
    triple: &dyn OperatorTriple,
    x: &[f64],
    sx: &[f64],
    ls: &LineSearchParams,
    first: f64,
) -> Result<LineSearchOutcome> {
    let mut gamma = first;
    let mut trials = 0;
    loop {
        let z: Vec<f64> = x.iter().zip(sx).map(|(xi, si)| xi - gamma * si).collect();
        let p = triple.resolvent(gamma, &z);
        ensure_dim(x.len(), p.len())?;
        ensure_finite(&p, "resolvent output")?;
        let sp = eval_sum(triple, &p)?;
        trials += 1;
        let accepted = gamma * dist(sx, &sp) <= ls.theta * dist(x, &p);
        let exhausted = trials >= ls.max_backtracks;
        if accepted || exhausted {
            return Ok(LineSearchOutcome {
                gamma,
                p,
                sp,
                trials,
                exhausted: !accepted,
            });
        }
        gamma *= ls.beta;
    }
}

fn line_search_run(
    name: &str,
    triple: &dyn OperatorTriple,
    x0: &[f64],
    config: &SolverConfig,
    ls: &LineSearchParams,
    reference: Option<&[f64]>,
    stop: Option<StopRule<'_>>,
) -> Result<RunReport> {
    ls.validate()?;
    let alpha = ls.theta * ls.theta;
    let mut first = ls.sigma;
    run(name, triple, x0, config, reference, stop, |x, sx| {
        let o = backtrack(triple, x, sx, ls, first)?;
        if ls.warm_start {
            first = o.gamma;
        }
        let g = o.gamma;
        let x_minus_p = dist(x, &o.p);
        let ds = dist(sx, &o.sp);
        let x_hat: Vec<f64> = o
            .p
            .iter()
            .zip(&o.sp)
            .zip(sx)
            .map(|((pi, spi), si)| pi - g * (spi - si))
            .collect();
        // u = (z − p)/γ + (A+B)p with z = x − γ(A+B)x
        let u: Vec<f64> = x
            .iter()
            .zip(&o.p)
            .zip(sx.iter().zip(&o.sp))
            .map(|((xi, pi), (si, spi))| (xi - pi) / g - si + spi)
            .collect();
        Ok(Step {
            x_next: triple.project(&x_hat),
            u_norm: norm(&u),
            gamma: g,
            gamma_bar: g,
            alpha,
            certificate: safe_ratio(g * g * ds * ds, alpha * x_minus_p * x_minus_p),
            x_minus_p,
            x_minus_xhat: dist(x, &x_hat),
            trials: o.trials,
            flagged: o.exhausted,
            p: o.p,
        })
    })
}

/// Tseng's FBF method with backtracking.
pub fn tseng_solve(
    triple: &dyn OperatorTriple,
    x0: &[f64],
    config: &SolverConfig,
    ls: &LineSearchParams,
    reference: Option<&[f64]>,
) -> Result<RunReport> {
    line_search_run("tseng", triple, x0, config, ls, reference, None)
}

/// Thong–Vuong modified Tseng method: same update, stepsizes `γ lᵐ`.
pub fn fbf_thovuo_solve(
    triple: &dyn OperatorTriple,
    x0: &[f64],
    config: &SolverConfig,
    ls: &LineSearchParams,
    reference: Option<&[f64]>,
) -> Result<RunReport> {
    line_search_run("fbf-thovuo", triple, x0, config, ls, reference, None)
}

/// Either baseline with a custom stop rule on `(p_k, ‖u_k‖)`.
pub fn line_search_solve_with_stop(
    name: &str,
    triple: &dyn OperatorTriple,
    x0: &[f64],
    config: &SolverConfig,
    ls: &LineSearchParams,
    reference: Option<&[f64]>,
    stop: StopRule<'_>,
) -> Result<RunReport> {
    line_search_run(name, triple, x0, config, ls, reference, Some(stop))
}

/// Solver selector shared by the benchmark front ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Afbf,
    Tseng,
    FbfThovuo,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Afbf, SolverKind::Tseng, SolverKind::FbfThovuo];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Afbf => "afbf",
            SolverKind::Tseng => "tseng",
            SolverKind::FbfThovuo => "fbf-thovuo",
        }
    }

    /// Line-search parameters used when none are configured.
    pub fn default_line_search(self) -> LineSearchParams {
        match self {
            SolverKind::FbfThovuo => LineSearchParams::thong_vuong(),
            _ => LineSearchParams::tseng(),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown solver '{s}'")))
    }
}

/// Runs `kind` from `x0`; `ls` is ignored by AFBF.
pub fn run_solver(
    kind: SolverKind,
    triple: &dyn OperatorTriple,
    x0: &[f64],
    config: &SolverConfig,
    ls: &LineSearchParams,
    reference: Option<&[f64]>,
    stop: Option<StopRule<'_>>,
) -> Result<RunReport> {
    match kind {
        SolverKind::Afbf => crate::solver::solve_with_stop(triple, x0, config, reference, stop),
        _ => line_search_run(kind.name(), triple, x0, config, ls, reference, stop),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::FnTriple;
    use crate::solver::RunStatus;

    fn unit_b() -> FnTriple {
        FnTriple::new(1).with_b(|x| vec![x[0]], 1.0)
    }

    #[test]
    fn hand_trace_accepts_half() {
        // γ = 1 lands on p = 0 with |x| > 0.995|x|; γ = 0.5 gives 0.25|x| ≤ 0.4975|x|.
        let t = unit_b();
        let o = backtrack(&t, &[2.0], &[2.0], &LineSearchParams::tseng(), 1.0).unwrap();
        assert_eq!(o.gamma, 0.5);
        assert_eq!(o.trials, 2);
        assert_eq!(o.p, vec![1.0]);
        assert!(!o.exhausted);
    }

    #[test]
    fn small_sigma_never_backtracks() {
        let t = FnTriple::new(2).with_b(|x| vec![3.0 * x[0], -x[1] + 3.0 * x[0]], 5.0);
        let ls = LineSearchParams {
            sigma: 0.9 / 5.0,
            ..LineSearchParams::tseng()
        };
        let cfg = SolverConfig {
            tol_residual: 1e-8,
            max_iters: 50,
            ..SolverConfig::default()
        };
        let r = tseng_solve(&t, &[1.0, 1.0], &cfg, &ls, None).unwrap();
        assert_eq!(r.line_search_evals, r.iterations + 1);
    }

    #[test]
    fn exhaustion_is_flagged() {
        let t = unit_b();
        let ls = LineSearchParams {
            max_backtracks: 1,
            ..LineSearchParams::tseng()
        };
        let o = backtrack(&t, &[1.0], &[1.0], &ls, 1.0).unwrap();
        assert!(o.exhausted);
        assert_eq!(o.trials, 1);
    }

    #[test]
    fn zero_operators_stop_in_one_step() {
        let t = FnTriple::new(2).with_normal_cone(|w: &[f64]| w.iter().map(|v| v.max(0.0)).collect());
        let r = fbf_thovuo_solve(
            &t,
            &[-1.0, 3.0],
            &SolverConfig::default(),
            &LineSearchParams::thong_vuong(),
            None,
        )
        .unwrap();
        assert_eq!(r.status, RunStatus::Converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.final_x, vec![0.0, 3.0]);
    }

    #[test]
    fn tseng_converges_on_ray() {
        let t = FnTriple::new(1)
            .with_b(|x| vec![x[0] + 1.0], 1.0)
            .with_normal_cone(|w: &[f64]| vec![w[0].max(0.0)]);
        let cfg = SolverConfig {
            tol_residual: 1e-8,
            ..SolverConfig::default()
        };
        let r = tseng_solve(&t, &[5.0], &cfg, &LineSearchParams::tseng(), None).unwrap();
        assert_eq!(r.status, RunStatus::Converged);
        assert!(r.final_x[0].abs() < 1e-8);
        assert!(r.line_search_evals > r.iterations);
    }

    #[test]
    fn solver_names_round_trip() {
        for k in SolverKind::ALL {
            assert_eq!(k.name().parse::<SolverKind>().unwrap(), k);
        }
        assert!("gurobi".parse::<SolverKind>().is_err());
    }

    #[test]
    fn rejects_bad_params() {
        let bad = LineSearchParams {
            beta: 1.0,
            ..LineSearchParams::tseng()
        };
        assert!(bad.validate().is_err());
    }
}

//! Independent oracles and certificate utilities: KKT residuals for QCQPs,
//! reference solves, brute-force active-set solvers and rate envelopes.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{dist, dot, norm};
use crate::operators::{eval_sum, OperatorTriple};
use crate::problems::QcqpInstance;
use crate::solver::{solve, IterateRecord, RunStatus, SolverConfig};

/// First-order optimality residuals of a QCQP primal-dual pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// Distance of `−∇ₓL(x, y)` to the normal cone of the primal box at `x`.
    pub stationarity_residual: f64,
    /// Largest constraint or box violation.
    pub primal_feasibility: f64,
    /// Largest negative part of an inequality dual.
    pub dual_feasibility: f64,
    /// `maxᵢ |yᵢ gᵢ(x)|` over inequalities.
    pub complementarity: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.stationarity_residual
            .max(self.primal_feasibility)
            .max(self.dual_feasibility)
            .max(self.complementarity)
    }
}

pub fn kkt_residual(inst: &QcqpInstance, x: &[f64], y: &[f64]) -> Result<KktReport> {
    ensure_dim(inst.n, x.len())?;
    ensure_dim(inst.m(), y.len())?;
    let mut grad = inst.q0.matvec(x);
    for (g, b) in grad.iter_mut().zip(&inst.b) {
        *g += b;
    }
    let mut complementarity = 0.0f64;
    let mut dual = 0.0f64;
    for (i, &yi) in y.iter().enumerate() {
        let (g, dg) = inst.constraint_value_grad(i, x);
        for (a, d) in grad.iter_mut().zip(&dg) {
            *a += yi * d;
        }
        if i < inst.m_bar {
            complementarity = complementarity.max((yi * g).abs());
            dual = dual.max(-yi) + 0.0;
        }
    }
    // dist(−g, N_[lo,hi](x)) coordinatewise
    let mut stat = 0.0;
    for ((&xi, gi), (lo, hi)) in x.iter().zip(&grad).zip(inst.bounds()) {
        let v = -gi;
        let r = if xi <= lo && xi >= hi {
            0.0
        } else if xi <= lo {
            v.max(0.0)
        } else if xi >= hi {
            (-v).max(0.0)
        } else {
            v.abs()
        };
        stat += r * r;
    }
    Ok(KktReport {
        stationarity_residual: f64::sqrt(stat),
        primal_feasibility: inst.primal_infeasibility(x),
        dual_feasibility: dual,
        complementarity,
    })
}

/// [`kkt_residual`] at a stacked solver point `(x, y)`.
pub fn kkt_at(inst: &QcqpInstance, z: &[f64]) -> Result<KktReport> {
    ensure_dim(inst.dim(), z.len())?;
    kkt_residual(inst, &z[..inst.n], &z[inst.n..])
}

/// `‖u‖` of one forward-backward probe at `z`: `p = J_{γC}(z − γSz)`,
/// `u = (z − γSz − p)/γ + Sp`. Zero exactly at zeros of `A + B + C`.
pub fn residual_norm_at(triple: &dyn OperatorTriple, z: &[f64], gamma: f64) -> Result<f64> {
    let sz = eval_sum(triple, z)?;
    let w: Vec<f64> = z.iter().zip(&sz).map(|(a, s)| a - gamma * s).collect();
    let p = triple.resolvent(gamma, &w);
    let sp = eval_sum(triple, &p)?;
    let u: Vec<f64> = w
        .iter()
        .zip(&p)
        .zip(&sp)
        .map(|((wi, pi), si)| (wi - pi) / gamma + si)
        .collect();
    Ok(norm(&u))
}

/// `‖u‖` tolerance of [`oracle_solve_small`].
pub const ORACLE_TOLERANCE: f64 = 1e-10;

/// Iteration cap of [`oracle_solve_small`].
pub const ORACLE_MAX_ITERS: usize = 10_000_000;

/// Reference solution: AFBF with Stepsize Choice 1 to `‖u‖ ≤ 1e−10`.
pub fn oracle_solve_small(triple: &dyn OperatorTriple, x0: &[f64]) -> Result<Vec<f64>> {
    let config = SolverConfig {
        tol_residual: ORACLE_TOLERANCE,
        max_iters: ORACLE_MAX_ITERS,
        ..SolverConfig::default()
    };
    let r = solve(triple, x0, &config, None)?;
    match r.status {
        RunStatus::Converged => Ok(r.final_x),
        s => Err(Error::NotConverged(format!(
            "status {s:?} after {} iterations, ‖u‖ = {:e}{}",
            r.iterations + 1,
            r.final_u_norm,
            r.error.map(|e| format!(" ({e})")).unwrap_or_default()
        ))),
    }
}

/// Least-squares fit of `log gap_k` against `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LinearRate {
    Fitted {
        slope: f64,
        /// `exp(slope)`: per-iteration contraction factor.
        factor: f64,
        points: usize,
    },
    /// Some gap is exactly zero; the first such iteration.
    ExactConvergence { k: usize },
}

/// Minimum number of gaps for a rate fit.
pub const MIN_RATE_POINTS: usize = 10;

pub fn fit_linear_rate(gaps: &[(usize, f64)]) -> Result<LinearRate> {
    if let Some(&(k, _)) = gaps.iter().find(|(_, g)| *g == 0.0) {
        return Ok(LinearRate::ExactConvergence { k });
    }
    if gaps.len() < MIN_RATE_POINTS {
        return Err(Error::InvalidParameter(format!(
            "rate fit needs at least {MIN_RATE_POINTS} gaps, got {}",
            gaps.len()
        )));
    }
    if gaps.iter().any(|(_, g)| !(*g > 0.0 && g.is_finite())) {
        return Err(Error::NonFinite("gap"));
    }
    let n = gaps.len() as f64;
    let mk = gaps.iter().map(|(k, _)| *k as f64).sum::<f64>() / n;
    let ml = gaps.iter().map(|(_, g)| g.ln()).sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for &(k, g) in gaps {
        let dk = k as f64 - mk;
        sxy += dk * (g.ln() - ml);
        sxx += dk * dk;
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("gaps share one iteration index".into()));
    }
    let slope = sxy / sxx;
    Ok(LinearRate::Fitted {
        slope,
        factor: slope.exp(),
        points: gaps.len(),
    })
}

/// `(k, ‖x_k − z̄‖)` pairs of a recorded history.
pub fn fejer_gaps(history: &[IterateRecord], reference: &[f64]) -> Vec<(usize, f64)> {
    history.iter().map(|r| (r.k, dist(&r.x, reference))).collect()
}

/// Sublinear envelope on `‖x_k − z̄‖` under uniform pseudo-monotonicity with
/// modulus `q > 2`: `δ₀ / ((q−2)/2 · r̄ δ₀^{q−2} k + 1)^{1/(q−2)}`.
pub fn sublinear_envelope(delta0: f64, rbar: f64, q: f64, k: usize) -> Result<f64> {
    if !(q > 2.0) {
        return Err(Error::InvalidParameter(format!("q = {q} must exceed 2")));
    }
    if !(rbar > 0.0) {
        return Err(Error::InvalidParameter(format!("rbar = {rbar} must be positive")));
    }
    let z = q - 2.0;
    Ok(delta0 / (0.5 * z * rbar * delta0.powf(z) * k as f64 + 1.0).powf(1.0 / z))
}

/// Bound `Δ₀/(ζΔ₀^ζ k + 1)^{1/ζ}` for positive sequences with
/// `Δ_{k+1} ≤ Δ_k − Δ_k^{ζ+1}`.
pub fn recurrence_envelope(delta0: f64, zeta: f64, k: usize) -> Result<f64> {
    if !(zeta > 0.0) {
        return Err(Error::InvalidParameter(format!("zeta = {zeta} must be positive")));
    }
    Ok(delta0 / (zeta * delta0.powf(zeta) * k as f64 + 1.0).powf(1.0 / zeta))
}

/// Iteration budget for `‖u_k‖ ≤ ε` with stepsizes bounded below by
/// `γ_min`: `(1/ε²)(1 + √α)²/(γ_min²(1 − α)) ‖x₀ − z̄‖²`.
pub fn residual_budget(epsilon: f64, alpha_max: f64, gamma_min: f64, dist0: f64) -> f64 {
    (1.0 + alpha_max.sqrt()).powi(2) / (gamma_min * gamma_min * (1.0 - alpha_max)) * dist0 * dist0
        / (epsilon * epsilon)
}

/// Whether `v ∈ C(p)` up to `tol`, via `J_C(p + v) = p`.
pub fn in_graph_of_c(triple: &dyn OperatorTriple, p: &[f64], v: &[f64], tol: f64) -> bool {
    let w: Vec<f64> = p.iter().zip(v).map(|(a, b)| a + b).collect();
    dist(&triple.resolvent(1.0, &w), p) <= tol
}

/// Subsets of `0..n` as bit masks, smallest first.
fn subsets(n: usize) -> Result<impl Iterator<Item = u32>> {
    if n > 20 {
        return Err(Error::InvalidParameter(format!("active-set enumeration over {n} items")));
    }
    Ok(0..(1u32 << n))
}

/// `argmin ½xᵀQx + bᵀx` over `x ≥ 0` by enumerating active sets. `Q` is
/// dense row-major and should be positive definite; `n ≤ 20`.
pub fn nonneg_qp_active_set(n: usize, q: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    ensure_dim(n * n, q.len())?;
    ensure_dim(n, b.len())?;
    let qm = DMatrix::from_row_slice(n, n, q);
    let tol = 1e-10 * (1.0 + qm.norm() + norm(b));
    for mask in subsets(n)? {
        let free: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
        let mut x = vec![0.0; n];
        if !free.is_empty() {
            let sub = DMatrix::from_fn(free.len(), free.len(), |r, c| qm[(free[r], free[c])]);
            let rhs = DVector::from_iterator(free.len(), free.iter().map(|&i| -b[i]));
            let Some(sol) = sub.lu().solve(&rhs) else { continue };
            for (k, &i) in free.iter().enumerate() {
                x[i] = sol[k];
            }
        }
        if x.iter().any(|&v| v < -tol) {
            continue;
        }
        let grad = &qm * DVector::from_column_slice(&x) + DVector::from_column_slice(b);
        if (0..n).all(|i| free.contains(&i) || grad[i] >= -tol) {
            return Ok(x.into_iter().map(|v| v.max(0.0)).collect());
        }
    }
    Err(Error::NotConverged("no active set satisfies the KKT conditions".into()))
}

/// Euclidean projection of `w` onto `{x : aᵢᵀx ≤ cᵢ}` by enumerating
/// active sets; at most 20 halfspaces.
pub fn polyhedral_projection(w: &[f64], a: &[Vec<f64>], c: &[f64]) -> Result<Vec<f64>> {
    ensure_dim(a.len(), c.len())?;
    let n = w.len();
    let scale = 1.0 + norm(w) + c.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tol = 1e-10 * scale;
    let feasible = |x: &[f64]| a.iter().zip(c).all(|(ai, ci)| dot(ai, x) <= ci + tol);
    for mask in subsets(a.len())? {
        let act: Vec<usize> = (0..a.len()).filter(|i| mask & (1 << i) != 0).collect();
        let x = if act.is_empty() {
            w.to_vec()
        } else {
            // x = w − A_Sᵀλ with A_S A_Sᵀ λ = A_S w − c_S
            let gram = DMatrix::from_fn(act.len(), act.len(), |r, s| dot(&a[act[r]], &a[act[s]]));
            let rhs = DVector::from_iterator(act.len(), act.iter().map(|&i| dot(&a[i], w) - c[i]));
            let Some(lam) = gram.lu().solve(&rhs) else { continue };
            if lam.iter().any(|&l| l < -tol) {
                continue;
            }
            let mut x = w.to_vec();
            for (k, &i) in act.iter().enumerate() {
                for j in 0..n {
                    x[j] -= lam[k] * a[i][j];
                }
            }
            x
        };
        if feasible(&x) {
            return Ok(x);
        }
    }
    Err(Error::NotConverged("polyhedron appears empty".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;
    use crate::operators::FnTriple;
    use crate::problems::Constraint;

    fn unconstrained(q: Vec<f64>, b: Vec<f64>, n: usize) -> QcqpInstance {
        QcqpInstance {
            n,
            m_bar: 0,
            q0: SymMatrix::dense(n, q).unwrap(),
            b,
            constraints: vec![],
            nonneg_primal: false,
            free_indices: vec![],
            upper_bound: None,
            start: None,
        }
    }

    #[test]
    fn kkt_at_linear_solve() {
        let q = vec![4.0, 1.0, 1.0, 3.0];
        let b = vec![1.0, -2.0];
        let x = DMatrix::from_row_slice(2, 2, &q)
            .lu()
            .solve(&DVector::from_vec(vec![-1.0, 2.0]))
            .unwrap();
        let inst = unconstrained(q, b, 2);
        let r = kkt_residual(&inst, x.as_slice(), &[]).unwrap();
        assert!(r.max() <= 1e-10, "{r:?}");
    }

    #[test]
    fn kkt_origin_stationarity() {
        let mut inst = unconstrained(vec![1.0, 0.0, 0.0, 1.0], vec![2.0, -3.0], 2);
        inst.nonneg_primal = true;
        inst.m_bar = 1;
        inst.constraints = vec![Constraint {
            q: Some(SymMatrix::identity(2, 1.0)),
            l: vec![0.0, 0.0],
            r: 0.5,
        }];
        let r = kkt_residual(&inst, &[0.0, 0.0], &[0.0]).unwrap();
        assert_eq!(r.primal_feasibility, 0.0);
        // dist((−2, 3), (−∞, 0]²) = 3
        assert_eq!(r.stationarity_residual, 3.0);
        inst.b = vec![2.0, 3.0];
        assert_eq!(kkt_residual(&inst, &[0.0, 0.0], &[0.0]).unwrap().stationarity_residual, 0.0);
    }

    #[test]
    fn oracle_on_toys() {
        let t = FnTriple::new(1).with_b(|x| vec![x[0]], 1.0);
        assert!(oracle_solve_small(&t, &[0.5]).unwrap()[0].abs() < 1e-9);
        let t = FnTriple::new(2).with_b(|x| vec![x[0] - 3.0, x[1] + 1.0], 1.0);
        let z = oracle_solve_small(&t, &[0.0, 0.0]).unwrap();
        assert!(dist(&z, &[3.0, -1.0]) < 1e-9);
        assert!(residual_norm_at(&t, &z, 1.0).unwrap() <= 1e-9);
    }

    #[test]
    fn box_qp_matches_enumeration() {
        // min ½xᵀQx + bᵀx, x ≥ 0 with Q = [[2, 0.5], [0.5, 1]], b = (−1, 1):
        // x₂ = 0 active, x₁ = 1/2, ∂₂ = 0.25 + 1 > 0
        let q = vec![2.0, 0.5, 0.5, 1.0];
        let b = vec![-1.0, 1.0];
        let x = nonneg_qp_active_set(2, &q, &b).unwrap();
        assert!(dist(&x, &[0.5, 0.0]) < 1e-14);
        let mut inst = unconstrained(q, b, 2);
        inst.nonneg_primal = true;
        let t = inst.encode().unwrap();
        let z = oracle_solve_small(&t, &[1.0, 1.0]).unwrap();
        assert!(dist(&z, &x) < 1e-9);
    }

    #[test]
    fn geometric_rate() {
        let gaps: Vec<(usize, f64)> = (0..20).map(|k| (k, 2f64.powi(-(k as i32)))).collect();
        match fit_linear_rate(&gaps).unwrap() {
            LinearRate::Fitted { slope, .. } => assert!((slope + 2f64.ln()).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let mut with_zero = gaps.clone();
        with_zero[7].1 = 0.0;
        assert_eq!(fit_linear_rate(&with_zero).unwrap(), LinearRate::ExactConvergence { k: 7 });
        assert!(fit_linear_rate(&gaps[..5]).is_err());
    }

    #[test]
    fn envelopes() {
        assert_eq!(sublinear_envelope(2.0, 0.3, 4.0, 0).unwrap(), 2.0);
        assert_eq!(recurrence_envelope(1.0, 1.0, 3).unwrap(), 0.25);
        assert!(sublinear_envelope(1.0, 1.0, 2.0, 3).is_err());
        // q = 4, r̄ = 1: (q−2)/2 · r̄ = 1 so the uniform-rate form gives 1/(k+1)^{1/2}
        assert!((sublinear_envelope(1.0, 1.0, 4.0, 3).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn recurrence_dominated() {
        for zeta in [0.5, 1.0, 2.0] {
            let mut d: f64 = 0.9;
            let d0 = d;
            for k in 0..=1000 {
                assert!(d <= recurrence_envelope(d0, zeta, k).unwrap() * (1.0 + 1e-12));
                d -= d.powf(zeta + 1.0);
            }
        }
    }

    #[test]
    fn projection_oracle() {
        let a = vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]];
        let c = vec![0.0, 0.0, 1.0];
        let x = polyhedral_projection(&[2.0, 2.0], &a, &c).unwrap();
        assert!(dist(&x, &[0.5, 0.5]) < 1e-14);
        let x = polyhedral_projection(&[-1.0, 0.3], &a, &c).unwrap();
        assert!(dist(&x, &[0.0, 0.3]) < 1e-14);
    }

    #[test]
    fn normal_cone_membership() {
        let t = FnTriple::new(2).with_normal_cone(|w: &[f64]| w.iter().map(|v| v.max(0.0)).collect());
        assert!(in_graph_of_c(&t, &[0.0, 1.0], &[-2.0, 0.0], 1e-14));
        assert!(!in_graph_of_c(&t, &[0.0, 1.0], &[-2.0, 0.5], 1e-14));
    }
}

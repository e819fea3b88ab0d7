//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::time::Instant;

use afbf::baselines::{tseng_solve, LineSearchParams};
use afbf::linalg::dist;
use afbf::operators::{check_lipschitz_model, FnModel, FnTriple, OperatorTriple};
use afbf::problems::svm::{
    build_single_kernel_qp, build_svm_qcqp, composite_measure, reference_solve, sigma_grid,
    solve_composite, standardize, SINGLE_KERNEL_SIGMA2,
};
use afbf::problems::{
    gen_linear_fractional, gen_quadratic_fractional, gen_synthetic_qcqp, FractionalInstance,
    FractionalVariant, HolderToy, Instance, QcqpInstance, SvmDataset, SyntheticQcqp,
};
use afbf::solver::{rate_envelopes_uniform, solve, RunReport, RunStatus, SolverConfig};
use afbf::stepsize::{choice1_closed_form, choice1_from_coefficients};
use afbf::verification::{
    fejer_gaps, fit_linear_rate, kkt_at, oracle_solve_small, residual_budget, LinearRate,
};
use afbf::{Coefficients, Exponents, StepsizeParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Bisection on `(L_B² + a)γ² + b d^{θ−2}γ^θ + c d^{β−2}γ^β − α/2`.
fn bisection_root(lb: f64, k: Coefficients, e: Exponents, d: f64, alpha: f64) -> f64 {
    let f = |g: f64| {
        (lb * lb + k.a) * g * g + k.b * d.powf(e.theta - 2.0) * g.powf(e.theta)
            + k.c * d.powf(e.beta - 2.0) * g.powf(e.beta)
            - alpha / 2.0
    };
    let (mut lo, mut hi) = (0.0, (alpha / 2.0).sqrt() / lb);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_residual = 0.0f64;
    let mut worst_closed = 0.0f64;
    for i in 0..1000 {
        let lb = 10f64.powf(rng.random_range(-2.0..2.0));
        let k = Coefficients {
            a: rng.random_range(0.0..10.0),
            b: rng.random_range(0.0..10.0),
            c: rng.random_range(0.0..10.0),
        };
        let e = Exponents::new(
            2.0,
            if rng.random_bool(0.5) { 2.0 } else { 4.0 },
            if rng.random_bool(0.5) { 4.0 } else { 6.0 },
        )
        .map_err(err)?;
        let d = 10f64.powf(rng.random_range(-3.0..2.0));
        let alpha = rng.random_range(0.05..0.99);
        let r = choice1_from_coefficients(lb, k, e, d, alpha).map_err(err)?;
        let g = r.gamma_bar;
        let residual = (lb * lb + k.a) * g * g
            + k.b * d.powf(e.theta - 2.0) * g.powf(e.theta)
            + k.c * d.powf(e.beta - 2.0) * g.powf(e.beta)
            - alpha / 2.0;
        worst_residual = worst_residual.max(residual.abs() / alpha);
        if g.is_nan() || g >= (alpha / (2.0 * lb * lb)).sqrt() {
            return Err(format!("set {i}: γ̄ = {g:e} not below the ceiling"));
        }
        // θ = 4, c = 0 family: closed form against bisection
        let k4 = Coefficients { c: 0.0, ..k };
        let e4 = Exponents::new(2.0, 4.0, 4.0).map_err(err)?;
        let closed = choice1_closed_form(lb, k4.a, k4.b, d, alpha);
        let bis = bisection_root(lb, k4, e4, d, alpha);
        worst_closed = worst_closed.max((closed - bis).abs() / bis);
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst_residual <= 1e-10 && worst_closed <= 1e-10 && secs < 5.0,
        format!(
            "max |residual|/α = {worst_residual:.2e}, closed-form vs bisection {worst_closed:.2e}, {secs:.2}s"
        ),
    )
}

fn qcqp(n: usize, m: usize, seed: u64) -> Result<QcqpInstance, String> {
    gen_synthetic_qcqp(&SyntheticQcqp::new(n, n, m), seed).map_err(err)
}

fn start_of(inst: &QcqpInstance) -> Vec<f64> {
    inst.start.clone().expect("generated instances carry a start")
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut iters = 0;
    for seed in 0..10 {
        let inst = qcqp(50, 5, seed)?;
        let t = inst.encode().map_err(err)?;
        let cfg = SolverConfig {
            tol_residual: 1e-6,
            max_iters: 1_000_000,
            ..SolverConfig::default()
        };
        let r = solve(&t, &start_of(&inst), &cfg, None).map_err(err)?;
        if r.status != RunStatus::Converged {
            return Err(format!("seed {seed}: {:?}", r.status));
        }
        worst = worst.max(r.diagnostics.max_certificate);
        iters += r.iterations + 1;
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1.0 + 1e-9 && secs < 30.0,
        format!("max certificate {worst:.6} over {iters} iterations, {secs:.2}s"),
    )
}

/// `f(x) = ηdᵀx + (ζdᵀx + h₀)/(dᵀx + d₀)` with `h₀ ≥ ζd₀`, pseudo-convex on `D`.
fn aligned_linear_fractional(n: usize, seed: u64) -> Result<FractionalInstance, String> {
    let base = gen_linear_fractional(n, 1.0, seed).map_err(err)?;
    let zeta = 0.5;
    let h0 = zeta * base.d0 + 1.0 + base.h0.abs();
    Ok(FractionalInstance {
        variant: FractionalVariant::LinearFractional,
        h: base.d.iter().map(|v| zeta * v).collect(),
        h0,
        r: Some(base.d.iter().map(|v| 0.1 * v).collect()),
        ..base
    })
}

struct ReferencedRun {
    label: String,
    report: RunReport,
}

fn referenced_run(
    label: String,
    t: &dyn OperatorTriple,
    x0: &[f64],
    tol: f64,
) -> Result<ReferencedRun, String> {
    let z = oracle_solve_small(t, x0).map_err(|e| format!("{label}: {e}"))?;
    let cfg = SolverConfig {
        tol_residual: tol,
        max_iters: 5_000_000,
        ..SolverConfig::default()
    };
    let report = solve(t, x0, &cfg, Some(&z)).map_err(err)?;
    if report.status != RunStatus::Converged {
        return Err(format!("{label}: {:?}", report.status));
    }
    Ok(ReferencedRun { label, report })
}

fn fejer_runs() -> Result<Vec<ReferencedRun>, String> {
    let mut runs = Vec::new();
    for seed in 0..10 {
        let inst = qcqp(50, 5, seed)?;
        let t = inst.encode().map_err(err)?;
        runs.push(referenced_run(format!("qcqp seed {seed}"), &t, &start_of(&inst), 1e-6)?);
    }
    for seed in 0..3 {
        let inst = gen_quadratic_fractional(10, seed).map_err(err)?;
        let t = inst.encode().map_err(err)?;
        let x0 = inst.start.clone().unwrap();
        runs.push(referenced_run(format!("quadratic fractional seed {seed}"), &t, &x0, 1e-6)?);
        let inst = aligned_linear_fractional(10, seed)?;
        let t = inst.encode().map_err(err)?;
        let x0 = inst.start.clone().unwrap();
        runs.push(referenced_run(format!("linear fractional seed {seed}"), &t, &x0, 1e-6)?);
    }
    Ok(runs)
}

fn criterion_3(runs: &[ReferencedRun]) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut label = String::new();
    for r in runs {
        let inc = r.report.diagnostics.max_fejer_increase.unwrap_or(0.0);
        if inc > worst {
            worst = inc;
            label.clone_from(&r.label);
        }
    }
    check(
        worst <= 1e-12,
        format!("max ‖x_(k+1) − z̄‖ − ‖x_k − z̄‖ = {worst:.2e} ({label}) over {} runs", runs.len()),
    )
}

fn desk_instance() -> Result<QcqpInstance, String> {
    gen_synthetic_qcqp(&SyntheticQcqp::new(100, 100, 10).strongly_convex(true), 0).map_err(err)
}

fn criterion_4() -> Outcome {
    let inst = desk_instance()?;
    let t = inst.encode().map_err(err)?;
    let x0 = start_of(&inst);
    let start = Instant::now();
    let cfg = SolverConfig {
        tol_residual: 1e-2,
        max_iters: 100_000,
        ..SolverConfig::default()
    };
    let coarse = solve(&t, &x0, &cfg, None).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    let cfg = SolverConfig {
        tol_residual: 1e-6,
        max_iters: 10_000_000,
        ..SolverConfig::default()
    };
    let fine = solve(&t, &x0, &cfg, None).map_err(err)?;
    check(
        coarse.status == RunStatus::Converged && secs < 60.0 && fine.status == RunStatus::Converged,
        format!(
            "1e-2: {:?} at k = {} in {secs:.2}s; 1e-6: {:?} at k = {}",
            coarse.status, coarse.iterations, fine.status, fine.iterations
        ),
    )
}

fn criterion_5() -> Outcome {
    let cfg = SolverConfig {
        tol_residual: 1e-4,
        max_iters: 1_000_000,
        ..SolverConfig::default()
    };
    let mut lines = Vec::new();
    let mut ok = true;
    let mut instances = vec![("desk n=100".to_string(), desk_instance()?)];
    for seed in 0..3 {
        instances.push((format!("n=50 seed {seed}"), qcqp(50, 5, seed)?));
    }
    for (label, inst) in &instances {
        let t = inst.encode().map_err(err)?;
        let x0 = start_of(inst);
        let a = solve(&t, &x0, &cfg, None).map_err(err)?;
        let b = tseng_solve(&t, &x0, &cfg, &LineSearchParams::tseng(), None).map_err(err)?;
        let ka = kkt_at(inst, &a.final_x).map_err(err)?.max();
        let kb = kkt_at(inst, &b.final_x).map_err(err)?.max();
        let good = a.status == RunStatus::Converged
            && b.status == RunStatus::Converged
            && a.line_search_evals == 0
            && b.line_search_evals > b.iterations
            && ka <= 1e-3
            && kb <= 1e-3;
        ok &= good;
        lines.push(format!(
            "{label}: afbf ITER {} LSE {} KKT {ka:.1e} | tseng ITER {} LSE {} KKT {kb:.1e}",
            a.iterations, a.line_search_evals, b.iterations, b.line_search_evals
        ));
    }
    check(ok, lines.join("; "))
}

fn criterion_6() -> Outcome {
    let nu = 2.0;
    let t = FnTriple::new(1).with_b(|x| vec![x[0]], 1.0).with_model(FnModel::constant(
        Exponents::new(2.0, 2.0, 2.0).map_err(err)?,
        Coefficients::default(),
    ));
    let cfg = SolverConfig {
        tol_residual: 1e-12,
        record_history: true,
        ..SolverConfig::default()
    };
    let z = [0.0];
    let r = solve(&t, &[1.0], &cfg, Some(&z)).map_err(err)?;
    let env = rate_envelopes_uniform(
        &r.history,
        2.0,
        nu,
        r.diagnostics.gamma_min,
        cfg.stepsize.alpha_max,
        &z,
    )
    .map_err(err)?;
    let theory = (1.0 - env.r / 2.0).sqrt();
    let gaps: Vec<(usize, f64)> = fejer_gaps(&r.history, &z).into_iter().filter(|g| g.1 > 0.0).collect();
    match fit_linear_rate(&gaps).map_err(err)? {
        LinearRate::Fitted { factor, points, .. } => check(
            factor <= theory + 1e-6,
            format!("fitted factor {factor:.6} over {points} gaps ≤ theoretical {theory:.6}"),
        ),
        LinearRate::ExactConvergence { k } => Err(format!("exact convergence at k = {k}")),
    }
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let eps = 1e-2;
    let toy = HolderToy::new(0.5).map_err(err)?;
    let cfg = SolverConfig {
        stepsize: StepsizeParams::choice2(eps),
        tol_residual: eps,
        max_iters: 10_000_000,
        ..SolverConfig::default()
    };
    let x0 = [0.5];
    let r = solve(&toy, &x0, &cfg, None).map_err(err)?;
    let budget = residual_budget(eps, cfg.stepsize.alpha_max, r.diagnostics.gamma_min, dist(&x0, &[0.0]));
    let secs = start.elapsed().as_secs_f64();
    check(
        r.status == RunStatus::Converged && (r.iterations as f64) <= budget && secs < 10.0,
        format!(
            "‖u‖ ≤ {eps} first at k = {}, budget {budget:.3e} with γ_min = {:.3e}, {secs:.3}s",
            r.iterations, r.diagnostics.gamma_min
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let inst = qcqp(20, 4, 8)?;
    let t = inst.encode().map_err(err)?;
    let dim = inst.dim();
    let q = check_lipschitz_model(
        &t,
        || {
            let scale = 10f64.powf(rng.random_range(-3.0..1.0));
            let z1: Vec<f64> = t.project(&(0..dim).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<_>>());
            let z2: Vec<f64> =
                t.project(&z1.iter().map(|v| v + scale * rng.random_range(-1.0..1.0)).collect::<Vec<_>>());
            (z1, z2)
        },
        1000,
    )
    .map_err(err)?;
    let frac = gen_linear_fractional(20, 1.0, 8).map_err(err)?;
    let ft = frac.encode().map_err(err)?;
    let f = check_lipschitz_model(
        &ft,
        || {
            let scale = 10f64.powf(rng.random_range(-3.0..1.0));
            let z1 = ft.project(&(0..20).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<_>>());
            let z2 = ft.project(&z1.iter().map(|v| v + scale * rng.random_range(-1.0..1.0)).collect::<Vec<_>>());
            (z1, z2)
        },
        1000,
    )
    .map_err(err)?;
    check(
        q.worst_ratio <= 1.0 && f.worst_ratio <= 1.0,
        format!("QCQP worst ratio {:.3e}, linear fractional {:.3e} (10³ pairs each)", q.worst_ratio, f.worst_ratio),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let data = SvmDataset::toy_separable();
    let (train, test) = data.split(0.8, 0).map_err(err)?;
    let (train, test) = standardize(&train, &test);
    let cfg = SolverConfig {
        max_iters: 2_000_000,
        ..SolverConfig::default()
    };
    let ls = afbf::problems::svm::svm_line_search();

    let svm = build_svm_qcqp(&train, &sigma_grid(3, 0.1, 10.0).map_err(err)?, 1.0).map_err(err)?;
    let pre = reference_solve(&svm.instance, 5_000_000).map_err(err)?;
    let f_star = svm.instance.objective(&pre.final_x[..svm.instance.n]);
    let r = solve_composite(&svm.instance, afbf::baselines::SolverKind::Afbf, &cfg, &ls, f_star, 1e-4)
        .map_err(err)?;
    let measure = composite_measure(&svm.instance, &r.final_x[..svm.instance.n], f_star);
    let kkt = kkt_at(&svm.instance, &r.final_x).map_err(err)?;
    let tsa = svm.model(&train, &r.final_x).accuracy(&test).unwrap_or(f64::NAN);

    let single = build_single_kernel_qp(&train, SINGLE_KERNEL_SIGMA2, 1.0).map_err(err)?;
    let pre0 = reference_solve(&single.instance, 5_000_000).map_err(err)?;
    let f0 = single.instance.objective(&pre0.final_x[..single.instance.n]);
    let r0 = solve_composite(&single.instance, afbf::baselines::SolverKind::Afbf, &cfg, &ls, f0, 1e-4)
        .map_err(err)?;
    let tsa0 = single.model(&train, &r0.final_x).accuracy(&test).unwrap_or(f64::NAN);
    let secs = start.elapsed().as_secs_f64();
    check(
        r.status == RunStatus::Converged
            && measure <= 1e-4
            && kkt.complementarity <= 1e-3
            && tsa == 1.0
            && tsa0.is_finite()
            && secs < 30.0,
        format!(
            "composite {measure:.1e} at k = {}, |y g| ≤ {:.1e}, TSA = {tsa}, TSA0 = {tsa0}, {secs:.2}s",
            r.iterations, kkt.complementarity
        ),
    )
}

fn criterion_10(runs: &[ReferencedRun]) -> Outcome {
    let mut worst = 0.0f64;
    for r in runs {
        let ratio = r.report.diagnostics.max_sublinear_ratio.ok_or("no reference")?;
        worst = worst.max(ratio);
    }
    check(
        worst <= 1.0,
        format!("max √k·min_(j<k)‖x_j − x̂_j‖/ε₀ = {worst:.3e} over {} converged runs", runs.len()),
    )
}

fn criterion_11() -> Outcome {
    let dir = std::env::temp_dir().join(format!("afbf-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(err)?;
    let path = dir.join("instance.json");
    Instance::Qcqp(qcqp(40, 4, 11)?).save(&path).map_err(err)?;
    let cfg = SolverConfig {
        tol_residual: 1e-6,
        record_history: true,
        ..SolverConfig::default()
    };
    let run = || -> Result<String, String> {
        let inst = Instance::load(&path).map_err(err)?;
        let t = inst.encode().map_err(err)?;
        let r = solve(t.as_ref(), &inst.start(), &cfg, None).map_err(err)?;
        serde_json::to_string(&r.without_timing()).map_err(err)
    };
    let (a, b) = (run()?, run()?);
    std::fs::remove_dir_all(&dir).ok();
    check(a == b, format!("{} report bytes, identical = {}", a.len(), a == b))
}

fn main() {
    let runs = fejer_runs();
    let with_runs = |f: fn(&[ReferencedRun]) -> Outcome| match &runs {
        Ok(r) => f(r),
        Err(e) => Err(format!("reference runs failed: {e}")),
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("stepsize correctness", criterion_1()),
        ("certificate on every iteration", criterion_2()),
        ("Fejér monotonicity", with_runs(criterion_3)),
        ("desk-scale convergence", criterion_4()),
        ("baseline parity", criterion_5()),
        ("linear rate", criterion_6()),
        ("μ < 2 path", criterion_7()),
        ("generalized Lipschitz models", criterion_8()),
        ("SVM pipeline", criterion_9()),
        ("sublinear min-residual", with_runs(criterion_10)),
        ("determinism", criterion_11()),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(d) => println!("PASS {:>2} {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}


use std::path::PathBuf;
use std::time::Instant;

use afbf::baselines::SolverKind;
use afbf::problems::svm::{
    build_single_kernel_qp, build_svm_qcqp, composite_measure, reference_solve, sigma_grid,
    solve_composite, standardize, svm_line_search, SINGLE_KERNEL_SIGMA2,
};
use afbf::problems::{QcqpInstance, SvmDataset};
use afbf::solver::{RunReport, SolverConfig};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::common::{output_path, parse_solver, status_name, sub_seed, write_json};
use crate::error::{CliError, CliResult};

/// Duals at or below this are reported as inactive.
pub const DUAL_REPORT_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Args)]
pub struct SvmArgs {
    /// CSV with a header row and a `label` column; the bundled toy set when omitted.
    #[arg(long)]
    pub data: Option<PathBuf>,

    /// Number of Gaussian kernels m.
    #[arg(long, default_value_t = 3)]
    pub kernels: usize,
    #[arg(long, default_value_t = 0.1)]
    pub sigma_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub sigma_max: f64,

    /// Margin parameter C.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,

    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,

    /// Stop once max(|f − f*|, |lᵀx|, max(0, gᵢ)) ≤ tol.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,

    #[arg(long, default_value_t = 2_000_000)]
    pub max_iters: usize,

    #[arg(long, default_value = "afbf", value_parser = parse_solver)]
    pub solver: SolverKind,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDual {
    pub sigma2: f64,
    pub dual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmRun {
    pub status: String,
    pub iter: usize,
    pub cpu: f64,
    pub lse: usize,
    pub f_star: f64,
    pub objective: f64,
    pub composite: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmReport {
    pub dataset: String,
    pub n_train: usize,
    pub n_test: usize,
    pub solver: SolverKind,
    pub sigmas: Vec<f64>,
    /// Testing-set accuracy of the multiple-kernel classifier.
    pub tsa: Option<f64>,
    /// Testing-set accuracy of the single-kernel classifier with σ² = 7.
    pub tsa0: Option<f64>,
    /// Kernels whose dual exceeds the report threshold.
    pub active: Vec<KernelDual>,
    pub multi_kernel: SvmRun,
    pub single_kernel: SvmRun,
    pub wall_time_seconds: f64,
}

fn composite_run(
    inst: &QcqpInstance,
    kind: SolverKind,
    config: &SolverConfig,
    tol: f64,
) -> CliResult<(RunReport, SvmRun)> {
    let pre = reference_solve(inst, 10 * config.max_iters)?;
    if pre.status != afbf::RunStatus::Converged {
        return Err(CliError::Solver(format!(
            "f* pre-solve stopped with {} at ‖u‖ = {:e}",
            status_name(pre.status),
            pre.final_u_norm
        )));
    }
    let f_star = inst.objective(&pre.final_x[..inst.n]);
    let r = solve_composite(inst, kind, config, &svm_line_search(), f_star, tol)?;
    let x = &r.final_x[..inst.n];
    let run = SvmRun {
        status: status_name(r.status).into(),
        iter: r.iterations,
        cpu: r.wall_time_seconds,
        lse: r.line_search_evals,
        f_star,
        objective: inst.objective(x),
        composite: composite_measure(inst, x, f_star),
    };
    Ok((r, run))
}

pub fn run(args: SvmArgs) -> CliResult<(SvmReport, PathBuf)> {
    let start = Instant::now();
    let (data, name) = match &args.data {
        Some(p) => (SvmDataset::from_path(p)?, crate::solve::stem(p)),
        None => (SvmDataset::toy_separable(), "toy_separable".to_string()),
    };
    if !(args.train_fraction > 0.0 && args.train_fraction < 1.0) {
        return Err(CliError::Usage(format!(
            "train fraction {} outside ]0, 1[",
            args.train_fraction
        )));
    }
    let (train, test) = data.split(args.train_fraction, sub_seed(args.seed, 0, 0))?;
    let (train, test) = standardize(&train, &test);
    let sigmas = sigma_grid(args.kernels, args.sigma_min, args.sigma_max)?;
    let config = SolverConfig {
        tol_residual: 1e-12,
        max_iters: args.max_iters,
        ..SolverConfig::default()
    };

    let svm = build_svm_qcqp(&train, &sigmas, args.c)?;
    let (r, multi) = composite_run(&svm.instance, args.solver, &config, args.tol)?;
    let tsa = svm.model(&train, &r.final_x).accuracy(&test);
    let active = sigmas
        .iter()
        .zip(svm.kernel_duals(&r.final_x))
        .filter(|(_, &y)| y > DUAL_REPORT_THRESHOLD)
        .map(|(&sigma2, &dual)| KernelDual { sigma2, dual })
        .collect();

    let single = build_single_kernel_qp(&train, SINGLE_KERNEL_SIGMA2, args.c)?;
    let (r0, single_run) = composite_run(&single.instance, args.solver, &config, args.tol)?;
    let tsa0 = single.model(&train, &r0.final_x).accuracy(&test);

    let report = SvmReport {
        dataset: name.clone(),
        n_train: train.len(),
        n_test: test.len(),
        solver: args.solver,
        sigmas,
        tsa,
        tsa0,
        active,
        multi_kernel: multi,
        single_kernel: single_run,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let path = output_path(args.out.as_deref(), &format!("svm_{name}_m{}_{}.json", args.kernels, args.solver));
    write_json(&path, &report)?;
    Ok((report, path))
}

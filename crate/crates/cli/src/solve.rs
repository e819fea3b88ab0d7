use std::path::{Path, PathBuf};

use afbf::baselines::{run_solver, SolverKind};
use afbf::problems::Instance;
use afbf::solver::RunReport;
use clap::Args;

use crate::common::{output_path, parse_solver, write_json, write_trajectory, SolverArgs};
use crate::error::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance JSON written by `gen`.
    #[arg(long)]
    pub instance: PathBuf,

    #[arg(long, default_value = "afbf", value_parser = parse_solver)]
    pub solver: SolverKind,

    #[command(flatten)]
    pub solver_args: SolverArgs,

    /// Report JSON; defaults to `<instance stem>_<solver>.json` in the output directory.
    #[arg(long)]
    pub report: Option<PathBuf>,

    /// Trajectory CSV with columns k, u_norm, objective, elapsed_seconds.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,

    /// Keep the per-iteration history in the report JSON.
    #[arg(long)]
    pub keep_history: bool,
}

pub fn load_instance(path: &Path) -> CliResult<Instance> {
    Instance::load(path).map_err(|e| match e {
        afbf::Error::Io(io) => CliError::io(format!("reading {}", path.display()), io),
        other => CliError::io(format!("parsing {}", path.display()), other),
    })
}

pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".into())
}

pub fn run(args: SolveArgs) -> CliResult<(RunReport, PathBuf)> {
    let inst = load_instance(&args.instance)?;
    let triple = inst.encode()?;
    let mut config = args.solver_args.config(triple.as_ref());
    config.record_history = args.trajectory.is_some() || args.keep_history;
    config.validate()?;
    let x0 = inst.start();
    let mut report = run_solver(
        args.solver,
        triple.as_ref(),
        &x0,
        &config,
        &args.solver.default_line_search(),
        None,
        None,
    )?;
    if let Some(path) = &args.trajectory {
        write_trajectory(path, &report)?;
    }
    if !args.keep_history {
        report.history.clear();
    }
    let name = format!("{}_{}.json", stem(&args.instance), args.solver);
    let path = output_path(args.report.as_deref(), &name);
    write_json(&path, &report)?;
    Ok((report, path))
}

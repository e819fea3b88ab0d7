//! `afbf-bench`: generate instances, run solvers and benchmarks, and evaluate
//! the multiple-kernel SVM pipeline.

mod bench;
mod common;
mod error;
mod gen;
mod solve;
mod svm;

use std::process::ExitCode;

use afbf::solver::RunStatus;
use clap::{Parser, Subcommand};

use crate::common::status_name;
use crate::error::{CliResult, EXIT_NOT_CONVERGED, EXIT_SOLVER};

#[derive(Parser)]
#[command(name = "afbf-bench", version, about = "Instance generation and benchmarks for AFBF splitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded instance file and print its digest
    #[command(subcommand)]
    Gen(gen::GenCommand),
    /// Solve one instance file
    Solve(solve::SolveArgs),
    /// Compare solvers over generated or stored instances
    Bench(bench::BenchArgs),
    /// Multiple-kernel SVM: accuracy, active kernels and duals
    Svm(svm::SvmArgs),
}

fn json_line<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap_or_default()
}

fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Gen(cmd) => {
            println!("{}", json_line(&gen::run(cmd)?));
            Ok(0)
        }
        Command::Solve(args) => {
            let (report, path) = solve::run(args)?;
            println!(
                "{} {}: k = {}, ‖u‖ = {:e}, LSE = {}, {:.3}s -> {}",
                report.solver,
                status_name(report.status),
                report.iterations,
                report.final_u_norm,
                report.line_search_evals,
                report.wall_time_seconds,
                path.display()
            );
            Ok(match report.status {
                RunStatus::Converged => 0,
                RunStatus::MaxIters | RunStatus::TimeLimit => EXIT_NOT_CONVERGED,
                RunStatus::Error => {
                    eprintln!("error: {}", report.error.unwrap_or_default());
                    EXIT_SOLVER
                }
            })
        }
        Command::Bench(args) => {
            let out = bench::run(args)?;
            println!("{:<28} {:<11} {:>5} {:>10} {:>12} {:>10} {:>12}", "instance", "solver", "runs", "converged", "ITER", "CPU", "LSE");
            for m in &out.medians {
                println!(
                    "{:<28} {:<11} {:>5} {:>10} {:>12} {:>10.4} {:>12}",
                    m.instance, m.solver.name(), m.runs, m.converged, m.median_iter, m.median_cpu, m.median_lse
                );
            }
            let failed = out.rows.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                eprintln!("{failed} run(s) reported errors; see {}", out.csv.display());
            }
            println!("rows -> {}\nmedians -> {}", out.csv.display(), out.medians_csv.display());
            Ok(0)
        }
        Command::Svm(args) => {
            let (report, path) = svm::run(args)?;
            let fmt = |a: Option<f64>| a.map_or("n/a".to_string(), |v| format!("{v:.4}"));
            println!(
                "{} m = {}: TSA = {}, TSA0 = {}, {} {} at k = {} -> {}",
                report.dataset,
                report.sigmas.len(),
                fmt(report.tsa),
                fmt(report.tsa0),
                report.solver,
                report.multi_kernel.status,
                report.multi_kernel.iter,
                path.display()
            );
            for k in &report.active {
                println!("  σ² = {:.6}, y* = {:.6}", k.sigma2, k.dual);
            }
            Ok(if report.multi_kernel.status == status_name(RunStatus::Converged) {
                0
            } else {
                EXIT_NOT_CONVERGED
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

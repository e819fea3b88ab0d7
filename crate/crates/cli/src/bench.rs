use std::path::{Path, PathBuf};
use std::sync::Arc;

use afbf::baselines::{run_solver, LineSearchParams, SolverKind};
use afbf::problems::{
    gen_linear_fractional, gen_quadratic_fractional, gen_synthetic_qcqp, HolderToy, Instance,
    SyntheticQcqp,
};
use afbf::solver::{RunStatus, SolverConfig};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::common::{
    csv_error, csv_writer, out_dir, parse_solver, status_name, sub_seed, write_trajectory,
    SolverArgs,
};
use crate::error::{CliError, CliResult};
use crate::solve::{load_instance, stem};

/// Where a benchmark instance comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum InstanceSource {
    Qcqp {
        n: usize,
        p: usize,
        m: usize,
        #[serde(default)]
        strongly_convex: bool,
    },
    LinearFractional {
        n: usize,
        eta: f64,
    },
    QuadraticFractional {
        n: usize,
    },
    Holder {
        nu: f64,
    },
    File {
        path: PathBuf,
    },
}

impl InstanceSource {
    pub fn label(&self) -> String {
        match self {
            InstanceSource::Qcqp { n, p, m, strongly_convex } => {
                format!("qcqp-n{n}-p{p}-m{m}{}", if *strongly_convex { "-sc" } else { "" })
            }
            InstanceSource::LinearFractional { n, eta } => format!("linfrac-n{n}-eta{eta}"),
            InstanceSource::QuadraticFractional { n } => format!("quadfrac-n{n}"),
            InstanceSource::Holder { nu } => format!("holder-nu{nu}"),
            InstanceSource::File { path } => stem(path),
        }
    }

    fn build(&self, seed: u64) -> CliResult<Instance> {
        Ok(match self {
            InstanceSource::Qcqp { n, p, m, strongly_convex } => Instance::Qcqp(gen_synthetic_qcqp(
                &SyntheticQcqp::new(*n, *p, *m).strongly_convex(*strongly_convex),
                seed,
            )?),
            InstanceSource::LinearFractional { n, eta } => {
                Instance::Fractional(gen_linear_fractional(*n, *eta, seed)?)
            }
            InstanceSource::QuadraticFractional { n } => {
                Instance::Fractional(gen_quadratic_fractional(*n, seed)?)
            }
            InstanceSource::Holder { nu } => Instance::Holder(HolderToy::new(*nu)?),
            InstanceSource::File { path } => load_instance(path)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverEntry {
    pub solver: SolverKind,
    /// Replaces the shared config for this solver.
    #[serde(default)]
    pub config: Option<SolverConfig>,
    /// Defaults to the solver's published parameters.
    #[serde(default)]
    pub line_search: Option<LineSearchParams>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BenchOutput {
    pub csv: Option<PathBuf>,
    pub trajectory_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub instances: Vec<InstanceSource>,
    pub solvers: Vec<SolverEntry>,
    /// Shared solver config; the stepsize rule follows μ when absent.
    #[serde(default)]
    pub config: Option<SolverConfig>,
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub output: BenchOutput,
}

fn one() -> usize {
    1
}

impl BenchSpec {
    pub fn validate(&self) -> CliResult<()> {
        if self.solvers.is_empty() {
            return Err(CliError::Usage("at least one solver is required".into()));
        }
        if self.instances.is_empty() {
            return Err(CliError::Usage("at least one instance is required".into()));
        }
        if self.repetitions == 0 {
            return Err(CliError::Usage("repetitions must be at least 1".into()));
        }
        if self.jobs == Some(0) {
            return Err(CliError::Usage("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Qcqp,
    LinearFractional,
    QuadraticFractional,
    Holder,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSON benchmark spec; replaces the instance and solver flags.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub family: Option<Family>,

    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub p: usize,
    #[arg(long, default_value_t = 10)]
    pub m: usize,
    #[arg(long)]
    pub strongly_convex: bool,
    /// Linear-fractional weights; one instance per value.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub eta: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub nu: f64,

    /// Instance files, in addition to any generated family.
    #[arg(long = "instance")]
    pub instances: Vec<PathBuf>,

    #[arg(long, value_delimiter = ',', default_value = "afbf,tseng", value_parser = parse_solver)]
    pub solvers: Vec<SolverKind>,

    #[arg(long, default_value_t = 1)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    pub jobs: Option<usize>,

    #[command(flatten)]
    pub solver_args: SolverArgs,

    /// Row CSV; medians go to `<stem>_medians.csv` beside it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trajectory_dir: Option<PathBuf>,
}

/// One row per (instance, repetition, solver).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub instance_index: usize,
    pub repetition: usize,
    pub seed: u64,
    pub solver: SolverKind,
    pub status: String,
    pub iter: usize,
    pub cpu: f64,
    pub lse: usize,
    pub final_u_norm: f64,
    pub final_objective: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianRow {
    pub instance: String,
    pub solver: SolverKind,
    pub runs: usize,
    pub converged: usize,
    pub median_iter: f64,
    pub median_cpu: f64,
    pub median_lse: f64,
    pub median_final_u_norm: f64,
}

pub struct BenchOutcome {
    pub rows: Vec<BenchRow>,
    pub medians: Vec<MedianRow>,
    pub csv: PathBuf,
    pub medians_csv: PathBuf,
}

impl BenchArgs {
    fn sources(&self) -> Vec<InstanceSource> {
        let mut out = Vec::new();
        match self.family {
            Some(Family::Qcqp) => out.push(InstanceSource::Qcqp {
                n: self.n,
                p: self.p,
                m: self.m,
                strongly_convex: self.strongly_convex,
            }),
            Some(Family::LinearFractional) => out.extend(
                self.eta.iter().map(|&eta| InstanceSource::LinearFractional { n: self.n, eta }),
            ),
            Some(Family::QuadraticFractional) => out.push(InstanceSource::QuadraticFractional { n: self.n }),
            Some(Family::Holder) => out.push(InstanceSource::Holder { nu: self.nu }),
            None => {}
        }
        out.extend(self.instances.iter().map(|p| InstanceSource::File { path: p.clone() }));
        out
    }

    pub fn spec(&self) -> CliResult<BenchSpec> {
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
            return serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())));
        }
        Ok(BenchSpec {
            instances: self.sources(),
            solvers: self
                .solvers
                .iter()
                .map(|&solver| SolverEntry {
                    solver,
                    config: None,
                    line_search: None,
                })
                .collect(),
            config: None,
            repetitions: self.repetitions,
            seed: self.seed,
            jobs: self.jobs,
            output: BenchOutput {
                csv: self.out.clone(),
                trajectory_dir: self.trajectory_dir.clone(),
            },
        })
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let h = v.len() / 2;
    if v.len() % 2 == 1 {
        v[h]
    } else {
        0.5 * (v[h - 1] + v[h])
    }
}

pub fn medians(rows: &[BenchRow]) -> Vec<MedianRow> {
    let mut keys: Vec<(usize, String, SolverKind)> = rows
        .iter()
        .map(|r| (r.instance_index, r.instance.clone(), r.solver))
        .collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(idx, instance, solver)| {
            let group: Vec<&BenchRow> = rows
                .iter()
                .filter(|r| r.instance_index == idx && r.solver == solver)
                .collect();
            let col = |f: fn(&BenchRow) -> f64| median(group.iter().map(|r| f(r)).collect());
            MedianRow {
                instance,
                solver,
                runs: group.len(),
                converged: group.iter().filter(|r| r.status == "converged").count(),
                median_iter: col(|r| r.iter as f64),
                median_cpu: col(|r| r.cpu),
                median_lse: col(|r| r.lse as f64),
                median_final_u_norm: col(|r| r.final_u_norm),
            }
        })
        .collect()
}

struct Task {
    instance_index: usize,
    repetition: usize,
    solver: usize,
}

fn run_task(
    spec: &BenchSpec,
    instances: &[Vec<CliResult<Arc<Instance>>>],
    seeds: &[Vec<u64>],
    fallback: &SolverArgs,
    task: &Task,
) -> CliResult<BenchRow> {
    let source = &spec.instances[task.instance_index];
    let entry = &spec.solvers[task.solver];
    let seed = seeds[task.instance_index][task.repetition];
    let mut row = BenchRow {
        instance: source.label(),
        instance_index: task.instance_index,
        repetition: task.repetition,
        seed,
        solver: entry.solver,
        status: status_name(RunStatus::Error).into(),
        iter: 0,
        cpu: 0.0,
        lse: 0,
        final_u_norm: f64::NAN,
        final_objective: None,
        error: None,
    };
    let inst = match &instances[task.instance_index][task.repetition] {
        Ok(inst) => inst,
        Err(e) => {
            row.error = Some(e.to_string());
            return Ok(row);
        }
    };
    let triple = match inst.encode() {
        Ok(t) => t,
        Err(e) => {
            row.error = Some(e.to_string());
            return Ok(row);
        }
    };
    let mut config = entry
        .config
        .or(spec.config)
        .unwrap_or_else(|| fallback.config(triple.as_ref()));
    let trajectory = spec.output.trajectory_dir.as_ref().map(|dir| {
        dir.join(format!("{}_r{}_{}.csv", row.instance, task.repetition, entry.solver))
    });
    config.record_history = trajectory.is_some();
    let ls = entry.line_search.unwrap_or_else(|| entry.solver.default_line_search());
    match run_solver(entry.solver, triple.as_ref(), &inst.start(), &config, &ls, None, None) {
        Ok(report) => {
            if let Some(path) = &trajectory {
                write_trajectory(path, &report)?;
            }
            row.status = status_name(report.status).into();
            row.iter = report.iterations;
            row.cpu = report.wall_time_seconds;
            row.lse = report.line_search_evals;
            row.final_u_norm = report.final_u_norm;
            row.final_objective = triple.objective(&report.final_x);
            row.error = report.error;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    Ok(row)
}

pub fn run(args: BenchArgs) -> CliResult<BenchOutcome> {
    let spec = args.spec()?;
    spec.validate()?;
    run_spec(&spec, &args.solver_args)
}

pub fn run_spec(spec: &BenchSpec, fallback: &SolverArgs) -> CliResult<BenchOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let seeds: Vec<Vec<u64>> = (0..spec.instances.len())
        .map(|i| (0..spec.repetitions).map(|r| sub_seed(spec.seed, 1 + i as u32, r as u32)).collect())
        .collect();
    let mut tasks = Vec::new();
    for i in 0..spec.instances.len() {
        for r in 0..spec.repetitions {
            for s in 0..spec.solvers.len() {
                tasks.push(Task {
                    instance_index: i,
                    repetition: r,
                    solver: s,
                });
            }
        }
    }
    let rows: CliResult<Vec<BenchRow>> = pool.install(|| {
        let instances: Vec<Vec<CliResult<Arc<Instance>>>> = spec
            .instances
            .par_iter()
            .zip(&seeds)
            .map(|(src, s)| s.par_iter().map(|&seed| src.build(seed).map(Arc::new)).collect())
            .collect();
        tasks
            .par_iter()
            .map(|t| run_task(spec, &instances, &seeds, fallback, t))
            .collect()
    });
    let mut rows = rows?;
    rows.sort_by(|a, b| {
        (a.instance_index, a.repetition, a.solver).cmp(&(b.instance_index, b.repetition, b.solver))
    });
    let medians = medians(&rows);

    let csv = spec.output.csv.clone().unwrap_or_else(|| out_dir().join("bench.csv"));
    let medians_csv = medians_path(&csv);
    write_rows(&csv, &rows)?;
    write_rows(&medians_csv, &medians)?;
    Ok(BenchOutcome {
        rows,
        medians,
        csv,
        medians_csv,
    })
}

pub fn medians_path(csv: &Path) -> PathBuf {
    csv.with_file_name(format!("{}_medians.csv", stem(csv)))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r).map_err(csv_error(path))?;
    }
    w.flush().map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 3.0, 2.0]), 2.5);
        assert!(median(vec![]).is_nan());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = BenchSpec {
            instances: vec![
                InstanceSource::Qcqp { n: 10, p: 5, m: 2, strongly_convex: true },
                InstanceSource::File { path: "a.json".into() },
            ],
            solvers: vec![SolverEntry {
                solver: SolverKind::Tseng,
                config: Some(SolverConfig::default()),
                line_search: Some(LineSearchParams::tseng()),
            }],
            config: None,
            repetitions: 3,
            seed: 9,
            jobs: Some(2),
            output: BenchOutput::default(),
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<BenchSpec>(&text).unwrap(), spec);
        assert_eq!(spec.instances[0].label(), "qcqp-n10-p5-m2-sc");
    }

    #[test]
    fn medians_group_by_instance_and_solver() {
        let row = |idx: usize, solver, iter| BenchRow {
            instance: format!("i{idx}"),
            instance_index: idx,
            repetition: 0,
            seed: 0,
            solver,
            status: "converged".into(),
            iter,
            cpu: 1.0,
            lse: 0,
            final_u_norm: 0.0,
            final_objective: None,
            error: None,
        };
        let rows = vec![
            row(0, SolverKind::Afbf, 10),
            row(0, SolverKind::Afbf, 30),
            row(0, SolverKind::Tseng, 5),
            row(1, SolverKind::Afbf, 7),
        ];
        let m = medians(&rows);
        assert_eq!(m.len(), 3);
        assert_eq!((m[0].runs, m[0].median_iter), (2, 20.0));
        assert_eq!(m[2].instance, "i1");
    }
}

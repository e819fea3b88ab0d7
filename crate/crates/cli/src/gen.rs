use std::path::PathBuf;

use afbf::problems::synthetic::DEFAULT_DENSITY;
use afbf::problems::{
    gen_linear_fractional, gen_quadratic_fractional, gen_synthetic_qcqp, HolderToy, Instance,
    SyntheticQcqp,
};
use clap::{Args, Subcommand};
use serde::Serialize;

use crate::common::output_path;
use crate::error::CliResult;

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Random convex QCQP with sparse RᵀR blocks.
    Qcqp(QcqpArgs),
    /// Linear (default) or quadratic-over-linear fractional program.
    Fractional(FractionalArgs),
    /// One-dimensional Hölder toy sign(x)|x|^ν over [−1, 1].
    Holder(HolderArgs),
}

#[derive(Debug, Args)]
pub struct QcqpArgs {
    #[arg(long)]
    pub n: usize,
    /// Rows of each random factor Rᵢ.
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub strongly_convex: bool,
    #[arg(long, default_value_t = DEFAULT_DENSITY)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FractionalArgs {
    #[arg(long)]
    pub n: usize,
    /// Weight of the linear term r = ηd.
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Generate ½xᵀQx − hᵀx + h₀ over dᵀx + d₀ instead.
    #[arg(long)]
    pub quadratic: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HolderArgs {
    #[arg(long, default_value_t = 0.5)]
    pub nu: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Printed after every `gen`.
#[derive(Debug, Serialize)]
pub struct Digest {
    pub kind: &'static str,
    pub path: PathBuf,
    pub dim: usize,
    pub n: usize,
    pub m: usize,
    /// Nonzeros over all quadratic blocks.
    pub nnz: usize,
    pub blocks: usize,
    pub seed: Option<u64>,
    pub strongly_convex: bool,
}

pub fn digest(inst: &Instance, path: PathBuf, seed: Option<u64>, strongly_convex: bool) -> Digest {
    let (n, m, nnz, blocks) = match inst {
        Instance::Qcqp(q) => {
            let quads: Vec<_> = std::iter::once(&q.q0)
                .chain(q.constraints.iter().filter_map(|c| c.q.as_ref()))
                .collect();
            (q.n, q.m(), quads.iter().map(|b| b.nnz()).sum(), quads.len())
        }
        Instance::Fractional(f) => (f.dim(), 0, f.q.as_ref().map_or(0, |q| q.nnz()), f.q.is_some() as usize),
        Instance::Holder(_) => (1, 0, 0, 0),
        Instance::Affine(a) => (a.center.len(), 0, 0, 0),
    };
    Digest {
        kind: inst.kind(),
        path,
        dim: inst.start().len(),
        n,
        m,
        nnz,
        blocks,
        seed,
        strongly_convex,
    }
}

pub fn run(cmd: GenCommand) -> CliResult<Digest> {
    let (inst, out, seed, sc, name) = match cmd {
        GenCommand::Qcqp(a) => {
            let spec = SyntheticQcqp {
                density: a.density,
                ..SyntheticQcqp::new(a.n, a.p, a.m).strongly_convex(a.strongly_convex)
            };
            let inst = gen_synthetic_qcqp(&spec, a.seed)?;
            let sc = if a.strongly_convex { "_sc" } else { "" };
            let name = format!("qcqp_n{}_p{}_m{}{sc}_s{}.json", a.n, a.p, a.m, a.seed);
            (Instance::Qcqp(inst), a.out, Some(a.seed), a.strongly_convex, name)
        }
        GenCommand::Fractional(a) => {
                        let (inst, name) = if a.quadratic {
                (gen_quadratic_fractional(a.n, a.seed)?, format!("quadfrac_n{}_s{}.json", a.n, a.seed))
            } else {
                (
                    gen_linear_fractional(a.n, a.eta, a.seed)?,
                    format!("linfrac_n{}_eta{}_s{}.json", a.n, a.eta, a.seed),
                )
            };
            (Instance::Fractional(inst), a.out, Some(a.seed), false, name)
        }
        GenCommand::Holder(a) => {
            let name = format!("holder_nu{}.json", a.nu);
            (Instance::Holder(HolderToy::new(a.nu)?), a.out, None, false, name)
        }
    };
    let path = output_path(out.as_deref(), &name);
    crate::common::write_json(&path, &inst)?;
    Ok(digest(&inst, path, seed, sc))
}

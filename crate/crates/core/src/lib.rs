//! Adaptive forward-backward-forward (AFBF) splitting for inclusions
//! `0 ∈ Ax + Bx + Cx` where `A` is continuous and satisfies a generalized
//! Lipschitz bound, `B` is Lipschitz and `C` is maximally monotone.
//!
//! The crate is organised bottom-up:
//!
//! * [`operators`]: the operator-triple contract and sampled certificate checks.
//! * [`stepsize`]: adaptive stepsizes from the generalized Lipschitz model.
//! * [`solver`]: the AFBF iteration, residuals, run reports and rate envelopes.
//! * [`baselines`]: Tseng and Thong–Vuong line-search FBF methods.
//! * [`problems`]: QCQP, fractional, SVM and Hölder encoders plus generators.
//! * [`verification`]: KKT residuals, reference oracles and envelope utilities.

// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod linalg;
pub mod operators;
pub mod problems;
pub mod solver;
pub mod stepsize;
pub mod verification;

pub use error::{Error, Result};
pub use operators::{
    Coefficients, Exponents, FnTriple, GeneralizedLipschitz, OperatorConstants, OperatorTriple,
};
pub use solver::{solve, IterateRecord, RunReport, RunStatus, SolverConfig};
pub use stepsize::{StepsizeParams, StepsizeResult, Strategy};

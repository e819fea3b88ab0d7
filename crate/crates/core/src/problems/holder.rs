//! One-dimensional toys.
//!
//! [`HolderToy`] minimizes `|x|^{1+ν}/(1+ν)` over `[−1, 1]`: its gradient
//! `sign(x)|x|^ν` is only ν-Hölder, which exercises the `μ < 2` stepsize.
//! [`AffineToy`] is `B(x) = x − c` with `A = 0`, `C = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::operators::{
    Coefficients, Exponents, GeneralizedLipschitz, OperatorConstants, OperatorTriple, DEFAULT_TAU,
    ZERO_B_LIPSCHITZ,
};

/// Hölder constant used for `x ↦ sign(x)|x|^ν`.
pub const HOLDER_CONSTANT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderToy {
    pub nu: f64,
}

impl HolderToy {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::InvalidParameter(format!("nu = {nu} outside ]0, 1[")));
        }
        Ok(Self { nu })
    }
}

impl GeneralizedLipschitz for HolderToy {
    fn exponents(&self) -> Exponents {
        Exponents {
            mu: 2.0 * self.nu,
            theta: 2.0,
            beta: 2.0,
        }
    }

    fn coefficients(&self, _x: &[f64]) -> Coefficients {
        Coefficients {
            a: HOLDER_CONSTANT * HOLDER_CONSTANT,
            b: 0.0,
            c: 0.0,
        }
    }
}

impl OperatorTriple for HolderToy {
    fn dim(&self) -> usize {
        1
    }

    fn eval_a(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(1, x.len())?;
        Ok(vec![x[0].signum() * x[0].abs().powf(self.nu)])
    }

    fn eval_b(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(1, x.len())?;
        Ok(vec![0.0])
    }

    fn resolvent(&self, _gamma: f64, z: &[f64]) -> Vec<f64> {
        self.project(z)
    }

    fn project(&self, w: &[f64]) -> Vec<f64> {
        w.iter().map(|v| v.clamp(-1.0, 1.0)).collect()
    }

    fn constants(&self) -> OperatorConstants {
        OperatorConstants {
            lipschitz_b: ZERO_B_LIPSCHITZ,
            zeta: 1.0,
            tau: DEFAULT_TAU,
        }
    }

    fn model(&self) -> &dyn GeneralizedLipschitz {
        self
    }

    fn objective(&self, x: &[f64]) -> Option<f64> {
        Some(x[0].abs().powf(1.0 + self.nu) / (1.0 + self.nu))
    }
}

/// `B(x) = x − center` on `ℝⁿ`, zero at `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineToy {
    pub center: Vec<f64>,
}

impl GeneralizedLipschitz for AffineToy {
    fn exponents(&self) -> Exponents {
        Exponents {
            mu: 2.0,
            theta: 2.0,
            beta: 2.0,
        }
    }

    fn coefficients(&self, _x: &[f64]) -> Coefficients {
        Coefficients::default()
    }
}

impl OperatorTriple for AffineToy {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn eval_a(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dim(), x.len())?;
        Ok(vec![0.0; x.len()])
    }

    fn eval_b(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dim(), x.len())?;
        Ok(x.iter().zip(&self.center).map(|(a, c)| a - c).collect())
    }

    fn resolvent(&self, _gamma: f64, z: &[f64]) -> Vec<f64> {
        z.to_vec()
    }

    fn project(&self, w: &[f64]) -> Vec<f64> {
        w.to_vec()
    }

    fn constants(&self) -> OperatorConstants {
        OperatorConstants {
            lipschitz_b: 1.0,
            zeta: 1.0,
            tau: DEFAULT_TAU,
        }
    }

    fn model(&self) -> &dyn GeneralizedLipschitz {
        self
    }

    fn objective(&self, x: &[f64]) -> Option<f64> {
        Some(0.5 * crate::linalg::dist(x, &self.center).powi(2))
    }
}

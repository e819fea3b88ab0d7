//! Fractional programs over the halfspace `D = {x : dᵀx ≥ 0}`.
//!
//! ```text
//! linear:     f(x) = rᵀx + (hᵀx + h₀)/(dᵀx + d₀)
//! quadratic:  f(x) = (½xᵀQx − hᵀx + h₀)/(dᵀx + d₀)
//! ```
//!
//! Encoded with `A = ∇f`, `B = 0` and `C = N_D`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{dot, norm, norm_sq, SymMatrix};
use crate::operators::{
    Coefficients, Exponents, GeneralizedLipschitz, OperatorConstants, OperatorTriple, DEFAULT_TAU,
    ZERO_B_LIPSCHITZ,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FractionalVariant {
    LinearFractional,
    QuadraticFractional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalInstance {
    pub variant: FractionalVariant,
    /// Quadratic numerator term (quadratic variant only).
    #[serde(default)]
    pub q: Option<SymMatrix>,
    /// Linear term (linear variant only).
    #[serde(default)]
    pub r: Option<Vec<f64>>,
    pub h: Vec<f64>,
    pub h0: f64,
    pub d: Vec<f64>,
    pub d0: f64,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
}

impl FractionalInstance {
    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        ensure_dim(n, self.h.len())?;
        if !(self.d0 > 0.0 && self.d0.is_finite()) {
            return Err(Error::InvalidParameter(format!("d0 = {} must be positive", self.d0)));
        }
        if !self.h0.is_finite() {
            return Err(Error::NonFinite("h0"));
        }
        match self.variant {
            FractionalVariant::LinearFractional => {
                let r = self.r.as_ref().ok_or_else(|| {
                    Error::InvalidParameter("linear fractional instance needs r".into())
                })?;
                ensure_dim(n, r.len())?;
            }
            FractionalVariant::QuadraticFractional => {
                let q = self.q.as_ref().ok_or_else(|| {
                    Error::InvalidParameter("quadratic fractional instance needs Q".into())
                })?;
                ensure_dim(n, q.dim())?;
            }
        }
        if let Some(s) = &self.start {
            ensure_dim(n, s.len())?;
        }
        Ok(())
    }

    fn denominator(&self, x: &[f64]) -> Result<f64> {
        let den = dot(&self.d, x) + self.d0;
        if den > 0.0 {
            Ok(den)
        } else {
            Err(Error::OutsideDomain(format!("dᵀx + d0 = {den} is not positive")))
        }
    }

    /// `(numerator, ∇numerator)` of the fractional part.
    fn numerator(&self, x: &[f64]) -> (f64, Vec<f64>) {
        match self.variant {
            FractionalVariant::LinearFractional => (dot(&self.h, x) + self.h0, self.h.clone()),
            FractionalVariant::QuadraticFractional => {
                let qx = self.q.as_ref().expect("validated").matvec(x);
                let num = 0.5 * dot(x, &qx) - dot(&self.h, x) + self.h0;
                (num, qx.iter().zip(&self.h).map(|(a, b)| a - b).collect())
            }
        }
    }

    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        ensure_dim(self.dim(), x.len())?;
        let den = self.denominator(x)?;
        let lin = self.r.as_ref().map_or(0.0, |r| dot(r, x));
        Ok(lin + self.numerator(x).0 / den)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dim(), x.len())?;
        let den = self.denominator(x)?;
        let (num, dnum) = self.numerator(x);
        let s = num / (den * den);
        let mut g: Vec<f64> = dnum
            .iter()
            .zip(&self.d)
            .map(|(gi, di)| gi / den - s * di)
            .collect();
        if let Some(r) = &self.r {
            for (gi, ri) in g.iter_mut().zip(r) {
                *gi += ri;
            }
        }
        Ok(g)
    }

    /// Projection onto `{dᵀx ≥ 0}`.
    pub fn project(&self, w: &[f64]) -> Vec<f64> {
        let dw = dot(&self.d, w);
        let dd = norm_sq(&self.d);
        if dw >= 0.0 || dd == 0.0 {
            return w.to_vec();
        }
        let s = dw / dd;
        w.iter().zip(&self.d).map(|(wi, di)| wi - s * di).collect()
    }

    pub fn encode(&self) -> Result<FractionalTriple> {
        FractionalTriple::new(self.clone())
    }
}

/// Mean-value bounds on `‖∇f(x) − ∇f(x̄)‖²` for `x, x̄ ∈ D`.
#[derive(Debug, Clone)]
pub struct FractionalModel {
    instance: FractionalInstance,
    norm_q: f64,
}

impl GeneralizedLipschitz for FractionalModel {
    fn exponents(&self) -> Exponents {
        match self.instance.variant {
            FractionalVariant::LinearFractional => Exponents {
                mu: 2.0,
                theta: 4.0,
                beta: 4.0,
            },
            FractionalVariant::QuadraticFractional => Exponents {
                mu: 2.0,
                theta: 4.0,
                beta: 6.0,
            },
        }
    }

    fn coefficients(&self, x: &[f64]) -> Coefficients {
        let inst = &self.instance;
        let d0 = inst.d0;
        let nd = norm(&inst.d);
        let nh = norm(&inst.h);
        match inst.variant {
            FractionalVariant::LinearFractional => {
                let t = nd * nd / d0 * (dot(&inst.h, x) + inst.h0).abs() + dot(&inst.d, &inst.h).abs();
                Coefficients {
                    a: 8.0 / d0.powi(4) * t * t,
                    b: 8.0 * nd.powi(4) * nh * nh / d0.powi(6),
                    c: 0.0,
                }
            }
            FractionalVariant::QuadraticFractional => {
                let nq = self.norm_q;
                let q = inst.q.as_ref().expect("validated");
                let resid: Vec<f64> = q.matvec(x).iter().zip(&inst.h).map(|(a, b)| a - b).collect();
                let t = nq / d0
                    + 2.0 * nd * nd / d0.powi(3) * (nq * norm_sq(x) + (dot(&inst.h, x) - inst.h0).abs())
                    + 2.0 * nd / (d0 * d0) * norm(&resid);
                let s = nd * nd / d0.powi(3) * nh + nd / (d0 * d0) * nq;
                Coefficients {
                    a: 3.0 * t * t,
                    b: 12.0 * s * s,
                    c: 12.0 * nd.powi(4) * nq * nq / d0.powi(6),
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FractionalTriple {
    model: FractionalModel,
}

impl FractionalTriple {
    pub fn new(instance: FractionalInstance) -> Result<Self> {
        instance.validate()?;
        let norm_q = instance.q.as_ref().map_or(0.0, SymMatrix::spectral_norm);
        Ok(Self {
            model: FractionalModel { instance, norm_q },
        })
    }

    pub fn instance(&self) -> &FractionalInstance {
        &self.model.instance
    }
}

impl OperatorTriple for FractionalTriple {
    fn dim(&self) -> usize {
        self.instance().dim()
    }

    fn eval_a(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.instance().gradient(x)
    }

    fn eval_b(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dim(), x.len())?;
        Ok(vec![0.0; x.len()])
    }

    fn resolvent(&self, _gamma: f64, z: &[f64]) -> Vec<f64> {
        self.instance().project(z)
    }

    fn project(&self, w: &[f64]) -> Vec<f64> {
        self.instance().project(w)
    }

    fn constants(&self) -> OperatorConstants {
        OperatorConstants {
            lipschitz_b: ZERO_B_LIPSCHITZ,
            zeta: 1.0,
            tau: DEFAULT_TAU,
        }
    }

    fn model(&self) -> &dyn GeneralizedLipschitz {
        &self.model
    }

    fn objective(&self, x: &[f64]) -> Option<f64> {
        self.instance().objective(x).ok()
    }
}

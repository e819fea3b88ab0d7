//! Problem encoders, instance generators and instance files.

pub mod fractional;
pub mod holder;
pub mod qcqp;
pub mod svm;
pub mod synthetic;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::operators::OperatorTriple;

pub use fractional::{FractionalInstance, FractionalTriple, FractionalVariant};
pub use holder::{AffineToy, HolderToy};
pub use qcqp::{Constraint, QcqpInstance, QcqpTriple};
pub use svm::SvmDataset;
pub use synthetic::{gen_linear_fractional, gen_quadratic_fractional, gen_synthetic_qcqp, SyntheticQcqp};

/// Contents of an instance file, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Instance {
    Qcqp(QcqpInstance),
    Fractional(FractionalInstance),
    Holder(HolderToy),
    Affine(AffineToy),
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::Qcqp(_) => "qcqp",
            Instance::Fractional(_) => "fractional",
            Instance::Holder(_) => "holder",
            Instance::Affine(_) => "affine",
        }
    }

    pub fn encode(&self) -> Result<Box<dyn OperatorTriple>> {
        Ok(match self {
            Instance::Qcqp(i) => Box::new(i.encode()?),
            Instance::Fractional(i) => Box::new(i.encode()?),
            Instance::Holder(t) => Box::new(HolderToy::new(t.nu)?),
            Instance::Affine(t) => Box::new(t.clone()),
        })
    }

    /// Stored starting point, or a default inside the domain.
    pub fn start(&self) -> Vec<f64> {
        match self {
            Instance::Qcqp(i) => i.start.clone().unwrap_or_else(|| vec![0.0; i.dim()]),
            Instance::Fractional(i) => i.start.clone().unwrap_or_else(|| vec![0.0; i.dim()]),
            Instance::Holder(_) => vec![0.5],
            Instance::Affine(t) => vec![0.0; t.center.len()],
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let q = Instance::Qcqp(gen_synthetic_qcqp(&SyntheticQcqp::new(12, 8, 2), 4).unwrap());
        assert_eq!(Instance::from_json(&q.to_json().unwrap()).unwrap(), q);
        let f = Instance::Fractional(gen_linear_fractional(5, 1.0, 2).unwrap());
        assert_eq!(Instance::from_json(&f.to_json().unwrap()).unwrap(), f);
        let h = Instance::Holder(HolderToy::new(0.5).unwrap());
        assert!(h.to_json().unwrap().contains("\"kind\":\"holder\""));
        assert_eq!(Instance::from_json(&h.to_json().unwrap()).unwrap(), h);
    }

    #[test]
    fn rejects_unknown_kind() {
        assert!(Instance::from_json(r#"{"kind":"lp"}"#).is_err());
    }
}

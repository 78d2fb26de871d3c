//! JSON model files.
//!
//! ```json
//! {
//!   "convention": "column-generator",
//!   "n": 2,
//!   "L": [[-1, 1], [1, -1]],
//!   "V": [1, 0],
//!   "cylinders": [{"name": "a", "spec": [["0", 1], ["0.5", 2]]}],
//!   "times": ["0.5", "1", "2"]
//! }
//! ```
//!
//! `L` is row-major with entry `(i, j)` the rate from `j` to `i`. States
//! in cylinder specs are 1-based. An optional `"perron": {"lambda", "u",
//! "mu"}` replaces the computed Perron triple.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ctmc::Generator;
use crate::cylinder::{CylinderSpec, PathMeasure};
use crate::error::{Error, Result};
use crate::gibbs::GibbsModel;
use crate::perron::{PerronTriple, Potential};
use crate::time::TimePoint;

pub const COLUMN_CONVENTION: &str = "column-generator";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCylinder {
    pub name: String,
    pub spec: CylinderSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronOverride {
    pub lambda: f64,
    pub u: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub convention: String,
    pub n: usize,
    #[serde(rename = "L")]
    pub l: Vec<Vec<f64>>,
    #[serde(rename = "V", default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    #[serde(default)]
    pub cylinders: Vec<NamedCylinder>,
    #[serde(default)]
    pub times: Vec<TimePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perron: Option<PerronOverride>,
}

/// A parsed and validated model.
#[derive(Debug, Clone)]
pub struct Model {
    pub file: ModelFile,
    pub digest: String,
    pub path: PathMeasure,
    pub potential: Potential,
}

impl Model {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
        if file.convention != COLUMN_CONVENTION {
            return Err(Error::Model(format!("convention must be {COLUMN_CONVENTION:?}, got {:?}", file.convention)));
        }
        if file.l.len() != file.n {
            return Err(Error::DimensionMismatch { expected: file.n, got: file.l.len() });
        }
        let generator = Generator::from_rows(&file.l)?;
        let potential = match &file.v {
            Some(v) if v.len() != file.n => return Err(Error::DimensionMismatch { expected: file.n, got: v.len() }),
            Some(v) => Potential::new(v.clone())?,
            None => Potential::zeros(file.n),
        };
        for c in &file.cylinders {
            c.spec.check_states(file.n)?;
        }
        let digest = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
        Ok(Model { path: PathMeasure::new(generator)?, potential, file, digest })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
        Model::from_json(&text)
    }

    pub fn n(&self) -> usize {
        self.path.n()
    }

    pub fn generator(&self) -> &Generator {
        self.path.generator()
    }

    /// The Gibbs model, using the stored Perron triple when the file has one.
    pub fn gibbs(&self) -> Result<GibbsModel> {
        match &self.file.perron {
            Some(p) => {
                let triple = PerronTriple::from_parts(p.lambda, p.u.clone(), p.mu.clone(), self.path.p0())?;
                GibbsModel::with_triple(self.path.clone(), self.potential.clone(), triple)
            }
            None => GibbsModel::new(self.path.clone(), self.potential.clone()),
        }
    }
}

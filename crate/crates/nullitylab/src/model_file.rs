//! JSON model and report files.
//!
//! Numbers go through serde_json with `float_roundtrip`, so a write/read cycle
//! reproduces every f64 bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::construction::Example;
use crate::error::{Error, Result};
use crate::geometry::HomogeneousModel;
use crate::lie::LieAlgebra;
use crate::nullity::{Dims, Flag, NullityReport, REPORT_TOL};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraData {
    pub dim: usize,
    /// `structure_constants[i][j][k]`: coefficient of e_k in [e_i, e_j].
    pub structure_constants: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub labels: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Construct,
    Manual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub generator: Generator,
    #[serde(default)]
    pub parameters: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub name: String,
    pub algebra: AlgebraData,
    pub metric: Vec<Vec<f64>>,
    pub provenance: Provenance,
}

impl ModelFile {
    pub fn from_model(name: &str, model: &HomogeneousModel, provenance: Provenance) -> Self {
        let alg = model.algebra();
        let d = alg.dim();
        let sc = (0..d).map(|i| (0..d).map(|j| (0..d).map(|k| alg.c(i, j, k)).collect()).collect()).collect();
        let g = model.metric();
        ModelFile {
            name: name.to_string(),
            algebra: AlgebraData { dim: d, structure_constants: sc, labels: alg.labels().to_vec() },
            metric: (0..d).map(|i| (0..d).map(|j| g[(i, j)]).collect()).collect(),
            provenance,
        }
    }

    pub fn from_example(name: &str, ex: &Example) -> Self {
        let p = &ex.params;
        let parameters = serde_json::json!({
            "n": p.n,
            "v0_dim": p.v0_dim,
            "a": ex.frame.a,
            "b": ex.frame.b,
        });
        Self::from_model(name, &ex.model, Provenance { generator: Generator::Construct, parameters })
    }

    /// Shape checks with field paths, then the algebra and metric invariants.
    pub fn to_model(&self) -> Result<HomogeneousModel> {
        let d = self.algebra.dim;
        if d == 0 {
            return Err(Error::Parse("algebra.dim: must be positive".into()));
        }
        let sc = &self.algebra.structure_constants;
        if sc.len() != d {
            return Err(Error::Parse(format!("algebra.structure_constants: expected {d} rows, found {}", sc.len())));
        }
        let mut flat = Vec::with_capacity(d * d * d);
        for (i, row) in sc.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Parse(format!(
                    "algebra.structure_constants[{i}]: expected {d} entries, found {}",
                    row.len()
                )));
            }
            for (j, col) in row.iter().enumerate() {
                if col.len() != d {
                    return Err(Error::Parse(format!(
                        "algebra.structure_constants[{i}][{j}]: expected {d} entries, found {}",
                        col.len()
                    )));
                }
                for (k, x) in col.iter().enumerate() {
                    if !x.is_finite() {
                        return Err(Error::Parse(format!("algebra.structure_constants[{i}][{j}][{k}]: not finite")));
                    }
                }
                flat.extend_from_slice(col);
            }
        }
        let labels = if self.algebra.labels.is_empty() {
            (1..=d).map(|i| format!("e{i}")).collect()
        } else if self.algebra.labels.len() != d {
            return Err(Error::Parse(format!(
                "algebra.labels: expected {d} labels, found {}",
                self.algebra.labels.len()
            )));
        } else {
            self.algebra.labels.clone()
        };
        if self.metric.len() != d {
            return Err(Error::Parse(format!("metric: expected {d} rows, found {}", self.metric.len())));
        }
        for (i, row) in self.metric.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Parse(format!("metric[{i}]: expected {d} entries, found {}", row.len())));
            }
        }
        let alg = LieAlgebra::new(d, flat, labels).map_err(|e| Error::Parse(format!("algebra: {e}")))?;
        let g = DMatrix::from_fn(d, d, |i, j| self.metric[i][j]);
        HomogeneousModel::new(alg, g).map_err(|e| Error::Parse(format!("metric: {e}")))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("model file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files always serialize")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Rank tolerance used for every subspace.
    pub rank: f64,
    /// Budget for the structure-check residuals.
    pub report: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub model_name: String,
    pub branch: crate::nullity::Branch,
    pub dims: Dims,
    pub flags: BTreeMap<String, Flag>,
    pub residuals: BTreeMap<String, Option<f64>>,
    pub pass: bool,
    pub tolerances: Tolerances,
    pub tool_version: String,
}

impl ReportFile {
    pub fn new(model_name: &str, model: &HomogeneousModel, report: &NullityReport) -> Self {
        ReportFile {
            model_name: model_name.to_string(),
            branch: report.branch,
            dims: report.dims.clone(),
            flags: report.flags.clone(),
            residuals: report.residuals.clone(),
            pass: report.pass,
            tolerances: Tolerances { rank: model.tol(), report: REPORT_TOL },
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

//! Scenario files: a model block, an ordered task list, tolerance overrides
//! and a seed.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "model": {
//!     "n": 4,
//!     "gram": [[0, 1], [1, 0]],
//!     "A": [[0, 1], [0, 0]],
//!     "f": { "kind": "homogeneous", "params": { "c": 0.3 } },
//!     "interval": [0, null]
//!   },
//!   "tasks": ["verify-model", { "task": "geodesic", "count": 10 }],
//!   "tolerances": { "nabla_weyl_relative": 1e-9 },
//!   "seed": 7
//! }
//! ```

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::isometry_group::{IsoElement, SElement};
use crate::linalg::from_rows;
use crate::model_geometry::{Interval, ModelManifold, ProfileF, ProfileKind};
use crate::pseudo_linear::{Endo, PseudoEuclideanSpace};
use crate::solution_space::SolutionE;

/// `c` given as a real number or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CValue {
    Real(f64),
    Complex([f64; 2]),
}

impl CValue {
    pub fn to_complex(self) -> Complex64 {
        match self {
            CValue::Real(x) => Complex64::new(x, 0.0),
            CValue::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FSpec {
    Homogeneous { c: CValue },
    Polynomial { coeffs: Vec<f64> },
    SumOfPowers { terms: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n: usize,
    pub gram: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub f: FSpec,
    /// `[lo, hi]` with `null` for an infinite endpoint; defaults to `(0, ∞)`
    /// for homogeneous profiles and `ℝ` otherwise.
    #[serde(default)]
    pub interval: Option<[Option<f64>; 2]>,
    /// Skip the ECS validation (flat and degenerate test models).
    #[serde(default)]
    pub raw: bool,
}

impl ModelSpec {
    pub fn build(&self) -> Result<ModelManifold> {
        let m = self.n.checked_sub(2).filter(|&m| m >= 1).ok_or_else(|| {
            LabError::InvalidParameter(format!("n = {} is too small", self.n))
        })?;
        let gram = matrix(&self.gram, m, "gram")?;
        let a = matrix(&self.a, m, "A")?;
        let interval = match self.interval {
            Some([lo, hi]) => Interval::new(lo, hi)?,
            None => match self.f {
                FSpec::Homogeneous { .. } => Interval::POSITIVE,
                _ => Interval::REAL_LINE,
            },
        };
        let kind = match &self.f {
            FSpec::Homogeneous { c } => ProfileKind::Homogeneous { c: [c.to_complex().re, c.to_complex().im] },
            FSpec::Polynomial { coeffs } => ProfileKind::Polynomial { coeffs: coeffs.clone() },
            FSpec::SumOfPowers { terms } => ProfileKind::SumOfPowers { terms: terms.clone() },
        };
        let f = ProfileF::from_kind(kind, interval)?;
        let space = PseudoEuclideanSpace::new(gram);
        space.validate()?;
        let endo = Endo::new(space, a);
        if self.raw {
            Ok(ModelManifold::raw(endo, f))
        } else {
            ModelManifold::new(endo, f)
        }
    }
}

fn matrix(rows: &[Vec<f64>], m: usize, what: &str) -> Result<DMatrix<f64>> {
    let mat = from_rows(rows).ok_or_else(|| LabError::InvalidParameter(format!("{what} is not a rectangular matrix")))?;
    if mat.nrows() != m || mat.ncols() != m {
        return Err(LabError::InvalidParameter(format!(
            "{what} is {}×{}, expected {m}×{m} for n = {}",
            mat.nrows(),
            mat.ncols(),
            m + 2
        )));
    }
    Ok(mat)
}

/// `{q, p, C, r, u: {t0, value, deriv}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoSpec {
    pub q: f64,
    #[serde(default)]
    pub p: f64,
    #[serde(rename = "C", default)]
    pub c: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub u: Option<SolutionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSpec {
    pub t0: f64,
    pub value: Vec<f64>,
    pub deriv: Vec<f64>,
}

impl IsoSpec {
    /// Missing `C` means the identity, missing `u` the zero solution.
    pub fn build(&self, model: &ModelManifold) -> Result<IsoElement> {
        let m = model.m();
        let c = match &self.c {
            Some(rows) => matrix(rows, m, "C")?,
            None => DMatrix::identity(m, m),
        };
        let u = match &self.u {
            Some(s) => {
                if s.value.len() != m || s.deriv.len() != m {
                    return Err(LabError::DimensionMismatch { expected: m, got: s.value.len().max(s.deriv.len()) });
                }
                model.interval().check(s.t0)?;
                SolutionE::new(s.t0, s.value.clone().into(), s.deriv.clone().into())
            }
            None => SolutionE::zero(m, model.interval().base_point()),
        };
        Ok(IsoElement::new(SElement::new(self.q, self.p, c), self.r, u))
    }
}

fn default_count<const N: usize>() -> usize {
    N
}

fn default_qs() -> Vec<f64> {
    vec![0.25, 0.5, 2.0, 4.0]
}

fn default_tau_span() -> (f64, f64) {
    (0.0, 1.0)
}

/// One task of a scenario. In JSON either a bare name or an object with a
/// `"task"` field and optional parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    VerifyModel {
        #[serde(default = "default_count::<20>")]
        points: usize,
        #[serde(default = "default_count::<5>")]
        isometries: usize,
    },
    Spectra {
        #[serde(default = "default_qs")]
        qs: Vec<f64>,
        /// Random elements whose conjugation spectrum is checked.
        #[serde(default = "default_count::<20>")]
        conjugations: usize,
    },
    IsometryCheck {
        #[serde(default = "default_count::<10>")]
        elements: usize,
        #[serde(default = "default_count::<5>")]
        points: usize,
    },
    TcpCheck {
        #[serde(default = "default_count::<200>")]
        samples: usize,
        #[serde(default = "default_count::<500>")]
        pairs: usize,
        #[serde(default = "default_count::<200>")]
        triples: usize,
    },
    Geodesic {
        /// Explicit initial point `[t, s, v…]`; random when absent.
        #[serde(default)]
        x0: Option<Vec<f64>>,
        #[serde(default)]
        v0: Option<Vec<f64>>,
        #[serde(default = "default_tau_span")]
        tau_span: (f64, f64),
        #[serde(default = "default_count::<50>")]
        samples: usize,
        /// Number of random geodesics when `x0`/`v0` are absent.
        #[serde(default = "default_count::<10>")]
        count: usize,
    },
    ClassifyGroup {
        generators: Vec<IsoSpec>,
        #[serde(default)]
        expected: Option<crate::isometry_group::Holonomy>,
    },
    #[serde(alias = "appendix-a")]
    Variation {
        #[serde(default = "default_count::<5>")]
        configs: usize,
    },
    #[serde(alias = "appendix-b")]
    Reconstruction {
        #[serde(default = "default_count::<2>")]
        geodesics: usize,
        #[serde(default = "default_count::<10>")]
        points: usize,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::VerifyModel { .. } => "verify-model",
            Task::Spectra { .. } => "spectra",
            Task::IsometryCheck { .. } => "isometry-check",
            Task::TcpCheck { .. } => "tcp-check",
            Task::Geodesic { .. } => "geodesic",
            Task::ClassifyGroup { .. } => "classify-group",
            Task::Variation { .. } => "variation",
            Task::Reconstruction { .. } => "reconstruction",
        }
    }
}

fn deserialize_tasks<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<Task>, D::Error> {
    use serde::de::Error;
    let raw: Vec<serde_json::Value> = Vec::deserialize(d)?;
    raw.into_iter()
        .map(|v| {
            let v = match v {
                serde_json::Value::String(name) => serde_json::json!({ "task": name }),
                other => other,
            };
            serde_json::from_value(v).map_err(D::Error::custom)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub model: ModelSpec,
    #[serde(default, deserialize_with = "deserialize_tasks")]
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_schema() -> u32 {
    crate::report::SCHEMA_VERSION
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| LabError::InvalidParameter(format!("scenario: {e}")))?;
        if s.schema_version != crate::report::SCHEMA_VERSION {
            return Err(LabError::InvalidParameter(format!(
                "unsupported schema_version {} (expected {})",
                s.schema_version,
                crate::report::SCHEMA_VERSION
            )));
        }
        if let Some((k, v)) = s.tolerances.iter().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(LabError::InvalidParameter(format!("tolerance {k} = {v} must be finite and ≥ 0")));
        }
        Ok(s)
    }
}

//! Simulation configuration, read from JSON.
//!
//! ```json
//! {
//!   "true_model": { "y0": [0.0, 1.0, 2.0, 3.0], "sigma0_2": 1.0 },
//!   "candidates": [ { "design": [[1, 0], [1, 1], [1, 2], [1, 3]] },
//!                   { "design_csv": "quadratic.csv", "sigma2": 2.0 } ],
//!   "replications": 10000,
//!   "seed": 42,
//!   "experiment": { "type": "discrepancies" }
//! }
//! ```
//!
//! Instead of `true_model` and `candidates`, a `pair` entry may ask for a
//! randomly constructed pair of candidates (see [`PairSpec`]). Relative
//! `design_csv` paths are resolved against the config file's directory.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::discrepancy::{MisspecRegime, TrueModel};
use crate::error::{Error, Result};
use crate::io::read_design;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_model: Option<TrueModelSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<CandidateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairSpec>,
    pub replications: usize,
    pub seed: u64,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrueModelSpec {
    pub y0: Vec<f64>,
    pub sigma0_2: f64,
}

impl TrueModelSpec {
    pub fn from_truth(truth: &TrueModel) -> Self {
        Self {
            y0: truth.y0().to_vec(),
            sigma0_2: truth.sigma0_2(),
        }
    }
}

/// A candidate design, inline (one array per row) or from a CSV file. The
/// optional `sigma2` is the known variance used by the discrepancies
/// experiment; it defaults to the true σ₀².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
}

impl CandidateSpec {
    pub fn from_design(design: &DMatrix<f64>) -> Self {
        Self {
            design: Some(design.row_iter().map(|r| r.iter().copied().collect()).collect()),
            design_csv: None,
            sigma2: None,
        }
    }

    pub(crate) fn matrix(&self) -> Result<DMatrix<f64>> {
        match (&self.design, &self.design_csv) {
            (Some(rows), None) => {
                let n = rows.len();
                let k = rows.first().map_or(0, Vec::len);
                if n == 0 || k == 0 || rows.iter().any(|r| r.len() != k) {
                    return Err(Error::Config(
                        "inline design must be a nonempty rectangular array".into(),
                    ));
                }
                Ok(DMatrix::from_fn(n, k, |i, j| rows[i][j]))
            }
            (None, Some(path)) => read_design(path),
            _ => Err(Error::Config(
                "each candidate needs exactly one of `design` or `design_csv`".into(),
            )),
        }
    }
}

/// A randomly constructed pair of candidates, built from the stream reserved
/// for setup so that replications are unaffected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "construction", rename_all = "snake_case", deny_unknown_fields)]
pub enum PairSpec {
    /// k₁ + λ⁽¹⁾ = k₂ + λ⁽²⁾, separately mis-specified.
    EqualDiscrepancy {
        n: usize,
        k1: usize,
        k2: usize,
        #[serde(default = "one")]
        sigma0_2: f64,
    },
    /// Prescribed λ⁽¹⁾ and λ⁽²⁾.
    Lambdas {
        n: usize,
        k1: usize,
        k2: usize,
        lambda1: f64,
        lambda2: f64,
        #[serde(default = "one")]
        sigma0_2: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// Realized OD, FD, ED and RSS/σ₀² against their expectations and laws.
    Discrepancies,
    /// Moments of Δ¹², unbiasedness of its variance estimator, and the
    /// distance of standardized Δ¹² from N(0,1).
    DeltaDistribution,
    /// Rejection rate of the two-sided z-test under equal expected discrepancy.
    NullCalibration {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    /// Δ¹² + 2(k₁−k₂) against χ²_{k₁−k₂}(λ⁽²⁾) for nested candidates.
    NestedLaw,
    /// Mean of MSC/2 + Cₙ against the mean overall discrepancy, σ² fitted.
    UnknownSigmaUnbiasedness,
    /// Exact criterion shift against its predicted asymptote over a grid of n
    /// (closed form; `replications` is unused).
    RegimeShift {
        k: usize,
        regime: MisspecRegime,
        n_grid: Vec<usize>,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Discrepancies => "discrepancies",
            Experiment::DeltaDistribution => "delta_distribution",
            Experiment::NullCalibration { .. } => "null_calibration",
            Experiment::NestedLaw => "nested_law",
            Experiment::UnknownSigmaUnbiasedness => "unknown_sigma_unbiasedness",
            Experiment::RegimeShift { .. } => "regime_shift",
        }
    }
}

impl SimConfig {
    /// Parse JSON; relative `design_csv` paths are taken against `base_dir`.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg: SimConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(base) = base_dir {
            for c in &mut cfg.candidates {
                if let Some(p) = &c.design_csv {
                    if p.is_relative() {
                        c.design_csv = Some(base.join(p));
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_json(&text, path.parent())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

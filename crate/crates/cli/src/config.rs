//! Experiment configuration: one JSON file per experiment.
//!
//! ```json
//! {
//!   "model": {"d": 1, "sigma": [[1.0]], "b0": [0.0], "alpha": 1.0, "p": 2.0},
//!   "sim": {"N": 64, "dt": 0.001, "T": 1.0, "paths": 256, "seed": 1, "save_every": 10},
//!   "q": 1.0,
//!   "analysis": {"R_grid": [1, 2, 5, 10], "eps": 0.01, "functionals": ["exp_neg_sq_norm"]},
//!   "output_dir": "out"
//! }
//! ```
//!
//! `x0` defaults to `h_0`; `starts` (for the ergodic runs) to `[h_0, 2 h_0 + h_1]`.

use std::fs;
use std::path::{Path, PathBuf};

use hermspde::analysis::Functional;
use hermspde::{GradedVectorF64, ModelSpecF64, SimConfigF64, SobolevIndexF64};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

fn default_r_grid() -> Vec<f64> {
    vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0]
}

fn default_eps() -> f64 {
    0.01
}

fn default_tol() -> f64 {
    0.02
}

fn default_functionals() -> Vec<String> {
    vec!["exp_neg_sq_norm".to_string()]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(rename = "R_grid", default = "default_r_grid")]
    pub r_grid: Vec<f64>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_functionals")]
    pub functionals: Vec<String>,
    /// Time window `[t0, t1]` for the decay-rate fit.
    #[serde(default)]
    pub fit_window: Option<[f64; 2]>,
    /// Relative slack of the stability bound.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Truncation for the constant `C0`; defaults to `sim.N`.
    #[serde(default, rename = "C0_N")]
    pub c0_order: Option<usize>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            r_grid: default_r_grid(),
            eps: default_eps(),
            functionals: default_functionals(),
            fit_window: None,
            tol: default_tol(),
            c0_order: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model_id: Option<String>,
    pub model: ModelSpecF64,
    pub sim: SimConfigF64,
    pub q: SobolevIndexF64,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub x0: Option<GradedVectorF64>,
    #[serde(default)]
    pub starts: Option<Vec<GradedVectorF64>>,
}

/// Command-line overrides applied on top of the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub out: Option<PathBuf>,
}

/// A parsed config together with the file it came from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub raw: String,
    pub source: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let raw = fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: ExperimentConfig = serde_json::from_str(&raw).map_err(|source| CliError::ParseConfig {
            path: path.to_path_buf(),
            source,
        })?;
        config.apply(overrides);
        config.validate()?;
        Ok(Self {
            config,
            raw,
            source: path.to_path_buf(),
        })
    }

    pub fn model_id(&self) -> String {
        self.config.model_id.clone().unwrap_or_else(|| {
            self.source
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "model".to_string())
        })
    }
}

impl ExperimentConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.sim.seed = seed;
        }
        if let Some(paths) = o.paths {
            self.sim.paths = paths;
        }
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.model.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.sim.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.q.value() < self.model.p) {
            return Err(CliError::IndexHypothesis {
                p: self.model.p,
                q: self.q.value(),
            });
        }
        let a = &self.analysis;
        if a.r_grid.is_empty() || a.r_grid.iter().any(|r| !(*r > 0.0)) {
            return Err(CliError::Config(
                "R_grid must be a non-empty list of positive radii".into(),
            ));
        }
        if !(a.eps > 0.0 && a.eps < 1.0) {
            return Err(CliError::Config("eps must lie in (0, 1)".into()));
        }
        if !(a.tol >= 0.0) {
            return Err(CliError::Config("tol must be non-negative".into()));
        }
        if let Some([t0, t1]) = a.fit_window {
            if !(t0 < t1) {
                return Err(CliError::Config("fit_window must satisfy t0 < t1".into()));
            }
        }
        self.functionals()?;
        for x in self.x0.iter().chain(self.starts.iter().flatten()) {
            if x.dim() != self.model.d {
                return Err(CliError::Config(format!(
                    "initial condition has dimension {}, model has {}",
                    x.dim(),
                    self.model.d
                )));
            }
            if x.order() > self.sim.order {
                return Err(CliError::Config(format!(
                    "initial condition of order {} exceeds N = {}",
                    x.order(),
                    self.sim.order
                )));
            }
        }
        if let Some(starts) = &self.starts {
            if starts.is_empty() || starts.len() > 2 {
                return Err(CliError::Config(
                    "starts must hold one or two initial conditions".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn functionals(&self) -> CliResult<Vec<Functional<f64>>> {
        self.analysis
            .functionals
            .iter()
            .map(|s| s.parse().map_err(|e: hermspde::Error| CliError::Config(e.to_string())))
            .collect()
    }

    pub fn initial(&self) -> GradedVectorF64 {
        self.x0.clone().unwrap_or_else(|| ground_state(self.model.d))
    }

    pub fn ergodic_starts(&self) -> Vec<GradedVectorF64> {
        self.starts.clone().unwrap_or_else(|| {
            let d = self.model.d;
            let mut coeffs = vec![0.0; d + 1];
            coeffs[0] = 2.0;
            coeffs[1] = 1.0;
            let second = GradedVectorF64::from_coeffs(d, 1, coeffs).expect("order 1 basis has d + 1 elements");
            vec![ground_state(d), second]
        })
    }
}

fn ground_state(d: usize) -> GradedVectorF64 {
    GradedVectorF64::basis_element(0, &hermspde::MultiIndex::zero(d)).expect("h_0 exists")
}

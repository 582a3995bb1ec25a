//! Per-scenario parameter files (TOML or JSON).
//!
//! ```toml
//! weight_eps = 2.7
//!
//! [[scenario]]
//! id = 3
//! init = { tikhonov = 0.001, threshold_factor = 3.5 }
//!
//! [[scenario.run]]
//! algorithm = "idd"
//! mode = "hard"
//! weights = "adaptive"
//! tau = 12.5
//! gamma = 15.0
//! xi = 1.0
//! ```

use std::path::Path;

use bm3d_frames::algorithms::InitConfig;
use bm3d_frames::{AlgoParams, ThresholdMode, WeightMode};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::experiment::{Algorithm, RunSpec, DEFAULT_WEIGHT_EPS};
use crate::scenario::{build_scenario, Scenario};

/// The committed defaults produced by `scripts/grid_search.sh`.
pub const BUILTIN_PARAMS: &str = include_str!("../../../configs/params.toml");

fn default_weight_eps() -> f64 {
    DEFAULT_WEIGHT_EPS
}

fn default_beta() -> f64 {
    1.0
}

fn default_max_iters() -> usize {
    AlgoParams::default().max_iters
}

fn default_stop_tol() -> f64 {
    AlgoParams::default().stop_tol
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub algorithm: Algorithm,
    pub mode: ThresholdMode,
    pub weights: WeightMode,
    pub tau: f64,
    pub gamma: f64,
    pub xi: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
    /// ISNR reached when the values were tuned; informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuned_isnr: Option<f64>,
}

impl RunParams {
    pub fn matches(&self, algorithm: Algorithm, mode: ThresholdMode, weights: WeightMode) -> bool {
        self.algorithm == algorithm && self.mode == mode && self.weights == weights
    }

    pub fn algo_params(&self) -> AlgoParams {
        AlgoParams {
            tau: self.tau,
            gamma: self.gamma,
            xi: self.xi,
            beta: self.beta,
            mode: self.mode,
            weights: self.weights,
            max_iters: self.max_iters,
            stop_tol: self.stop_tol,
            ..AlgoParams::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub id: u8,
    /// Overrides the scenario's noise variance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default, rename = "run")]
    pub runs: Vec<RunParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    /// Adaptive-weight significance threshold, in units of `sigma`.
    #[serde(default = "default_weight_eps")]
    pub weight_eps: f64,
    #[serde(default, rename = "scenario")]
    pub scenarios: Vec<ScenarioParams>,
}

impl Default for ParamsFile {
    fn default() -> Self {
        Self {
            weight_eps: DEFAULT_WEIGHT_EPS,
            scenarios: Vec::new(),
        }
    }
}

fn params_error(path: &Path, reason: impl ToString) -> BenchError {
    BenchError::Params {
        path: path.display().to_string(),
        reason: reason.to_string(),
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

impl ParamsFile {
    pub fn builtin() -> Self {
        Self::from_toml(BUILTIN_PARAMS).expect("committed parameter file parses")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: Self = toml::from_str(text).map_err(|e| params_error(Path::new("<toml>"), e))?;
        file.validate().map_err(|e| params_error(Path::new("<toml>"), e))?;
        Ok(file)
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| params_error(path, e))?;
        let file: Self = if is_json(path) {
            serde_json::from_str(&text).map_err(|e| params_error(path, e))?
        } else {
            toml::from_str(&text).map_err(|e| params_error(path, e))?
        };
        file.validate().map_err(|e| params_error(path, e))?;
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = if is_json(path) {
            serde_json::to_string_pretty(self)?
        } else {
            toml::to_string_pretty(self).map_err(|e| params_error(path, e))?
        };
        std::fs::write(path, text)?;
        Ok(())
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if !(self.weight_eps > 0.0 && self.weight_eps.is_finite()) {
            return Err(format!("weight_eps must be positive, got {}", self.weight_eps));
        }
        for s in &self.scenarios {
            build_scenario(s.id).map_err(|e| e.to_string())?;
            if let Some(v) = s.sigma2 {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(format!("scenario {}: sigma2 must be >= 0", s.id));
                }
            }
            s.init.geometry.validate().map_err(|e| format!("scenario {}: {e}", s.id))?;
            for r in &s.runs {
                r.algo_params()
                    .validate()
                    .map_err(|e| format!("scenario {} {} {} {}: {e}", s.id, r.algorithm, r.mode, r.weights))?;
            }
        }
        Ok(())
    }

    pub fn scenario_params(&self, id: u8) -> Option<&ScenarioParams> {
        self.scenarios.iter().find(|s| s.id == id)
    }

    pub fn scenario_params_mut(&mut self, id: u8) -> &mut ScenarioParams {
        if let Some(i) = self.scenarios.iter().position(|s| s.id == id) {
            return &mut self.scenarios[i];
        }
        self.scenarios.push(ScenarioParams {
            id,
            sigma2: None,
            init: InitConfig::default(),
            runs: Vec::new(),
        });
        self.scenarios.sort_by_key(|s| s.id);
        let i = self.scenarios.iter().position(|s| s.id == id).expect("just inserted");
        &mut self.scenarios[i]
    }

    /// The scenario with any noise override applied.
    pub fn scenario(&self, id: u8) -> Result<Scenario> {
        let mut scenario = build_scenario(id)?;
        if let Some(v) = self.scenario_params(id).and_then(|s| s.sigma2) {
            scenario.sigma2 = v;
        }
        Ok(scenario)
    }

    pub fn init(&self, id: u8) -> InitConfig {
        self.scenario_params(id).map(|s| s.init).unwrap_or_default()
    }

    pub fn run_params(&self, id: u8, algorithm: Algorithm, mode: ThresholdMode, weights: WeightMode) -> Result<&RunParams> {
        self.scenario_params(id)
            .and_then(|s| s.runs.iter().find(|r| r.matches(algorithm, mode, weights)))
            .ok_or_else(|| BenchError::Params {
                path: "<params>".into(),
                reason: format!("no entry for scenario {id} {algorithm} {mode} {weights}"),
            })
    }

    /// Inserts or replaces the entry for the run's configuration.
    pub fn set_run(&mut self, id: u8, run: RunParams) {
        let s = self.scenario_params_mut(id);
        match s.runs.iter_mut().find(|r| r.matches(run.algorithm, run.mode, run.weights)) {
            Some(slot) => *slot = run,
            None => s.runs.push(run),
        }
    }

    pub fn run_spec(&self, id: u8, algorithm: Algorithm, mode: ThresholdMode, weights: WeightMode, seed: u64) -> Result<RunSpec> {
        let params = self.run_params(id, algorithm, mode, weights)?.algo_params();
        let mut spec = RunSpec::new(algorithm, params, seed);
        spec.init = self.init(id);
        spec.weight_eps = self.weight_eps;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
weight_eps = 2.0

[[scenario]]
id = 3
sigma2 = 0.3
init = { tikhonov = 0.001 }

[[scenario.run]]
algorithm = "idd"
mode = "hard"
weights = "adaptive"
tau = 12.5
gamma = 15.0
xi = 1.0
"#;

    #[test]
    fn parses_partial_toml() {
        let f = ParamsFile::from_toml(SAMPLE).unwrap();
        assert_eq!(f.weight_eps, 2.0);
        assert_eq!(f.init(3).tikhonov, 0.001);
        assert_eq!(f.init(3).threshold_factor, InitConfig::default().threshold_factor);
        assert_eq!(f.scenario(3).unwrap().sigma2, 0.3);
        assert_eq!(f.scenario(1).unwrap().sigma2, 2.0);
        let p = f.run_params(3, Algorithm::Idd, ThresholdMode::Hard, WeightMode::Adaptive).unwrap();
        assert_eq!(p.beta, 1.0);
        assert_eq!(p.max_iters, AlgoParams::default().max_iters);
        assert!(f.run_params(3, Algorithm::Idd, ThresholdMode::Soft, WeightMode::Unit).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ParamsFile::from_toml(&SAMPLE.replace("tau = 12.5", "tau = -1.0")).is_err());
        assert!(ParamsFile::from_toml(&SAMPLE.replace("id = 3", "id = 9")).is_err());
    }

    #[test]
    fn toml_and_json_round_trip() {
        let f = ParamsFile::from_toml(SAMPLE).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for name in ["p.toml", "p.json"] {
            let path = dir.path().join(name);
            f.save(&path).unwrap();
            assert_eq!(ParamsFile::load(&path).unwrap(), f);
        }
    }

    #[test]
    fn set_run_replaces_matching_entry() {
        let mut f = ParamsFile::from_toml(SAMPLE).unwrap();
        let mut r = f.run_params(3, Algorithm::Idd, ThresholdMode::Hard, WeightMode::Adaptive).unwrap().clone();
        r.gamma = 20.0;
        f.set_run(3, r);
        assert_eq!(f.scenario_params(3).unwrap().runs.len(), 1);
        assert_eq!(f.run_params(3, Algorithm::Idd, ThresholdMode::Hard, WeightMode::Adaptive).unwrap().gamma, 20.0);
        f.set_run(1, f.scenario_params(3).unwrap().runs[0].clone());
        assert_eq!(f.scenarios.iter().map(|s| s.id).collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn builtin_file_parses() {
        let _ = ParamsFile::builtin();
    }
}

//! One deblurring experiment: simulate, initialize, group, run, measure.

use std::sync::Arc;
use std::time::Instant;

use bm3d_frames::algorithms::{
    analysis_deblur, idd_bm3d_deblur, initial_estimate, synthesis_deblur, IddStep, InitConfig, InitialEstimate,
};
use bm3d_frames::blur::NOISE_RNG;
use bm3d_frames::metrics::{bsnr, isnr, psnr, DEFAULT_PEAK};
use bm3d_frames::{
    adaptive_weights, block_match, simulate_observation, AlgoParams, FramePair, GroupTransform, Image, IterationTrace,
    NoiseSpec, Problem, WeightMode,
};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::scenario::Scenario;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Analysis,
    Synthesis,
    Idd,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Analysis => "analysis",
            Self::Synthesis => "synthesis",
            Self::Idd => "idd",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analysis" => Ok(Self::Analysis),
            "synthesis" => Ok(Self::Synthesis),
            "idd" | "idd-bm3d" => Ok(Self::Idd),
            other => Err(BenchError::Params {
                path: "<cli>".into(),
                reason: format!("unknown algorithm {other:?}"),
            }),
        }
    }
}

/// Everything besides the image and scenario that determines a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub algorithm: Algorithm,
    pub params: AlgoParams,
    pub init: InitConfig,
    /// Significance threshold for adaptive weights, in units of `sigma`.
    pub weight_eps: f64,
    pub idd_step: IddStep,
    pub seed: u64,
}

impl RunSpec {
    pub fn new(algorithm: Algorithm, params: AlgoParams, seed: u64) -> Self {
        Self {
            algorithm,
            params,
            init: InitConfig::default(),
            weight_eps: DEFAULT_WEIGHT_EPS,
            idd_step: IddStep::Merged,
            seed,
        }
    }
}

pub const DEFAULT_WEIGHT_EPS: f64 = 2.7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub image: String,
    pub scenario: u8,
    pub algorithm: Algorithm,
    pub mode: bm3d_frames::ThresholdMode,
    pub weights: WeightMode,
    pub input_psnr: f64,
    pub bsnr: f64,
    pub init_isnr: f64,
    pub isnr: f64,
    pub output_psnr: f64,
    pub runtime_s: f64,
    pub iterations: usize,
    pub params: AlgoParams,
    pub seed: u64,
    pub noise_rng: String,
}

impl ExperimentResult {
    pub fn label(&self) -> String {
        format!("{} {} {}", self.algorithm, self.mode, self.weights)
    }
}

/// Result plus the images and trace it was computed from.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub result: ExperimentResult,
    pub truth: Image,
    pub observed: Image,
    pub init: Image,
    pub restored: Image,
    pub trace: IterationTrace,
    pub frame_fingerprint: u64,
}

/// Observation, initial estimate and frame for one image/scenario/seed.
///
/// Building this is the expensive shared part of a run; several algorithms
/// can be evaluated against one setup.
#[derive(Clone, Debug)]
pub struct Setup {
    pub image_name: String,
    pub truth: Image,
    pub observed: Image,
    pub blurred_clean: Image,
    pub sigma: f64,
    pub scenario: u8,
    pub seed: u64,
    pub blur: bm3d_frames::BlurOperator,
    pub initial: InitialEstimate,
    pub unit_frame: FramePair,
    pub init_spectrum_len: usize,
    weight_eps: f64,
    adaptive: Option<FramePair>,
}

impl Setup {
    pub fn new(image_name: &str, truth: &Image, scenario: &Scenario, init: &InitConfig, weight_eps: f64, seed: u64) -> Result<Self> {
        let (h, w) = truth.dims();
        let blur = scenario.blur_for(h, w)?;
        let sigma = scenario.sigma();
        let blurred_clean = blur.apply(truth)?;
        let observed = simulate_observation(truth, &blur, NoiseSpec::new(sigma, seed)?)?;
        let initial = initial_estimate(&observed, &blur, sigma, init)?;
        let grouping = Arc::new(block_match(&initial.image, &init.geometry)?);
        let transform = GroupTransform::dst_haar(init.geometry.block_side, init.geometry.group_size, init.dst)?;
        let unit_frame = FramePair::new(grouping, transform)?;
        Ok(Self {
            image_name: image_name.to_string(),
            truth: truth.clone(),
            observed,
            blurred_clean,
            sigma,
            scenario: scenario.id,
            seed,
            blur,
            init_spectrum_len: unit_frame.spectrum_len(),
            initial,
            unit_frame,
            weight_eps,
            adaptive: None,
        })
    }

    /// Frame with adaptive weights from the spectrum of the initial estimate.
    pub fn adaptive_frame(&mut self) -> Result<&FramePair> {
        if self.adaptive.is_none() {
            let spectrum = self.unit_frame.analysis(&self.initial.image)?;
            let weights = adaptive_weights(&spectrum, self.unit_frame.grouping().group_coeffs(), self.weight_eps * self.sigma)?;
            self.adaptive = Some(self.unit_frame.reweighted(weights)?);
        }
        Ok(self.adaptive.as_ref().expect("just built"))
    }

    pub fn frame(&mut self, mode: WeightMode) -> Result<FramePair> {
        Ok(match mode {
            WeightMode::Unit => self.unit_frame.clone(),
            WeightMode::Adaptive => self.adaptive_frame()?.clone(),
        })
    }

    pub fn run(&mut self, algorithm: Algorithm, params: &AlgoParams, idd_step: IddStep) -> Result<ExperimentOutput> {
        let frame = self.frame(params.weights)?;
        let fingerprint = frame.fingerprint();
        let problem = Problem {
            observed: &self.observed,
            blur: &self.blur,
            sigma: self.sigma,
            init: &self.initial.image,
            truth: Some(&self.truth),
        };
        let start = Instant::now();
        let (restored, trace) = match algorithm {
            Algorithm::Analysis => analysis_deblur(&problem, &frame, params),
            Algorithm::Synthesis => synthesis_deblur(&problem, &frame, params),
            Algorithm::Idd => idd_bm3d_deblur(&problem, &frame, params, idd_step),
        }
        .map_err(|e| BenchError::from(e).context(format!("{algorithm} on {} scenario {}", self.image_name, self.scenario)))?;
        let runtime_s = start.elapsed().as_secs_f64();

        let result = ExperimentResult {
            image: self.image_name.clone(),
            scenario: self.scenario,
            algorithm,
            mode: params.mode,
            weights: params.weights,
            input_psnr: psnr(&self.truth, &self.observed, DEFAULT_PEAK)?,
            bsnr: bsnr(&self.blurred_clean, self.sigma),
            init_isnr: isnr(&self.truth, &self.observed, &self.initial.image)?,
            isnr: isnr(&self.truth, &self.observed, &restored)?,
            output_psnr: psnr(&self.truth, &restored, DEFAULT_PEAK)?,
            runtime_s,
            iterations: trace.len(),
            params: *params,
            seed: self.seed,
            noise_rng: NOISE_RNG.to_string(),
        };
        Ok(ExperimentOutput {
            result,
            truth: self.truth.clone(),
            observed: self.observed.clone(),
            init: self.initial.image.clone(),
            restored,
            trace,
            frame_fingerprint: fingerprint,
        })
    }
}

/// Simulates the observation, builds the initial estimate, grouping and
/// weights, runs the algorithm and measures the result.
pub fn run_experiment(image_name: &str, truth: &Image, scenario: &Scenario, spec: &RunSpec) -> Result<ExperimentOutput> {
    let mut setup = Setup::new(image_name, truth, scenario, &spec.init, spec.weight_eps, spec.seed)?;
    setup.run(spec.algorithm, &spec.params, spec.idd_step)
}

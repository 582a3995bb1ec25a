//! Named experiment suites.

use std::path::Path;

use bm3d_frames::algorithms::IddStep;
use bm3d_frames::Image;

use crate::config::ParamsFile;
use crate::error::{BenchError, Result};
use crate::experiment::{ExperimentOutput, Setup};
use crate::table::{results_table, ResultsTable};
use crate::tune::table2_targets;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    /// The five algorithm rows of the Cameraman comparison, scenarios 1 to 6.
    Table2,
}

impl std::str::FromStr for Suite {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table2" => Ok(Self::Table2),
            other => Err(BenchError::Params {
                path: "<cli>".into(),
                reason: format!("unknown suite {other:?}; available: table2"),
            }),
        }
    }
}

/// Runs every configured row on each scenario. The observation, initial
/// estimate and grouping are shared between the rows of one scenario.
///
/// `progress` is called after each run.
pub fn run_table2(
    image_name: &str,
    truth: &Image,
    params: &ParamsFile,
    scenarios: &[u8],
    seed: u64,
    mut progress: impl FnMut(&ExperimentOutput),
) -> Result<Vec<ExperimentOutput>> {
    let mut outputs = Vec::new();
    for &id in scenarios {
        let scenario = params.scenario(id)?;
        let mut setup = Setup::new(image_name, truth, &scenario, &params.init(id), params.weight_eps, seed)
            .map_err(|e| e.context(format!("scenario {id} setup")))?;
        for target in table2_targets() {
            let run = params.run_params(id, target.algorithm, target.mode, target.weights)?;
            let out = setup.run(target.algorithm, &run.algo_params(), IddStep::Merged)?;
            progress(&out);
            outputs.push(out);
        }
    }
    Ok(outputs)
}

/// Writes the results table plus each run's trace and restored image.
pub fn write_outputs(outputs: &[ExperimentOutput], dir: impl AsRef<Path>, stem: &str) -> Result<ResultsTable> {
    let dir = dir.as_ref();
    let results: Vec<_> = outputs.iter().map(|o| o.result.clone()).collect();
    let table = results_table(&results)?;
    table.write(dir, stem)?;
    let runs = dir.join("runs");
    std::fs::create_dir_all(&runs)?;
    for o in outputs {
        let r = &o.result;
        let name = format!("{}_s{}_{}_{}_{}", r.image, r.scenario, r.algorithm, r.mode, r.weights);
        o.trace.write_csv(runs.join(format!("{name}_trace.csv")))?;
        o.restored.save(runs.join(format!("{name}.png")))?;
    }
    Ok(table)
}

//! ISNR tables: one block per image, algorithm rows, scenario columns.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use bm3d_frames::{ThresholdMode, WeightMode};

use crate::error::{BenchError, Result};
use crate::experiment::{Algorithm, ExperimentResult};

/// Row key; sorts in the order the rows are printed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowKey {
    rank: u8,
    pub algorithm: Algorithm,
    pub mode: ThresholdMode,
    pub weights: WeightMode,
}

impl RowKey {
    pub fn new(algorithm: Algorithm, mode: ThresholdMode, weights: WeightMode) -> Self {
        let rank = match (algorithm, mode, weights) {
            (Algorithm::Synthesis, ..) => 0,
            (Algorithm::Analysis, ..) => 1,
            (Algorithm::Idd, ThresholdMode::Soft, WeightMode::Unit) => 2,
            (Algorithm::Idd, ThresholdMode::Soft, WeightMode::Adaptive) => 3,
            (Algorithm::Idd, ThresholdMode::Hard, WeightMode::Unit) => 4,
            (Algorithm::Idd, ThresholdMode::Hard, WeightMode::Adaptive) => 5,
        };
        Self {
            rank,
            algorithm,
            mode,
            weights,
        }
    }

    fn label(&self) -> String {
        let name = match self.algorithm {
            Algorithm::Analysis => "Analysis",
            Algorithm::Synthesis => "Synthesis",
            Algorithm::Idd => "IDD-BM3D",
        };
        format!("{name} {} {}", self.mode, self.weights)
    }
}

#[derive(Clone, Debug, Default)]
pub struct ImageBlock {
    pub bsnr: BTreeMap<u8, f64>,
    pub input_psnr: BTreeMap<u8, f64>,
    pub rows: BTreeMap<RowKey, BTreeMap<u8, f64>>,
}

#[derive(Clone, Debug)]
pub struct ResultsTable {
    pub scenarios: Vec<u8>,
    /// Blocks in order of first appearance.
    pub images: Vec<(String, ImageBlock)>,
    pub results: Vec<ExperimentResult>,
}

/// Groups results by image, scenario and algorithm configuration. A later
/// result for the same cell replaces an earlier one.
pub fn results_table(results: &[ExperimentResult]) -> Result<ResultsTable> {
    if results.is_empty() {
        return Err(BenchError::EmptyResults);
    }
    let mut scenarios: Vec<u8> = results.iter().map(|r| r.scenario).collect();
    scenarios.sort_unstable();
    scenarios.dedup();

    let mut images: Vec<(String, ImageBlock)> = Vec::new();
    for r in results {
        let idx = match images.iter().position(|(n, _)| *n == r.image) {
            Some(i) => i,
            None => {
                images.push((r.image.clone(), ImageBlock::default()));
                images.len() - 1
            }
        };
        let block = &mut images[idx].1;
        block.bsnr.insert(r.scenario, r.bsnr);
        block.input_psnr.insert(r.scenario, r.input_psnr);
        block
            .rows
            .entry(RowKey::new(r.algorithm, r.mode, r.weights))
            .or_default()
            .insert(r.scenario, r.isnr);
    }
    Ok(ResultsTable {
        scenarios,
        images,
        results: results.to_vec(),
    })
}

fn cell(v: Option<&f64>) -> String {
    v.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into())
}

impl ResultsTable {
    pub fn isnr(&self, image: &str, scenario: u8, key: RowKey) -> Option<f64> {
        self.images
            .iter()
            .find(|(n, _)| n == image)
            .and_then(|(_, b)| b.rows.get(&key))
            .and_then(|row| row.get(&scenario).copied())
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        for (name, block) in &self.images {
            let _ = writeln!(out, "### {name}\n");
            out.push_str("| Method |");
            for s in &self.scenarios {
                let _ = write!(out, " {s} |");
            }
            out.push_str("\n|---|");
            out.push_str(&"---:|".repeat(self.scenarios.len()));
            out.push('\n');
            let mut line = |label: &str, values: &BTreeMap<u8, f64>| {
                let _ = write!(out, "| {label} |");
                for s in &self.scenarios {
                    let _ = write!(out, " {} |", cell(values.get(s)));
                }
                out.push('\n');
            };
            line("BSNR", &block.bsnr);
            line("Input PSNR", &block.input_psnr);
            for (key, values) in &block.rows {
                line(&key.label(), values);
            }
            out.push('\n');
        }
        out
    }

    /// One line per result with every recorded field.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "image",
            "scenario",
            "algorithm",
            "mode",
            "weights",
            "bsnr",
            "input_psnr",
            "init_isnr",
            "isnr",
            "output_psnr",
            "iterations",
            "runtime_s",
            "tau",
            "gamma",
            "xi",
            "beta",
            "seed",
            "noise_rng",
        ])?;
        for r in &self.results {
            w.write_record([
                r.image.clone(),
                r.scenario.to_string(),
                r.algorithm.to_string(),
                r.mode.to_string(),
                r.weights.to_string(),
                format!("{:.4}", r.bsnr),
                format!("{:.4}", r.input_psnr),
                format!("{:.4}", r.init_isnr),
                format!("{:.4}", r.isnr),
                format!("{:.4}", r.output_psnr),
                r.iterations.to_string(),
                format!("{:.3}", r.runtime_s),
                r.params.tau.to_string(),
                r.params.gamma.to_string(),
                r.params.xi.to_string(),
                r.params.beta.to_string(),
                r.seed.to_string(),
                r.noise_rng.clone(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| BenchError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes `<stem>.csv` and `<stem>.md` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{stem}.csv")), self.to_csv()?)?;
        std::fs::write(dir.join(format!("{stem}.md")), self.to_markdown())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bm3d_frames::AlgoParams;

    fn result(image: &str, scenario: u8, algorithm: Algorithm, mode: ThresholdMode, weights: WeightMode, isnr: f64) -> ExperimentResult {
        ExperimentResult {
            image: image.into(),
            scenario,
            algorithm,
            mode,
            weights,
            input_psnr: 22.0,
            bsnr: 30.0 + scenario as f64,
            init_isnr: 5.0,
            isnr,
            output_psnr: 30.0,
            runtime_s: 1.0,
            iterations: 10,
            params: AlgoParams::default(),
            seed: 0,
            noise_rng: "test".into(),
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(results_table(&[]), Err(BenchError::EmptyResults)));
    }

    #[test]
    fn single_result_single_row() {
        let t = results_table(&[result("cameraman", 3, Algorithm::Idd, ThresholdMode::Hard, WeightMode::Adaptive, 9.5)]).unwrap();
        assert_eq!(t.images.len(), 1);
        assert_eq!(t.images[0].1.rows.len(), 1);
        let md = t.to_markdown();
        assert!(md.contains("| IDD-BM3D hard adaptive | 9.50 |"));
        assert!(md.contains("| BSNR | 33.00 |"));
        assert_eq!(t.to_csv().unwrap().lines().count(), 2);
    }

    #[test]
    fn rows_follow_table_order_and_missing_cells_dash() {
        use Algorithm::*;
        use ThresholdMode::*;
        use WeightMode::*;
        let rs = [
            result("cameraman", 1, Idd, Hard, Adaptive, 8.0),
            result("cameraman", 2, Synthesis, Soft, Unit, 4.0),
            result("cameraman", 1, Analysis, Soft, Unit, 7.0),
            result("house", 1, Idd, Hard, Adaptive, 9.0),
        ];
        let t = results_table(&rs).unwrap();
        assert_eq!(t.scenarios, vec![1, 2]);
        let labels: Vec<String> = t.images[0].1.rows.keys().map(|k| k.label()).collect();
        assert_eq!(labels, ["Synthesis soft unit", "Analysis soft unit", "IDD-BM3D hard adaptive"]);
        assert!(t.to_markdown().contains("| Synthesis soft unit | - | 4.00 |"));
        assert_eq!(t.isnr("house", 1, RowKey::new(Idd, Hard, Adaptive)), Some(9.0));
    }

    #[test]
    fn sweep_shape_four_images_six_scenarios() {
        let mut rs = Vec::new();
        for image in ["cameraman", "lena", "house", "barbara"] {
            for s in 1..=6 {
                rs.push(result(image, s, Algorithm::Idd, ThresholdMode::Hard, WeightMode::Adaptive, s as f64));
            }
        }
        let t = results_table(&rs).unwrap();
        assert_eq!(t.images.len(), 4);
        let cells: usize = t.images.iter().map(|(_, b)| b.rows.values().map(|r| r.len()).sum::<usize>()).sum();
        assert_eq!(cells, 24);
    }
}

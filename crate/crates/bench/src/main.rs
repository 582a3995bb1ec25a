use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bm3d_frames::algorithms::IddStep;
use bm3d_frames::{AlgoParams, ThresholdMode, WeightMode};
use clap::{Parser, Subcommand};

use deblur_bench::config::ParamsFile;
use deblur_bench::error::{BenchError, Result};
use deblur_bench::experiment::{Algorithm, ExperimentOutput, RunSpec, Setup};
use deblur_bench::images::{default_data_dir, load_verified, STANDARD_IMAGES};
use deblur_bench::suite::{run_table2, write_outputs, Suite};
use deblur_bench::table::results_table;
use deblur_bench::tune::{table2_targets, tune_init, tune_run, TuneLog};
use deblur_bench::verify::{verify_frames, IDENTITY_TOL};

#[derive(Parser)]
#[command(name = "deblur", version, about = "BM3D-frame image deblurring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Blur and degrade an image with a scenario, then restore it.
    Run {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        scenario: u8,
        #[arg(long, default_value = "idd")]
        algo: Algorithm,
        #[arg(long, default_value = "hard")]
        thresh: ThresholdMode,
        #[arg(long, default_value = "adaptive")]
        weights: WeightMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// TOML or JSON parameter file; the committed defaults when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        xi: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Use the explicit two-step IDD-BM3D update instead of the merged one.
        #[arg(long)]
        two_step: bool,
    },
    /// Run a predefined experiment suite.
    Bench {
        #[arg(long, default_value = "table2")]
        suite: Suite,
        /// Test image; `data/cameraman256.png` when omitted.
        #[arg(long)]
        image: Option<PathBuf>,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
        scenarios: Vec<u8>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "results/table2")]
        out: PathBuf,
    },
    /// Check the frame identities on random groupings and weights.
    VerifyFrames {
        /// Largest image side; sides are drawn from `min(8, N)..=N`.
        #[arg(long, default_value_t = 16)]
        size: usize,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Grid-search the per-scenario parameters and write a parameter file.
    Tune {
        #[arg(long)]
        image: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
        scenarios: Vec<u8>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Tune only these algorithms; other entries are kept from `--base`.
        #[arg(long, value_delimiter = ',')]
        algos: Vec<Algorithm>,
        /// Existing file to start from; entries for tuned scenarios are replaced.
        #[arg(long)]
        base: Option<PathBuf>,
        #[arg(long, default_value = "configs/params.toml")]
        out: PathBuf,
        /// CSV log of every evaluated grid point.
        #[arg(long)]
        log: Option<PathBuf>,
    },
}

fn load_params(path: Option<&Path>) -> Result<ParamsFile> {
    match path {
        Some(p) => ParamsFile::load(p),
        None => Ok(ParamsFile::builtin()),
    }
}

fn default_image() -> PathBuf {
    default_data_dir().join(STANDARD_IMAGES[0].1)
}

fn summary(o: &ExperimentOutput) -> String {
    let r = &o.result;
    format!(
        "{} scenario {} {:<24} isnr {:6.2} dB  (init {:5.2}, bsnr {:5.2}, input psnr {:5.2})  {:3} it  {:6.1} s",
        r.image,
        r.scenario,
        r.label(),
        r.isnr,
        r.init_isnr,
        r.bsnr,
        r.input_psnr,
        r.iterations,
        r.runtime_s
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    image: &Path,
    scenario: u8,
    algo: Algorithm,
    thresh: ThresholdMode,
    weights: WeightMode,
    seed: u64,
    params: Option<&Path>,
    out: &Path,
    overrides: (Option<f64>, Option<f64>, Option<f64>, Option<usize>),
    two_step: bool,
) -> Result<()> {
    let file = load_params(params)?;
    let test = load_verified(image)?;
    if !test.verified {
        eprintln!("note: {} has no entry in the checksum list", image.display());
    }
    let scenario_def = file.scenario(scenario)?;
    let (tau, gamma, xi, max_iters) = overrides;
    let mut algo_params = match file.run_params(scenario, algo, thresh, weights) {
        Ok(r) => r.algo_params(),
        Err(_) if tau.is_some() && gamma.is_some() => AlgoParams {
                mode: thresh,
                weights,
                ..AlgoParams::default()
            },
        Err(e) => return Err(e.context("pass --tau and --gamma (and --xi) to run without a file entry")),
    };
    algo_params.tau = tau.unwrap_or(algo_params.tau);
    algo_params.gamma = gamma.unwrap_or(algo_params.gamma);
    algo_params.xi = xi.unwrap_or(algo_params.xi);
    algo_params.max_iters = max_iters.unwrap_or(algo_params.max_iters);

    let mut spec = RunSpec::new(algo, algo_params, seed);
    spec.init = file.init(scenario);
    spec.weight_eps = file.weight_eps;
    if two_step {
        spec.idd_step = IddStep::TwoStep;
    }
    let mut setup = Setup::new(&test.name, &test.image, &scenario_def, &spec.init, spec.weight_eps, seed)?;
    let output = setup.run(spec.algorithm, &spec.params, spec.idd_step)?;

    std::fs::create_dir_all(out)?;
    output.restored.save(out.join("restored.png"))?;
    output.observed.save(out.join("observed.png"))?;
    output.init.save(out.join("init.png"))?;
    output.trace.write_csv(out.join("trace.csv"))?;
    std::fs::write(out.join("result.json"), serde_json::to_string_pretty(&output.result)?)?;
    results_table(std::slice::from_ref(&output.result))?.write(out, "results")?;
    println!("{}", summary(&output));
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_bench(suite: Suite, image: Option<PathBuf>, params: Option<&Path>, scenarios: &[u8], seed: u64, out: &Path) -> Result<()> {
    let file = load_params(params)?;
    let test = load_verified(image.unwrap_or_else(default_image))?;
    let outputs = match suite {
        Suite::Table2 => run_table2(&test.name, &test.image, &file, scenarios, seed, |o| println!("{}", summary(o)))?,
    };
    let table = write_outputs(&outputs, out, "table2")?;
    println!("\n{}", table.to_markdown());
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_verify(size: usize, count: usize, seed: u64) -> Result<bool> {
    if size == 0 {
        return Err(BenchError::Params {
            path: "<cli>".into(),
            reason: "size must be positive".into(),
        });
    }
    let report = verify_frames(size.min(8)..=size, count, seed)?;
    for (i, c) in report.checks.iter().enumerate() {
        println!(
            "{:3} {:2}x{:<2} block {} K {} groups {:4}  |PsiPhi y - y| {:.1e}  PhiTPhi {:.1e}  PsiPsiT {:.1e}  {}",
            i,
            c.height,
            c.width,
            c.block_side,
            c.group_size,
            c.groups,
            c.reconstruction,
            c.gram,
            c.synthesis_gram,
            if c.passed() { "ok" } else { "FAIL" }
        );
    }
    let passed = report.passed();
    println!(
        "{} frames, worst residual {:.2e} (tolerance {IDENTITY_TOL:e}), {:.2} s: {}",
        report.checks.len(),
        report.worst(),
        report.elapsed.as_secs_f64(),
        if passed { "PASS" } else { "FAIL" }
    );
    Ok(passed)
}

struct TuneArgs<'a> {
    scenarios: &'a [u8],
    algos: &'a [Algorithm],
    seed: u64,
    base: Option<&'a Path>,
    out: &'a Path,
    log: Option<&'a Path>,
}

fn cmd_tune(image: Option<PathBuf>, args: &TuneArgs) -> Result<()> {
    let TuneArgs {
        scenarios,
        algos,
        seed,
        base,
        out,
        log: log_path,
    } = *args;
    let test = load_verified(image.unwrap_or_else(default_image))?;
    let mut file = match base {
        Some(p) => ParamsFile::load(p)?,
        None => ParamsFile::default(),
    };
    let mut log = TuneLog::default();
    for &id in scenarios {
        let scenario = file.scenario(id)?;
        let previous = file.init(id);
        let init = tune_init(&test.image, &scenario, previous, seed, &mut log)?;
        file.scenario_params_mut(id).init = init;
        eprintln!("scenario {id}: init tikhonov {:.3e} threshold factor {:.3}", init.tikhonov, init.threshold_factor);
        if !algos.is_empty() && init != previous {
            eprintln!("warning: scenario {id}: initial estimate changed; entries not re-tuned are stale");
        }
        let mut setup = Setup::new(&test.name, &test.image, &scenario, &init, file.weight_eps, seed)?;
        for target in table2_targets().into_iter().filter(|t| algos.is_empty() || algos.contains(&t.algorithm)) {
            let run = tune_run(&mut setup, &target, &mut log);
            eprintln!(
                "scenario {id}: {:<24} tau {:.4e} gamma {:.4e} xi {:.4e} -> isnr {:?}",
                target.label(),
                run.tau,
                run.gamma,
                run.xi,
                run.tuned_isnr
            );
            file.set_run(id, run);
            // keep partial progress on disk
            file.save(out)?;
            if let Some(p) = log_path {
                std::fs::write(p, log.to_csv())?;
            }
        }
    }
    file.save(out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            image,
            scenario,
            algo,
            thresh,
            weights,
            seed,
            params,
            out,
            tau,
            gamma,
            xi,
            max_iters,
            two_step,
        } => cmd_run(
            &image,
            scenario,
            algo,
            thresh,
            weights,
            seed,
            params.as_deref(),
            &out,
            (tau, gamma, xi, max_iters),
            two_step,
        )
        .map(|_| true),
        Command::Bench {
            suite,
            image,
            params,
            scenarios,
            seed,
            out,
        } => cmd_bench(suite, image, params.as_deref(), &scenarios, seed, &out).map(|_| true),
        Command::VerifyFrames { size, count, seed } => cmd_verify(size, count, seed),
        Command::Tune {
            image,
            scenarios,
            algos,
            seed,
            base,
            out,
            log,
        } => cmd_tune(
            image,
            &TuneArgs {
                scenarios: &scenarios,
                algos: &algos,
                seed,
                base: base.as_deref(),
                out: &out,
                log: log.as_deref(),
            },
        )
        .map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

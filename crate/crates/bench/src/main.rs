use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use planar_loc::ransac::{expected_iterations, RansacConfig, RansacError, SolverChoice};
use planar_loc::selector::{trial_success_probability, EnvironmentProfile};
use planar_loc::sim::generate_instance;
use planar_loc::solvers::SolverKind;
use planar_loc::CameraModel;
use planar_loc_bench::corrfile::{read_corr_file, write_instance, CameraSpec};
use planar_loc_bench::experiment::{
    normalize_records, run_to_csv, write_records, RunOptions, CSV_VERSION_LINE,
};
use planar_loc_bench::localize::localize;
use planar_loc_bench::spec::{parse_sim_config, ExperimentSpec};

const EXIT_FAILURE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_INSUFFICIENT: u8 = 3;
const EXIT_ESTIMATION: u8 = 4;

#[derive(Parser)]
#[command(
    name = "bench",
    version,
    about = "Planar pose benchmarks and single-shot localization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec and write the results CSV.
    Run {
        spec: PathBuf,
        #[arg(short, long, default_value = "results.csv")]
        output: PathBuf,
        /// Override a spec key, e.g. `--set trials_per_cell=20`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Keep finished cells of an existing output file.
        #[arg(long)]
        resume: bool,
        /// Record wall time per row (makes the CSV run-dependent).
        #[arg(long)]
        wall_time: bool,
        /// Also write success rates normalized by the best method per cell.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(short, long)]
        quiet: bool,
    },
    /// Estimate the pose from a correspondence file.
    Localize {
        corr_file: PathBuf,
        #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
        solver: SolverArg,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON camera replacing the one in the file header.
        #[arg(long)]
        camera: Option<PathBuf>,
        #[arg(long, default_value_t = 4.0)]
        reproj_threshold: f64,
        #[arg(long, default_value_t = 1e-3)]
        sampson_threshold: f64,
        #[arg(long)]
        refine: bool,
        /// Stop once the confidence bound is met.
        #[arg(long)]
        adaptive: bool,
        #[arg(long)]
        json: bool,
    },
    /// Write a simulated instance as a correspondence file.
    Gen {
        sim_config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print single-sample success probabilities and iteration counts.
    Model {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        gamma: f64,
        /// Inlier rate of dense 2D-2D matches.
        #[arg(long)]
        lambda_d: Option<f64>,
        #[arg(long, default_value_t = 0.99)]
        confidence: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    #[value(name = "1p1dp")]
    OneP1DP,
    #[value(name = "2dp")]
    TwoDP,
    Auto,
}

struct Failure(u8, String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(EXIT_FAILURE, e.to_string())
    }
}

fn parse_err(e: impl std::fmt::Display) -> Failure {
    Failure(EXIT_PARSE, e.to_string())
}

fn normalized_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map_or_else(|| "results".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.normalized.csv"))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            spec,
            output,
            mut overrides,
            trials,
            iters,
            seed,
            resume,
            wall_time,
            normalize,
            threads,
            quiet,
        } => {
            trials.map(|v| overrides.push(format!("trials_per_cell={v}")));
            iters.map(|v| overrides.push(format!("ransac_iterations={v}")));
            seed.map(|v| overrides.push(format!("seed={v}")));
            let spec = ExperimentSpec::from_path(&spec, &overrides).map_err(parse_err)?;
            let opts = RunOptions {
                wall_time,
                resume,
                threads,
                progress: !quiet,
            };
            let records = run_to_csv(&spec, &output, &opts)?;
            if normalize {
                let path = normalized_path(&output);
                write_records(
                    &path,
                    &format!("{CSV_VERSION_LINE} normalized"),
                    &normalize_records(&records),
                )?;
            }
        }
        Command::Localize {
            corr_file,
            solver,
            iters,
            seed,
            camera,
            reproj_threshold,
            sampson_threshold,
            refine,
            adaptive,
            json,
        } => {
            let camera = match camera {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(parse_err)?;
                    let spec: CameraSpec = serde_json::from_str(&text).map_err(parse_err)?;
                    Some(spec.to_model().map_err(parse_err)?)
                }
                None => None,
            };
            let file = read_corr_file(&corr_file, camera).map_err(parse_err)?;
            let cfg = RansacConfig {
                max_iterations: iters,
                reproj_threshold_px: reproj_threshold,
                sampson_threshold,
                solver: match solver {
                    SolverArg::OneP1DP => SolverChoice::OneP1DP,
                    SolverArg::TwoDP => SolverChoice::TwoDP,
                    SolverArg::Auto => SolverChoice::Mix,
                },
                seed,
                adaptive,
                refine,
                ..RansacConfig::default()
            };
            let report = localize(&file, &cfg).map_err(|e| match e {
                RansacError::InsufficientCorrespondences(_) => {
                    Failure(EXIT_INSUFFICIENT, e.to_string())
                }
                RansacError::EstimationFailed => Failure(EXIT_ESTIMATION, e.to_string()),
                RansacError::InvalidConfig(_) => parse_err(e),
            })?;
            if json {
                println!("{}", serde_json::to_string(&report)?);
            } else {
                println!("{report}");
            }
        }
        Command::Gen {
            sim_config,
            output,
            overrides,
        } => {
            let text = std::fs::read_to_string(&sim_config).map_err(parse_err)?;
            let cfg = parse_sim_config(&text, &overrides).map_err(parse_err)?;
            let camera = CameraModel::simulation();
            let inst = generate_instance(&cfg, &camera)?;
            let file = std::fs::File::create(&output)?;
            write_instance(std::io::BufWriter::new(file), &inst, &camera)?;
        }
        Command::Model {
            lambda,
            gamma,
            lambda_d,
            confidence,
        } => {
            if !(confidence > 0.0 && confidence < 1.0) {
                return Err(parse_err("confidence must lie in (0, 1)"));
            }
            let sparse = EnvironmentProfile::scsd(lambda, gamma).map_err(parse_err)?;
            let mut rows = vec![
                (
                    "1P1DP",
                    trial_success_probability(&sparse, SolverKind::OneP1DP)?,
                ),
                (
                    "2DP",
                    trial_success_probability(&sparse, SolverKind::TwoDP)?,
                ),
            ];
            if let Some(ld) = lambda_d {
                let dense = EnvironmentProfile::dcsd(lambda, gamma, ld).map_err(parse_err)?;
                rows.push((
                    "1P1DP dense",
                    trial_success_probability(&dense, SolverKind::OneP1DP)?,
                ));
            }
            println!("solver\ttrial_success\titerations");
            for (name, p) in rows {
                println!("{name}\t{p:.6}\t{}", expected_iterations(p, confidence));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("bench: {msg}");
            ExitCode::from(code)
        }
    }
}

//! Monte-Carlo sweeps over the synthetic world.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context};
use planar_loc::geometry::{rotation_error, translation_error};
use planar_loc::ransac::{ransac_estimate, RansacConfig, SolverChoice};
use planar_loc::selector::{RuleSelector, SelectionInput, SolverSelector};
use planar_loc::sim::{generate_instance, make_rig, SimConfig, SimInstance};
use planar_loc::solvers::SolverKind;
use planar_loc::CameraModel;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::spec::{ExperimentSpec, Family, SolverSpec};

/// First line of every results file. Bump the version on any column change.
pub const CSV_VERSION_LINE: &str = "# bench-results v1";
pub const CSV_COLUMNS: [&str; 12] = [
    "experiment",
    "noise_px",
    "outlier_rate",
    "depth_rate",
    "solver",
    "trials",
    "success_rate",
    "mean_t_err_m",
    "mean_r_err_deg",
    "mean_iters",
    "wall_ms",
    "seed",
];
/// Thread count for sweeps; unset or 0 lets rayon decide.
pub const THREADS_ENV: &str = "BENCH_THREADS";

const RIG_CAMERAS: usize = 3;
/// 95% quantiles of the chi distribution with two and one degrees of freedom.
const CHI_2DOF_95: f64 = 2.447_746_830_680_816;
const CHI_1DOF_95: f64 = 1.959_963_984_540_054;
const MIN_REPROJ_THRESHOLD_PX: f64 = 4.0;
const MIN_SAMPSON_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub noise_px: f64,
    pub outlier_rate: f64,
    pub depth_rate: f64,
}

pub fn cells(spec: &ExperimentSpec) -> Vec<Cell> {
    let mut out = Vec::new();
    for &noise_px in &spec.noise_px {
        for &outlier_rate in &spec.outlier_rates {
            for &depth_rate in &spec.depth_rates {
                out.push(Cell {
                    index: out.len(),
                    noise_px,
                    outlier_rate,
                    depth_rate,
                });
            }
        }
    }
    out
}

/// Thresholds at the 95% band of the cell's pixel noise, never below the
/// library defaults. Noise enters both views, hence the `sqrt(2)` on the
/// reprojection side; the Sampson distance already folds both views in.
pub fn inlier_thresholds(spec: &ExperimentSpec, noise_px: f64, focal_px: f64) -> (f64, f64) {
    let reproj = spec.reproj_threshold_px.unwrap_or_else(|| {
        (CHI_2DOF_95 * std::f64::consts::SQRT_2 * noise_px).max(MIN_REPROJ_THRESHOLD_PX)
    });
    let sampson = spec
        .sampson_threshold
        .unwrap_or_else(|| (CHI_1DOF_95 * noise_px / focal_px).max(MIN_SAMPSON_THRESHOLD));
    (reproj, sampson)
}

/// Independent, order-free seed for item `index` of `stream`.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

/// One method on one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    /// Translation error in m, rotation error in degrees, iterations.
    pub estimate: Option<(f64, f64, usize)>,
    pub success: bool,
    pub elapsed_ms: f64,
}

impl TrialOutcome {
    const FAILED: TrialOutcome = TrialOutcome {
        estimate: None,
        success: false,
        elapsed_ms: 0.0,
    };
}

fn choice(family: Family) -> SolverChoice {
    match family {
        Family::OneP1DP => SolverChoice::OneP1DP,
        Family::TwoDP => SolverChoice::TwoDP,
        Family::Mix => SolverChoice::Mix,
    }
}

/// Runs every listed method on trial `trial` of `cell`.
pub fn run_trial(spec: &ExperimentSpec, cell: &Cell, trial: usize) -> Vec<TrialOutcome> {
    let camera = CameraModel::simulation();
    let stream = 2 * cell.index as u64;
    let sim = SimConfig {
        n_points_per_camera: spec.points_per_camera,
        pixel_noise_sigma: cell.noise_px,
        depth_noise_sigma: spec.depth_noise_m,
        outlier_rate: cell.outlier_rate,
        reliable_depth_rate: cell.depth_rate,
        rig: make_rig(if spec.rig { RIG_CAMERAS } else { 1 }, 60.0, 0.25),
        seed: derive_seed(spec.seed, stream, trial as u64),
        ..SimConfig::default()
    };
    let Ok(rig) = generate_instance(&sim, &camera) else {
        return vec![TrialOutcome::FAILED; spec.solvers.len()];
    };
    let mono = if spec.rig {
        rig.primary_camera()
    } else {
        rig.clone()
    };
    let (reproj, sampson) = inlier_thresholds(spec, cell.noise_px, camera.fx());
    let base = RansacConfig {
        max_iterations: spec.ransac_iterations,
        reproj_threshold_px: reproj,
        sampson_threshold: sampson,
        seed: derive_seed(spec.seed, stream + 1, trial as u64),
        refine: spec.refine,
        selector_tau: spec.selector_tau,
        ..RansacConfig::default()
    };
    let selector = RuleSelector {
        tau: spec.selector_tau,
    };

    // Mix runs exactly the solver it selects, so its result is shared
    let mut cache: HashMap<SolverSpec, TrialOutcome> = HashMap::new();
    let solve = |s: SolverSpec, cache: &mut HashMap<SolverSpec, TrialOutcome>| -> TrialOutcome {
        if let Some(hit) = cache.get(&s) {
            return *hit;
        }
        let data: &SimInstance = if s.rig { &rig } else { &mono };
        let cfg = RansacConfig {
            solver: choice(s.family),
            max_iterations: if s.single { 1 } else { base.max_iterations },
            refine: base.refine && !s.single,
            ..base
        };
        let start = Instant::now();
        let res = ransac_estimate(&data.dps, &data.ps, &data.graph, &cfg, &camera);
        let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
        let out = match res {
            Ok(r) => {
                let t = translation_error(&r.pose.translation(), &data.gt_pose.translation());
                let a = rotation_error(&r.pose.rotation(), &data.gt_pose.rotation());
                TrialOutcome {
                    estimate: Some((t, a, r.iterations_used)),
                    success: t < spec.success_translation_m && a < spec.success_rotation_deg,
                    elapsed_ms,
                }
            }
            Err(_) => TrialOutcome {
                elapsed_ms,
                ..TrialOutcome::FAILED
            },
        };
        cache.insert(s, out);
        out
    };
    spec.solvers
        .iter()
        .map(|&s| {
            if s.family != Family::Mix {
                return solve(s, &mut cache);
            }
            let data = if s.rig { &rig } else { &mono };
            let reliable = data.dps.iter().filter(|d| d.is_reliable()).count();
            let start = Instant::now();
            let picked = selector.select(&SelectionInput::new(reliable, data.len()));
            let select_ms = start.elapsed().as_secs_f64() * 1e3;
            let family = match picked {
                Ok(SolverKind::TwoDP) => Family::TwoDP,
                Ok(_) => Family::OneP1DP,
                Err(_) => return TrialOutcome::FAILED,
            };
            let mut out = solve(SolverSpec { family, ..s }, &mut cache);
            out.elapsed_ms += select_ms;
            out
        })
        .collect()
}

fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

/// Errors span many decades; ten significant digits in exponent form.
fn fmt_error(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.9e}")
    } else {
        String::new()
    }
}

/// Aggregates per-trial outcomes into one CSV record per method.
pub fn cell_records(
    spec: &ExperimentSpec,
    cell: &Cell,
    trials: &[Vec<TrialOutcome>],
    wall_time: bool,
) -> Vec<Vec<String>> {
    spec.solvers
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let col: Vec<&TrialOutcome> = trials.iter().map(|t| &t[k]).collect();
            let n = col.len() as f64;
            let est: Vec<(f64, f64, usize)> = col.iter().filter_map(|o| o.estimate).collect();
            let m = est.len() as f64;
            let mean = |f: &dyn Fn(&(f64, f64, usize)) -> f64| {
                if est.is_empty() {
                    f64::NAN
                } else {
                    est.iter().map(f).sum::<f64>() / m
                }
            };
            let successes = col.iter().filter(|o| o.success).count() as f64;
            let wall: f64 = col.iter().map(|o| o.elapsed_ms).sum();
            vec![
                spec.experiment.name().to_string(),
                fmt_float(cell.noise_px),
                fmt_float(cell.outlier_rate),
                fmt_float(cell.depth_rate),
                s.to_string(),
                col.len().to_string(),
                fmt_float(successes / n),
                fmt_error(mean(&|e| e.0)),
                fmt_error(mean(&|e| e.1)),
                fmt_float(mean(&|e| e.2 as f64)),
                if wall_time {
                    format!("{wall:.3}")
                } else {
                    String::new()
                },
                spec.seed.to_string(),
            ]
        })
        .collect()
}

pub fn run_cell(spec: &ExperimentSpec, cell: &Cell) -> Vec<Vec<TrialOutcome>> {
    (0..spec.trials_per_cell)
        .into_par_iter()
        .map(|t| run_trial(spec, cell, t))
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub wall_time: bool,
    /// Keep finished cells of an existing output file.
    pub resume: bool,
    /// Overrides the thread count from the environment.
    pub threads: Option<usize>,
    pub progress: bool,
}

fn thread_pool(opts: &RunOptions) -> anyhow::Result<rayon::ThreadPool> {
    let threads = match opts.threads {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .with_context(|| format!("{THREADS_ENV}={v} is not a count"))?,
            Err(_) => 0,
        },
    };
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()?)
}

/// All records of the experiment, in memory.
pub fn run_experiment(
    spec: &ExperimentSpec,
    opts: &RunOptions,
) -> anyhow::Result<Vec<Vec<String>>> {
    let pool = thread_pool(opts)?;
    let mut out = Vec::new();
    for cell in cells(spec) {
        let trials = pool.install(|| run_cell(spec, &cell));
        out.extend(cell_records(spec, &cell, &trials, opts.wall_time));
    }
    Ok(out)
}

/// Reads the data records of a results file. A last line without its
/// newline is taken to be torn and dropped.
pub fn read_results(path: &Path) -> anyhow::Result<Vec<Vec<String>>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let Some(body) = complete
        .strip_prefix(CSV_VERSION_LINE)
        .and_then(|b| b.strip_prefix('\n'))
    else {
        bail!("{} is not a {CSV_VERSION_LINE:?} file", path.display());
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(body.as_bytes());
    if reader.headers()?.iter().ne(CSV_COLUMNS) {
        bail!("{} has unexpected columns", path.display());
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.len() != CSV_COLUMNS.len() {
            bail!("{}: malformed record {:?}", path.display(), rec);
        }
        out.push(rec.iter().map(str::to_string).collect());
    }
    Ok(out)
}

fn create_results(path: &Path, version: &str) -> anyhow::Result<csv::Writer<File>> {
    let mut file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    writeln!(file, "{version}")?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    w.write_record(CSV_COLUMNS)?;
    Ok(w)
}

/// Runs the experiment into `path`, one flushed block of rows per cell, so
/// that an interrupted run can pick up at the first unfinished cell.
pub fn run_to_csv(
    spec: &ExperimentSpec,
    path: &Path,
    opts: &RunOptions,
) -> anyhow::Result<Vec<Vec<String>>> {
    let pool = thread_pool(opts)?;
    let previous = if opts.resume && path.exists() {
        read_results(path)?
    } else {
        Vec::new()
    };
    let mut w = create_results(path, CSV_VERSION_LINE)?;
    let all = cells(spec);
    let mut out = Vec::new();
    for cell in &all {
        let key = cell_records(spec, cell, &[], false);
        let done: Vec<Vec<String>> = previous
            .iter()
            .filter(|r| key.iter().any(|k| r[..5] == k[..5]))
            .cloned()
            .collect();
        let complete = done.len() == key.len()
            && done.iter().zip(&key).all(|(d, k)| {
                d[4] == k[4]
                    && d[5] == spec.trials_per_cell.to_string()
                    && d[11] == k[11]
                    && d[10].is_empty() != opts.wall_time
            });
        let records = if complete {
            done
        } else {
            let trials = pool.install(|| run_cell(spec, cell));
            cell_records(spec, cell, &trials, opts.wall_time)
        };
        for r in &records {
            w.write_record(r)?;
        }
        w.flush()?;
        if opts.progress {
            eprintln!(
                "cell {}/{}{}",
                cell.index + 1,
                all.len(),
                if complete { " (kept)" } else { "" }
            );
        }
        out.extend(records);
    }
    Ok(out)
}

/// Divides each success rate by the best rate among the methods of its cell.
pub fn normalize_records(records: &[Vec<String>]) -> Vec<Vec<String>> {
    let mut best: HashMap<&[String], f64> = HashMap::new();
    for r in records {
        let s: f64 = r[6].parse().unwrap_or(0.0);
        let e = best.entry(&r[..4]).or_insert(0.0);
        *e = e.max(s);
    }
    records
        .iter()
        .map(|r| {
            let s: f64 = r[6].parse().unwrap_or(0.0);
            let b = best[&r[..4]];
            let mut n = r.clone();
            n[6] = fmt_float(if b > 0.0 { s / b } else { 0.0 });
            n
        })
        .collect()
}

pub fn write_records(path: &Path, version: &str, records: &[Vec<String>]) -> anyhow::Result<()> {
    let mut w = create_results(path, version)?;
    for r in records {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(overrides: &[&str]) -> ExperimentSpec {
        let text = "experiment = \"success-vs-outliers\"\noutlier_rates = [0.5]\ndepth_rates = [0.5, 0.2]\n\
                    trials_per_cell = 4\nransac_iterations = 50\nsolvers = [\"1p1dp\", \"mix\", \"mc2dp\"]\nseed = 11";
        let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        ExperimentSpec::parse(text, &overrides).unwrap()
    }

    #[test]
    fn seeds_differ_by_stream_and_index() {
        let a = derive_seed(1, 0, 0);
        assert_eq!(a, derive_seed(1, 0, 0));
        assert_ne!(a, derive_seed(1, 0, 1));
        assert_ne!(a, derive_seed(1, 1, 0));
        assert_ne!(a, derive_seed(2, 0, 0));
    }

    #[test]
    fn thresholds_scale_with_noise() {
        let spec = tiny(&[]);
        assert_eq!(inlier_thresholds(&spec, 0.0, 800.0), (4.0, 1e-3));
        let (r, s) = inlier_thresholds(&spec, 2.0, 800.0);
        assert!((r - 6.923).abs() < 1e-3 && (s - 4.9e-3).abs() < 1e-5);
        let fixed = tiny(&["reproj_threshold_px=3.0", "sampson_threshold=2e-3"]);
        assert_eq!(inlier_thresholds(&fixed, 5.0, 800.0), (3.0, 2e-3));
    }

    #[test]
    fn records_follow_cells_and_solvers() {
        let spec = tiny(&[]);
        let recs = run_experiment(&spec, &RunOptions::default()).unwrap();
        assert_eq!(recs.len(), 2 * 3);
        assert_eq!(
            recs[0][..5],
            ["success-vs-outliers", "2", "0.5", "0.5", "1p1dp"]
        );
        assert_eq!(
            recs[5][..5],
            ["success-vs-outliers", "2", "0.5", "0.2", "mc2dp"]
        );
        assert!(recs
            .iter()
            .all(|r| r.len() == CSV_COLUMNS.len() && r[10].is_empty() && r[11] == "11"));
    }

    #[test]
    fn noise_free_accuracy_cell_is_exact() {
        let over = [
            "noise_px=[0.0]",
            "depth_noise_m=0.0",
            "trials_per_cell=3",
            "ransac_iterations=100",
        ];
        let over: Vec<String> = over.iter().map(|s| s.to_string()).collect();
        let spec = ExperimentSpec::parse("experiment = \"accuracy-vs-noise\"", &over).unwrap();
        let recs = run_experiment(&spec, &RunOptions::default()).unwrap();
        assert_eq!(recs.len(), 8);
        for r in &recs {
            let (t, a): (f64, f64) = (r[7].parse().unwrap(), r[8].parse().unwrap());
            assert!(t < 1e-6 && a < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn mix_matches_the_selected_solver() {
        // gamma = 0.5 < tau: the rule picks 1P1DP
        let spec = tiny(&["depth_rates=[0.5]"]);
        let recs = run_experiment(&spec, &RunOptions::default()).unwrap();
        assert_eq!(recs[0][5..10], recs[1][5..10]);
    }

    #[test]
    fn resume_keeps_finished_cells() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let spec = tiny(&[]);
        let full = run_to_csv(&spec, &path, &RunOptions::default()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        // cut inside the second cell, leaving a torn line
        let text = String::from_utf8(bytes.clone()).unwrap();
        let cut = text.match_indices('\n').nth(5).unwrap().0 + 10;
        std::fs::write(&path, &text[..cut]).unwrap();
        let opts = RunOptions {
            resume: true,
            ..RunOptions::default()
        };
        assert_eq!(run_to_csv(&spec, &path, &opts).unwrap(), full);
        assert_eq!(std::fs::read(&path).unwrap(), bytes);
    }

    #[test]
    fn normalization_divides_by_cell_best() {
        let rec = |cell: &str, solver: &str, rate: &str| -> Vec<String> {
            let mut r = vec![String::new(); 12];
            r[1] = cell.into();
            r[4] = solver.into();
            r[6] = rate.into();
            r
        };
        let n = normalize_records(&[
            rec("1", "a", "0.5"),
            rec("1", "b", "0.25"),
            rec("2", "a", "0"),
        ]);
        assert_eq!([&n[0][6], &n[1][6], &n[2][6]], ["1", "0.5", "0"]);
    }
}

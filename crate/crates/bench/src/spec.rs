//! Experiment and simulation config files.
//!
//! Both are TOML key-value files. `key=value` overrides are applied to the
//! parsed table before it is checked, so flags win over the file.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use planar_loc::sim::{make_rig, SimConfig};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Toml(#[from] toml::de::Error),
    #[error("override `{0}` is not of the form key=value")]
    BadOverride(String),
    #[error("invalid spec: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    AccuracyVsNoise,
    SuccessVsOutliers,
    SelectorStudy,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::AccuracyVsNoise => "accuracy-vs-noise",
            ExperimentKind::SuccessVsOutliers => "success-vs-outliers",
            ExperimentKind::SelectorStudy => "selector-study",
        }
    }
}

/// Minimal solver family of a benchmarked method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    OneP1DP,
    TwoDP,
    Mix,
}

/// A benchmarked method: a solver family on the primary camera or the whole
/// rig, either inside RANSAC or from a single minimal sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SolverSpec {
    pub family: Family,
    pub rig: bool,
    pub single: bool,
}

impl FromStr for SolverSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (single, rest) = match s.strip_prefix("single-") {
            Some(r) => (true, r),
            None => (false, s),
        };
        let (rig, base) = match rest.strip_prefix("mc") {
            Some(r) => (true, r),
            None => (false, rest),
        };
        let family = match base {
            "1p1dp" => Family::OneP1DP,
            "2dp" => Family::TwoDP,
            "mix" if !single => Family::Mix,
            _ => return Err(format!("unknown solver `{s}`")),
        };
        Ok(Self {
            family,
            rig,
            single,
        })
    }
}

impl fmt::Display for SolverSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.single {
            f.write_str("single-")?;
        }
        if self.rig {
            f.write_str("mc")?;
        }
        f.write_str(match self.family {
            Family::OneP1DP => "1p1dp",
            Family::TwoDP => "2dp",
            Family::Mix => "mix",
        })
    }
}

impl<'de> Deserialize<'de> for SolverSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    experiment: ExperimentKind,
    noise_px: Option<Vec<f64>>,
    outlier_rates: Option<Vec<f64>>,
    depth_rates: Option<Vec<f64>>,
    trials_per_cell: Option<usize>,
    ransac_iterations: Option<usize>,
    solvers: Option<Vec<SolverSpec>>,
    rig: Option<bool>,
    success_translation_m: Option<f64>,
    success_rotation_deg: Option<f64>,
    seed: Option<u64>,
    points_per_camera: Option<usize>,
    depth_noise_m: Option<f64>,
    reproj_threshold_px: Option<f64>,
    sampson_threshold: Option<f64>,
    refine: Option<bool>,
    selector_tau: Option<f64>,
}

/// A parsed and checked experiment spec.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    pub noise_px: Vec<f64>,
    pub outlier_rates: Vec<f64>,
    pub depth_rates: Vec<f64>,
    pub trials_per_cell: usize,
    pub ransac_iterations: usize,
    pub solvers: Vec<SolverSpec>,
    /// Simulate the three-camera rig; mono methods use its first camera.
    pub rig: bool,
    pub success_translation_m: f64,
    pub success_rotation_deg: f64,
    pub seed: u64,
    pub points_per_camera: usize,
    pub depth_noise_m: f64,
    /// `None` scales the threshold with the pixel noise of the cell.
    pub reproj_threshold_px: Option<f64>,
    pub sampson_threshold: Option<f64>,
    pub refine: bool,
    pub selector_tau: f64,
}

const GRID_OUTLIERS: [f64; 4] = [0.5, 0.6, 0.7, 0.8];
const GRID_DEPTHS: [f64; 5] = [0.5, 0.4, 0.3, 0.2, 0.1];

fn names(list: &[&str]) -> Vec<SolverSpec> {
    list.iter()
        .map(|s| s.parse().expect("built-in solver name"))
        .collect()
}

impl ExperimentSpec {
    pub fn from_path(path: &Path, overrides: &[String]) -> Result<Self, SpecError> {
        Self::parse(&std::fs::read_to_string(path)?, overrides)
    }

    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, SpecError> {
        let table = apply_overrides(text.parse()?, overrides)?;
        let raw: RawSpec = table.try_into()?;
        let spec = Self::from_raw(raw);
        spec.validate()?;
        Ok(spec)
    }

    fn from_raw(raw: RawSpec) -> Self {
        let accuracy = raw.experiment == ExperimentKind::AccuracyVsNoise;
        let default_solvers = match raw.experiment {
            ExperimentKind::AccuracyVsNoise => names(&[
                "1p1dp",
                "2dp",
                "mc1p1dp",
                "mc2dp",
                "single-1p1dp",
                "single-2dp",
                "single-mc1p1dp",
                "single-mc2dp",
            ]),
            ExperimentKind::SuccessVsOutliers => names(&["1p1dp", "2dp", "mc1p1dp", "mc2dp"]),
            ExperimentKind::SelectorStudy => {
                names(&["1p1dp", "2dp", "mix", "mc1p1dp", "mc2dp", "mcmix"])
            }
        };
        let solvers = raw.solvers.unwrap_or(default_solvers);
        let rig = raw.rig.unwrap_or_else(|| solvers.iter().any(|s| s.rig));
        Self {
            experiment: raw.experiment,
            noise_px: raw.noise_px.unwrap_or_else(|| {
                if accuracy {
                    vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]
                } else {
                    vec![2.0]
                }
            }),
            outlier_rates: raw.outlier_rates.unwrap_or_else(|| {
                if accuracy {
                    vec![0.0]
                } else {
                    GRID_OUTLIERS.to_vec()
                }
            }),
            depth_rates: raw.depth_rates.unwrap_or_else(|| {
                if accuracy {
                    vec![1.0]
                } else {
                    GRID_DEPTHS.to_vec()
                }
            }),
            trials_per_cell: raw.trials_per_cell.unwrap_or(100),
            ransac_iterations: raw
                .ransac_iterations
                .unwrap_or(if accuracy { 5000 } else { 500 }),
            solvers,
            rig,
            success_translation_m: raw.success_translation_m.unwrap_or(0.1),
            success_rotation_deg: raw.success_rotation_deg.unwrap_or(1.0),
            seed: raw.seed.unwrap_or(0),
            points_per_camera: raw.points_per_camera.unwrap_or(50),
            depth_noise_m: raw.depth_noise_m.unwrap_or(0.05),
            reproj_threshold_px: raw.reproj_threshold_px,
            sampson_threshold: raw.sampson_threshold,
            refine: raw.refine.unwrap_or(false),
            selector_tau: raw
                .selector_tau
                .unwrap_or(planar_loc::selector::DEFAULT_TAU),
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let bad = |m: &str| Err(SpecError::Invalid(m.to_string()));
        if self.noise_px.is_empty() || self.outlier_rates.is_empty() || self.depth_rates.is_empty()
        {
            return bad("sweeps must be non-empty");
        }
        if self.noise_px.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("noise levels must be non-negative");
        }
        if self
            .outlier_rates
            .iter()
            .chain(&self.depth_rates)
            .any(|r| !(0.0..=1.0).contains(r))
        {
            return bad("rates must lie in [0, 1]");
        }
        if self.solvers.is_empty() {
            return bad("no solvers listed");
        }
        if self.solvers.iter().any(|s| s.rig) && !self.rig {
            return bad("multi-camera solvers need rig = true");
        }
        for (i, s) in self.solvers.iter().enumerate() {
            if self.solvers[..i].contains(s) {
                return Err(SpecError::Invalid(format!("solver `{s}` listed twice")));
            }
        }
        if !(self.success_translation_m > 0.0 && self.success_rotation_deg > 0.0) {
            return bad("success thresholds must be positive");
        }
        if self.trials_per_cell == 0 || self.ransac_iterations == 0 || self.points_per_camera == 0 {
            return bad("counts must be positive");
        }
        if !(self.depth_noise_m >= 0.0) {
            return bad("depth noise must be non-negative");
        }
        for t in [self.reproj_threshold_px, self.sampson_threshold]
            .into_iter()
            .flatten()
        {
            if !(t > 0.0) {
                return bad("inlier thresholds must be positive");
            }
        }
        if !(0.0..=1.0).contains(&self.selector_tau) {
            return bad("selector_tau must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Sets each `key=value` in `table`. Values are read as TOML, falling back
/// to a bare string.
pub fn apply_overrides(
    mut table: toml::Table,
    overrides: &[String],
) -> Result<toml::Table, SpecError> {
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| SpecError::BadOverride(item.clone()))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(SpecError::BadOverride(item.clone()));
        }
        let value = value.trim();
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        table.insert(key.to_string(), parsed);
    }
    Ok(table)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    n_points_per_camera: Option<usize>,
    cube_half_extent: Option<f64>,
    translation_range: Option<f64>,
    rotation_range: Option<f64>,
    pixel_noise_sigma: Option<f64>,
    depth_noise_sigma: Option<f64>,
    outlier_rate: Option<f64>,
    reliable_depth_rate: Option<f64>,
    rig_cameras: Option<usize>,
    rig_yaw_step_deg: Option<f64>,
    rig_spacing_m: Option<f64>,
    seed: Option<u64>,
}

/// Simulation config for `bench gen`; absent keys keep the defaults.
pub fn parse_sim_config(text: &str, overrides: &[String]) -> Result<SimConfig, SpecError> {
    let raw: RawSim = apply_overrides(text.parse()?, overrides)?.try_into()?;
    let d = SimConfig::default();
    let cameras = raw.rig_cameras.unwrap_or(1);
    if cameras == 0 {
        return Err(SpecError::Invalid("rig_cameras must be at least 1".into()));
    }
    let cfg = SimConfig {
        n_points_per_camera: raw.n_points_per_camera.unwrap_or(d.n_points_per_camera),
        cube_half_extent: raw.cube_half_extent.unwrap_or(d.cube_half_extent),
        translation_range: raw.translation_range.unwrap_or(d.translation_range),
        rotation_range: raw.rotation_range.unwrap_or(d.rotation_range),
        pixel_noise_sigma: raw.pixel_noise_sigma.unwrap_or(d.pixel_noise_sigma),
        depth_noise_sigma: raw.depth_noise_sigma.unwrap_or(d.depth_noise_sigma),
        outlier_rate: raw.outlier_rate.unwrap_or(d.outlier_rate),
        reliable_depth_rate: raw.reliable_depth_rate.unwrap_or(d.reliable_depth_rate),
        rig: make_rig(
            cameras,
            raw.rig_yaw_step_deg.unwrap_or(60.0),
            raw.rig_spacing_m.unwrap_or(0.25),
        ),
        seed: raw.seed.unwrap_or(d.seed),
    };
    cfg.validate()
        .map_err(|e| SpecError::Invalid(e.to_string()))?;
    Ok(cfg)
}

//! Seeded RANSAC over mixed depth and plain correspondences.

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{essential, reprojection_residual, sampson_residual, sampson_with_essential};
use crate::refine::{refine_pose, RefineConfig, RefineStatus};
use crate::selector::{RuleSelector, SelectionInput, SelectorError, SolverSelector, DEFAULT_TAU};
use crate::solvers::{build_relative_pose, solve_1p1dp, solve_2dp, SolverKind};
use crate::{
    CameraModel, CorrespondenceDP, CorrespondenceP, FramePoseGraph, PlanarPose, PoseCandidateSet,
};

pub const DEFAULT_ITERATION_CAP: usize = 100_000;
/// Smallest inlier set a result may rest on.
pub const MIN_INLIERS: usize = 2;
const REFINE_ROUNDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverChoice {
    OneP1DP,
    TwoDP,
    /// Pick per query with the rule selector.
    Mix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    pub max_iterations: usize,
    pub confidence: f64,
    pub reproj_threshold_px: f64,
    /// In normalized image coordinates.
    pub sampson_threshold: f64,
    pub solver: SolverChoice,
    pub seed: u64,
    /// Stop early once the confidence bound is met.
    pub adaptive: bool,
    pub refine: bool,
    pub refine_cfg: RefineConfig,
    pub selector_tau: f64,
    /// Keep the drawn minimal samples in the result.
    pub record_samples: bool,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            confidence: 0.99,
            reproj_threshold_px: 4.0,
            sampson_threshold: 1e-3,
            solver: SolverChoice::OneP1DP,
            seed: 0,
            adaptive: false,
            refine: false,
            refine_cfg: RefineConfig::default(),
            selector_tau: DEFAULT_TAU,
            record_samples: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RansacError {
    #[error("insufficient correspondences: {0}")]
    InsufficientCorrespondences(&'static str),
    #[error("no hypothesis reached the minimal inlier count")]
    EstimationFailed,
    #[error("invalid config: {0}")]
    InvalidConfig(&'static str),
}

impl RansacConfig {
    pub fn validate(&self) -> Result<(), RansacError> {
        if !(self.reproj_threshold_px > 0.0 && self.sampson_threshold > 0.0) {
            return Err(RansacError::InvalidConfig("thresholds must be positive"));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(RansacError::InvalidConfig("confidence must lie in (0, 1)"));
        }
        if self.max_iterations == 0 {
            return Err(RansacError::InvalidConfig(
                "max_iterations must be at least 1",
            ));
        }
        Ok(())
    }
}

/// One member of a minimal sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMember {
    /// Index into the depth matches, used with its depth.
    Depth(usize),
    /// Index into the depth matches, used as a plain 2D-2D match.
    DepthAsPlain(usize),
    /// Index into the plain matches.
    Plain(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleRecord {
    pub iteration: usize,
    pub solver: SolverKind,
    pub members: [SampleMember; 2],
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult {
    pub pose: PlanarPose,
    pub inlier_mask_dp: Vec<bool>,
    pub inlier_mask_p: Vec<bool>,
    pub iterations_used: usize,
    /// Inlier count, equal to the popcount of both masks.
    pub score: usize,
    /// Sum of `min(residual / threshold, 1)` over all correspondences.
    pub residual_sum: f64,
    pub refined: bool,
    pub solver: SolverKind,
    pub best_iteration: usize,
    pub samples: Vec<SampleRecord>,
}

impl RansacResult {
    pub fn inlier_count(&self) -> usize {
        self.inlier_mask_dp
            .iter()
            .chain(&self.inlier_mask_p)
            .filter(|&&b| b)
            .count()
    }
}

/// Iterations needed to draw one all-inlier sample with probability
/// `confidence`, saturating at `cap`.
pub fn expected_iterations_capped(single_trial_success: f64, confidence: f64, cap: usize) -> usize {
    if single_trial_success >= 1.0 {
        return 1;
    }
    if single_trial_success <= 0.0 {
        return cap;
    }
    let n = ((1.0 - confidence).ln() / (1.0 - single_trial_success).ln()).ceil();
    if n.is_finite() {
        (n.max(1.0) as usize).min(cap)
    } else {
        cap
    }
}

pub fn expected_iterations(single_trial_success: f64, confidence: f64) -> usize {
    expected_iterations_capped(single_trial_success, confidence, DEFAULT_ITERATION_CAP)
}

/// Per-iteration random stream; iteration `i` draws the same sample however
/// the loop is scheduled.
fn iteration_rng(seed: u64, iteration: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration as u64);
    rng
}

/// Reprojection-scored depth match.
struct DepthItem {
    pair: usize,
    point: Vector3<f64>,
    observed: Vector2<f64>,
}

/// Sampson-scored match: plain matches and depth matches without reliable depth.
struct PlainItem {
    pair: usize,
    xq: Vector3<f64>,
    xr: Vector3<f64>,
}

/// Correspondences laid out for fast scoring.
struct Scorer<'a> {
    graph: &'a FramePoseGraph,
    camera: &'a CameraModel,
    pairs: Vec<(usize, usize)>,
    depth: Vec<DepthItem>,
    plain: Vec<PlainItem>,
    reproj_thr: f64,
    sampson_thr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Score {
    count: usize,
    depth_count: usize,
    sum: f64,
}

impl Score {
    fn beats(&self, other: &Score) -> bool {
        self.count > other.count || (self.count == other.count && self.sum < other.sum)
    }
}

impl<'a> Scorer<'a> {
    fn new(
        dps: &[CorrespondenceDP],
        ps: &[CorrespondenceP],
        graph: &'a FramePoseGraph,
        camera: &'a CameraModel,
        cfg: &RansacConfig,
    ) -> Result<Self, RansacError> {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        let mut pair_of = |q: usize, r: usize| -> Result<usize, RansacError> {
            graph.query(q).and(graph.reference(r)).map_err(|_| {
                RansacError::InvalidConfig("correspondence frame missing from graph")
            })?;
            Ok(match pairs.iter().position(|&p| p == (q, r)) {
                Some(i) => i,
                None => {
                    pairs.push((q, r));
                    pairs.len() - 1
                }
            })
        };
        let mut depth = Vec::new();
        let mut plain = Vec::new();
        for dp in dps {
            let pair = pair_of(dp.query_frame, dp.ref_frame)?;
            if dp.is_reliable() {
                let observed = camera.denormalize(&dp.query).map_err(|_| {
                    RansacError::InvalidConfig("query observation does not map to a pixel")
                })?;
                depth.push(DepthItem {
                    pair,
                    point: dp.point3d,
                    observed,
                });
            } else {
                plain.push(PlainItem {
                    pair,
                    xq: dp.query.to_ray(),
                    xr: dp.reference_point().to_ray(),
                });
            }
        }
        for p in ps {
            let pair = pair_of(p.query_frame, p.ref_frame)?;
            plain.push(PlainItem {
                pair,
                xq: p.query.to_ray(),
                xr: p.reference.to_ray(),
            });
        }
        Ok(Self {
            graph,
            camera,
            pairs,
            depth,
            plain,
            reproj_thr: cfg.reproj_threshold_px,
            sampson_thr: cfg.sampson_threshold,
        })
    }

    fn total(&self) -> usize {
        self.depth.len() + self.plain.len()
    }

    /// Scores `pose`, giving up once it can no longer reach `floor` inliers.
    fn score(&self, pose: &PlanarPose, floor: usize) -> Option<Score> {
        let mut transforms = Vec::with_capacity(self.pairs.len());
        for &(q, r) in &self.pairs {
            let t = build_relative_pose(pose, q, r, self.graph).expect("frames checked at setup");
            let e: Option<Matrix3<f64>> = (t.translation().norm() >= 1e-9).then(|| essential(&t));
            transforms.push((t, e));
        }
        let mut count = 0;
        let mut sum = 0.0;
        let mut remaining = self.total();
        for item in &self.depth {
            remaining -= 1;
            let (t, _) = &transforms[item.pair];
            let r = match self
                .camera
                .project_camera_point(&t.transform_point(&item.point))
            {
                Ok(px) => (px - item.observed).norm() / self.reproj_thr,
                Err(_) => f64::INFINITY,
            };
            if r < 1.0 {
                count += 1;
                sum += r;
            } else {
                sum += 1.0;
            }
            if count + remaining < floor {
                return None;
            }
        }
        let depth_count = count;
        for item in &self.plain {
            remaining -= 1;
            let r = match &transforms[item.pair].1 {
                Some(e) => sampson_with_essential(e, &item.xq, &item.xr).abs() / self.sampson_thr,
                None => f64::INFINITY,
            };
            if r < 1.0 {
                count += 1;
                sum += r;
            } else {
                sum += 1.0;
            }
            if count + remaining < floor {
                return None;
            }
        }
        Some(Score {
            count,
            depth_count,
            sum,
        })
    }
}

/// Robust planar pose from depth and plain matches.
pub fn ransac_estimate(
    dps: &[CorrespondenceDP],
    ps: &[CorrespondenceP],
    graph: &FramePoseGraph,
    cfg: &RansacConfig,
    camera: &CameraModel,
) -> Result<RansacResult, RansacError> {
    let selector = RuleSelector {
        tau: cfg.selector_tau,
    };
    ransac_estimate_with(dps, ps, graph, cfg, camera, &selector)
}

/// Like [`ransac_estimate`] with a caller-supplied selector for
/// [`SolverChoice::Mix`].
pub fn ransac_estimate_with(
    dps: &[CorrespondenceDP],
    ps: &[CorrespondenceP],
    graph: &FramePoseGraph,
    cfg: &RansacConfig,
    camera: &CameraModel,
    selector: &dyn SolverSelector,
) -> Result<RansacResult, RansacError> {
    cfg.validate()?;
    let reliable: Vec<usize> = (0..dps.len()).filter(|&i| dps[i].is_reliable()).collect();
    let total = dps.len() + ps.len();
    let kind = match cfg.solver {
        SolverChoice::OneP1DP => SolverKind::OneP1DP,
        SolverChoice::TwoDP => SolverKind::TwoDP,
        SolverChoice::Mix => match selector.select(&SelectionInput::new(reliable.len(), total)) {
            Ok(k) => k,
            Err(SelectorError::NoViableSolver) => {
                return Err(RansacError::InsufficientCorrespondences(
                    "neither solver's minimum is met",
                ))
            }
            Err(_) => return Err(RansacError::InvalidConfig("selector rejected the input")),
        },
    };
    match kind {
        SolverKind::TwoDP if reliable.len() < 2 => {
            return Err(RansacError::InsufficientCorrespondences(
                "2DP needs two matches with reliable depth",
            ))
        }
        SolverKind::OneP1DP | SolverKind::MC1P1DP if reliable.is_empty() => {
            return Err(RansacError::InsufficientCorrespondences(
                "1P1DP needs a match with reliable depth",
            ))
        }
        SolverKind::OneP1DP | SolverKind::MC1P1DP if total < 2 => {
            return Err(RansacError::InsufficientCorrespondences(
                "1P1DP needs a second correspondence",
            ))
        }
        _ => {}
    }

    let scorer = Scorer::new(dps, ps, graph, camera, cfg)?;
    let mut best: Option<(PlanarPose, Score, usize)> = None;
    let mut samples = Vec::new();
    let mut budget = cfg.max_iterations;
    let mut iterations_used = 0;
    let mut iteration = 0;
    while iteration < budget {
        let mut rng = iteration_rng(cfg.seed, iteration);
        let (members, solved) = match kind {
            SolverKind::TwoDP => {
                let a = rng.random_range(0..reliable.len());
                let mut b = rng.random_range(0..reliable.len() - 1);
                if b >= a {
                    b += 1;
                }
                let (i, j) = (reliable[a], reliable[b]);
                let m = [SampleMember::Depth(i), SampleMember::Depth(j)];
                (m, solve_2dp(&dps[i], &dps[j], graph))
            }
            _ => {
                let i = reliable[rng.random_range(0..reliable.len())];
                // partner from every other correspondence, depth matches as plain
                let mut k = rng.random_range(0..total - 1);
                if k >= i {
                    k += 1;
                }
                let (member, partner) = if k < dps.len() {
                    (SampleMember::DepthAsPlain(k), dps[k].to_p())
                } else {
                    (SampleMember::Plain(k - dps.len()), ps[k - dps.len()])
                };
                (
                    [SampleMember::Depth(i), member],
                    solve_1p1dp(&dps[i], &partner, graph),
                )
            }
        };
        let candidates = solved.unwrap_or_else(|_| PoseCandidateSet::new(kind));
        if cfg.record_samples {
            samples.push(SampleRecord {
                iteration,
                solver: kind,
                members,
                candidates: candidates.len(),
            });
        }
        let mut improved = false;
        for pose in candidates.iter() {
            let floor = best.map_or(MIN_INLIERS, |(_, s, _)| s.count.max(MIN_INLIERS));
            if let Some(score) = scorer.score(pose, floor) {
                if score.count >= MIN_INLIERS && best.is_none_or(|(_, b, _)| score.beats(&b)) {
                    best = Some((*pose, score, iteration));
                    improved = true;
                }
            }
        }
        iteration += 1;
        iterations_used = iteration;
        if cfg.adaptive && improved {
            let (_, score, _) = best.expect("just improved");
            let p = trial_success_estimate(kind, &scorer, &score);
            budget = budget.min(expected_iterations(p, cfg.confidence));
        }
    }

    let Some((pose, score, best_iteration)) = best else {
        return Err(RansacError::EstimationFailed);
    };
    let (mut pose, mut refined) = (pose, false);
    let (mut mask_dp, mut mask_p) = inlier_masks(&pose, dps, ps, graph, camera, cfg);
    if cfg.refine {
        // refit, re-classify, refit again while the inlier set keeps growing
        let mut count = score.count;
        for _ in 0..REFINE_ROUNDS {
            let in_dps: Vec<CorrespondenceDP> = (0..dps.len())
                .filter(|&i| mask_dp[i] && dps[i].is_reliable())
                .map(|i| dps[i])
                .collect();
            let mut in_ps: Vec<CorrespondenceP> = (0..dps.len())
                .filter(|&i| mask_dp[i] && !dps[i].is_reliable())
                .map(|i| dps[i].to_p())
                .collect();
            in_ps.extend((0..ps.len()).filter(|&i| mask_p[i]).map(|i| ps[i]));
            let Ok(out) = refine_pose(&pose, &in_dps, &in_ps, graph, camera, &cfg.refine_cfg)
            else {
                break;
            };
            if out.status == RefineStatus::SingularNormalEquations {
                break;
            }
            let rescored = scorer.score(&out.pose, 0).expect("no floor");
            if rescored.count < count {
                break;
            }
            pose = out.pose;
            refined = true;
            let masks = inlier_masks(&pose, dps, ps, graph, camera, cfg);
            let unchanged = masks == (mask_dp.clone(), mask_p.clone());
            (mask_dp, mask_p) = masks;
            count = rescored.count;
            if unchanged {
                break;
            }
        }
    }
    let final_score = scorer.score(&pose, 0).expect("no floor");
    let solver = if kind == SolverKind::OneP1DP && !graph.is_anchor_only() {
        SolverKind::MC1P1DP
    } else {
        kind
    };
    let result = RansacResult {
        pose,
        inlier_mask_dp: mask_dp,
        inlier_mask_p: mask_p,
        iterations_used,
        score: final_score.count,
        residual_sum: final_score.sum,
        refined,
        solver,
        best_iteration,
        samples,
    };
    debug_assert_eq!(result.score, result.inlier_count());
    Ok(result)
}

/// Single-sample success implied by the current best inlier set.
fn trial_success_estimate(kind: SolverKind, scorer: &Scorer<'_>, score: &Score) -> f64 {
    let depth_rate = score.depth_count as f64 / scorer.depth.len() as f64;
    match kind {
        SolverKind::TwoDP => depth_rate * depth_rate,
        _ => depth_rate * (score.count as f64 / scorer.total() as f64),
    }
}

/// Inlier flags from the public residual functions.
pub fn inlier_masks(
    pose: &PlanarPose,
    dps: &[CorrespondenceDP],
    ps: &[CorrespondenceP],
    graph: &FramePoseGraph,
    camera: &CameraModel,
    cfg: &RansacConfig,
) -> (Vec<bool>, Vec<bool>) {
    let transform = |q, r| build_relative_pose(pose, q, r, graph).ok();
    let plain_ok = |t: &crate::RelativeTransform, p: &CorrespondenceP| {
        sampson_residual(t, p).is_ok_and(|r| r < cfg.sampson_threshold)
    };
    let mask_dp = dps
        .iter()
        .map(|dp| match transform(dp.query_frame, dp.ref_frame) {
            Some(t) if dp.is_reliable() => {
                reprojection_residual(&t, dp, camera) < cfg.reproj_threshold_px
            }
            Some(t) => plain_ok(&t, &dp.to_p()),
            None => false,
        })
        .collect();
    let mask_p = ps
        .iter()
        .map(|p| transform(p.query_frame, p.ref_frame).is_some_and(|t| plain_ok(&t, p)))
        .collect();
    (mask_dp, mask_p)
}

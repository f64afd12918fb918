//! Synthetic planar-motion worlds with controlled noise, outliers and depth
//! coverage.

use nalgebra::{Vector2, Vector3};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::geometry::yaw_rotation;
use crate::solvers::{build_relative_pose, ANCHOR};
use crate::{
    CameraModel, CorrespondenceDP, CorrespondenceP, FramePoseGraph, PlanarPose, RelativeTransform,
};

/// Draws per point slot before the current pose is abandoned.
pub const SLOT_DRAW_CAP: usize = 10_000;
/// Poses tried before generation gives up.
pub const POSE_ATTEMPT_CAP: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("could not place enough visible points after {0} pose draws")]
    VisibilityExhausted(usize),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_points_per_camera: usize,
    pub cube_half_extent: f64,
    /// Query translation is drawn from `[-r, r]` on x and z.
    pub translation_range: f64,
    /// Query yaw is drawn from `[-r, r]`.
    pub rotation_range: f64,
    pub pixel_noise_sigma: f64,
    pub depth_noise_sigma: f64,
    pub outlier_rate: f64,
    pub reliable_depth_rate: f64,
    /// `T_{q_i q}` per rig camera; the first entry is the identity.
    pub rig: Vec<RelativeTransform>,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_points_per_camera: 50,
            cube_half_extent: 8.0,
            translation_range: 2.0,
            rotation_range: std::f64::consts::PI,
            pixel_noise_sigma: 0.0,
            depth_noise_sigma: 0.05,
            outlier_rate: 0.0,
            reliable_depth_rate: 1.0,
            rig: make_rig(1, 60.0, 0.25),
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if self.n_points_per_camera == 0 {
            return bad("n_points_per_camera must be positive");
        }
        if !(self.cube_half_extent > 0.0
            && self.translation_range > 0.0
            && self.rotation_range > 0.0)
        {
            return bad("ranges must be positive");
        }
        if !(self.pixel_noise_sigma >= 0.0 && self.depth_noise_sigma >= 0.0) {
            return bad("noise levels must be non-negative");
        }
        for rate in [self.outlier_rate, self.reliable_depth_rate] {
            if !(0.0..=1.0).contains(&rate) {
                return bad("rates must lie in [0, 1]");
            }
        }
        match self.rig.first() {
            Some(first) if first.is_identity() => Ok(()),
            _ => bad("rig must start with the identity"),
        }
    }
}

/// The standard camera rig: each camera is yawed by `yaw_step_deg` relative
/// to the previous one, with its centre `spacing_m` to the previous camera's
/// right. Entry `i` maps primary-camera points into camera `i`.
pub fn make_rig(n_cameras: usize, yaw_step_deg: f64, spacing_m: f64) -> Vec<RelativeTransform> {
    let r = yaw_rotation(yaw_step_deg.to_radians());
    let step = RelativeTransform::new(r, -(r * Vector3::new(spacing_m, 0.0, 0.0)))
        .expect("yaw is a rotation");
    let mut rig = vec![RelativeTransform::identity()];
    for i in 1..n_cameras.max(1) {
        rig.push(step.compose(&rig[i - 1]));
    }
    rig
}

/// Ground-truth flags of one generated correspondence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorrLabel {
    pub camera: usize,
    pub is_outlier: bool,
    pub has_reliable_depth: bool,
}

#[derive(Debug, Clone)]
pub struct SimInstance {
    pub gt_pose: PlanarPose,
    pub dps: Vec<CorrespondenceDP>,
    pub ps: Vec<CorrespondenceP>,
    pub graph: FramePoseGraph,
    pub dp_labels: Vec<CorrLabel>,
    pub p_labels: Vec<CorrLabel>,
}

impl SimInstance {
    /// The correspondences of the primary camera alone.
    pub fn primary_camera(&self) -> SimInstance {
        let keep_dp: Vec<usize> = (0..self.dps.len())
            .filter(|&i| self.dp_labels[i].camera == ANCHOR)
            .collect();
        let keep_p: Vec<usize> = (0..self.ps.len())
            .filter(|&i| self.p_labels[i].camera == ANCHOR)
            .collect();
        SimInstance {
            gt_pose: self.gt_pose,
            dps: keep_dp.iter().map(|&i| self.dps[i]).collect(),
            ps: keep_p.iter().map(|&i| self.ps[i]).collect(),
            graph: FramePoseGraph::new(),
            dp_labels: keep_dp.iter().map(|&i| self.dp_labels[i]).collect(),
            p_labels: keep_p.iter().map(|&i| self.p_labels[i]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.dps.len() + self.ps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn count_for(rate: f64, n: usize) -> usize {
    ((rate * n as f64) - 1e-9).ceil().clamp(0.0, n as f64) as usize
}

fn draw_pose(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> PlanarPose {
    let r = cfg.rotation_range;
    let t = cfg.translation_range;
    PlanarPose::new(
        rng.random_range(-r..=r),
        rng.random_range(-t..=t),
        rng.random_range(-t..=t),
    )
}

/// One visible point of camera `i`, in world (anchor reference) and camera
/// reference coordinates, with its clean query pixel.
struct Visible {
    in_ref: Vector3<f64>,
    ref_px: Vector2<f64>,
    query_px: Vector2<f64>,
}

pub fn generate_instance(cfg: &SimConfig, camera: &CameraModel) -> Result<SimInstance, SimError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut graph = FramePoseGraph::new();
    for (i, offset) in cfg.rig.iter().enumerate().skip(1) {
        graph
            .insert_query(i, *offset)
            .and_then(|_| graph.insert_reference(i, offset.inverse()))
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    }

    // pose first, then fill every camera; a pose with an unfillable camera is redrawn
    let mut attempt = 0;
    let (gt_pose, visible) = loop {
        if attempt == POSE_ATTEMPT_CAP {
            return Err(SimError::VisibilityExhausted(attempt));
        }
        attempt += 1;
        let pose = draw_pose(cfg, &mut rng);
        if let Some(vis) = fill_cameras(cfg, camera, &graph, &pose, &mut rng) {
            break (pose, vis);
        }
    };

    let pixel_noise = Normal::new(0.0, cfg.pixel_noise_sigma).expect("sigma validated");
    let depth_noise = Normal::new(0.0, cfg.depth_noise_sigma).expect("sigma validated");
    let n = cfg.n_points_per_camera;
    let mut out = SimInstance {
        gt_pose,
        dps: Vec::new(),
        ps: Vec::new(),
        graph,
        dp_labels: Vec::new(),
        p_labels: Vec::new(),
    };

    for (cam_idx, points) in visible.iter().enumerate() {
        let outliers = flags(&mut rng, n, count_for(cfg.outlier_rate, n));
        let reliable = flags(&mut rng, n, count_for(cfg.reliable_depth_rate, n));
        for (k, v) in points.iter().enumerate() {
            let mut query_px = v.query_px;
            if outliers[k] {
                query_px = corrupt(cfg, camera, &out.graph, cam_idx, &v.in_ref, &mut rng)?;
            }
            let query_px = query_px + noise2(&pixel_noise, &mut rng);
            let ref_px = v.ref_px + noise2(&pixel_noise, &mut rng);
            let query = camera
                .normalize(&query_px)
                .expect("aligned simulation camera");
            let reference = camera
                .normalize(&ref_px)
                .expect("aligned simulation camera");
            let label = CorrLabel {
                camera: cam_idx,
                is_outlier: outliers[k],
                has_reliable_depth: reliable[k],
            };
            if reliable[k] {
                // range noise along the (noisy) reference ray
                let ray = reference.to_ray().normalize();
                let mut range = v.in_ref.norm() + depth_noise.sample(&mut rng);
                if range <= 1e-3 {
                    range = v.in_ref.norm();
                }
                let point = ray * range;
                let dp = CorrespondenceDP::new(query, point, cam_idx, cam_idx, f64::INFINITY)
                    .expect("simulated point in front of reference");
                out.dps.push(dp);
                out.dp_labels.push(label);
            } else {
                let p = CorrespondenceP::new(query, reference, cam_idx, cam_idx)
                    .expect("finite observations");
                out.ps.push(p);
                out.p_labels.push(label);
            }
        }
    }
    Ok(out)
}

fn flags(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<bool> {
    let mut f = vec![false; n];
    for i in sample(rng, n, k) {
        f[i] = true;
    }
    f
}

fn noise2(dist: &Normal<f64>, rng: &mut ChaCha8Rng) -> Vector2<f64> {
    Vector2::new(dist.sample(rng), dist.sample(rng))
}

fn fill_cameras(
    cfg: &SimConfig,
    camera: &CameraModel,
    graph: &FramePoseGraph,
    pose: &PlanarPose,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<Vec<Visible>>> {
    let h = cfg.cube_half_extent;
    let mut all = Vec::with_capacity(cfg.rig.len());
    for cam_idx in 0..cfg.rig.len() {
        let from_world = graph.reference(cam_idx).ok()?.inverse();
        let to_query = build_relative_pose(pose, cam_idx, cam_idx, graph).ok()?;
        let mut points = Vec::with_capacity(cfg.n_points_per_camera);
        for _ in 0..cfg.n_points_per_camera {
            let mut found = None;
            for _ in 0..SLOT_DRAW_CAP {
                let world = Vector3::new(
                    rng.random_range(-h..=h),
                    rng.random_range(-h..=h),
                    rng.random_range(-h..=h),
                );
                let in_ref = from_world.transform_point(&world);
                let Some(ref_px) = visible_pixel(camera, &in_ref) else {
                    continue;
                };
                let Some(query_px) = visible_pixel(camera, &to_query.transform_point(&in_ref))
                else {
                    continue;
                };
                found = Some(Visible {
                    in_ref,
                    ref_px,
                    query_px,
                });
                break;
            }
            points.push(found?);
        }
        all.push(points);
    }
    Some(all)
}

fn visible_pixel(camera: &CameraModel, point: &Vector3<f64>) -> Option<Vector2<f64>> {
    let px = camera.project_camera_point(point).ok()?;
    camera.contains(&px).then_some(px)
}

/// Query pixel of the point under a random wrong pose.
fn corrupt(
    cfg: &SimConfig,
    camera: &CameraModel,
    graph: &FramePoseGraph,
    cam_idx: usize,
    in_ref: &Vector3<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<Vector2<f64>, SimError> {
    for _ in 0..SLOT_DRAW_CAP {
        let wrong = draw_pose(cfg, rng);
        let t = build_relative_pose(&wrong, cam_idx, cam_idx, graph).expect("rig frames in graph");
        if let Some(px) = visible_pixel(camera, &t.transform_point(in_ref)) {
            return Ok(px);
        }
    }
    Err(SimError::VisibilityExhausted(SLOT_DRAW_CAP))
}

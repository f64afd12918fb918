//! Gauss-Newton refinement of a planar pose over reprojection and Sampson
//! residuals.

use nalgebra::{Matrix2x3, Matrix3, RowVector3, SymmetricEigen, Vector2, Vector3};
use thiserror::Error;

use crate::geometry::skew;
use crate::solvers::build_relative_pose;
use crate::{CameraModel, CorrespondenceDP, CorrespondenceP, FramePoseGraph, PlanarPose};

pub const DEFAULT_SAMPSON_WEIGHT: f64 = 1e6;
const MAX_NORMAL_CONDITION: f64 = 1e12;
const BACKTRACK_STEPS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub max_iters: usize,
    /// Stop once the step norm falls below this.
    pub tol: f64,
    /// Weight on squared Sampson residuals relative to squared pixels.
    pub sampson_weight: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            max_iters: 10,
            tol: 1e-9,
            sampson_weight: DEFAULT_SAMPSON_WEIGHT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RefineError {
    #[error("refinement needs at least two constraints, got {0}")]
    TooFewConstraints(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineStatus {
    Converged,
    MaxIterations,
    /// Normal equations too ill-conditioned; the initial pose is returned.
    SingularNormalEquations,
    /// No step reduced the cost.
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOutcome {
    pub pose: PlanarPose,
    pub initial_cost: f64,
    pub cost: f64,
    pub iterations: usize,
    pub status: RefineStatus,
}

fn yaw_derivative(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(-s, 0.0, c, 0.0, 0.0, 0.0, -c, 0.0, -s)
}

/// Pixel residual `projected - observed` of a depth match and its Jacobian
/// with respect to `(theta, t_x, t_z)`. `None` when the point is not in front
/// of the query camera or does not project.
pub fn reprojection_jacobian(
    pose: &PlanarPose,
    dp: &CorrespondenceDP,
    graph: &FramePoseGraph,
    camera: &CameraModel,
) -> Option<(Vector2<f64>, Matrix2x3<f64>)> {
    let to_anchor = graph.reference(dp.ref_frame).ok()?;
    let offset = graph.query(dp.query_frame).ok()?;
    let y = to_anchor.transform_point(&dp.point3d);
    let rq = offset.rotation();
    let x = offset.transform_point(&pose.transform_point(&y));
    if x.z <= 0.0 {
        return None;
    }
    let dx = Matrix3::from_columns(&[
        rq * yaw_derivative(pose.theta()) * y,
        rq * Vector3::x(),
        rq * Vector3::z(),
    ]);
    let a_t = camera.alignment().transpose();
    let phys = a_t * x;
    if phys.z.abs() < 1e-12 {
        return None;
    }
    let (fx, fy) = (camera.fx(), camera.fy());
    let iz = 1.0 / phys.z;
    let projected = Vector2::new(
        fx * phys.x * iz + camera.cx(),
        fy * phys.y * iz + camera.cy(),
    );
    let observed = camera.denormalize(&dp.query).ok()?;
    let dpi = Matrix2x3::new(
        fx * iz,
        0.0,
        -fx * phys.x * iz * iz,
        0.0,
        fy * iz,
        -fy * phys.y * iz * iz,
    );
    Some((projected - observed, dpi * a_t * dx))
}

/// Signed Sampson residual of a plain match and its Jacobian. `None` at zero
/// baseline.
pub fn sampson_jacobian(
    pose: &PlanarPose,
    p: &CorrespondenceP,
    graph: &FramePoseGraph,
) -> Option<(f64, RowVector3<f64>)> {
    let to_anchor = graph.reference(p.ref_frame).ok()?;
    let offset = graph.query(p.query_frame).ok()?;
    let transform = build_relative_pose(pose, p.query_frame, p.ref_frame, graph).ok()?;
    let (r, t) = (transform.rotation(), transform.translation());
    if t.norm() < 1e-9 {
        return None;
    }
    let rq = offset.rotation();
    let dyaw = yaw_derivative(pose.theta());
    let dr_dtheta = rq * dyaw * to_anchor.rotation();
    let dt = [
        rq * dyaw * to_anchor.translation(),
        rq * Vector3::x(),
        rq * Vector3::z(),
    ];
    let e = skew(t) * r;
    let de = [
        skew(&dt[0]) * r + skew(t) * dr_dtheta,
        skew(&dt[1]) * r,
        skew(&dt[2]) * r,
    ];

    let (xq, xr) = (p.query.to_ray(), p.reference.to_ray());
    let u = e * xr;
    let w = e.transpose() * xq;
    let a = xq.dot(&u);
    let d = u.x * u.x + u.y * u.y + w.x * w.x + w.y * w.y;
    if d <= 0.0 {
        return None;
    }
    let sqrt_d = d.sqrt();
    let mut jac = RowVector3::zeros();
    for k in 0..3 {
        let du = de[k] * xr;
        let dw = de[k].transpose() * xq;
        let da = xq.dot(&du);
        let dd = 2.0 * (u.x * du.x + u.y * du.y + w.x * dw.x + w.y * dw.y);
        jac[k] = da / sqrt_d - a * dd / (2.0 * d * sqrt_d);
    }
    Some((a / sqrt_d, jac))
}

/// Weighted squared cost of the inlier set at `pose`; `+inf` if any residual
/// is undefined.
pub fn inlier_cost(
    pose: &PlanarPose,
    dps: &[CorrespondenceDP],
    ps: &[CorrespondenceP],
    graph: &FramePoseGraph,
    camera: &CameraModel,
    sampson_weight: f64,
) -> f64 {
    let mut cost = 0.0;
    for dp in dps {
        match reprojection_jacobian(pose, dp, graph, camera) {
            Some((r, _)) => cost += r.norm_squared(),
            None => return f64::INFINITY,
        }
    }
    for p in ps {
        match sampson_jacobian(pose, p, graph) {
            Some((r, _)) => cost += sampson_weight * r * r,
            None => return f64::INFINITY,
        }
    }
    cost
}

fn step_pose(pose: &PlanarPose, delta: &Vector3<f64>, alpha: f64) -> PlanarPose {
    PlanarPose::new(
        pose.theta() + alpha * delta.x,
        pose.tx() + alpha * delta.y,
        pose.tz() + alpha * delta.z,
    )
}

/// Minimizes the inlier cost from `initial`. The returned cost never exceeds
/// the initial cost.
pub fn refine_pose(
    initial: &PlanarPose,
    dps: &[CorrespondenceDP],
    ps: &[CorrespondenceP],
    graph: &FramePoseGraph,
    camera: &CameraModel,
    cfg: &RefineConfig,
) -> Result<RefineOutcome, RefineError> {
    let constraints = 2 * dps.len() + ps.len();
    if dps.len() + ps.len() < 2 {
        return Err(RefineError::TooFewConstraints(constraints));
    }
    let w = cfg.sampson_weight;
    let sw = w.sqrt();
    let initial_cost = inlier_cost(initial, dps, ps, graph, camera, w);
    let mut out = RefineOutcome {
        pose: *initial,
        initial_cost,
        cost: initial_cost,
        iterations: 0,
        status: RefineStatus::MaxIterations,
    };
    if !initial_cost.is_finite() {
        out.status = RefineStatus::Stalled;
        return Ok(out);
    }

    for iter in 0..cfg.max_iters {
        let mut h = Matrix3::zeros();
        let mut g = Vector3::zeros();
        for dp in dps {
            let (r, j) =
                reprojection_jacobian(&out.pose, dp, graph, camera).expect("cost is finite");
            h += j.transpose() * j;
            g += j.transpose() * r;
        }
        for p in ps {
            let (r, j) = sampson_jacobian(&out.pose, p, graph).expect("cost is finite");
            let j = j * sw;
            h += j.transpose() * j;
            g += j.transpose() * (r * sw);
        }
        let eig = SymmetricEigen::new(h).eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        if !(lo > 0.0) || hi / lo > MAX_NORMAL_CONDITION {
            out.pose = *initial;
            out.cost = initial_cost;
            out.status = RefineStatus::SingularNormalEquations;
            return Ok(out);
        }
        if g.norm() == 0.0 {
            out.status = RefineStatus::Converged;
            break;
        }
        let delta = -h.cholesky().expect("positive definite").solve(&g);

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..BACKTRACK_STEPS {
            let candidate = step_pose(&out.pose, &delta, alpha);
            let cost = inlier_cost(&candidate, dps, ps, graph, camera, w);
            if cost <= out.cost {
                accepted = Some((candidate, cost));
                break;
            }
            alpha *= 0.5;
        }
        out.iterations = iter + 1;
        match accepted {
            Some((pose, cost)) => {
                out.pose = pose;
                out.cost = cost;
            }
            None => {
                out.status = RefineStatus::Stalled;
                break;
            }
        }
        if alpha * delta.norm() < cfg.tol {
            out.status = RefineStatus::Converged;
            break;
        }
    }
    Ok(out)
}

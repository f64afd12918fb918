//! Planar pose, camera model and residual primitives shared by every solver.

mod camera;
mod correspondence;
mod pose;
mod residual;

pub use camera::{project, project_with, CameraModel, NormalizedPoint};
pub use correspondence::{CorrespondenceDP, CorrespondenceP, DEFAULT_DEPTH_THRESHOLD};
pub use pose::{normalize_angle, yaw_rotation, PlanarPose, RelativeTransform};
pub use residual::{
    essential, reprojection_residual, rotation_error, sampson_residual, sampson_signed,
    sampson_with_essential, skew, translation_error,
};

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("point lies behind the camera")]
    CheiralityViolation,
    #[error("ray is parallel to the image plane")]
    DegenerateRay,
    #[error("baseline too short for epipolar geometry")]
    ZeroBaseline,
    #[error("invalid camera: {0}")]
    InvalidCamera(&'static str),
    #[error("matrix is not a proper rotation")]
    NotOrthonormal,
    #[error("3D point must have positive depth in its reference frame")]
    PointBehindReference,
    #[error("non-finite input")]
    NonFinite,
}

/// The two projection constraints a depth correspondence places on an
/// anchor-pair planar pose:
///
/// ```text
/// v x cos + v z sin + v t_x - u y = 0
/// v z cos - v x sin + v t_z - y   = 0
/// ```
pub fn depth_constraints<T: Real>(pose: &PlanarPose<T>, corr: &CorrespondenceDP<T>) -> [T; 2] {
    let (s, c) = pose.theta().sin_cos();
    let p = &corr.point3d;
    let (u, v) = (corr.query.u, corr.query.v);
    [
        v * p.x * c + v * p.z * s + v * pose.tx() - u * p.y,
        v * p.z * c - v * p.x * s + v * pose.tz() - p.y,
    ]
}

/// Algebraic epipolar residual `p_q^T [t]x R p_r`.
pub fn epipolar_constraint<T: Real>(
    transform: &RelativeTransform<T>,
    corr: &CorrespondenceP<T>,
) -> T {
    corr.query
        .to_ray()
        .dot(&(essential(transform) * corr.reference.to_ray()))
}

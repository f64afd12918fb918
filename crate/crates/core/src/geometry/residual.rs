use nalgebra::{Matrix3, Vector3};

use super::{CameraModel, CorrespondenceDP, CorrespondenceP, GeometryError, RelativeTransform};
use crate::scalar::Real;

pub fn skew<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    let o = T::zero();
    Matrix3::new(o, -v.z, v.y, v.z, o, -v.x, -v.y, v.x, o)
}

/// `[t]x R` for a reference-to-query transform.
pub fn essential<T: Real>(transform: &RelativeTransform<T>) -> Matrix3<T> {
    skew(transform.translation()) * transform.rotation()
}

/// Pixel distance between the projected 3D point and the query observation.
///
/// `transform` maps the correspondence's reference frame into its query frame.
/// Points that end up behind the camera yield `+inf`.
pub fn reprojection_residual<T: Real>(
    transform: &RelativeTransform<T>,
    corr: &CorrespondenceDP<T>,
    camera: &CameraModel<T>,
) -> T {
    let projected = match camera.project_camera_point(&transform.transform_point(&corr.point3d)) {
        Ok(px) => px,
        Err(_) => return T::infinity(),
    };
    match camera.denormalize(&corr.query) {
        Ok(observed) => (projected - observed).norm(),
        Err(_) => T::infinity(),
    }
}

/// First-order distance of `corr` to the epipolar manifold, signed.
pub fn sampson_signed<T: Real>(
    transform: &RelativeTransform<T>,
    corr: &CorrespondenceP<T>,
) -> Result<T, GeometryError> {
    if transform.translation().norm() < T::MIN_BASELINE {
        return Err(GeometryError::ZeroBaseline);
    }
    Ok(sampson_with_essential(
        &essential(transform),
        &corr.query.to_ray(),
        &corr.reference.to_ray(),
    ))
}

/// Signed Sampson distance of homogeneous rays `xq`, `xr` under `e`.
pub fn sampson_with_essential<T: Real>(e: &Matrix3<T>, xq: &Vector3<T>, xr: &Vector3<T>) -> T {
    let ex = e * xr;
    let etx = e.transpose() * xq;
    let algebraic = xq.dot(&ex);
    let denom = ex.x * ex.x + ex.y * ex.y + etx.x * etx.x + etx.y * etx.y;
    if algebraic == T::zero() {
        return T::zero();
    }
    if denom <= T::zero() {
        return T::infinity();
    }
    algebraic / denom.sqrt()
}

/// Unsigned Sampson distance in normalized image units.
pub fn sampson_residual<T: Real>(
    transform: &RelativeTransform<T>,
    corr: &CorrespondenceP<T>,
) -> Result<T, GeometryError> {
    sampson_signed(transform, corr).map(|r| r.abs())
}

/// Geodesic rotation difference in degrees, `acos(0.5 * tr(R R_gt^T) - 0.5)`.
///
/// Evaluated through `atan2` of the sine and cosine parts of the relative
/// rotation so that nearly identical rotations do not lose all precision to
/// the flat top of `acos`.
pub fn rotation_error<T: Real>(r_est: &Matrix3<T>, r_gt: &Matrix3<T>) -> T {
    let half = T::lit(0.5);
    let d = r_est * r_gt.transpose();
    let cos = (d.trace() * half - half).clamp(-T::one(), T::one());
    let axis = Vector3::new(
        d[(2, 1)] - d[(1, 2)],
        d[(0, 2)] - d[(2, 0)],
        d[(1, 0)] - d[(0, 1)],
    );
    let sin = axis.norm() * half;
    sin.atan2(cos) * T::lit(180.0) / T::pi()
}

pub fn translation_error<T: Real>(t_est: &Vector3<T>, t_gt: &Vector3<T>) -> T {
    (t_est - t_gt).norm()
}

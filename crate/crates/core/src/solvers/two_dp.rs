use nalgebra::{Matrix4, Matrix4x2, Vector4};

use super::linear::depth_rows;
use super::{FramePoseGraph, PoseCandidateSet, SolverError, SolverKind};
use crate::geometry::{CorrespondenceDP, PlanarPose};
use crate::scalar::Real;

/// Planar pose from two matches with depth.
///
/// The four depth constraints are linear in `(cos, sin, t_x, t_z)`. The
/// system is solved, `(cos, sin)` is projected onto the unit circle, and the
/// translation is re-fitted at the projected angle. Matches may come from any
/// frame pair present in `graph`.
pub fn solve_2dp<T: Real>(
    dp1: &CorrespondenceDP<T>,
    dp2: &CorrespondenceDP<T>,
    graph: &FramePoseGraph<T>,
) -> Result<PoseCandidateSet<T>, SolverError> {
    if dp1 == dp2 {
        return Err(SolverError::DegenerateSample(
            "both matches are the same feature",
        ));
    }
    let [r0, r1] = depth_rows(dp1, graph)?;
    let [r2, r3] = depth_rows(dp2, graph)?;
    let rows = [r0, r1, r2, r3];

    let mut a = Matrix4::zeros();
    let mut b = Vector4::zeros();
    for (i, row) in rows.iter().enumerate() {
        for j in 0..4 {
            a[(i, j)] = row[j];
        }
        b[i] = -row[4];
    }
    let svd = a.svd(true, true);
    let (max_sv, min_sv) = svd
        .singular_values
        .iter()
        .fold((T::zero(), T::infinity()), |(hi, lo), &s| {
            (hi.max(s), lo.min(s))
        });
    if !(min_sv > T::zero()) || max_sv / min_sv > T::MAX_CONDITION {
        return Err(SolverError::DegenerateSample(
            "ill-conditioned depth system",
        ));
    }
    let x = svd
        .solve(&b, T::zero())
        .map_err(|_| SolverError::DegenerateSample("depth system not solvable"))?;

    let norm = (x[0] * x[0] + x[1] * x[1]).sqrt();
    if norm < T::MIN_UNIT_NORM {
        return Err(SolverError::DegenerateSample("rotation part vanished"));
    }
    let (c, s) = (x[0] / norm, x[1] / norm);

    // re-fit (t_x, t_z) at the projected angle
    let mut m = Matrix4x2::zeros();
    let mut rhs = Vector4::zeros();
    for (i, row) in rows.iter().enumerate() {
        m[(i, 0)] = row[2];
        m[(i, 1)] = row[3];
        rhs[i] = -(row[0] * c + row[1] * s + row[4]);
    }
    let t = (m.transpose() * m)
        .try_inverse()
        .map(|inv| inv * (m.transpose() * rhs))
        .ok_or(SolverError::DegenerateSample("translation not observable"))?;

    let mut set = PoseCandidateSet::new(SolverKind::TwoDP);
    set.push(PlanarPose::new(s.atan2(c), t[0], t[1]));
    Ok(set)
}

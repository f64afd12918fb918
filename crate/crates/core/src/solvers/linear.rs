//! Depth constraints as linear rows over `(cos, sin, t_x, t_z, 1)`.

use nalgebra::{Matrix3, SMatrix, Vector3};

use super::{FramePoseGraph, SolverError, ANCHOR};
use crate::geometry::{CorrespondenceDP, RelativeTransform};
use crate::scalar::Real;

pub(crate) type Row<T> = SMatrix<T, 1, 5>;

/// Affine function of `(cos, sin)`: `cos * c + sin * s + k`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Affine<T: Real> {
    pub c: T,
    pub s: T,
    pub k: T,
}

impl<T: Real> Affine<T> {
    pub fn eval(&self, cos: T, sin: T) -> T {
        self.c * cos + self.s * sin + self.k
    }
}

/// Pieces of the yaw rotation `R = cos * RC + sin * RS + RY`.
pub(crate) fn yaw_basis<T: Real>() -> (Matrix3<T>, Matrix3<T>, Matrix3<T>) {
    let (o, l) = (T::zero(), T::one());
    (
        Matrix3::new(l, o, o, o, o, o, o, o, l),
        Matrix3::new(o, o, l, o, o, o, -l, o, o),
        Matrix3::new(o, o, o, o, l, o, o, o, o),
    )
}

/// The two rows `v X0 - u X1 = 0` and `v X2 - X1 = 0`, where `X` is the point
/// in its query frame. For the anchor pair these are exactly the classic
/// planar 2D-3D constraints.
pub(crate) fn depth_rows<T: Real>(
    dp: &CorrespondenceDP<T>,
    graph: &FramePoseGraph<T>,
) -> Result<[Row<T>; 2], SolverError> {
    let (u, v) = (dp.query.u, dp.query.v);
    if v.abs() < T::MIN_V_TILDE {
        return Err(SolverError::DegenerateSample(
            "depth observation on the horizon",
        ));
    }
    let anchor_point = graph.reference(dp.ref_frame)?.transform_point(&dp.point3d);
    let offset = graph.query(dp.query_frame)?;
    let cols = point_columns(&anchor_point, offset, dp.query_frame == ANCHOR);
    let mut row_u = Row::zeros();
    let mut row_v = Row::zeros();
    for (j, col) in cols.iter().enumerate() {
        row_u[j] = v * col.x - u * col.y;
        row_v[j] = v * col.z - col.y;
    }
    Ok([row_u, row_v])
}

/// Columns of the query-frame point as a linear map of `(cos, sin, t_x, t_z, 1)`.
fn point_columns<T: Real>(
    p: &Vector3<T>,
    offset: &RelativeTransform<T>,
    anchor: bool,
) -> [Vector3<T>; 5] {
    let o = T::zero();
    let cols = [
        Vector3::new(p.x, o, p.z),
        Vector3::new(p.z, o, -p.x),
        Vector3::new(T::one(), o, o),
        Vector3::new(o, o, T::one()),
        Vector3::new(o, p.y, o),
    ];
    if anchor {
        return cols;
    }
    let r = offset.rotation();
    let mut out = cols.map(|c| r * c);
    out[4] += offset.translation();
    out
}

/// Solves both rows for `(t_x, t_z)` as affine functions of `(cos, sin)`.
pub(crate) fn translation_from_rows<T: Real>(
    rows: &[Row<T>; 2],
) -> Result<(Affine<T>, Affine<T>), SolverError> {
    let (a, b, c, d) = (rows[0][2], rows[0][3], rows[1][2], rows[1][3]);
    let det = a * d - b * c;
    let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
    if det.abs() <= T::MIN_V_TILDE * T::MIN_V_TILDE * scale.max(T::one()) || !det.is_finite() {
        return Err(SolverError::DegenerateSample(
            "depth constraints do not fix the translation",
        ));
    }
    // [a b; c d] (tx, tz) = -(row[0] c + row[1] s + row[4])
    let solve = |j: usize| -> (T, T) {
        let (r0, r1) = (-rows[0][j], -rows[1][j]);
        ((d * r0 - b * r1) / det, (a * r1 - c * r0) / det)
    };
    let (xc, zc) = solve(0);
    let (xs, zs) = solve(1);
    let (xk, zk) = solve(4);
    Ok((
        Affine {
            c: xc,
            s: xs,
            k: xk,
        },
        Affine {
            c: zc,
            s: zs,
            k: zk,
        },
    ))
}

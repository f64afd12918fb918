use arrayvec::ArrayVec;
use nalgebra::Vector3;

use super::linear::{depth_rows, translation_from_rows, yaw_basis, Affine};
use super::{FramePoseGraph, PoseCandidateSet, SolverError, SolverKind, ANCHOR};
use crate::geometry::{CorrespondenceDP, CorrespondenceP, NormalizedPoint, PlanarPose};
use crate::quartic::{solve_quartic, QuarticError};
use crate::scalar::Real;

/// `A c^2 + B c s + C s^2 + D c + E s + F` on the unit circle `c^2 + s^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpipolarConic<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
    pub e: T,
    pub f: T,
}

impl<T: Real> EpipolarConic<T> {
    pub fn eval(&self, theta: T) -> T {
        let (s, c) = theta.sin_cos();
        self.a * c * c + self.b * c * s + self.c * s * s + self.d * c + self.e * s + self.f
    }

    pub fn derivative(&self, theta: T) -> T {
        let (s, c) = theta.sin_cos();
        let two = T::lit(2.0);
        (self.c - self.a) * two * c * s + self.b * (c * c - s * s) - self.d * s + self.e * c
    }

    /// Quartic in `q = tan(theta / 2)`, highest degree first, after clearing
    /// the `(1 + q^2)^2` denominator.
    pub fn weierstrass_quartic(&self) -> [T; 5] {
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        [
            self.a - self.d + self.f,
            two * (self.e - self.b),
            two * (self.f - self.a) + four * self.c,
            two * (self.b + self.e),
            self.a + self.d + self.f,
        ]
    }

    fn scale(&self) -> T {
        [self.a, self.b, self.c, self.d, self.e, self.f]
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Translation as affine functions of `(cos, sin)` fixed by the depth match,
/// and the epipolar constraint of the plain match after substituting it.
pub(crate) fn reduce_1p1dp<T: Real>(
    dp: &CorrespondenceDP<T>,
    p: &CorrespondenceP<T>,
    graph: &FramePoseGraph<T>,
) -> Result<(Affine<T>, Affine<T>, EpipolarConic<T>), SolverError> {
    if same_feature(dp, p) {
        return Err(SolverError::DegenerateSample(
            "both matches are the same feature",
        ));
    }
    let rows = depth_rows(dp, graph)?;
    let (tx, tz) = translation_from_rows(&rows)?;
    let conic = epipolar_conic(&tx, &tz, p, graph)?;
    Ok((tx, tz, conic))
}

fn same_feature<T: Real>(dp: &CorrespondenceDP<T>, p: &CorrespondenceP<T>) -> bool {
    let close = |a: &NormalizedPoint<T>, b: &NormalizedPoint<T>| {
        (a.u - b.u).abs() <= T::ROOT_DEDUP && (a.v - b.v).abs() <= T::ROOT_DEDUP
    };
    dp.ref_frame == p.ref_frame
        && dp.query_frame == p.query_frame
        && close(&dp.query, &p.query)
        && close(&dp.reference_point(), &p.reference)
}

/// Expands `p_q . (t'(theta) x R'(theta) p_r)` for the frame pair of `p`,
/// with `R' = R_o R(theta) R_l` and `t' = R_o (R(theta) t_l + t) + t_o`.
pub(crate) fn epipolar_conic<T: Real>(
    tx: &Affine<T>,
    tz: &Affine<T>,
    p: &CorrespondenceP<T>,
    graph: &FramePoseGraph<T>,
) -> Result<EpipolarConic<T>, SolverError> {
    let to_anchor = graph.reference(p.ref_frame)?;
    let offset = graph.query(p.query_frame)?;
    let (rc, rs, ry) = yaw_basis::<T>();
    let xr = to_anchor.rotation() * p.reference.to_ray();
    let tl = to_anchor.translation();
    let o = T::zero();

    let mut w = [rc * xr, rs * xr, ry * xr];
    let mut t = [
        rc * tl + Vector3::new(tx.c, o, tz.c),
        rs * tl + Vector3::new(tx.s, o, tz.s),
        ry * tl + Vector3::new(tx.k, o, tz.k),
    ];
    if p.query_frame != ANCHOR {
        let ro = offset.rotation();
        w = w.map(|v| ro * v);
        t = t.map(|v| ro * v);
        t[2] += offset.translation();
    }
    let xq = p.query.to_ray();
    let m = |i: usize, j: usize| xq.dot(&t[i].cross(&w[j]));
    Ok(EpipolarConic {
        a: m(0, 0),
        b: m(0, 1) + m(1, 0),
        c: m(1, 1),
        d: m(0, 2) + m(2, 0),
        e: m(1, 2) + m(2, 1),
        f: m(2, 2),
    })
}

fn polish_angle<T: Real>(conic: &EpipolarConic<T>, mut theta: T) -> T {
    for _ in 0..2 {
        let g = conic.eval(theta);
        let dg = conic.derivative(theta);
        if g == T::zero() || dg == T::zero() {
            break;
        }
        let next = theta - g / dg;
        if !next.is_finite() || conic.eval(next).abs() > g.abs() {
            break;
        }
        theta = next;
    }
    theta
}

/// Planar pose from one match with depth and one without.
///
/// The depth match fixes the translation as a function of the yaw; the plain
/// match's epipolar constraint then reduces to a quartic in `tan(theta / 2)`.
/// Up to four candidates are returned, without cheirality filtering.
pub fn solve_1p1dp<T: Real>(
    dp: &CorrespondenceDP<T>,
    p: &CorrespondenceP<T>,
    graph: &FramePoseGraph<T>,
) -> Result<PoseCandidateSet<T>, SolverError> {
    let (tx, tz, conic) = reduce_1p1dp(dp, p, graph)?;
    let quartic = conic.weierstrass_quartic();
    let roots = solve_quartic(quartic).map_err(|QuarticError::IdenticallyZero| {
        SolverError::DegenerateSample("epipolar constraint independent of the pose")
    })?;

    let mut angles: ArrayVec<T, 5> = roots
        .iter()
        .map(|&q| polish_angle(&conic, T::lit(2.0) * q.atan()))
        .collect();
    // theta = pi is the point at infinity of the substitution
    if conic.eval(T::pi()).abs() <= T::ROOT_IMAG * conic.scale() {
        angles.push(polish_angle(&conic, T::pi()));
    }

    let mut kept: ArrayVec<(T, T), 5> = ArrayVec::new();
    for theta in angles {
        let theta = crate::geometry::normalize_angle(theta);
        let duplicate = kept
            .iter()
            .any(|(t, _)| crate::geometry::normalize_angle(*t - theta).abs() < T::ROOT_DEDUP);
        if !duplicate {
            kept.push((theta, conic.eval(theta).abs()));
        }
    }
    if kept.len() > 4 {
        kept.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(std::cmp::Ordering::Equal));
        kept.truncate(4);
    }

    let source = if dp.query_frame != ANCHOR || p.query_frame != ANCHOR {
        SolverKind::MC1P1DP
    } else {
        SolverKind::OneP1DP
    };
    let mut set = PoseCandidateSet::new(source);
    for (theta, _) in kept {
        let (s, c) = theta.sin_cos();
        set.push(PlanarPose::new(theta, tx.eval(c, s), tz.eval(c, s)));
    }
    if set.is_empty() {
        return Err(SolverError::NoRealRoot);
    }
    Ok(set)
}

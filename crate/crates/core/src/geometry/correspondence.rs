use nalgebra::Vector3;

use super::{GeometryError, NormalizedPoint};
use crate::scalar::Real;

/// Default depth below which a map point counts as reliable, in meters.
pub const DEFAULT_DEPTH_THRESHOLD: f64 = 5.0;

/// Query observation matched to a reference feature that carries a 3D point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrespondenceDP<T: Real> {
    pub query: NormalizedPoint<T>,
    /// Coordinates in the reference camera frame `ref_frame`.
    pub point3d: Vector3<T>,
    pub ref_frame: usize,
    pub query_frame: usize,
    reliable: bool,
}

impl<T: Real> CorrespondenceDP<T> {
    /// Flags the depth as reliable iff `point3d.z < depth_threshold`.
    pub fn new(
        query: NormalizedPoint<T>,
        point3d: Vector3<T>,
        ref_frame: usize,
        query_frame: usize,
        depth_threshold: T,
    ) -> Result<Self, GeometryError> {
        if !query.is_finite() || !point3d.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if point3d.z <= T::zero() {
            return Err(GeometryError::PointBehindReference);
        }
        Ok(Self {
            query,
            point3d,
            ref_frame,
            query_frame,
            reliable: point3d.z < depth_threshold,
        })
    }

    pub fn is_reliable(&self) -> bool {
        self.reliable
    }

    /// Reference-view observation implied by the 3D point.
    pub fn reference_point(&self) -> NormalizedPoint<T> {
        NormalizedPoint::new(
            self.point3d.x / self.point3d.z,
            self.point3d.y / self.point3d.z,
        )
    }

    /// The 2D-2D part of this match.
    pub fn to_p(&self) -> CorrespondenceP<T> {
        CorrespondenceP {
            query: self.query,
            reference: self.reference_point(),
            ref_frame: self.ref_frame,
            query_frame: self.query_frame,
        }
    }
}

/// 2D-2D match without depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrespondenceP<T> {
    pub query: NormalizedPoint<T>,
    pub reference: NormalizedPoint<T>,
    pub ref_frame: usize,
    pub query_frame: usize,
}

impl<T: Real> CorrespondenceP<T> {
    pub fn new(
        query: NormalizedPoint<T>,
        reference: NormalizedPoint<T>,
        ref_frame: usize,
        query_frame: usize,
    ) -> Result<Self, GeometryError> {
        if !query.is_finite() || !reference.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self {
            query,
            reference,
            ref_frame,
            query_frame,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reliability_follows_threshold() {
        let q = NormalizedPoint::new(0.1, 0.2);
        let near = CorrespondenceDP::new(q, Vector3::new(0.0, 1.0, 4.9), 0, 0, 5.0).unwrap();
        let far = CorrespondenceDP::new(q, Vector3::new(0.0, 1.0, 5.0), 0, 0, 5.0).unwrap();
        assert!(near.is_reliable());
        assert!(!far.is_reliable());
    }

    #[test]
    fn point_must_be_in_front_of_reference() {
        let q = NormalizedPoint::new(0.1, 0.2);
        assert_eq!(
            CorrespondenceDP::new(q, Vector3::new(0.0, 1.0, 0.0), 0, 0, 5.0),
            Err(GeometryError::PointBehindReference)
        );
    }

    #[test]
    fn two_d_part_uses_point_direction() {
        let q = NormalizedPoint::new(0.1, 0.2);
        let dp = CorrespondenceDP::new(q, Vector3::new(1.0, -2.0, 4.0), 2, 1, 5.0).unwrap();
        let p = dp.to_p();
        assert_eq!(p.reference, NormalizedPoint::new(0.25, -0.5));
        assert_eq!((p.ref_frame, p.query_frame), (2, 1));
        assert_eq!(p.query, q);
    }

    #[test]
    fn non_finite_inputs_are_rejected() {
        let bad = NormalizedPoint::new(f64::NAN, 0.0);
        let good = NormalizedPoint::new(0.0, 0.0);
        assert!(CorrespondenceP::new(bad, good, 0, 0).is_err());
        assert!(CorrespondenceDP::new(bad, Vector3::new(0.0, 0.0, 1.0), 0, 0, 5.0).is_err());
    }
}

use nalgebra::{Matrix3, Matrix4, Vector3};

use super::GeometryError;
use crate::scalar::Real;

/// Wraps an angle into the half-open interval (-pi, pi].
pub fn normalize_angle<T: Real>(angle: T) -> T {
    let two_pi = T::two_pi();
    let pi = T::pi();
    if angle > -pi && angle <= pi {
        return angle;
    }
    let wrapped = angle - two_pi * ((angle - pi) / two_pi).ceil();
    // ceil can land exactly on -pi through round-off
    if wrapped <= -pi {
        wrapped + two_pi
    } else {
        wrapped
    }
}

/// Rotation about the camera y-axis by `theta`.
pub fn yaw_rotation<T: Real>(theta: T) -> Matrix3<T> {
    let (s, c) = theta.sin_cos();
    let (o, l) = (T::zero(), T::one());
    Matrix3::new(c, o, s, o, l, o, -s, o, c)
}

/// Three degree-of-freedom camera motion on the ground plane.
///
/// Maps points from the reference camera frame into the query camera frame:
/// `X_q = R(theta) * X_r + [t_x, 0, t_z]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarPose<T> {
    theta: T,
    tx: T,
    tz: T,
}

impl<T: Real> PlanarPose<T> {
    pub fn new(theta: T, tx: T, tz: T) -> Self {
        Self {
            theta: normalize_angle(theta),
            tx,
            tz,
        }
    }

    pub fn identity() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn tx(&self) -> T {
        self.tx
    }

    pub fn tz(&self) -> T {
        self.tz
    }

    pub fn rotation(&self) -> Matrix3<T> {
        yaw_rotation(self.theta)
    }

    pub fn translation(&self) -> Vector3<T> {
        Vector3::new(self.tx, T::zero(), self.tz)
    }

    pub fn to_transform(&self) -> RelativeTransform<T> {
        RelativeTransform {
            rotation: self.rotation(),
            translation: self.translation(),
        }
    }

    pub fn transform_point(&self, point: &Vector3<T>) -> Vector3<T> {
        self.rotation() * point + self.translation()
    }

    /// `self * other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let t = self.rotation() * other.translation() + self.translation();
        Self::new(self.theta + other.theta, t.x, t.z)
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation().transpose();
        let t = -(rt * self.translation());
        Self::new(-self.theta, t.x, t.z)
    }
}

/// Rigid transform between two camera frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeTransform<T: Real> {
    rotation: Matrix3<T>,
    translation: Vector3<T>,
}

impl<T: Real> RelativeTransform<T> {
    pub fn new(rotation: Matrix3<T>, translation: Vector3<T>) -> Result<Self, GeometryError> {
        if !is_rotation(&rotation) {
            return Err(GeometryError::NotOrthonormal);
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn rotation(&self) -> &Matrix3<T> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<T> {
        &self.translation
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == Matrix3::identity() && self.translation == Vector3::zeros()
    }

    pub fn transform_point(&self, point: &Vector3<T>) -> Vector3<T> {
        self.rotation * point + self.translation
    }

    /// `self * other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn to_homogeneous(&self) -> Matrix4<T> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }
}

impl<T: Real> From<PlanarPose<T>> for RelativeTransform<T> {
    fn from(pose: PlanarPose<T>) -> Self {
        pose.to_transform()
    }
}

impl<T: Real> From<&PlanarPose<T>> for RelativeTransform<T> {
    fn from(pose: &PlanarPose<T>) -> Self {
        pose.to_transform()
    }
}

pub(crate) fn is_rotation<T: Real>(m: &Matrix3<T>) -> bool {
    if !m.iter().all(|v| v.is_finite()) {
        return false;
    }
    let tol = T::default_epsilon().sqrt() * T::lit(10.0);
    let ortho = (m.transpose() * m - Matrix3::identity()).abs().max();
    ortho < tol && (m.determinant() - T::one()).abs() < tol
}

use nalgebra::{Matrix3, Vector2, Vector3};

use super::pose::is_rotation;
use super::{GeometryError, PlanarPose, RelativeTransform};
use crate::scalar::Real;

/// Ray direction scaled so its third component is one.
///
/// Always expressed in the gravity-aligned camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedPoint<T> {
    pub u: T,
    pub v: T,
}

impl<T: Real> NormalizedPoint<T> {
    pub fn new(u: T, v: T) -> Self {
        Self { u, v }
    }

    /// Scales `ray` to unit third component.
    pub fn from_ray(ray: &Vector3<T>) -> Result<Self, GeometryError> {
        if ray.z.abs() < T::DEGENERATE_RAY {
            return Err(GeometryError::DegenerateRay);
        }
        let p = Self::new(ray.x / ray.z, ray.y / ray.z);
        if p.is_finite() {
            Ok(p)
        } else {
            Err(GeometryError::NonFinite)
        }
    }

    pub fn to_ray(&self) -> Vector3<T> {
        Vector3::new(self.u, self.v, T::one())
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

/// Pinhole camera with an optional gravity-alignment rotation.
///
/// `alignment` rotates rays from the physical camera frame into the frame
/// whose image plane is vertical to the ground.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel<T: Real> {
    fx: T,
    fy: T,
    cx: T,
    cy: T,
    width: T,
    height: T,
    alignment: Matrix3<T>,
}

impl<T: Real> CameraModel<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: T, height: T) -> Result<Self, GeometryError> {
        Self::with_alignment(fx, fy, cx, cy, width, height, Matrix3::identity())
    }

    pub fn with_alignment(
        fx: T,
        fy: T,
        cx: T,
        cy: T,
        width: T,
        height: T,
        alignment: Matrix3<T>,
    ) -> Result<Self, GeometryError> {
        if !(fx > T::zero() && fy > T::zero()) {
            return Err(GeometryError::InvalidCamera(
                "focal lengths must be positive",
            ));
        }
        if !(cx >= T::zero() && cx < width && cy >= T::zero() && cy < height) {
            return Err(GeometryError::InvalidCamera(
                "principal point outside image",
            ));
        }
        if !is_rotation(&alignment) {
            return Err(GeometryError::NotOrthonormal);
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            alignment,
        })
    }

    /// The 800 px, 1280x960 virtual camera used by the synthetic benchmark.
    pub fn simulation() -> Self {
        Self::new(
            T::lit(800.0),
            T::lit(800.0),
            T::lit(640.0),
            T::lit(480.0),
            T::lit(1280.0),
            T::lit(960.0),
        )
        .expect("valid simulation camera")
    }

    pub fn fx(&self) -> T {
        self.fx
    }
    pub fn fy(&self) -> T {
        self.fy
    }
    pub fn cx(&self) -> T {
        self.cx
    }
    pub fn cy(&self) -> T {
        self.cy
    }
    pub fn width(&self) -> T {
        self.width
    }
    pub fn height(&self) -> T {
        self.height
    }
    pub fn alignment(&self) -> &Matrix3<T> {
        &self.alignment
    }

    pub fn intrinsics(&self) -> Matrix3<T> {
        let (o, l) = (T::zero(), T::one());
        Matrix3::new(self.fx, o, self.cx, o, self.fy, self.cy, o, o, l)
    }

    pub fn contains(&self, pixel: &Vector2<T>) -> bool {
        pixel.x >= T::zero()
            && pixel.x < self.width
            && pixel.y >= T::zero()
            && pixel.y < self.height
    }

    /// Pixel to gravity-aligned normalized coordinates.
    pub fn normalize(&self, pixel: &Vector2<T>) -> Result<NormalizedPoint<T>, GeometryError> {
        if !(pixel.x.is_finite() && pixel.y.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let ray = Vector3::new(
            (pixel.x - self.cx) / self.fx,
            (pixel.y - self.cy) / self.fy,
            T::one(),
        );
        NormalizedPoint::from_ray(&(self.alignment * ray))
    }

    /// Inverse of [`normalize`](Self::normalize).
    pub fn denormalize(&self, point: &NormalizedPoint<T>) -> Result<Vector2<T>, GeometryError> {
        self.pixel_of_ray(&point.to_ray())
    }

    /// Pixel of a point given in the aligned camera frame.
    pub fn project_camera_point(&self, point: &Vector3<T>) -> Result<Vector2<T>, GeometryError> {
        if point.z <= T::zero() {
            return Err(GeometryError::CheiralityViolation);
        }
        self.pixel_of_ray(point)
    }

    fn pixel_of_ray(&self, ray: &Vector3<T>) -> Result<Vector2<T>, GeometryError> {
        let physical = self.alignment.transpose() * ray;
        if physical.z.abs() < T::DEGENERATE_RAY {
            return Err(GeometryError::DegenerateRay);
        }
        Ok(Vector2::new(
            self.fx * physical.x / physical.z + self.cx,
            self.fy * physical.y / physical.z + self.cy,
        ))
    }
}

/// Pixel of reference-frame `point` seen from the query camera at `pose`.
pub fn project<T: Real>(
    pose: &PlanarPose<T>,
    point: &Vector3<T>,
    camera: &CameraModel<T>,
) -> Result<Vector2<T>, GeometryError> {
    camera.project_camera_point(&pose.transform_point(point))
}

/// Like [`project`] for an arbitrary frame-to-frame transform.
pub fn project_with<T: Real>(
    transform: &RelativeTransform<T>,
    point: &Vector3<T>,
    camera: &CameraModel<T>,
) -> Result<Vector2<T>, GeometryError> {
    camera.project_camera_point(&transform.transform_point(point))
}

//! Absolute pose estimation for cameras moving on a ground plane.
//!
//! The pose between a reference view and a query view has three degrees of
//! freedom: a yaw angle and a translation in the ground plane. This crate
//! estimates it from a mix of 2D-3D matches (a query feature whose reference
//! feature has a map point) and plain 2D-2D matches, using
//!
//! * the 1P1DP minimal solver, one match with depth plus one without,
//! * the 2DP solver, two matches with depth,
//!
//! inside a seeded RANSAC loop with Gauss-Newton refinement. A success-rate
//! model and rule-based selector choose between the two solvers, and a
//! synthetic world generator drives benchmarks.
//!
//! Geometry and the minimal solvers are generic over [`Real`]; the aliases
//! below fix the scalar to `f64` (or `f32` with a `32` suffix). Estimation,
//! selection and simulation work in `f64`.

pub mod geometry;
pub mod quartic;
pub mod ransac;
pub mod refine;
pub mod scalar;
pub mod selector;
pub mod sim;
pub mod solvers;

pub use scalar::Real;

pub type PlanarPose = geometry::PlanarPose<f64>;
pub type RelativeTransform = geometry::RelativeTransform<f64>;
pub type CameraModel = geometry::CameraModel<f64>;
pub type NormalizedPoint = geometry::NormalizedPoint<f64>;
pub type CorrespondenceDP = geometry::CorrespondenceDP<f64>;
pub type CorrespondenceP = geometry::CorrespondenceP<f64>;
pub type FramePoseGraph = solvers::FramePoseGraph<f64>;
pub type PoseCandidateSet = solvers::PoseCandidateSet<f64>;

pub type PlanarPose32 = geometry::PlanarPose<f32>;
pub type RelativeTransform32 = geometry::RelativeTransform<f32>;
pub type CameraModel32 = geometry::CameraModel<f32>;
pub type NormalizedPoint32 = geometry::NormalizedPoint<f32>;
pub type CorrespondenceDP32 = geometry::CorrespondenceDP<f32>;
pub type CorrespondenceP32 = geometry::CorrespondenceP<f32>;
pub type FramePoseGraph32 = solvers::FramePoseGraph<f32>;
pub type PoseCandidateSet32 = solvers::PoseCandidateSet<f32>;

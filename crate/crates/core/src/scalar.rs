use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar the geometry and minimal solvers are generic over.
///
/// The associated constants are the numerical cut-offs used for degeneracy
/// detection. They are expressed per type because the f64 values are far
/// below f32 resolution.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Smallest admissible magnitude of a ray's third component after alignment.
    const DEGENERATE_RAY: Self;
    /// Smallest admissible |v| of a normalized observation used as a depth constraint.
    const MIN_V_TILDE: Self;
    /// Magnitude below which every polynomial coefficient counts as zero.
    const ZERO_COEFF: Self;
    /// Relative imaginary-part tolerance for accepting a root as real.
    const ROOT_IMAG: Self;
    /// Absolute tolerance for merging duplicate real roots.
    const ROOT_DEDUP: Self;
    /// Largest admissible condition number of a linear system.
    const MAX_CONDITION: Self;
    /// Shortest baseline for which epipolar geometry is defined.
    const MIN_BASELINE: Self;
    /// Smallest norm of the (cos, sin) pair before unit-circle projection.
    const MIN_UNIT_NORM: Self;

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    fn infinity() -> Self {
        Self::lit(f64::INFINITY)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const DEGENERATE_RAY: f64 = 1e-12;
    const MIN_V_TILDE: f64 = 1e-8;
    const ZERO_COEFF: f64 = 1e-14;
    const ROOT_IMAG: f64 = 1e-8;
    const ROOT_DEDUP: f64 = 1e-10;
    const MAX_CONDITION: f64 = 1e12;
    const MIN_BASELINE: f64 = 1e-9;
    const MIN_UNIT_NORM: f64 = 1e-8;
}

impl Real for f32 {
    const DEGENERATE_RAY: f32 = 1e-6;
    const MIN_V_TILDE: f32 = 1e-4;
    const ZERO_COEFF: f32 = 1e-7;
    const ROOT_IMAG: f32 = 1e-3;
    const ROOT_DEDUP: f32 = 1e-5;
    const MAX_CONDITION: f32 = 1e6;
    const MIN_BASELINE: f32 = 1e-5;
    const MIN_UNIT_NORM: f32 = 1e-4;
}

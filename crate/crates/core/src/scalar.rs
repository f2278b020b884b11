//! Scalar abstraction for the map and closed-form metric code.

use num_traits::{Float, FloatConst, FromPrimitive};
use std::fmt::{Debug, Display};

/// Floating point scalar with the numerical tolerances used throughout the
/// crate. Tolerances are stated for `f64`; the `f32` values are loosened to
/// what single precision can actually certify.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Root residual bound, relative to the coefficient scale.
    const ROOT_RESIDUAL: Self;
    /// Distance under which two roots are the same root.
    const ROOT_MERGE: Self;
    /// Cluster radius inside which a group of roots is tested as one multiple root.
    const ROOT_CLUSTER: Self;
    /// Spherical residual for a fixed point.
    const FIXED_RESIDUAL: Self;
    /// Width of the superattracting and indifferent classification bands.
    const MULTIPLIER_BAND: Self;
    /// Lower bound on `|P|` at roots of `Q`, relative to the coefficient scale.
    const COPRIME: Self;

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }
}

macro_rules! impl_real {
    ($t:ty, $res:expr, $merge:expr, $cluster:expr, $fixed:expr, $band:expr, $coprime:expr) => {
        impl Real for $t {
            const ROOT_RESIDUAL: Self = $res;
            const ROOT_MERGE: Self = $merge;
            const ROOT_CLUSTER: Self = $cluster;
            const FIXED_RESIDUAL: Self = $fixed;
            const MULTIPLIER_BAND: Self = $band;
            const COPRIME: Self = $coprime;
        }
    };
}

impl_real!(f64, 1e-10, 1e-8, 1e-5, 1e-9, 1e-9, 1e-9);
impl_real!(f32, 2e-5, 1e-3, 1e-2, 1e-4, 1e-5, 1e-4);

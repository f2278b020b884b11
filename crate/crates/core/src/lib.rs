//! Attracting basins of rational maps on the Riemann sphere: basin rasters,
//! backward orbit trees, Green's function level sets and quasi-hyperbolic
//! distances from basin points to the backward orbit.

pub mod boettcher;
pub mod grid;
pub mod harness;
pub mod map;
pub mod metric;
pub mod orbit;
pub mod point;
pub mod poly;
pub mod scalar;

/// Version line carried by every output file.
pub const FORMAT_HEADER: &str = "basin-metric-lab v1";

pub type Point = point::ComplexPoint<f64>;
pub type RationalMap64 = map::RationalMap<f64>;
pub type RationalMap32 = map::RationalMap<f32>;
pub type Complex64 = num_complex::Complex<f64>;

pub use grid::{GridSpec, SphereGrid};
pub use map::{parse_map, FixedPointClass, FixedPointInfo, RationalMap};
pub use point::{Chart, ComplexPoint};

//! Per-cell basin classification.

use super::geometry::GridGeometry;
use super::GridSpec;
use crate::boettcher::escape;
use crate::point::{chordal3, Chart};
use num_complex::Complex;
use crate::{Point, RationalMap64};
use rayon::prelude::*;

pub(crate) struct Attractors {
    pub target: [f64; 3],
    pub others: Vec<[f64; 3]>,
}

/// Whether the orbit of `z` enters the `eps`-ball of the target within
/// `max_iter` steps. Orbits captured by another attracting fixed point stop
/// early.
pub(crate) fn converges(map: &RationalMap64, z: &Point, att: &Attractors, eps: f64, max_iter: usize) -> bool {
    let mut z = *z;
    for step in 0..=max_iter {
        let s = z.to_sphere();
        if chordal3(&s, &att.target) <= eps {
            return true;
        }
        if att.others.iter().any(|o| chordal3(&s, o) <= eps) || !z.is_finite_value() {
            return false;
        }
        if step < max_iter {
            z = map.evaluate(&z);
        }
    }
    false
}

/// Membership of every owned cell. When `guard` holds polynomial coefficients (polynomial basin of
/// infinity) cells whose escape-rate distance bound to the Julia set is below
/// half a pitch are dropped, so totally disconnected Julia sets still leave a
/// boundary on the raster.
pub(crate) fn classify(
    geom: &GridGeometry,
    map: &RationalMap64,
    att: &Attractors,
    spec: &GridSpec,
    guard: Option<&[Complex<f64>]>,
) -> Vec<bool> {
    let owned: Vec<usize> = geom.owned_cells().collect();
    let half = 0.5 * geom.pitch();
    let flags: Vec<bool> = owned
        .par_iter()
        .map(|&idx| {
            let c = geom.center(idx);
            if !converges(map, &c, att, spec.epsilon_attract, spec.max_iter) {
                return false;
            }
            let poly = match guard {
                Some(poly) => poly,
                None => return true,
            };
            // distance scale of the cell in the z-plane
            let (z, scale) = match c.chart {
                Chart::Z => (c.coord(), half),
                Chart::W => {
                    if c.modulus() == 0.0 {
                        return true;
                    }
                    let z = c.coord().inv();
                    (z, half * z.norm_sqr())
                }
            };
            if z.norm() > 2.0 * julia_radius(poly) {
                return true;
            }
            match escape(poly, z, 1e8, spec.max_iter) {
                Some(e) => e.distance_bound() >= scale,
                None => false,
            }
        })
        .collect();
    let mut member = vec![false; geom.num_cells()];
    for (&idx, &f) in owned.iter().zip(&flags) {
        member[idx] = f;
    }
    member
}

/// Radius of a disc containing the Julia set of the polynomial: every orbit
/// starting outside it escapes.
pub(crate) fn julia_radius(poly: &[Complex<f64>]) -> f64 {
    let d = poly.len() - 1;
    let lead = poly[d].norm();
    let tail: f64 = poly[..d].iter().map(|c| c.norm()).sum::<f64>() / lead;
    (1.0 + tail).max((2.0 / lead).powf(1.0 / (d as f64 - 1.0)))
}

//! Green's function of the basin of infinity of a polynomial, its level
//! domains `U_n = {G > t0/d^n}` and the annuli between consecutive levels.

use crate::grid::label::label_components;
use crate::grid::{GridError, SphereGrid};
use crate::orbit::OrbitTree;
use crate::point::Chart;
use crate::poly::horner_d;
use crate::{Point, RationalMap64, FORMAT_HEADER};
use num_complex::Complex;
use rayon::prelude::*;
use std::io::{self, Write};
use thiserror::Error;

pub const ESCAPE_RADIUS: f64 = 1e8;

/// Annulus components smaller than this many cells are left out of coverage.
pub const MIN_COVERAGE_CELLS: usize = 25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoettcherError {
    #[error("map is not a polynomial")]
    NotPolynomial,
    #[error("grid is not the basin of infinity")]
    NotBasinOfInfinity,
    #[error("bad threshold: {0}")]
    BadThreshold(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Escape data of one orbit: the Green's function and the norm of its
/// gradient at the starting point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Escape {
    pub green: f64,
    pub gradient: f64,
    pub steps: usize,
}

impl Escape {
    /// Lower bound for the distance to the Julia set, from the Koebe quarter
    /// theorem applied to the Boettcher coordinate.
    pub fn distance_bound(&self) -> f64 {
        (1.0 - (-2.0 * self.green).exp()) / (4.0 * self.gradient)
    }
}

/// Iterates the polynomial with ascending `coeffs` from `z` until the orbit
/// leaves the disc of radius `radius`. `None` if it stays within `max_iter`
/// steps.
pub fn escape(coeffs: &[Complex<f64>], z: Complex<f64>, radius: f64, max_iter: usize) -> Option<Escape> {
    let d = coeffs.len() - 1;
    let shift = coeffs[d].norm().ln() / (d as f64 - 1.0);
    let mut z = z;
    let mut dz = Complex::new(1.0, 0.0);
    let mut scale = 1.0;
    for steps in 0..=max_iter {
        let m = z.norm();
        if !m.is_finite() {
            return None;
        }
        if m > radius {
            return Some(Escape {
                green: (m.ln() + shift) * scale,
                gradient: dz.norm() * scale / m,
                steps,
            });
        }
        let (v, dv) = horner_d(coeffs, z);
        dz *= dv;
        z = v;
        scale /= d as f64;
    }
    None
}

/// `G` at a sphere point; zero on bounded orbits, infinite at infinity.
pub fn green_at(map: &RationalMap64, z: &Point, max_iter: usize) -> Result<f64, BoettcherError> {
    let coeffs = map.polynomial_coeffs().ok_or(BoettcherError::NotPolynomial)?;
    Ok(match z.to_finite() {
        None => f64::INFINITY,
        Some(v) => escape(&coeffs, v, ESCAPE_RADIUS, max_iter).map_or(0.0, |e| e.green),
    })
}

#[derive(Clone, Debug)]
pub struct GreensField {
    values: Vec<f64>,
    pub escape_radius: f64,
    pub degree: usize,
    max_iter: usize,
}

/// `G` on every cell of a basin-of-infinity raster. Non-member cells and
/// non-escaping centers get 0.
pub fn greens_function(map: &RationalMap64, grid: &SphereGrid) -> Result<GreensField, BoettcherError> {
    let coeffs = map.polynomial_coeffs().ok_or(BoettcherError::NotPolynomial)?;
    map.require_dynamical().map_err(GridError::from)?;
    if !grid.attracting_point().is_infinity() {
        return Err(BoettcherError::NotBasinOfInfinity);
    }
    let max_iter = grid.spec().max_iter;
    let owned: Vec<usize> = grid.member_cells().collect();
    let g: Vec<f64> = owned
        .par_iter()
        .map(|&c| match grid.center(c).to_finite() {
            None => f64::INFINITY,
            Some(z) => escape(&coeffs, z, ESCAPE_RADIUS, max_iter).map_or(0.0, |e| e.green),
        })
        .collect();
    let geom = grid.geometry();
    let mut values = vec![0.0; grid.num_cells()];
    for (&c, &v) in owned.iter().zip(&g) {
        values[c] = v;
    }
    for idx in 0..grid.num_cells() {
        if !geom.is_owned(idx) {
            if let Some(p) = geom.partner(idx) {
                values[idx] = values[p];
            }
        }
    }
    Ok(GreensField {
        values,
        escape_radius: ESCAPE_RADIUS,
        degree: map.degree(),
        max_iter,
    })
}

impl GreensField {
    pub fn value(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter
    }
}

/// Default `t0`: half the largest `G` among cells at least five cells away
/// from the non-escaping set, raised if needed above every finite critical
/// level so that `U_0` is a disc around infinity.
pub fn default_threshold(map: &RationalMap64, field: &GreensField, grid: &SphereGrid) -> Result<f64, BoettcherError> {
    let mut far = 0.0f64;
    for c in grid.member_cells() {
        let g = field.value(c);
        if g.is_finite() && field.value(c) > 0.0 && grid.boundary_pitches(c)? >= 5.0 {
            far = far.max(g);
        }
    }
    let mut t0 = 0.5 * far;
    for c in map.critical_points().map_err(GridError::from)? {
        if c.is_infinity() {
            continue;
        }
        let g = green_at(map, &c, field.max_iter)?;
        if g.is_finite() && g * field.degree as f64 > t0 {
            t0 = g * field.degree as f64;
        }
    }
    if t0.is_nan() || t0 <= 0.0 {
        return Err(BoettcherError::BadThreshold("no escaping cells".into()));
    }
    Ok(t0)
}

/// Threshold `t0 = G(p0) d^{-s}` with `s` in `(0, 1)` chosen so that neither
/// the base point levels nor any escaping critical level sits near a level
/// line `t0/d^n`.
pub fn generic_threshold(map: &RationalMap64, base: &Point, max_iter: usize) -> Result<f64, BoettcherError> {
    let d = map.degree() as f64;
    let gb = green_at(map, base, max_iter)?;
    if !(gb > 0.0 && gb.is_finite()) {
        return Err(BoettcherError::BadThreshold(format!("G(base) = {gb}")));
    }
    let mut marks = vec![0.0];
    for c in map.critical_points().map_err(GridError::from)? {
        if c.is_infinity() {
            continue;
        }
        let g = green_at(map, &c, max_iter)?;
        if g > 0.0 {
            marks.push((g / gb).log(d).rem_euclid(1.0));
        }
    }
    let circ = |a: f64, b: f64| {
        let x = (a - b).rem_euclid(1.0);
        x.min(1.0 - x)
    };
    let mut best = (0.5, -1.0);
    for k in 1..20 {
        let s = k as f64 / 20.0;
        let gap = marks.iter().map(|&m| circ(m, -s)).fold(f64::INFINITY, f64::min);
        if gap > best.1 + 1e-12 {
            best = (s, gap);
        }
    }
    Ok(gb * d.powf(-best.0))
}

/// Level bands: band `n >= 1` is `W_n = {t_n < G <= t_(n-1)}`, band 0 is
/// `U_0 = {G > t0}`.
#[derive(Clone, Debug)]
pub struct AnnulusDecomposition {
    pub t0: f64,
    pub n_max: usize,
    /// `t_n = t0 / d^n` for `n = 0..=n_max`.
    pub levels: Vec<f64>,
    band: Vec<u8>,
    component: Vec<u32>,
    /// Owned-cell counts per component, indexed `[n][id]` (id 0 unused).
    sizes: Vec<Vec<usize>>,
}

const NO_BAND: u8 = u8::MAX;

pub fn annulus_decomposition(
    field: &GreensField,
    grid: &SphereGrid,
    t0: f64,
    n_max: usize,
) -> Result<AnnulusDecomposition, BoettcherError> {
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(BoettcherError::BadThreshold(format!("t0 = {t0}")));
    }
    if !(1..=60).contains(&n_max) {
        return Err(BoettcherError::BadThreshold(format!("n_max = {n_max} outside [1, 60]")));
    }
    let d = field.degree as f64;
    let levels: Vec<f64> = (0..=n_max).map(|n| t0 / d.powi(n as i32)).collect();
    let geom = grid.geometry();
    let n = grid.num_cells();
    let band: Vec<u8> = (0..n)
        .map(|c| {
            let g = field.value(c);
            if !grid.is_member(c) || g <= levels[n_max] {
                NO_BAND
            } else if g > t0 {
                0
            } else {
                // first n with g > t_n
                levels.iter().position(|&t| g > t).unwrap_or(n_max) as u8
            }
        })
        .collect();
    let mut component = vec![0u32; n];
    let mut sizes = Vec::with_capacity(n_max + 1);
    for level in 0..=n_max {
        let mask: Vec<bool> = band.iter().map(|&b| b as usize == level).collect();
        let (labels, counts) = label_components(geom, &mask, None);
        if level == 0 {
            let at_inf = geom.locate_cell(&Point::infinity());
            if counts.len() != 2 || at_inf.is_none_or(|c| labels[c] != 1) {
                return Err(BoettcherError::BadThreshold(format!(
                    "{{G > {t0}}} has {} components",
                    counts.len() - 1
                )));
            }
        }
        for c in 0..n {
            if mask[c] {
                component[c] = labels[c];
            }
        }
        sizes.push(counts);
    }
    Ok(AnnulusDecomposition {
        t0,
        n_max,
        levels,
        band,
        component,
        sizes,
    })
}

impl AnnulusDecomposition {
    /// Band of a cell: 0 for `U_0`, `n` for `W_n`, `None` below `t_n_max`.
    pub fn band_of(&self, cell: usize) -> Option<usize> {
        (self.band[cell] != NO_BAND).then_some(self.band[cell] as usize)
    }

    /// `(band, component)` of a cell.
    pub fn component_of(&self, cell: usize) -> Option<(usize, u32)> {
        self.band_of(cell).map(|b| (b, self.component[cell]))
    }

    pub fn component_count(&self, n: usize) -> usize {
        self.sizes[n].len() - 1
    }

    /// Number of components of `W_n` with at least `min_cells` cells.
    pub fn component_count_at_least(&self, n: usize, min_cells: usize) -> usize {
        self.sizes[n][1..].iter().filter(|&&s| s >= min_cells).count()
    }

    pub fn component_size(&self, n: usize, id: u32) -> usize {
        self.sizes[n][id as usize]
    }

    /// Band index for a value of `G`.
    pub fn band_for_value(&self, g: f64) -> Option<usize> {
        if g > self.t0 {
            Some(0)
        } else if g <= self.levels[self.n_max] {
            None
        } else {
            self.levels.iter().position(|&t| g > t)
        }
    }

    /// Boundary cells of every annulus component as CSV rows
    /// `level,component,chart,i,j`.
    pub fn write_contours_csv<W: Write>(&self, grid: &SphereGrid, out: &mut W) -> io::Result<()> {
        writeln!(out, "# {FORMAT_HEADER}")?;
        writeln!(out, "level,component,chart,i,j")?;
        let geom = grid.geometry();
        let mut rows: Vec<(usize, u32, Chart, usize, usize)> = Vec::new();
        for c in geom.owned_cells() {
            let Some((b, id)) = self.component_of(c) else { continue };
            if b == 0 {
                continue;
            }
            let mut edge = false;
            geom.for_each_neighbor(c, false, |nb, _, _| edge |= self.component_of(nb) != Some((b, id)));
            if edge {
                let (chart, i, j) = geom.decompose(c);
                rows.push((b, id, chart, i, j));
            }
        }
        rows.sort();
        for (b, id, chart, i, j) in rows {
            writeln!(out, "{b},{id},{chart},{i},{j}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentCoverage {
    pub id: u32,
    pub cells: usize,
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelCoverage {
    pub level: usize,
    pub components: Vec<ComponentCoverage>,
}

impl LevelCoverage {
    pub fn total(&self) -> usize {
        self.components.len()
    }

    pub fn covered(&self) -> usize {
        self.components.iter().filter(|c| c.nodes > 0).count()
    }

    pub fn fraction(&self) -> f64 {
        if self.components.is_empty() {
            1.0
        } else {
            self.covered() as f64 / self.total() as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageReport {
    pub levels: Vec<LevelCoverage>,
    pub tree_nodes: usize,
}

impl CoverageReport {
    pub fn is_complete(&self) -> bool {
        self.tree_nodes > 0 && self.levels.iter().all(|l| l.covered() == l.total())
    }

    /// Covered over total across all levels; 0 for an empty tree.
    pub fn fraction(&self) -> f64 {
        let total: usize = self.levels.iter().map(|l| l.total()).sum();
        let covered: usize = self.levels.iter().map(|l| l.covered()).sum();
        if self.tree_nodes == 0 {
            0.0
        } else if total == 0 {
            1.0
        } else {
            covered as f64 / total as f64
        }
    }
}

/// For every annulus component of at least [`MIN_COVERAGE_CELLS`] cells,
/// counts the tree nodes whose cell lies in it. A node on a level line is
/// attributed to the band of its cell.
pub fn verify_annulus_coverage(dec: &AnnulusDecomposition, tree: &OrbitTree) -> CoverageReport {
    verify_coverage_up_to(dec, tree, usize::MAX)
}

/// Coverage using only the tree nodes of depth at most `depth`.
pub fn verify_coverage_up_to(dec: &AnnulusDecomposition, tree: &OrbitTree, depth: usize) -> CoverageReport {
    let mut hits: Vec<Vec<usize>> = dec.sizes.iter().map(|s| vec![0; s.len()]).collect();
    let mut used = 0;
    for node in tree.nodes().iter().filter(|n| n.depth <= depth) {
        used += 1;
        if let Some((b, id)) = dec.component_of(node.cell) {
            hits[b][id as usize] += 1;
        }
    }
    let levels = (1..=dec.n_max)
        .map(|n| LevelCoverage {
            level: n,
            components: (1..dec.sizes[n].len())
                .filter(|&id| dec.sizes[n][id] >= MIN_COVERAGE_CELLS)
                .map(|id| ComponentCoverage {
                    id: id as u32,
                    cells: dec.sizes[n][id],
                    nodes: hits[n][id],
                })
                .collect(),
        })
        .collect();
    CoverageReport { levels, tree_nodes: used }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn green_of_z_squared() {
        let z2 = [c(0.0), c(0.0), c(1.0)];
        let e = escape(&z2, c(2.0), ESCAPE_RADIUS, 100).unwrap();
        assert!((e.green - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((e.gradient - 0.5).abs() < 1e-12);
        assert!(escape(&z2, c(0.5), ESCAPE_RADIUS, 100).is_none());
    }

    #[test]
    fn green_of_z_squared_plus_one_at_two() {
        // oracle: 2^-n ln|f^n(2)| with the orbit carried in extended range
        let mut z = 2.0f64;
        let mut prev = 0.0;
        let mut g = 0.0;
        for n in 1..=8 {
            z = z * z + 1.0;
            g = z.ln() / 2f64.powi(n);
            if n > 1 {
                assert!(g >= prev);
            }
            prev = g;
        }
        let e = escape(&[c(1.0), c(0.0), c(1.0)], c(2.0), ESCAPE_RADIUS, 100).unwrap();
        assert!((e.green - g).abs() < 1e-9, "{} vs {g}", e.green);
        assert!((e.green - 0.8146).abs() < 1e-3);
    }

    #[test]
    fn leading_coefficient_enters_the_constant() {
        // G for 2z^2 is log|z| + log 2
        let e = escape(&[c(0.0), c(0.0), c(2.0)], c(3.0), ESCAPE_RADIUS, 100).unwrap();
        assert!((e.green - (3.0f64.ln() + 2.0f64.ln())).abs() < 1e-10);
    }

    #[test]
    fn distance_bound_is_below_true_distance() {
        // z^2: Julia set is the unit circle
        for r in [1.01, 1.1, 1.5, 3.0] {
            let e = escape(&[c(0.0), c(0.0), c(1.0)], c(r), ESCAPE_RADIUS, 100).unwrap();
            let b = e.distance_bound();
            assert!(b <= r - 1.0 && b >= (r - 1.0) / 4.0, "{r}: {b}");
        }
    }
}

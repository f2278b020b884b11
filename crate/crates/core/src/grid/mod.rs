//! Basins of attraction rasterised on the two-chart sphere grid.

mod basin;
mod edt;
mod geometry;
pub(crate) mod label;

pub use edt::{squared_edt, squared_edt_nearest};
pub use geometry::{GridGeometry, KING, STENCIL16};

use crate::map::MapError;
use crate::point::{Chart, CHART_EXTENT};
use crate::{Point, RationalMap64, FORMAT_HEADER};
use basin::Attractors;
use std::io::{self, Write};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),
    #[error("point is not attracting (|multiplier| = {0})")]
    NotAttracting(f64),
    #[error("the attracting point's cell is not a basin member")]
    AttractorNotMember,
    #[error("point {0} is not in the basin")]
    NotInBasin(String),
    #[error("cell {0} is not a basin member")]
    NotMember(usize),
    #[error("{0} has not been computed for this grid")]
    MissingStage(&'static str),
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub resolution: usize,
    pub chart_extent: f64,
    pub epsilon_attract: f64,
    pub max_iter: usize,
}

impl GridSpec {
    pub fn new(resolution: usize) -> Self {
        GridSpec {
            resolution,
            chart_extent: CHART_EXTENT,
            epsilon_attract: 1e-3,
            max_iter: 2000,
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if !(64..=8192).contains(&self.resolution) {
            return Err(GridError::InvalidSpec(format!(
                "resolution {} outside [64, 8192]",
                self.resolution
            )));
        }
        if self.chart_extent != CHART_EXTENT {
            return Err(GridError::InvalidSpec(format!("chart extent must be {CHART_EXTENT}")));
        }
        if !(self.epsilon_attract > 0.0 && self.epsilon_attract < 0.1) {
            return Err(GridError::InvalidSpec(format!(
                "epsilon_attract {} outside (0, 0.1)",
                self.epsilon_attract
            )));
        }
        if !(50..=100_000).contains(&self.max_iter) {
            return Err(GridError::InvalidSpec(format!(
                "max_iter {} outside [50, 100000]",
                self.max_iter
            )));
        }
        Ok(())
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::new(512)
    }
}

/// Basin raster. Built in three stages: membership ([`compute_basin`]),
/// labels ([`label_components`]) and the boundary distance field
/// ([`boundary_distance`]).
#[derive(Clone, Debug)]
pub struct SphereGrid {
    spec: GridSpec,
    geom: Arc<GridGeometry>,
    attracting_point: Point,
    anchor: usize,
    membership: Vec<bool>,
    labels: Option<Vec<u32>>,
    sizes: Vec<usize>,
    boundary: Option<Vec<f64>>,
    chart_dist: Vec<f32>,
}

/// Rasterises the basin of the attracting fixed point `p`.
pub fn compute_basin(map: &RationalMap64, p: &Point, spec: &GridSpec) -> Result<SphereGrid, GridError> {
    compute_basin_on(Arc::new(GridGeometry::new(spec.resolution)), map, p, spec)
}

/// As [`compute_basin`] on a prebuilt geometry of matching resolution.
pub fn compute_basin_on(
    geom: Arc<GridGeometry>,
    map: &RationalMap64,
    p: &Point,
    spec: &GridSpec,
) -> Result<SphereGrid, GridError> {
    spec.validate()?;
    if geom.resolution() != spec.resolution {
        return Err(GridError::InvalidSpec("geometry resolution mismatch".into()));
    }
    map.require_dynamical()?;
    let p = p.canonical();
    let lambda = map.multiplier(&p)?.norm();
    if lambda >= 1.0 {
        return Err(GridError::NotAttracting(lambda));
    }
    let others = map
        .fixed_points()?
        .into_iter()
        .filter(|f| f.class.is_attracting() && f.location.chordal(&p) > 1e-6)
        .map(|f| f.location.to_sphere())
        .collect();
    let att = Attractors {
        target: p.to_sphere(),
        others,
    };
    let poly = if p.is_infinity() { map.polynomial_coeffs() } else { None };
    let mut membership = basin::classify(&geom, map, &att, spec, poly.as_deref());
    for idx in 0..geom.num_cells() {
        if !geom.is_owned(idx) {
            membership[idx] = geom.partner(idx).is_some_and(|q| membership[q]);
        }
    }
    let anchor = geom
        .locate_cell(&p)
        .ok_or_else(|| GridError::InvalidSpec("attracting point outside the raster".into()))?;
    Ok(SphereGrid {
        spec: spec.clone(),
        geom,
        attracting_point: p,
        anchor,
        membership,
        labels: None,
        sizes: vec![0],
        boundary: None,
        chart_dist: Vec::new(),
    })
}

/// Labels 8-connected components across both charts; component 1 holds the
/// attracting point.
pub fn label_components(mut grid: SphereGrid) -> Result<SphereGrid, GridError> {
    if !grid.membership[grid.anchor] {
        return Err(GridError::AttractorNotMember);
    }
    let (labels, sizes) = label::label_components(&grid.geom, &grid.membership, Some(grid.anchor));
    grid.labels = Some(labels);
    grid.sizes = sizes;
    Ok(grid)
}

/// Spherical distance from each member cell to the nearest non-member cell.
///
/// Each chart raster gets an exact distance transform that also records the
/// nearest non-member cell. A member cell measures, in its own chart, the
/// distance to the near edge of its own raster's candidate; when that
/// candidate is farther than the edge of the chart square, the other chart's
/// candidate is measured too and the nearer one kept. The result is scaled
/// by the chart factor `2/(1+|u|^2)` of the cell.
pub fn boundary_distance(mut grid: SphereGrid) -> SphereGrid {
    let geom = &grid.geom;
    let res = geom.resolution();
    let per = geom.cells_per_chart();
    let pitch = geom.pitch();
    let half = 0.5 * pitch;
    let nearest: Vec<Vec<u32>> = [Chart::Z, Chart::W]
        .iter()
        .map(|c| {
            let off = c.index() * per;
            let feature: Vec<bool> = grid.membership[off..off + per].iter().map(|&m| !m).collect();
            squared_edt_nearest(&feature, res).1
        })
        .collect();
    let n = geom.num_cells();
    let mut boundary = vec![f64::NAN; n];
    let mut chart_dist = vec![f32::NAN; n];
    for idx in geom.owned_cells() {
        if !grid.membership[idx] {
            continue;
        }
        let c = geom.center(idx);
        let u = c.coord();
        let mut best = f64::INFINITY;
        let own = nearest[c.chart.index()][idx % per];
        if own != u32::MAX {
            let f = geom.center_coord(c.chart.index() * per + own as usize);
            best = (u - f).norm() - half;
        }
        // non-members beyond the chart square are invisible to this raster
        let edge = CHART_EXTENT - u.re.abs().max(u.im.abs());
        let o = c.in_chart(c.chart.other());
        let cell = if best + half > edge { geom.cell_containing(o.chart, o.coord()) } else { None };
        if let Some(cell) = cell {
            let far = nearest[o.chart.index()][cell % per];
            if far != u32::MAX {
                let w = geom.center_coord(o.chart.index() * per + far as usize);
                if w.norm_sqr() > 0.0 {
                    let f = w.inv();
                    // half a pitch of the other chart, read in this one
                    best = best.min((u - f).norm() - half * f.norm_sqr());
                }
            }
        }
        boundary[idx] = c.chart_factor() * best;
        chart_dist[idx] = best as f32;
    }
    for idx in 0..n {
        if !geom.is_owned(idx) {
            if let Some(p) = geom.partner(idx) {
                boundary[idx] = boundary[p];
                chart_dist[idx] = chart_dist[p];
            }
        }
    }
    grid.boundary = Some(boundary);
    grid.chart_dist = chart_dist;
    grid
}

/// All three stages.
pub fn build_grid(map: &RationalMap64, p: &Point, spec: &GridSpec) -> Result<SphereGrid, GridError> {
    Ok(boundary_distance(label_components(compute_basin(map, p, spec)?)?))
}

/// Cell containing `z` and its component.
pub fn locate(grid: &SphereGrid, z: &Point) -> Result<(usize, u32), GridError> {
    grid.locate(z)
}

impl SphereGrid {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geom
    }

    pub fn shared_geometry(&self) -> Arc<GridGeometry> {
        self.geom.clone()
    }

    pub fn attracting_point(&self) -> &Point {
        &self.attracting_point
    }

    pub fn resolution(&self) -> usize {
        self.geom.resolution()
    }

    pub fn pitch(&self) -> f64 {
        self.geom.pitch()
    }

    pub fn num_cells(&self) -> usize {
        self.geom.num_cells()
    }

    pub fn center(&self, cell: usize) -> Point {
        self.geom.center(cell)
    }

    pub fn is_member(&self, cell: usize) -> bool {
        self.membership[cell]
    }

    pub fn membership(&self) -> &[bool] {
        &self.membership
    }

    /// Owned member cells, in index order.
    pub fn member_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.geom.owned_cells().filter(move |&c| self.membership[c])
    }

    pub fn member_count(&self) -> usize {
        self.member_cells().count()
    }

    /// Spherical area of the member cells. Owned cells overlap along the
    /// seam; only cells whose center lies in the unit disc of their chart are
    /// counted, which partitions the sphere.
    pub fn member_area(&self) -> f64 {
        self.member_cells()
            .filter(|&c| self.in_core(c))
            .map(|c| self.geom.cell_area(c))
            .sum()
    }

    /// Spherical area of the whole raster, as counted by [`Self::member_area`].
    pub fn total_area(&self) -> f64 {
        self.geom
            .owned_cells()
            .filter(|&c| self.in_core(c))
            .map(|c| self.geom.cell_area(c))
            .sum()
    }

    fn in_core(&self, cell: usize) -> bool {
        let p = self.geom.center(cell);
        p.canonical().chart == p.chart
    }

    pub fn is_labeled(&self) -> bool {
        self.labels.is_some()
    }

    pub fn component_count(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Owned cell count of component `id`.
    pub fn component_size(&self, id: u32) -> usize {
        self.sizes.get(id as usize).copied().unwrap_or(0)
    }

    /// Label of a cell, 0 for non-members.
    pub fn component_of(&self, cell: usize) -> u32 {
        self.labels.as_ref().map_or(0, |l| l[cell])
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    /// Owned cells of a component.
    pub fn component_cells(&self, id: u32) -> Vec<usize> {
        match &self.labels {
            Some(l) => self.geom.owned_cells().filter(|&c| l[c] == id).collect(),
            None => Vec::new(),
        }
    }

    pub fn has_boundary_distance(&self) -> bool {
        self.boundary.is_some()
    }

    /// Spherical distance to the nearest non-member cell.
    pub fn boundary_dist(&self, cell: usize) -> Result<f64, GridError> {
        let b = self.boundary.as_ref().ok_or(GridError::MissingStage("boundary distance"))?;
        if cell >= b.len() || !self.membership[cell] {
            return Err(GridError::NotMember(cell));
        }
        Ok(b[cell])
    }

    /// Unchecked spherical boundary distance; NaN off the basin.
    pub(crate) fn boundary_raw(&self) -> &[f64] {
        self.boundary.as_deref().expect("boundary distance computed")
    }

    /// Boundary distance in the cell's own chart coordinates.
    pub fn boundary_dist_chart(&self, cell: usize) -> Result<f64, GridError> {
        self.boundary_dist(cell)?;
        Ok(self.chart_dist[cell] as f64)
    }

    /// Distance in cell pitches from the cell center to the nearest
    /// non-member cell center (own chart).
    pub fn boundary_pitches(&self, cell: usize) -> Result<f64, GridError> {
        Ok(self.boundary_dist_chart(cell)? / self.pitch() + 0.5)
    }

    /// Owned cell containing `z` and its component id.
    pub fn locate(&self, z: &Point) -> Result<(usize, u32), GridError> {
        match self.geom.locate_cell(z) {
            Some(c) if self.membership[c] => Ok((c, self.component_of(c))),
            _ => Err(GridError::NotInBasin(z.to_string())),
        }
    }

    /// Same raster with membership restricted to cells whose center satisfies
    /// `keep`; labels and boundary distances are recomputed.
    pub fn restricted(&self, keep: impl Fn(&Point) -> bool) -> Result<SphereGrid, GridError> {
        let mut membership = self.membership.clone();
        for idx in self.geom.owned_cells() {
            if membership[idx] && !keep(&self.geom.center(idx)) {
                membership[idx] = false;
            }
        }
        for idx in 0..self.geom.num_cells() {
            if !self.geom.is_owned(idx) {
                membership[idx] = self.geom.partner(idx).is_some_and(|q| membership[q]);
            }
        }
        let grid = SphereGrid {
            membership,
            labels: None,
            sizes: vec![0],
            boundary: None,
            chart_dist: Vec::new(),
            ..self.clone()
        };
        Ok(boundary_distance(label_components(grid)?))
    }

    /// Binary PPM: chart `z` on the left, chart `w` on the right, rows from
    /// top to bottom. Members are coloured by component, everything else is
    /// black.
    pub fn write_ppm<W: Write>(&self, out: &mut W) -> io::Result<()> {
        write_chart_ppm(&self.geom, out, |idx| match self.component_of(idx) {
            0 => [0, 0, 0],
            l => palette(l),
        })
    }
}

/// Binary PPM of both charts side by side (Z left, W right, north up), one
/// pixel per cell coloured by `color(cell)`.
pub fn write_chart_ppm<W: Write>(geom: &GridGeometry, out: &mut W, color: impl Fn(usize) -> [u8; 3]) -> io::Result<()> {
    let res = geom.resolution();
    write!(out, "P6\n# {FORMAT_HEADER}\n{} {}\n255\n", 2 * res, res)?;
    let mut row = vec![0u8; 6 * res];
    for r in 0..res {
        let j = res - 1 - r;
        for (k, px) in row.chunks_mut(3).enumerate() {
            let chart = Chart::from_index(k / res);
            px.copy_from_slice(&color(geom.index(chart, k % res, j)));
        }
        out.write_all(&row)?;
    }
    Ok(())
}

/// Fixed component palette; never black.
pub fn palette(label: u32) -> [u8; 3] {
    let h = (label as f64 * 0.618_034).fract() * 6.0;
    let (s, v) = (0.65, 0.95);
    let i = h.floor();
    let f = h - i;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    let (r, g, b) = match i as u32 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [(r * 255.0).round() as u8, (g * 255.0).round() as u8, (b * 255.0).round() as u8]
}

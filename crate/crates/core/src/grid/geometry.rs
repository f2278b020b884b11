//! Two-chart raster of the sphere.
//!
//! Each chart carries a `res x res` square raster over `[-1.5, 1.5]^2`.
//! A cell is *owned* when its center lies within `1 + 0.75 h` of the chart
//! origin (`h` the pitch); together the owned cells of both charts cover the
//! sphere. The remaining *shadow* cells stand in for their partner, the owned
//! cell of the other chart containing their center.

use crate::point::{Chart, ComplexPoint, CHART_EXTENT};
use crate::Point;
use num_complex::Complex;

/// King moves.
pub const KING: [(i32, i32); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// King and knight moves.
pub const STENCIL16: [(i32, i32); 16] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (-2, -1),
    (-1, -2),
    (1, -2),
    (2, -1),
    (-2, 1),
    (-1, 2),
    (1, 2),
    (2, 1),
];

const NONE: u32 = u32::MAX;

/// Compressed adjacency across the chart seam, symmetric.
#[derive(Clone, Debug)]
struct SeamAdjacency {
    offsets: Vec<u32>,
    targets: Vec<u32>,
}

impl SeamAdjacency {
    fn of(&self, idx: usize) -> &[u32] {
        &self.targets[self.offsets[idx] as usize..self.offsets[idx + 1] as usize]
    }
}

#[derive(Clone, Debug)]
pub struct GridGeometry {
    res: usize,
    extent: f64,
    pitch: f64,
    owned: Vec<bool>,
    partner: Vec<u32>,
    seam8: SeamAdjacency,
    seam16: SeamAdjacency,
}

impl GridGeometry {
    pub fn new(res: usize) -> Self {
        let extent = CHART_EXTENT;
        let pitch = 2.0 * extent / res as f64;
        let n = 2 * res * res;
        let margin = 1.0 + 0.75 * pitch;
        let mut geom = GridGeometry {
            res,
            extent,
            pitch,
            owned: vec![false; n],
            partner: vec![NONE; n],
            seam8: SeamAdjacency { offsets: vec![], targets: vec![] },
            seam16: SeamAdjacency { offsets: vec![], targets: vec![] },
        };
        for idx in 0..n {
            geom.owned[idx] = geom.center_coord(idx).norm() < margin;
        }
        for idx in 0..n {
            geom.partner[idx] = if geom.owned[idx] {
                idx as u32
            } else {
                let p = geom.center(idx);
                let other = p.in_chart(p.chart.other());
                match geom.cell_containing(other.chart, other.coord()) {
                    Some(c) if geom.owned[c] => c as u32,
                    _ => NONE,
                }
            };
        }
        geom.seam8 = geom.build_seam(&KING);
        geom.seam16 = geom.build_seam(&STENCIL16);
        geom
    }

    fn build_seam(&self, stencil: &[(i32, i32)]) -> SeamAdjacency {
        let n = self.num_cells();
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for idx in 0..n {
            if !self.owned[idx] {
                continue;
            }
            for &(di, dj) in stencil {
                if let Some(nb) = self.offset(idx, di, dj) {
                    if self.owned[nb] {
                        continue;
                    }
                    let p = self.partner[nb];
                    if p != NONE && p as usize != idx && self.chart_of(p as usize) != self.chart_of(idx) {
                        pairs.push((idx as u32, p));
                        pairs.push((p, idx as u32));
                    }
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut offsets = vec![0u32; n + 1];
        for &(a, _) in &pairs {
            offsets[a as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        SeamAdjacency {
            offsets,
            targets: pairs.into_iter().map(|p| p.1).collect(),
        }
    }

    pub fn resolution(&self) -> usize {
        self.res
    }

    /// Cell side length in chart coordinates.
    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn num_cells(&self) -> usize {
        2 * self.res * self.res
    }

    pub fn cells_per_chart(&self) -> usize {
        self.res * self.res
    }

    pub fn index(&self, chart: Chart, i: usize, j: usize) -> usize {
        chart.index() * self.res * self.res + j * self.res + i
    }

    pub fn decompose(&self, idx: usize) -> (Chart, usize, usize) {
        let per = self.res * self.res;
        let chart = Chart::from_index(idx / per);
        let r = idx % per;
        (chart, r % self.res, r / self.res)
    }

    pub fn chart_of(&self, idx: usize) -> Chart {
        Chart::from_index(idx / (self.res * self.res))
    }

    pub fn center_coord(&self, idx: usize) -> Complex<f64> {
        let (_, i, j) = self.decompose(idx);
        Complex::new(
            -self.extent + (i as f64 + 0.5) * self.pitch,
            -self.extent + (j as f64 + 0.5) * self.pitch,
        )
    }

    pub fn center(&self, idx: usize) -> Point {
        ComplexPoint::from_chart(self.center_coord(idx), self.chart_of(idx))
    }

    pub fn cell_containing(&self, chart: Chart, u: Complex<f64>) -> Option<usize> {
        let fi = ((u.re + self.extent) / self.pitch).floor();
        let fj = ((u.im + self.extent) / self.pitch).floor();
        if !(fi >= 0.0 && fj >= 0.0 && fi < self.res as f64 && fj < self.res as f64) {
            return None;
        }
        Some(self.index(chart, fi as usize, fj as usize))
    }

    /// Same-chart neighbour at a raster offset.
    pub fn offset(&self, idx: usize, di: i32, dj: i32) -> Option<usize> {
        let (chart, i, j) = self.decompose(idx);
        let ni = i as i64 + di as i64;
        let nj = j as i64 + dj as i64;
        if ni < 0 || nj < 0 || ni >= self.res as i64 || nj >= self.res as i64 {
            return None;
        }
        Some(self.index(chart, ni as usize, nj as usize))
    }

    pub fn is_owned(&self, idx: usize) -> bool {
        self.owned[idx]
    }

    /// The owned cell representing `idx` (itself when owned).
    pub fn partner(&self, idx: usize) -> Option<usize> {
        let p = self.partner[idx];
        (p != NONE).then_some(p as usize)
    }

    /// Owned cell containing a sphere point.
    pub fn locate_cell(&self, z: &Point) -> Option<usize> {
        let c = z.canonical();
        let cell = self.cell_containing(c.chart, c.coord())?;
        self.partner(cell)
    }

    /// Owned cells adjacent to the owned cell `idx` under `stencil`
    /// (in-chart moves plus seam crossings).
    pub fn for_each_neighbor(&self, idx: usize, wide: bool, mut f: impl FnMut(usize, i32, i32)) {
        let stencil: &[(i32, i32)] = if wide { &STENCIL16 } else { &KING };
        for &(di, dj) in stencil {
            if let Some(nb) = self.offset(idx, di, dj) {
                if self.owned[nb] {
                    f(nb, di, dj);
                }
            }
        }
        let seam = if wide { &self.seam16 } else { &self.seam8 };
        for &t in seam.of(idx) {
            f(t as usize, 0, 0);
        }
    }

    pub fn owned_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_cells()).filter(move |&i| self.owned[i])
    }

    /// Spherical area of a cell (chordal metric, unit sphere).
    pub fn cell_area(&self, idx: usize) -> f64 {
        let f = self.center(idx).chart_factor();
        f * f * self.pitch * self.pitch
    }
}

//! Hyperbolic distance on the unit disc in closed form, and the
//! quasi-hyperbolic shortest-path surrogate on basin components.
//!
//! The surrogate integrates the density `1/delta` along paths of the
//! 16-neighbour cell graph, `delta` being the spherical distance to the
//! nearest non-member cell. On a simply connected component the hyperbolic
//! distance lies between a quarter of the surrogate and the surrogate itself.

use crate::grid::{GridError, SphereGrid};
use crate::map::RationalMap;
use crate::point::{chordal3, Chart};
use crate::scalar::Real;
use crate::{Point, RationalMap64};
use num_complex::Complex;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("point outside the unit disc")]
    OutOfDomain,
    #[error("no component {0}")]
    NoSuchComponent(u32),
    #[error("component {0} has a single cell")]
    DegenerateComponent(u32),
    #[error("cells {0} and {1} are not connected in the component graph")]
    DisconnectedPair(usize, usize),
    #[error("cell {0} is not in the graph's component")]
    NotInComponent(usize),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Hyperbolic distance on the unit disc for the density `1/(1-|z|^2)`,
/// `atanh(|z1-z2| / |1-conj(z1) z2|)`.
pub fn disk_reference_distance<T: Real>(z1: Complex<T>, z2: Complex<T>) -> Result<T, MetricError> {
    let one = T::one();
    let r1 = z1.norm();
    let r2 = z2.norm();
    if !(r1 < one && r2 < one) {
        return Err(MetricError::OutOfDomain);
    }
    let num = (z1 - z2).norm();
    let den = (Complex::new(one, T::zero()) - z1.conj() * z2).norm();
    // atanh(x) = ln((1+x)/sqrt(1-x^2)) with 1-x^2 in product form
    let s = ((one - r1) * (one + r1) * (one - r2) * (one + r2)).sqrt();
    Ok(((den + num) / s).ln())
}

/// Disc automorphism `z -> (z-a)/(1-conj(a) z)`.
pub fn disk_automorphism<T: Real>(a: Complex<T>, z: Complex<T>) -> Complex<T> {
    (z - a) / (Complex::new(T::one(), T::zero()) - a.conj() * z)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceResult {
    pub value: f64,
    pub path: Vec<usize>,
    /// Lower bound for the hyperbolic distance on a simply connected
    /// component (Koebe quarter factor).
    pub lower_bound: f64,
    pub upper_bound: f64,
}

impl DistanceResult {
    fn new(value: f64, path: Vec<usize>) -> Self {
        DistanceResult {
            value,
            path,
            lower_bound: value / 4.0,
            upper_bound: value,
        }
    }
}

/// Weighted cell graph of one component. Vertices are the component's owned
/// cells; edges follow king and knight moves (a knight move needs one of the
/// two cells it passes over in the component) plus seam crossings.
#[derive(Clone, Debug)]
pub struct MetricGraph<'g> {
    grid: &'g SphereGrid,
    component_id: u32,
    vertices: Vec<usize>,
}

pub fn build_metric_graph(grid: &SphereGrid, component_id: u32) -> Result<MetricGraph<'_>, MetricError> {
    MetricGraph::new(grid, component_id)
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Entry {
    dist: f64,
    tie: (u32, u32),
    cell: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        other
            .dist
            .total_cmp(&self.dist)
            .then(other.tie.cmp(&self.tie))
            .then(other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'g> MetricGraph<'g> {
    pub fn new(grid: &'g SphereGrid, component_id: u32) -> Result<Self, MetricError> {
        if !grid.has_boundary_distance() || !grid.is_labeled() {
            return Err(GridError::MissingStage("boundary distance").into());
        }
        if component_id == 0 || component_id as usize > grid.component_count() {
            return Err(MetricError::NoSuchComponent(component_id));
        }
        let vertices = grid.component_cells(component_id);
        if vertices.len() < 2 {
            return Err(MetricError::DegenerateComponent(component_id));
        }
        Ok(MetricGraph {
            grid,
            component_id,
            vertices,
        })
    }

    pub fn component_id(&self) -> u32 {
        self.component_id
    }

    pub fn grid(&self) -> &'g SphereGrid {
        self.grid
    }

    /// Owned cells of the component, in index order.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.grid.geometry().is_owned(cell) && self.grid.component_of(cell) == self.component_id
    }

    fn sphere(&self, cell: usize) -> [f64; 3] {
        self.grid.center(cell).to_sphere()
    }

    /// Calls `f(neighbour, weight)` for every edge at `cell`.
    pub fn for_each_edge(&self, cell: usize, mut f: impl FnMut(usize, f64)) {
        let grid = self.grid;
        let geom = grid.geometry();
        let labels = grid.labels().expect("labeled grid");
        let delta = grid.boundary_raw();
        let id = self.component_id;
        let here = self.sphere(cell);
        let inv = 1.0 / delta[cell];
        geom.for_each_neighbor(cell, true, |nb, di, dj| {
            if labels[nb] != id {
                return;
            }
            if di.abs() == 2 || dj.abs() == 2 {
                let (si, sj) = (di.signum(), dj.signum());
                let (a, b) = if di.abs() == 2 { ((si, 0), (si, sj)) } else { ((0, sj), (si, sj)) };
                let through = |o: (i32, i32)| geom.offset(cell, o.0, o.1).is_some_and(|c| labels[c] == id);
                if !through(a) && !through(b) {
                    return;
                }
            }
            let w = chordal3(&here, &self.sphere(nb)) * 0.5 * (inv + 1.0 / delta[nb]);
            f(nb, w);
        });
    }

    fn check(&self, cell: usize) -> Result<(), MetricError> {
        if self.contains(cell) {
            Ok(())
        } else {
            Err(MetricError::NotInComponent(cell))
        }
    }

    /// Owned cell of the component containing `z`.
    pub fn cell_of(&self, z: &Point) -> Result<usize, MetricError> {
        let (cell, id) = self.grid.locate(z)?;
        if id != self.component_id {
            return Err(MetricError::NotInComponent(cell));
        }
        Ok(cell)
    }

    /// Shortest path between two cells (Dijkstra, stops at the target).
    pub fn shortest_path(&self, a: usize, b: usize) -> Result<DistanceResult, MetricError> {
        self.check(a)?;
        self.check(b)?;
        let n = self.grid.num_cells();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![u32::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[a] = 0.0;
        heap.push(Entry {
            dist: 0.0,
            tie: (0, 0),
            cell: a as u32,
        });
        while let Some(Entry { dist: d, cell, .. }) = heap.pop() {
            let cell = cell as usize;
            if d > dist[cell] {
                continue;
            }
            if cell == b {
                break;
            }
            self.for_each_edge(cell, |nb, w| {
                let nd = d + w;
                if nd < dist[nb] {
                    dist[nb] = nd;
                    prev[nb] = cell as u32;
                    heap.push(Entry {
                        dist: nd,
                        tie: (0, 0),
                        cell: nb as u32,
                    });
                }
            });
        }
        if !dist[b].is_finite() {
            return Err(MetricError::DisconnectedPair(a, b));
        }
        let mut path = vec![b];
        let mut c = b;
        while c != a {
            c = prev[c] as usize;
            path.push(c);
        }
        path.reverse();
        Ok(DistanceResult::new(dist[b], path))
    }

    /// Distances from `a` to every cell (infinite off the component).
    pub fn single_source(&self, a: usize) -> Result<Vec<f64>, MetricError> {
        self.check(a)?;
        let mut dist = vec![f64::INFINITY; self.grid.num_cells()];
        let mut heap = BinaryHeap::new();
        dist[a] = 0.0;
        heap.push(Entry {
            dist: 0.0,
            tie: (0, 0),
            cell: a as u32,
        });
        while let Some(Entry { dist: d, cell, .. }) = heap.pop() {
            let cell = cell as usize;
            if d > dist[cell] {
                continue;
            }
            self.for_each_edge(cell, |nb, w| {
                let nd = d + w;
                if nd < dist[nb] {
                    dist[nb] = nd;
                    heap.push(Entry {
                        dist: nd,
                        tie: (0, 0),
                        cell: nb as u32,
                    });
                }
            });
        }
        Ok(dist)
    }
}

/// Dijkstra distance between the cells containing two points.
pub fn quasihyperbolic_distance(graph: &MetricGraph, a: usize, b: usize) -> Result<DistanceResult, MetricError> {
    graph.shortest_path(a, b)
}

/// Multi-source distance field. Every cell records its distance to the
/// nearest source and that source's tag; equal distances go to the lower
/// tag. Sources can be added incrementally; distances only decrease.
#[derive(Clone, Debug)]
pub struct DistanceField<'a, 'g> {
    graph: &'a MetricGraph<'g>,
    dist: Vec<f64>,
    tag: Vec<(u32, u32)>,
    owner: Vec<u32>,
}

pub const NO_SOURCE: u32 = u32::MAX;

impl<'a, 'g> DistanceField<'a, 'g> {
    pub fn new(graph: &'a MetricGraph<'g>) -> Self {
        let n = graph.grid.num_cells();
        DistanceField {
            graph,
            dist: vec![f64::INFINITY; n],
            tag: vec![(u32::MAX, u32::MAX); n],
            owner: vec![NO_SOURCE; n],
        }
    }

    /// Adds sources `(cell, tag, id)`; cells outside the component are
    /// ignored. Ties between sources are broken by the smaller `tag`.
    pub fn add_sources(&mut self, sources: &[(usize, (u32, u32), u32)]) {
        let graph = self.graph;
        let mut heap = BinaryHeap::new();
        for &(cell, tag, id) in sources {
            if !graph.contains(cell) {
                continue;
            }
            if (0.0, tag) < (self.dist[cell], self.tag[cell]) {
                self.dist[cell] = 0.0;
                self.tag[cell] = tag;
                self.owner[cell] = id;
                heap.push(Entry {
                    dist: 0.0,
                    tie: tag,
                    cell: cell as u32,
                });
            }
        }
        while let Some(Entry { dist: d, tie, cell }) = heap.pop() {
            let cell = cell as usize;
            if (d, tie) > (self.dist[cell], self.tag[cell]) {
                continue;
            }
            let id = self.owner[cell];
            let (dist, tag, owner) = (&mut self.dist, &mut self.tag, &mut self.owner);
            graph.for_each_edge(cell, |nb, w| {
                let nd = d + w;
                if (nd, tie) < (dist[nb], tag[nb]) {
                    dist[nb] = nd;
                    tag[nb] = tie;
                    owner[nb] = id;
                    heap.push(Entry {
                        dist: nd,
                        tie,
                        cell: nb as u32,
                    });
                }
            });
        }
    }

    /// Distance and source id at a cell; `None` if no source reaches it.
    pub fn nearest(&self, cell: usize) -> Option<(f64, u32)> {
        (self.owner[cell] != NO_SOURCE).then(|| (self.dist[cell], self.owner[cell]))
    }
}

/// One Schwarz-Pick comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct PairCheck {
    pub before: f64,
    pub after: f64,
    pub tolerance: f64,
}

impl PairCheck {
    pub fn violated(&self) -> bool {
        self.after > self.before * self.tolerance
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SchwarzPickReport {
    pub checks: Vec<PairCheck>,
    /// Pairs skipped because a point or its image is not in a labeled
    /// component.
    pub skipped: usize,
}

impl SchwarzPickReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().filter(|c| c.violated()).count()
    }

    pub fn violation_fraction(&self) -> f64 {
        if self.checks.is_empty() {
            0.0
        } else {
            self.violations() as f64 / self.checks.len() as f64
        }
    }
}

/// Closed-form check of `d(f(a), f(b)) <= d(a, b)` on the unit disc for a map
/// preserving the disc; tolerance is relative `1e-12`.
pub fn schwarz_pick_disk<T: Real>(map: &RationalMap<T>, pairs: &[(Complex<T>, Complex<T>)]) -> SchwarzPickReport {
    let mut report = SchwarzPickReport::default();
    for &(a, b) in pairs {
        let fa = map.evaluate_finite(a);
        let fb = map.evaluate_finite(b);
        let (Some(fa), Some(fb)) = (finite_in_chart(&fa), finite_in_chart(&fb)) else {
            report.skipped += 1;
            continue;
        };
        match (disk_reference_distance(a, b), disk_reference_distance(fa, fb)) {
            (Ok(d0), Ok(d1)) => report.checks.push(PairCheck {
                before: d0.to_f64().unwrap_or(f64::NAN),
                after: d1.to_f64().unwrap_or(f64::NAN),
                tolerance: 1.0 + 1e-12,
            }),
            _ => report.skipped += 1,
        }
    }
    report
}

fn finite_in_chart<T: Real>(p: &crate::point::ComplexPoint<T>) -> Option<Complex<T>> {
    match p.chart {
        Chart::Z => Some(p.coord()),
        Chart::W => p.to_finite(),
    }
}

/// Surrogate check on grid graphs: for each pair of points in one component,
/// compares the graph distance of the images (in the image component) with
/// the distance of the pair. A pair counts as a violation beyond the factor
/// `1 + 4 d(a, b) / resolution`.
pub fn schwarz_pick_check(map: &RationalMap64, grid: &SphereGrid, pairs: &[(Point, Point)]) -> SchwarzPickReport {
    let mut report = SchwarzPickReport::default();
    let res = grid.resolution() as f64;
    for (a, b) in pairs {
        let fa = map.evaluate(a);
        let fb = map.evaluate(b);
        let dist = |x: &Point, y: &Point| -> Option<f64> {
            let (cx, ix) = grid.locate(x).ok()?;
            let (cy, iy) = grid.locate(y).ok()?;
            if ix != iy || ix == 0 {
                return None;
            }
            let g = MetricGraph::new(grid, ix).ok()?;
            g.shortest_path(cx, cy).ok().map(|r| r.value)
        };
        match (dist(a, b), dist(&fa, &fb)) {
            (Some(d0), Some(d1)) => report.checks.push(PairCheck {
                before: d0,
                after: d1,
                tolerance: 1.0 + 4.0 * d0 / res,
            }),
            _ => report.skipped += 1,
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(disk_reference_distance(c(0.0, 0.0), c(0.0, 0.0)).unwrap(), 0.0);
        let d = disk_reference_distance(c(0.0, 0.0), c(0.5, 0.0)).unwrap();
        assert!((d - 0.5f64.atanh()).abs() < 1e-15);
        assert!((d - 0.549_306_1).abs() < 1e-7);
        let d = disk_reference_distance(c(0.3, 0.0), c(0.7, 0.0)).unwrap();
        assert!((d - (0.4f64 / 0.79).atanh()).abs() < 1e-14);
        assert!((d - 0.5578).abs() < 1e-4);
        assert_eq!(
            disk_reference_distance(c(1.0, 0.0), c(0.0, 0.0)),
            Err(MetricError::OutOfDomain)
        );
    }

    #[test]
    fn closed_form_is_symmetric_and_f32_works() {
        let a = c(0.1, -0.4);
        let b = c(-0.6, 0.2);
        assert_eq!(disk_reference_distance(a, b).unwrap(), disk_reference_distance(b, a).unwrap());
        let d32 = disk_reference_distance(Complex::new(0.0f32, 0.0), Complex::new(0.5f32, 0.0)).unwrap();
        assert!((d32 - 0.549_306_1).abs() < 1e-6);
    }

    #[test]
    fn entry_order_is_min_heap() {
        let mut h = BinaryHeap::new();
        for (d, t) in [(2.0, 0), (1.0, 5), (1.0, 3), (3.0, 0)] {
            h.push(Entry {
                dist: d,
                tie: (t, 0),
                cell: 0,
            });
        }
        let order: Vec<(f64, u32)> = std::iter::from_fn(|| h.pop().map(|e| (e.dist, e.tie.0))).collect();
        assert_eq!(order, vec![(1.0, 3), (1.0, 5), (2.0, 0), (3.0, 0)]);
    }
}

//! Backward orbit tree of a base point, restricted to a basin raster.

use crate::grid::SphereGrid;
use crate::map::MapError;
use crate::metric::{DistanceResult, MetricError, MetricGraph};
use crate::{Point, RationalMap64, FORMAT_HEADER};
use rayon::prelude::*;
use std::collections::HashMap;
use std::io::{self, Write};
use thiserror::Error;

pub const DEFAULT_NODE_BUDGET: usize = 2_000_000;
pub const DEDUP_TOLERANCE: f64 = 1e-8;
/// Component tag of a node whose cell is not a raster member.
pub const OUT_OF_RASTER: u32 = 0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitError {
    #[error("tree depth {0} outside [1, 24]")]
    InvalidDepth(usize),
    #[error("base point {0} is not in the basin raster")]
    BaseNotInBasin(String),
    #[error("no tree node in component {component} up to depth {depth}")]
    NoOrbitNodeInComponent { component: u32, depth: usize },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitNode {
    pub point: Point,
    pub depth: usize,
    pub parent: Option<usize>,
    /// [`OUT_OF_RASTER`] when the node's cell is not a basin member.
    pub component_id: u32,
    pub cell: usize,
    /// Spherical distance from the image of the node to its parent.
    pub residual: f64,
}

/// Per-level accounting of the expansion.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LevelStats {
    pub depth: usize,
    /// Distinct preimages produced by the previous level.
    pub generated: usize,
    pub duplicates: usize,
    /// Kept preimages whose cell is not a basin member.
    pub out_of_raster: usize,
    pub kept: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitTree {
    nodes: Vec<OrbitNode>,
    level_start: Vec<usize>,
    pub base: Point,
    pub depth_max: usize,
    /// Deepest complete level; below `depth_max` when the budget ran out.
    pub effective_depth: usize,
    pub budget_exceeded: bool,
    pub stats: Vec<LevelStats>,
}

/// Spatial hash on the unit sphere with buckets of the dedup tolerance.
struct Dedup {
    buckets: HashMap<(i64, i64, i64), Vec<[f64; 3]>>,
}

impl Dedup {
    fn key(s: &[f64; 3]) -> (i64, i64, i64) {
        let q = |x: f64| (x / DEDUP_TOLERANCE).floor() as i64;
        (q(s[0]), q(s[1]), q(s[2]))
    }

    /// Inserts unless a stored point lies within the tolerance.
    fn insert(&mut self, s: [f64; 3]) -> bool {
        let (a, b, c) = Dedup::key(&s);
        for i in a - 1..=a + 1 {
            for j in b - 1..=b + 1 {
                for k in c - 1..=c + 1 {
                    if let Some(v) = self.buckets.get(&(i, j, k)) {
                        if v.iter().any(|t| crate::point::chordal3(t, &s) <= DEDUP_TOLERANCE) {
                            return false;
                        }
                    }
                }
            }
        }
        self.buckets.entry((a, b, c)).or_default().push(s);
        true
    }
}

/// Breadth-first preimage expansion of `p0` to `depth_max` levels. The basin
/// is backward invariant, so a preimage landing on a non-member cell is a
/// raster artefact: it is kept and tagged [`OUT_OF_RASTER`]. Duplicates within
/// [`DEDUP_TOLERANCE`] are merged, and each level is sorted by chart
/// coordinates. Expansion stops at the last complete level when the next one
/// could push the node count past `budget`.
pub fn build_backward_tree(
    map: &RationalMap64,
    p0: &Point,
    depth_max: usize,
    grid: &SphereGrid,
    budget: usize,
) -> Result<OrbitTree, OrbitError> {
    if !(1..=24).contains(&depth_max) {
        return Err(OrbitError::InvalidDepth(depth_max));
    }
    map.require_dynamical()?;
    let base = p0.canonical();
    let (cell, component_id) = grid
        .locate(&base)
        .map_err(|_| OrbitError::BaseNotInBasin(base.to_string()))?;
    let mut dedup = Dedup { buckets: HashMap::new() };
    dedup.insert(base.to_sphere());
    let mut nodes = vec![OrbitNode {
        point: base,
        depth: 0,
        parent: None,
        component_id,
        cell,
        residual: 0.0,
    }];
    let mut level_start = vec![0, 1];
    let mut stats = vec![LevelStats {
        depth: 0,
        generated: 1,
        duplicates: 0,
        out_of_raster: 0,
        kept: 1,
    }];
    let mut effective_depth = 0;
    let mut budget_exceeded = false;
    let d = map.degree();
    for depth in 1..=depth_max {
        let (lo, hi) = (level_start[depth - 1], level_start[depth]);
        if nodes.len() + d * (hi - lo) > budget {
            budget_exceeded = true;
            break;
        }
        let expanded: Vec<Result<Vec<(Point, usize)>, MapError>> = (lo..hi)
            .into_par_iter()
            .map(|i| {
                Ok(map
                    .preimages(&nodes[i].point)?
                    .into_iter()
                    .map(|(q, _)| (q.canonical(), i))
                    .collect())
            })
            .collect();
        let mut candidates = Vec::new();
        for e in expanded {
            candidates.extend(e?);
        }
        candidates.sort_by(|a, b| {
            let (ka, kb) = (a.0.sort_key(), b.0.sort_key());
            ka.0.cmp(&kb.0)
                .then(ka.1.total_cmp(&kb.1))
                .then(ka.2.total_cmp(&kb.2))
                .then(a.1.cmp(&b.1))
        });
        let mut st = LevelStats {
            depth,
            generated: candidates.len(),
            ..Default::default()
        };
        for (q, parent) in candidates {
            if !dedup.insert(q.to_sphere()) {
                st.duplicates += 1;
                continue;
            }
            let (cell, component_id) = match grid.locate(&q) {
                Ok(found) => found,
                Err(_) => {
                    st.out_of_raster += 1;
                    let cell = grid.geometry().locate_cell(&q).expect("every point has an owned cell");
                    (cell, OUT_OF_RASTER)
                }
            };
            let residual = map.evaluate(&q).chordal(&nodes[parent].point);
            nodes.push(OrbitNode {
                point: q,
                depth,
                parent: Some(parent),
                component_id,
                cell,
                residual,
            });
            st.kept += 1;
        }
        stats.push(st);
        level_start.push(nodes.len());
        effective_depth = depth;
    }
    Ok(OrbitTree {
        nodes,
        level_start,
        base,
        depth_max,
        effective_depth,
        budget_exceeded,
        stats,
    })
}

impl OrbitTree {
    pub fn nodes(&self) -> &[OrbitNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes of one depth.
    pub fn level(&self, depth: usize) -> &[OrbitNode] {
        if depth > self.effective_depth {
            return &[];
        }
        &self.nodes[self.level_start[depth]..self.level_start[depth + 1]]
    }

    /// Index range of the nodes of one depth.
    pub fn level_range(&self, depth: usize) -> std::ops::Range<usize> {
        if depth > self.effective_depth {
            return 0..0;
        }
        self.level_start[depth]..self.level_start[depth + 1]
    }

    /// CSV export, one row per node.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "# {FORMAT_HEADER}")?;
        writeln!(out, "node_id,parent_id,depth,re,im,chart,component_id,residual")?;
        for (i, n) in self.nodes.iter().enumerate() {
            let parent = n.parent.map_or(-1, |p| p as i64);
            writeln!(
                out,
                "{i},{parent},{},{:e},{:e},{},{},{:e}",
                n.depth, n.point.re, n.point.im, n.point.chart, n.component_id, n.residual
            )?;
        }
        Ok(())
    }
}

/// Tree node nearest to `z0` in the component graph, among nodes of depth at
/// most `depth`. Ties go to the lower depth, then the lower cell index.
pub fn nearest_orbit_point_up_to(
    z0: &Point,
    tree: &OrbitTree,
    graph: &MetricGraph,
    depth: usize,
) -> Result<(usize, DistanceResult), OrbitError> {
    let start = graph.cell_of(z0)?;
    let dist = graph.single_source(start)?;
    let best = tree
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, n)| n.depth <= depth && graph.contains(n.cell))
        .map(|(i, n)| (dist[n.cell], n.depth, n.cell, i))
        .filter(|k| k.0.is_finite())
        .min_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2, a.3).cmp(&(b.1, b.2, b.3))));
    match best {
        Some((_, _, cell, i)) => Ok((i, graph.shortest_path(start, cell)?)),
        None => Err(OrbitError::NoOrbitNodeInComponent {
            component: graph.component_id(),
            depth: depth.min(tree.effective_depth),
        }),
    }
}

/// Tree node nearest to `z0` in the component graph.
pub fn nearest_orbit_point(
    z0: &Point,
    tree: &OrbitTree,
    graph: &MetricGraph,
    grid: &SphereGrid,
) -> Result<(usize, DistanceResult), OrbitError> {
    grid.locate(z0).map_err(MetricError::from)?;
    nearest_orbit_point_up_to(z0, tree, graph, usize::MAX)
}

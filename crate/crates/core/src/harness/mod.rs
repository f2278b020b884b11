//! Scenario runs: basin raster, backward orbit tree, sampled distances from
//! basin points to the tree, and the report written from them.

mod config;
mod output;

pub use config::{load_config, AttractorChoice, BasePolicy, ConfigError, Scenario, ScenarioConfig};
pub use output::{
    emit_outputs, heat_color, write_components_csv, write_coverage_csv, write_heat_ppm, write_report, write_samples_csv,
    write_series_csv,
};

use crate::boettcher::{
    annulus_decomposition, generic_threshold, greens_function, verify_annulus_coverage, verify_coverage_up_to,
    AnnulusDecomposition, BoettcherError, CoverageReport,
};
use crate::grid::{build_grid, GridError, SphereGrid, KING};
use crate::map::MapError;
use crate::metric::{DistanceField, MetricError, MetricGraph};
use crate::orbit::{build_backward_tree, OrbitError, OrbitTree, DEDUP_TOLERANCE};
use crate::{FixedPointClass, Point, RationalMap64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Samples closer than this many pitches to the raster boundary are redrawn.
pub const SAMPLE_EXCLUSION_PITCHES: f64 = 2.0;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("map has no attracting fixed point")]
    NoAttractingPoint,
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Boettcher(#[from] BoettcherError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// One sample point and its nearest tree node at the full tree depth.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub component_id: u32,
    pub cell: usize,
    pub point: Point,
    /// `None` when no tree node lies in the component.
    pub nearest: Option<NearestNode>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NearestNode {
    pub distance: f64,
    pub node: usize,
    pub point: Point,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DepthValue {
    pub depth: usize,
    /// Max over samples of the distance to the tree; infinite while any
    /// sample is unresolved, NaN without samples.
    pub empirical_c: f64,
    pub mean_distance: f64,
    pub unresolved: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentRecord {
    pub component_id: u32,
    pub cells: usize,
    pub eligible_cells: usize,
    pub samples_used: usize,
    pub empirical_c: f64,
    pub mean_distance: f64,
    pub unresolved: usize,
    pub by_depth: Vec<DepthValue>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DepthRecord {
    pub depth: usize,
    /// Tree nodes of depth at most `depth`.
    pub nodes: usize,
    /// Max over studied components.
    pub empirical_c: f64,
    pub unresolved: usize,
    /// Annulus coverage fraction, when computed.
    pub coverage: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageSummary {
    pub t0: f64,
    pub n_max: usize,
    pub report: CoverageReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeSummary {
    pub nodes: usize,
    pub effective_depth: usize,
    pub budget_exceeded: bool,
    pub out_of_raster: usize,
    pub max_residual: f64,
    /// Smallest spherical distance between two nodes.
    pub min_separation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub config: ScenarioConfig,
    pub version: &'static str,
    pub attracting_point: Point,
    pub multiplier: f64,
    pub base_point: Point,
    /// How the base point was chosen.
    pub base_rule: String,
    pub component_count: usize,
    pub member_cells: usize,
    pub components: Vec<ComponentRecord>,
    pub samples: Vec<SampleRecord>,
    pub depth_series: Vec<DepthRecord>,
    /// `(resolution, max empirical C)` for the configured extra resolutions.
    pub resolution_series: Vec<(usize, f64)>,
    pub coverage: Option<CoverageSummary>,
    pub tree: TreeSummary,
}

impl ExperimentReport {
    /// Max empirical constant over the sampled components.
    pub fn max_empirical_c(&self) -> f64 {
        self.components.iter().map(|c| c.empirical_c).fold(0.0, f64::max)
    }

    /// Studied components left without samples.
    pub fn unsampled(&self) -> usize {
        self.components.iter().filter(|c| c.samples_used == 0).count()
    }

    pub fn unresolved(&self) -> usize {
        self.components.iter().map(|c| c.unresolved).sum()
    }

    /// First depth at which every sample reached a tree node.
    pub fn resolved_depth(&self) -> Option<usize> {
        self.depth_series.iter().find(|d| d.unresolved == 0).map(|d| d.depth)
    }

    /// Violated report invariants, empty when sound.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = self.tree.violations();
        for c in &self.components {
            for w in c.by_depth.windows(2) {
                if w[1].empirical_c > w[0].empirical_c {
                    out.push(format!("component {}: C grows at depth {}", c.component_id, w[1].depth));
                }
                if w[1].unresolved > w[0].unresolved {
                    out.push(format!("component {}: unresolved grows at depth {}", c.component_id, w[1].depth));
                }
            }
        }
        out
    }
}

/// A finished run: the report plus the artefacts the outputs are drawn from.
pub struct Experiment {
    pub report: ExperimentReport,
    pub map: RationalMap64,
    pub grid: SphereGrid,
    pub tree: OrbitTree,
    pub annuli: Option<AnnulusDecomposition>,
}

/// Attracting point selected by the config, with its multiplier modulus.
pub fn resolve_attractor(cfg: &ScenarioConfig, map: &RationalMap64) -> Result<(Point, f64), HarnessError> {
    match cfg.attracting_point {
        AttractorChoice::Explicit(p) => Ok((p, map.multiplier(&p)?.norm())),
        AttractorChoice::Auto if cfg.scenario == Scenario::BasinOfInfinity => {
            let p = Point::infinity();
            Ok((p, map.multiplier(&p)?.norm()))
        }
        AttractorChoice::Auto => map
            .fixed_points()?
            .into_iter()
            .find(|f| matches!(f.class, FixedPointClass::Attracting | FixedPointClass::Superattracting))
            .map(|f| (f.location, f.multiplier.norm()))
            .ok_or(HarnessError::NoAttractingPoint),
    }
}

/// Applies the base-point policy; returns the point and a description.
pub fn resolve_base_point(
    policy: BasePolicy,
    map: &RationalMap64,
    grid: &SphereGrid,
) -> Result<(Point, String), HarnessError> {
    let p = grid.attracting_point().canonical();
    match policy {
        BasePolicy::Explicit(q) => Ok((q, "explicit".into())),
        BasePolicy::FixedPoint => Ok((p, "fixed point".into())),
        BasePolicy::Offset(r) => Ok((offset_point(grid, r), format!("offset {r}"))),
        BasePolicy::Default => {
            let immediate = grid.component_of(grid.locate(&p)?.0);
            let other = map
                .preimages(&p)?
                .into_iter()
                .any(|(q, _)| q.chordal(&p) > DEDUP_TOLERANCE && grid.locate(&q).is_ok_and(|(_, c)| c == immediate));
            if other {
                Ok((p, "fixed point (it has another preimage in its component)".into()))
            } else {
                Ok((offset_point(grid, 0.1), "offset 0.1 (no other preimage in its component)".into()))
            }
        }
    }
}

/// The attracting point moved by `r` in its canonical chart towards the king
/// neighbour of its cell that is farthest from the basin boundary.
fn offset_point(grid: &SphereGrid, r: f64) -> Point {
    let p = grid.attracting_point().canonical();
    let geom = grid.geometry();
    let home = geom
        .cell_containing(p.chart, p.coord())
        .expect("canonical coordinates lie inside the raster");
    let mut best: Option<(f64, usize)> = None;
    for &(di, dj) in &KING {
        let Some(nb) = geom.offset(home, di, dj) else { continue };
        let Some(owned) = geom.partner(nb) else { continue };
        let Ok(d) = grid.boundary_dist(owned) else { continue };
        if best.is_none_or(|(bd, _)| d > bd) {
            best = Some((d, nb));
        }
    }
    let toward = match best {
        Some((_, nb)) => geom.center_coord(nb) - p.coord(),
        None => crate::Complex64::new(1.0, 0.0),
    };
    let dir = if toward.norm() > 0.0 { toward / toward.norm() } else { crate::Complex64::new(1.0, 0.0) };
    Point::from_chart(p.coord() + dir * r, p.chart).canonical()
}

/// Components studied by the scenario, largest first.
fn studied_components(cfg: &ScenarioConfig, grid: &SphereGrid) -> Vec<u32> {
    match cfg.scenario {
        Scenario::FiniteBasin | Scenario::BasinOfInfinity => vec![1],
        Scenario::PerComponent => {
            let mut ids: Vec<u32> = (1..=grid.component_count() as u32).collect();
            ids.sort_by_key(|&id| (std::cmp::Reverse(grid.component_size(id)), id));
            ids.truncate(cfg.components);
            ids
        }
    }
}

/// Seeded uniform draw over the component's cells, redrawing cells within
/// [`SAMPLE_EXCLUSION_PITCHES`] of the boundary. Returns the eligible count
/// and the samples.
fn draw_samples(grid: &SphereGrid, id: u32, count: usize, seed: u64) -> (usize, Vec<usize>) {
    let cells = grid.component_cells(id);
    let eligible = |c: usize| grid.boundary_pitches(c).is_ok_and(|p| p > SAMPLE_EXCLUSION_PITCHES);
    let n_eligible = cells.iter().filter(|&&c| eligible(c)).count();
    if n_eligible == 0 {
        return (0, Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let c = cells[rng.gen_range(0..cells.len())];
        if eligible(c) {
            out.push(c);
        }
    }
    (n_eligible, out)
}

struct ComponentRun {
    record: ComponentRecord,
    samples: Vec<SampleRecord>,
}

fn measure_component(
    grid: &SphereGrid,
    tree: &OrbitTree,
    id: u32,
    cfg: &ScenarioConfig,
) -> Result<ComponentRun, HarnessError> {
    let (eligible, cells) = draw_samples(grid, id, cfg.sample_count, cfg.sample_seed);
    let graph = MetricGraph::new(grid, id)?;
    let mut field = DistanceField::new(&graph);
    let mut by_depth = Vec::new();
    for depth in 0..=tree.effective_depth {
        let sources: Vec<_> = tree
            .level_range(depth)
            .filter(|&i| tree.nodes()[i].component_id == id)
            .map(|i| {
                let n = &tree.nodes()[i];
                (n.cell, (depth as u32, n.cell as u32), i as u32)
            })
            .collect();
        field.add_sources(&sources);
        let mut worst: f64 = 0.0;
        let (mut sum, mut resolved, mut unresolved) = (0.0, 0usize, 0usize);
        for &c in &cells {
            match field.nearest(c) {
                Some((d, _)) => {
                    worst = worst.max(d);
                    sum += d;
                    resolved += 1;
                }
                None => unresolved += 1,
            }
        }
        by_depth.push(DepthValue {
            depth,
            empirical_c: if cells.is_empty() {
                f64::NAN
            } else if unresolved > 0 {
                f64::INFINITY
            } else {
                worst
            },
            mean_distance: if resolved > 0 { sum / resolved as f64 } else { f64::NAN },
            unresolved,
        });
    }
    let samples = cells
        .iter()
        .map(|&c| SampleRecord {
            component_id: id,
            cell: c,
            point: grid.center(c),
            nearest: field.nearest(c).map(|(d, node)| {
                let n = &tree.nodes()[node as usize];
                NearestNode {
                    distance: d,
                    node: node as usize,
                    point: n.point,
                    depth: n.depth,
                }
            }),
        })
        .collect();
    let last = by_depth.last().cloned().expect("depth 0 always present");
    Ok(ComponentRun {
        record: ComponentRecord {
            component_id: id,
            cells: grid.component_size(id),
            eligible_cells: eligible,
            samples_used: cells.len(),
            empirical_c: last.empirical_c,
            mean_distance: last.mean_distance,
            unresolved: last.unresolved,
            by_depth,
        },
        samples,
    })
}

impl TreeSummary {
    /// Residual and separation invariants of the tree.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.max_residual > 1e-8 {
            out.push(format!("tree residual {:e} exceeds 1e-8", self.max_residual));
        }
        if self.nodes > 1 && self.min_separation <= DEDUP_TOLERANCE {
            out.push(format!("tree nodes {:e} apart", self.min_separation));
        }
        out
    }
}

pub fn tree_summary(tree: &OrbitTree) -> TreeSummary {
    let nodes = tree.nodes();
    let max_residual = nodes.iter().map(|n| n.residual).fold(0.0, f64::max);
    let mut sphere: Vec<[f64; 3]> = nodes.iter().map(|n| n.point.to_sphere()).collect();
    sphere.sort_by(|a, b| a[0].total_cmp(&b[0]));
    // sweep along the first coordinate for the closest pair
    let mut min_separation = f64::INFINITY;
    for i in 0..sphere.len() {
        for j in i + 1..sphere.len() {
            if sphere[j][0] - sphere[i][0] >= min_separation {
                break;
            }
            min_separation = min_separation.min(crate::point::chordal3(&sphere[i], &sphere[j]));
        }
    }
    TreeSummary {
        nodes: nodes.len(),
        effective_depth: tree.effective_depth,
        budget_exceeded: tree.budget_exceeded,
        out_of_raster: tree.stats.iter().map(|s| s.out_of_raster).sum(),
        max_residual,
        min_separation,
    }
}

/// Full pipeline for one scenario.
pub fn run_experiment(cfg: &ScenarioConfig) -> Result<Experiment, HarnessError> {
    cfg.validate()?;
    let mut exp = run_at(cfg)?;
    for &res in &cfg.resolution_series {
        let mut c = cfg.clone();
        c.grid.resolution = res;
        c.resolution_series.clear();
        let other = run_at(&c)?;
        exp.report.resolution_series.push((res, other.report.max_empirical_c()));
    }
    Ok(exp)
}

/// Everything before the distance measurements: the basin raster, base
/// point, backward tree and, for the basin-of-infinity scenario, the annuli.
pub struct Prepared {
    pub map: RationalMap64,
    pub attracting_point: Point,
    pub multiplier: f64,
    pub base_point: Point,
    pub base_rule: String,
    pub grid: SphereGrid,
    pub tree: OrbitTree,
    pub annuli: Option<AnnulusDecomposition>,
}

pub fn prepare(cfg: &ScenarioConfig) -> Result<Prepared, HarnessError> {
    let map = cfg.map()?;
    let (p, multiplier) = resolve_attractor(cfg, &map)?;
    let grid = build_grid(&map, &p, &cfg.grid)?;
    let (p0, base_rule) = resolve_base_point(cfg.base_point, &map, &grid)?;
    let tree = build_backward_tree(&map, &p0, cfg.depth, &grid, cfg.node_budget)?;
    let annuli = if cfg.scenario == Scenario::BasinOfInfinity {
        let field = greens_function(&map, &grid)?;
        let t0 = match cfg.t0 {
            Some(t) => t,
            None => generic_threshold(&map, &p0, cfg.grid.max_iter)?,
        };
        Some(annulus_decomposition(&field, &grid, t0, cfg.n_max)?)
    } else {
        None
    };
    Ok(Prepared {
        map,
        attracting_point: p.canonical(),
        multiplier,
        base_point: p0.canonical(),
        base_rule,
        grid,
        tree,
        annuli,
    })
}

fn run_at(cfg: &ScenarioConfig) -> Result<Experiment, HarnessError> {
    let Prepared {
        map,
        attracting_point,
        multiplier,
        base_point,
        base_rule,
        grid,
        tree,
        annuli,
    } = prepare(cfg)?;
    let ids = studied_components(cfg, &grid);
    let runs: Vec<ComponentRun> = ids
        .par_iter()
        .map(|&id| measure_component(&grid, &tree, id, cfg))
        .collect::<Result<_, _>>()?;

    let depth_series = (0..=tree.effective_depth)
        .map(|depth| DepthRecord {
            depth,
            nodes: tree.level_range(depth).end,
            empirical_c: runs.iter().map(|r| r.record.by_depth[depth].empirical_c).fold(0.0, f64::max),
            unresolved: runs.iter().map(|r| r.record.by_depth[depth].unresolved).sum(),
            coverage: annuli.as_ref().map(|a| verify_coverage_up_to(a, &tree, depth).fraction()),
        })
        .collect();

    let coverage = annuli.as_ref().map(|a| CoverageSummary {
        t0: a.t0,
        n_max: a.n_max,
        report: verify_annulus_coverage(a, &tree),
    });
    let mut components = Vec::new();
    let mut samples = Vec::new();
    for r in runs {
        components.push(r.record);
        samples.extend(r.samples);
    }
    let report = ExperimentReport {
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION"),
        attracting_point,
        multiplier,
        base_point,
        base_rule,
        component_count: grid.component_count(),
        member_cells: grid.member_count(),
        components,
        samples,
        depth_series,
        resolution_series: Vec::new(),
        coverage,
        tree: tree_summary(&tree),
    };
    Ok(Experiment {
        report,
        map,
        grid,
        tree,
        annuli,
    })
}

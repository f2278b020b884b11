//! Files written for a finished experiment.

use super::{Experiment, ExperimentReport};
use crate::boettcher::CoverageReport;
use crate::grid::write_chart_ppm;
use crate::metric::{DistanceField, MetricGraph};
use crate::FORMAT_HEADER;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

fn fmt_dist(d: f64) -> String {
    if d.is_nan() {
        "nan".into()
    } else if d.is_finite() {
        format!("{d:e}")
    } else {
        "inf".into()
    }
}

/// One row per resolved sample.
pub fn write_samples_csv<W: Write>(report: &ExperimentReport, out: &mut W) -> io::Result<()> {
    writeln!(out, "# {FORMAT_HEADER}")?;
    writeln!(out, "scenario_id,component_id,re,im,chart,depth,min_dist,q_re,q_im,q_chart,q_depth")?;
    let depth = report.tree.effective_depth;
    for s in &report.samples {
        let Some(q) = &s.nearest else { continue };
        writeln!(
            out,
            "{},{},{:e},{:e},{},{depth},{:e},{:e},{:e},{},{}",
            report.config.name,
            s.component_id,
            s.point.re,
            s.point.im,
            s.point.chart,
            q.distance,
            q.point.re,
            q.point.im,
            q.point.chart,
            q.depth
        )?;
    }
    Ok(())
}

pub fn write_components_csv<W: Write>(report: &ExperimentReport, out: &mut W) -> io::Result<()> {
    writeln!(out, "# {FORMAT_HEADER}")?;
    writeln!(
        out,
        "scenario_id,component_id,cells,eligible_cells,samples_used,empirical_c,mean_distance,unresolved"
    )?;
    for c in &report.components {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            report.config.name,
            c.component_id,
            c.cells,
            c.eligible_cells,
            c.samples_used,
            fmt_dist(c.empirical_c),
            fmt_dist(c.mean_distance),
            c.unresolved
        )?;
    }
    Ok(())
}

/// Per-depth series; the coverage column is empty without annuli.
pub fn write_series_csv<W: Write>(report: &ExperimentReport, out: &mut W) -> io::Result<()> {
    writeln!(out, "# {FORMAT_HEADER}")?;
    writeln!(out, "depth,nodes,empirical_c,unresolved,coverage")?;
    for d in &report.depth_series {
        let cov = d.coverage.map_or(String::new(), |c| format!("{c:e}"));
        writeln!(out, "{},{},{},{},{cov}", d.depth, d.nodes, fmt_dist(d.empirical_c), d.unresolved)?;
    }
    Ok(())
}

/// Tree nodes per annulus component of the coverage check.
pub fn write_coverage_csv<W: Write>(coverage: &CoverageReport, out: &mut W) -> io::Result<()> {
    writeln!(out, "# {FORMAT_HEADER}")?;
    writeln!(out, "level,component,cells,nodes")?;
    for l in &coverage.levels {
        for c in &l.components {
            writeln!(out, "{},{},{},{}", l.level, c.id, c.cells, c.nodes)?;
        }
    }
    Ok(())
}

/// Blue through yellow to red for `t` in `[0, 1]`.
pub fn heat_color(t: f64) -> [u8; 3] {
    const STOPS: [[f64; 3]; 4] = [[30.0, 40.0, 150.0], [40.0, 170.0, 170.0], [240.0, 220.0, 60.0], [200.0, 30.0, 30.0]];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 1.0 };
    let x = t * (STOPS.len() - 1) as f64;
    let k = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - k as f64;
    let mut rgb = [0u8; 3];
    for (i, c) in rgb.iter_mut().enumerate() {
        *c = (STOPS[k][i] + f * (STOPS[k + 1][i] - STOPS[k][i])).round() as u8;
    }
    rgb
}

/// Each cell of a studied component takes the colour of the sample nearest
/// to it in the component metric; other members are grey.
pub fn write_heat_ppm<W: Write>(exp: &Experiment, out: &mut W) -> io::Result<()> {
    let grid = &exp.grid;
    let report = &exp.report;
    let scale = report
        .samples
        .iter()
        .filter_map(|s| s.nearest.as_ref().map(|q| q.distance))
        .fold(0.0, f64::max);
    let mut value = vec![f64::NAN; grid.num_cells()];
    for c in &report.components {
        let Ok(graph) = MetricGraph::new(grid, c.component_id) else { continue };
        let sources: Vec<_> = report
            .samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.component_id == c.component_id && s.nearest.is_some())
            .map(|(i, s)| (s.cell, (0, s.cell as u32), i as u32))
            .collect();
        let mut field = DistanceField::new(&graph);
        field.add_sources(&sources);
        for &cell in graph.vertices() {
            if let Some((_, i)) = field.nearest(cell) {
                let d = report.samples[i as usize].nearest.as_ref().map_or(f64::NAN, |q| q.distance);
                value[cell] = if scale > 0.0 { d / scale } else { 0.0 };
            }
        }
    }
    let geom = grid.geometry();
    write_chart_ppm(geom, out, |idx| {
        let Some(owned) = geom.partner(idx) else { return [0, 0, 0] };
        if !grid.is_member(owned) {
            [0, 0, 0]
        } else if value[owned].is_nan() {
            [60, 60, 60]
        } else {
            heat_color(value[owned])
        }
    })
}

fn fmt_opt(c: f64) -> String {
    if c.is_nan() {
        "n/a".into()
    } else if c.is_finite() {
        format!("{c:.6}")
    } else {
        "inf".into()
    }
}

pub fn write_report<W: Write>(report: &ExperimentReport, out: &mut W) -> io::Result<()> {
    let cfg = &report.config;
    writeln!(out, "# {FORMAT_HEADER}")?;
    writeln!(out, "basinlab {}", report.version)?;
    writeln!(out)?;
    writeln!(out, "[config]")?;
    for line in cfg.echo().lines().skip(1) {
        writeln!(out, "  {line}")?;
    }
    writeln!(out)?;
    writeln!(out, "[basin]")?;
    writeln!(
        out,
        "  attracting point {} (|multiplier| = {:.6})",
        report.attracting_point, report.multiplier
    )?;
    writeln!(out, "  base point {} ({})", report.base_point, report.base_rule)?;
    writeln!(
        out,
        "  {} member cells in {} components",
        report.member_cells, report.component_count
    )?;
    writeln!(out)?;
    let t = &report.tree;
    writeln!(out, "[tree]")?;
    writeln!(out, "  {} nodes, depth {} of {}", t.nodes, t.effective_depth, cfg.depth)?;
    if t.budget_exceeded {
        writeln!(out, "  node budget {} reached; later levels were not expanded", cfg.node_budget)?;
    }
    writeln!(out, "  {} nodes on cells outside the basin raster", t.out_of_raster)?;
    writeln!(out, "  max parent residual {:.3e}", t.max_residual)?;
    writeln!(out, "  min node separation {:.3e}", t.min_separation)?;
    writeln!(out)?;
    writeln!(out, "[depth series]")?;
    writeln!(out, "  {:>5} {:>9} {:>14} {:>10} {:>9}", "depth", "nodes", "empirical C", "unresolved", "coverage")?;
    for d in &report.depth_series {
        let cov = d.coverage.map_or("-".to_string(), |c| format!("{c:.4}"));
        writeln!(
            out,
            "  {:>5} {:>9} {:>14} {:>10} {:>9}",
            d.depth,
            d.nodes,
            fmt_opt(d.empirical_c),
            d.unresolved,
            cov
        )?;
    }
    writeln!(out)?;
    writeln!(out, "[components]")?;
    writeln!(
        out,
        "  {:>9} {:>9} {:>9} {:>8} {:>14} {:>12} {:>10}",
        "component", "cells", "eligible", "samples", "empirical C", "mean", "unresolved"
    )?;
    for c in &report.components {
        writeln!(
            out,
            "  {:>9} {:>9} {:>9} {:>8} {:>14} {:>12} {:>10}",
            c.component_id,
            c.cells,
            c.eligible_cells,
            c.samples_used,
            fmt_opt(c.empirical_c),
            fmt_opt(c.mean_distance),
            c.unresolved
        )?;
    }
    writeln!(out, "  max empirical C over components: {}", fmt_opt(report.max_empirical_c()))?;
    if report.unsampled() > 0 {
        writeln!(
            out,
            "  {} components have no cell more than 2 pitches from the boundary and were not sampled",
            report.unsampled()
        )?;
    }
    match report.resolved_depth() {
        Some(d) => writeln!(out, "  all samples resolved from depth {d}")?,
        None => writeln!(out, "  {} samples unresolved at the final depth", report.unresolved())?,
    }
    writeln!(
        out,
        "  distances use the quasi-hyperbolic surrogate; for a component that is not simply connected"
    )?;
    writeln!(out, "  the constant is an empirical value, not a certified bound")?;
    if let Some(cov) = &report.coverage {
        writeln!(out)?;
        writeln!(out, "[annulus coverage]")?;
        writeln!(out, "  t0 = {:.6}, levels 1..={}", cov.t0, cov.n_max)?;
        for l in &cov.report.levels {
            writeln!(out, "  level {}: {}/{} components hold a tree node", l.level, l.covered(), l.total())?;
        }
        writeln!(
            out,
            "  coverage {:.4}{}",
            cov.report.fraction(),
            if cov.report.is_complete() { " (complete)" } else { "" }
        )?;
        writeln!(out, "  nodes near a level line count for the band of their cell")?;
    }
    if !report.resolution_series.is_empty() {
        writeln!(out)?;
        writeln!(out, "[resolution series]")?;
        writeln!(out, "  {:>6} {}", cfg.grid.resolution, fmt_opt(report.max_empirical_c()))?;
        for (res, c) in &report.resolution_series {
            writeln!(out, "  {res:>6} {}", fmt_opt(*c))?;
        }
    }
    writeln!(out)?;
    writeln!(out, "[invariants]")?;
    let violations = report.invariant_violations();
    if violations.is_empty() {
        writeln!(out, "  all hold")?;
    }
    for v in violations {
        writeln!(out, "  VIOLATED: {v}")?;
    }
    Ok(())
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> io::Result<PathBuf> {
    let path = dir.join(name);
    let mut w = BufWriter::new(File::create(&path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(path)
}

/// Writes every output file into `dir` (created if needed) and returns
/// their paths.
pub fn emit_outputs(exp: &Experiment, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let r = &exp.report;
    let mut paths = vec![
        write_file(dir, "samples.csv", |w| write_samples_csv(r, w))?,
        write_file(dir, "components.csv", |w| write_components_csv(r, w))?,
        write_file(dir, "series.csv", |w| write_series_csv(r, w))?,
        write_file(dir, "tree.csv", |w| exp.tree.write_csv(w))?,
        write_file(dir, "basin.ppm", |w| exp.grid.write_ppm(w))?,
        write_file(dir, "heat.ppm", |w| write_heat_ppm(exp, w))?,
    ];
    if let (Some(dec), Some(cov)) = (&exp.annuli, &r.coverage) {
        paths.push(write_file(dir, "coverage.csv", |w| write_coverage_csv(&cov.report, w))?);
        paths.push(write_file(dir, "contours.csv", |w| dec.write_contours_csv(&exp.grid, w))?);
    }
    paths.push(write_file(dir, "report.txt", |w| write_report(r, w))?);
    Ok(paths)
}

use basinlab::harness::{
    emit_outputs, resolve_base_point, run_experiment, write_components_csv, write_samples_csv, ScenarioConfig,
};
use basinlab::{Complex64, Point};
use std::fs;

fn config(body: &str) -> ScenarioConfig {
    ScenarioConfig::parse(&format!("# basin-metric-lab v1\n{body}\n")).unwrap()
}

const DISK: &str = "name = disk\nnumerator = 0;0;1\nresolution = 256\ndepth = 8\nsample_count = 120\nbase_point = 0.5";

#[test]
fn disk_scenario_report() {
    let exp = run_experiment(&config(DISK)).unwrap();
    let r = &exp.report;
    assert_eq!(r.components.len(), 1);
    let c = &r.components[0];
    assert_eq!(c.samples_used, 120);
    assert!(c.empirical_c.is_finite() && c.empirical_c > 0.0);
    assert_eq!(r.resolved_depth(), Some(0));
    for w in r.depth_series.windows(2) {
        assert!(w[1].empirical_c <= w[0].empirical_c);
    }
    assert_eq!(r.depth_series.last().unwrap().nodes, 511);
    assert!(r.invariant_violations().is_empty(), "{:?}", r.invariant_violations());
    // every sample's distance is attained by the reported node
    for s in &r.samples {
        let q = s.nearest.as_ref().unwrap();
        assert!(q.distance <= c.empirical_c);
        assert_eq!(exp.tree.nodes()[q.node].point, q.point);
    }
}

#[test]
fn samples_avoid_the_boundary_band() {
    let exp = run_experiment(&config(DISK)).unwrap();
    for s in &exp.report.samples {
        assert!(exp.grid.boundary_pitches(s.cell).unwrap() > 2.0);
        assert_eq!(exp.grid.component_of(s.cell), s.component_id);
    }
}

#[test]
fn outputs_are_byte_identical_and_thread_independent() {
    let cfg = config(DISK);
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (k, d) in dirs.iter().enumerate() {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(k + 1).build().unwrap();
        let exp = pool.install(|| run_experiment(&cfg)).unwrap();
        emit_outputs(&exp, d.path()).unwrap();
    }
    for name in ["samples.csv", "components.csv", "series.csv", "tree.csv", "basin.ppm", "heat.ppm", "report.txt"] {
        let a = fs::read(dirs[0].path().join(name)).unwrap();
        for d in &dirs[1..] {
            assert_eq!(a, fs::read(d.path().join(name)).unwrap(), "{name}");
        }
    }
    let seeded = config(&format!("{DISK}\nsample_seed = 2"));
    let other = run_experiment(&seeded).unwrap();
    let mut buf = Vec::new();
    write_samples_csv(&other.report, &mut buf).unwrap();
    assert_ne!(buf, fs::read(dirs[0].path().join("samples.csv")).unwrap());
}

#[test]
fn output_accounting() {
    let exp = run_experiment(&config(DISK)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_outputs(&exp, dir.path()).unwrap();
    let samples = fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    let rows = samples.lines().count() - 2;
    assert_eq!(rows, 120 * exp.report.components.len() - exp.report.unresolved());
    assert!(samples.lines().nth(2).unwrap().starts_with("disk,1,"));

    let ppm = fs::read(dir.path().join("basin.ppm")).unwrap();
    let header = b"P6\n# basin-metric-lab v1\n512 256\n255\n";
    assert_eq!(&ppm[..header.len()], header);
    let colored = ppm[header.len()..].chunks(3).filter(|p| p != &[0, 0, 0]).count();
    let res = exp.grid.resolution();
    let raster_members = (0..exp.grid.num_cells())
        .filter(|&c| exp.grid.geometry().partner(c).is_some_and(|o| exp.grid.is_member(o)))
        .count();
    assert_eq!(colored, raster_members);
    assert_eq!(ppm.len(), header.len() + 3 * 2 * res * res);
    let heat = fs::read(dir.path().join("heat.ppm")).unwrap();
    assert_eq!(heat.len(), ppm.len());

    let mut empty = exp.report.clone();
    empty.components.clear();
    let mut buf = Vec::new();
    write_components_csv(&empty, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
}

#[test]
fn base_point_policy() {
    let disk = run_experiment(&config("numerator = 0;0;1\nresolution = 128\ndepth = 3\nsample_count = 5")).unwrap();
    assert!(disk.report.base_rule.starts_with("offset"));
    assert!((disk.report.base_point.modulus() - 0.1).abs() < 1e-12);

    // z^2 - 1/2: the fixed point p has -p in its immediate basin
    let cfg = config("numerator = -0.5;0;1\nresolution = 128\ndepth = 3\nsample_count = 5");
    let exp = run_experiment(&cfg).unwrap();
    let p = (1.0 - 3f64.sqrt()) / 2.0;
    assert!(exp.report.base_point.chordal(&Point::finite(Complex64::new(p, 0.0))) < 1e-12);
    assert_eq!(exp.tree.level(1).len(), 1);
    let (q, _) = resolve_base_point(basinlab::harness::BasePolicy::Offset(0.2), &exp.map, &exp.grid).unwrap();
    assert!(((q.coord() - Complex64::new(p, 0.0)).norm() - 0.2).abs() < 1e-12);
}

#[test]
fn basin_of_infinity_scenario() {
    let cfg = config("numerator = 1;0;1\nscenario = basin-of-infinity\nresolution = 256\ndepth = 10\nsample_count = 50");
    let exp = run_experiment(&cfg).unwrap();
    let r = &exp.report;
    assert!(r.attracting_point.is_infinity());
    let cov = r.coverage.as_ref().unwrap();
    assert!(cov.report.is_complete());
    let series: Vec<f64> = r.depth_series.iter().map(|d| d.coverage.unwrap()).collect();
    assert!(series.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(*series.last().unwrap(), 1.0);
    assert!(r.max_empirical_c().is_finite());
    let dir = tempfile::tempdir().unwrap();
    let files = emit_outputs(&exp, dir.path()).unwrap();
    assert!(files.iter().any(|f| f.ends_with("contours.csv")));
    assert!(files.iter().any(|f| f.ends_with("coverage.csv")));
}

#[test]
fn per_component_scenario() {
    let cfg = config(
        "numerator = 1;0;0;2\ndenominator = 0;0;3\nattracting_point = 1\nscenario = per-component\n\
         components = 4\nresolution = 256\ndepth = 6\nsample_count = 40",
    );
    let exp = run_experiment(&cfg).unwrap();
    let r = &exp.report;
    let ids: Vec<u32> = r.components.iter().map(|c| c.component_id).collect();
    assert_eq!(ids.len(), 4);
    let sizes: Vec<usize> = r.components.iter().map(|c| c.cells).collect();
    assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(r.unresolved(), 0);
    for c in &r.components {
        assert!(c.empirical_c.is_finite());
        let unresolved: Vec<usize> = c.by_depth.iter().map(|d| d.unresolved).collect();
        assert!(unresolved.windows(2).all(|w| w[1] <= w[0]));
    }
    // component 1 holds the base point, so it resolves at depth 0; others later
    assert!(r.depth_series[0].unresolved > 0);
}

#[test]
fn resolution_series_is_stable_for_the_disk() {
    let cfg = config("numerator = 0;0;1\nbase_point = 0.5\nresolution = 256\ndepth = 10\nresolution_series = 512");
    let r = run_experiment(&cfg).unwrap().report;
    let (c256, c512) = (r.max_empirical_c(), r.resolution_series[0].1);
    assert_eq!(r.resolution_series[0].0, 512);
    assert!(((c512 - c256) / c256).abs() <= 0.10, "{c256} vs {c512}");
}

use basinlab::grid::{build_grid, GridSpec, SphereGrid};
use basinlab::metric::{
    disk_automorphism, disk_reference_distance, schwarz_pick_check, schwarz_pick_disk, DistanceField, MetricError,
    MetricGraph,
};
use basinlab::{Point, RationalMap64};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn z(re: f64, im: f64) -> Point {
    Point::finite(Complex::new(re, im))
}

fn z_squared() -> RationalMap64 {
    RationalMap64::polynomial(&[0.0, 0.0, 1.0]).unwrap()
}

fn disk(res: usize) -> SphereGrid {
    build_grid(&z_squared(), &z(0.0, 0.0), &GridSpec::new(res)).unwrap()
}

fn disk256() -> &'static SphereGrid {
    static G: OnceLock<SphereGrid> = OnceLock::new();
    G.get_or_init(|| disk(256))
}

fn random_disk_point(rng: &mut ChaCha8Rng, rmax: f64) -> Complex<f64> {
    let r = rmax * rng.gen::<f64>().sqrt();
    Complex::from_polar(r, rng.gen::<f64>() * std::f64::consts::TAU)
}

#[test]
fn quasihyperbolic_radial_distances() {
    let g = disk(1024);
    let graph = MetricGraph::new(&g, 1).unwrap();
    let a = graph.cell_of(&z(0.0, 0.0)).unwrap();
    for (r, exact) in [(0.5, 2f64.ln()), (0.9, 10f64.ln())] {
        let b = graph.cell_of(&z(r, 0.0)).unwrap();
        let d = graph.shortest_path(a, b).unwrap();
        assert!((d.value - exact).abs() / exact < 0.05, "{r}: {} vs {exact}", d.value);
        assert_eq!(d.path.first(), Some(&a));
        assert_eq!(d.path.last(), Some(&b));
        assert!(d.lower_bound <= d.value && d.value <= d.upper_bound);
    }
    assert_eq!(graph.shortest_path(a, a).unwrap().value, 0.0);
}

#[test]
fn vertex_count_matches_disc_area() {
    let g = disk(512);
    let graph = MetricGraph::new(&g, 1).unwrap();
    let h = g.pitch();
    let z_cells = graph
        .vertices()
        .iter()
        .filter(|&&c| g.center(c).chart == basinlab::Chart::Z)
        .count() as f64;
    let expected = std::f64::consts::PI / (h * h);
    assert!((z_cells - expected).abs() / expected < 0.02);
}

#[test]
fn graph_errors() {
    let g = disk256();
    assert_eq!(MetricGraph::new(g, 2).unwrap_err(), MetricError::NoSuchComponent(2));
    assert_eq!(MetricGraph::new(g, 0).unwrap_err(), MetricError::NoSuchComponent(0));
    // a single isolated cell
    let one = g.geometry().locate_cell(&z(0.0, 0.0)).unwrap();
    let single = g.restricted(|p| g.geometry().locate_cell(p) == Some(one)).unwrap();
    assert_eq!(MetricGraph::new(&single, 1).unwrap_err(), MetricError::DegenerateComponent(1));
}

#[test]
fn newton_components_are_connected() {
    let map = RationalMap64::from_real(&[1.0, 0.0, 0.0, 2.0], &[0.0, 0.0, 3.0]).unwrap();
    let g = build_grid(&map, &z(1.0, 0.0), &GridSpec::new(256)).unwrap();
    for id in 1..=g.component_count().min(40) as u32 {
        let Ok(graph) = MetricGraph::new(&g, id) else { continue };
        let d = graph.single_source(graph.vertices()[0]).unwrap();
        assert!(graph.vertices().iter().all(|&v| d[v].is_finite()), "component {id}");
    }
}

#[test]
fn disk_comparison_with_closed_form() {
    let g = disk(512);
    let graph = MetricGraph::new(&g, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let a = random_disk_point(&mut rng, 0.9);
        let b = random_disk_point(&mut rng, 0.9);
        let ca = graph.cell_of(&Point::finite(a)).unwrap();
        let cb = graph.cell_of(&Point::finite(b)).unwrap();
        // closed form between the cell centers
        let exact = disk_reference_distance(g.center(ca).coord(), g.center(cb).coord()).unwrap();
        let q = graph.shortest_path(ca, cb).unwrap().value;
        assert!(q / 4.0 <= exact * 1.05 && exact <= q * 1.05, "{a} {b}: {q} {exact}");
    }
}

#[test]
fn mobius_invariance_and_schwarz_pick_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let a = random_disk_point(&mut rng, 0.99);
        let z1 = random_disk_point(&mut rng, 0.99);
        let z2 = random_disk_point(&mut rng, 0.99);
        let d0 = disk_reference_distance(z1, z2).unwrap();
        let d1 = disk_reference_distance(disk_automorphism(a, z1), disk_automorphism(a, z2)).unwrap();
        assert!((d0 - d1).abs() <= 1e-12 * d0.max(1.0), "{d0} {d1}");
    }
    let pairs: Vec<_> = (0..1000)
        .map(|_| (random_disk_point(&mut rng, 0.999), random_disk_point(&mut rng, 0.999)))
        .collect();
    let report = schwarz_pick_disk(&z_squared(), &pairs);
    assert_eq!(report.checks.len(), 1000);
    assert_eq!(report.violations(), 0);
    let identity = RationalMap64::polynomial(&[0.0, 1.0]).unwrap();
    let report = schwarz_pick_disk(&identity, &pairs);
    assert_eq!(report.checks.len(), 1000);
    for c in &report.checks {
        assert!((c.after - c.before).abs() <= 1e-12 * c.before.max(1.0));
    }
}

#[test]
fn graph_distance_is_a_metric() {
    let g = disk256();
    let graph = MetricGraph::new(g, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let v = graph.vertices();
    for _ in 0..10 {
        let (a, b, c) = (
            v[rng.gen_range(0..v.len())],
            v[rng.gen_range(0..v.len())],
            v[rng.gen_range(0..v.len())],
        );
        let da = graph.single_source(a).unwrap();
        let db = graph.single_source(b).unwrap();
        assert_eq!(da[b], graph.shortest_path(a, b).unwrap().value);
        assert!((da[b] - db[a]).abs() <= 1e-12 * da[b]);
        assert!(da[c] <= da[b] + db[c] + 1e-12);
    }
}

#[test]
fn masking_increases_distances() {
    let g = disk256();
    let half = g.restricted(|p| p.chart == basinlab::Chart::Z && p.re > 0.0).unwrap();
    let full = MetricGraph::new(g, 1).unwrap();
    let part = MetricGraph::new(&half, 1).unwrap();
    let v = part.vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let a = v[rng.gen_range(0..v.len())];
        let b = v[rng.gen_range(0..v.len())];
        assert!(full.shortest_path(a, b).unwrap().value <= part.shortest_path(a, b).unwrap().value);
    }
}

#[test]
fn distance_field_matches_single_source_scans() {
    let g = disk256();
    let graph = MetricGraph::new(g, 1).unwrap();
    let v = graph.vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let sources: Vec<usize> = (0..6).map(|_| v[rng.gen_range(0..v.len())]).collect();
    let mut field = DistanceField::new(&graph);
    field.add_sources(&sources[..3].iter().enumerate().map(|(i, &c)| (c, (0, c as u32), i as u32)).collect::<Vec<_>>());
    let before: Vec<f64> = v.iter().map(|&c| field.nearest(c).unwrap().0).collect();
    field.add_sources(&sources[3..].iter().enumerate().map(|(i, &c)| (c, (1, c as u32), 3 + i as u32)).collect::<Vec<_>>());
    for (k, &c) in v.iter().enumerate().step_by(97) {
        let d = graph.single_source(c).unwrap();
        let best = sources.iter().map(|&s| d[s]).fold(f64::INFINITY, f64::min);
        let (got, id) = field.nearest(c).unwrap();
        assert!((got - best).abs() <= 1e-9 * best.max(1.0), "{got} vs {best}");
        assert!((d[sources[id as usize]] - best).abs() <= 1e-9 * best.max(1.0));
        assert!(got <= before[k]);
    }
}

#[test]
fn surrogate_schwarz_pick_on_basin_of_infinity() {
    let map = RationalMap64::polynomial(&[1.0, 0.0, 1.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let pairs: Vec<(Point, Point)> = (0..100)
        .map(|_| {
            let a = Complex::from_polar(1.2 + 2.0 * rng.gen::<f64>(), rng.gen::<f64>() * std::f64::consts::TAU);
            let b = a + Complex::from_polar(0.2, rng.gen::<f64>() * std::f64::consts::TAU);
            (Point::finite(a), Point::finite(b))
        })
        .collect();
    let mut fractions = Vec::new();
    for res in [256, 512] {
        let g = build_grid(&map, &Point::infinity(), &GridSpec::new(res)).unwrap();
        let report = schwarz_pick_check(&map, &g, &pairs);
        assert!(report.checks.len() >= 95);
        fractions.push(report.violation_fraction());
    }
    assert!(fractions[1] <= 0.05, "{fractions:?}");
    assert!(fractions[1] <= fractions[0], "{fractions:?}");
}

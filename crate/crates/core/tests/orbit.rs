use basinlab::grid::{build_grid, GridSpec, SphereGrid};
use basinlab::metric::{DistanceField, MetricGraph};
use basinlab::orbit::{
    build_backward_tree, nearest_orbit_point, nearest_orbit_point_up_to, OrbitError, DEDUP_TOLERANCE,
    DEFAULT_NODE_BUDGET, OUT_OF_RASTER,
};
use basinlab::{Point, RationalMap64};
use num_complex::Complex;

fn z(re: f64, im: f64) -> Point {
    Point::finite(Complex::new(re, im))
}

fn disk(res: usize) -> (RationalMap64, SphereGrid) {
    let f = RationalMap64::polynomial(&[0.0, 0.0, 1.0]).unwrap();
    let g = build_grid(&f, &z(0.0, 0.0), &GridSpec::new(res)).unwrap();
    (f, g)
}

#[test]
fn first_level_for_z_squared() {
    let (f, g) = disk(256);
    let tree = build_backward_tree(&f, &z(0.5, 0.0), 1, &g, DEFAULT_NODE_BUDGET).unwrap();
    assert_eq!(tree.len(), 3);
    let r = 0.5f64.sqrt();
    let lvl = tree.level(1);
    assert!((lvl[0].point.coord() - Complex::new(-r, 0.0)).norm() < 1e-12);
    assert!((lvl[1].point.coord() - Complex::new(r, 0.0)).norm() < 1e-12);
    assert!(lvl.iter().all(|n| n.parent == Some(0)));
}

#[test]
fn full_binary_tree_for_z_squared() {
    let (f, g) = disk(256);
    for k in 1..=8 {
        let tree = build_backward_tree(&f, &z(0.5, 0.0), k, &g, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(tree.len(), (1 << (k + 1)) - 1, "depth {k}");
        assert_eq!(tree.effective_depth, k);
        assert!(!tree.budget_exceeded);
        for n in tree.nodes() {
            let m = n.point.modulus();
            assert!((m - 0.5f64.powf(0.5f64.powi(n.depth as i32))).abs() < 1e-12);
        }
    }
    let tree = build_backward_tree(&f, &z(0.5, 0.0), 8, &g, DEFAULT_NODE_BUDGET).unwrap();
    // the deepest levels hug the unit circle, inside a pitch of it
    assert!(tree.stats.iter().map(|s| s.out_of_raster).sum::<usize>() > 0);
}

#[test]
fn fixed_base_point_is_merged() {
    // p = (1 - sqrt 3)/2 is the attracting fixed point of z^2 - 1/2
    let f = RationalMap64::polynomial(&[-0.5, 0.0, 1.0]).unwrap();
    let p = (1.0 - 3f64.sqrt()) / 2.0;
    let g = build_grid(&f, &z(p, 0.0), &GridSpec::new(256)).unwrap();
    let tree = build_backward_tree(&f, &z(p, 0.0), 1, &g, DEFAULT_NODE_BUDGET).unwrap();
    assert_eq!(tree.len(), 2);
    assert!((tree.level(1)[0].point.coord() - Complex::new(-p, 0.0)).norm() < 1e-10);
    assert_eq!(tree.stats[1].duplicates, 1);
}

#[test]
fn tree_invariants() {
    let f = RationalMap64::polynomial(&[1.0, 0.0, 1.0]).unwrap();
    let g = build_grid(&f, &Point::infinity(), &GridSpec::new(256)).unwrap();
    let p0 = Point::from_chart(Complex::new(0.1, 0.0), basinlab::Chart::W);
    let tree = build_backward_tree(&f, &p0, 10, &g, DEFAULT_NODE_BUDGET).unwrap();
    let nodes = tree.nodes();
    for n in nodes {
        assert!(n.residual <= 1e-8, "residual {}", n.residual);
        match g.locate(&n.point) {
            Ok(found) => assert_eq!(found, (n.cell, n.component_id)),
            Err(_) => assert_eq!(n.component_id, OUT_OF_RASTER),
        }
        if let Some(p) = n.parent {
            assert_eq!(nodes[p].depth + 1, n.depth);
        }
    }
    for a in 0..nodes.len().min(600) {
        for b in a + 1..nodes.len() {
            assert!(nodes[a].point.chordal(&nodes[b].point) > DEDUP_TOLERANCE);
        }
    }
}

#[test]
fn budget_stops_at_a_complete_level() {
    let (f, g) = disk(128);
    let tree = build_backward_tree(&f, &z(0.5, 0.0), 10, &g, 100).unwrap();
    assert!(tree.budget_exceeded);
    assert_eq!(tree.effective_depth, 5);
    assert_eq!(tree.len(), 63);
    assert!(tree.level(6).is_empty());
}

#[test]
fn errors() {
    let (f, g) = disk(64);
    assert_eq!(
        build_backward_tree(&f, &z(0.5, 0.0), 0, &g, DEFAULT_NODE_BUDGET),
        Err(OrbitError::InvalidDepth(0))
    );
    assert!(matches!(
        build_backward_tree(&f, &z(2.0, 0.0), 3, &g, DEFAULT_NODE_BUDGET),
        Err(OrbitError::BaseNotInBasin(_))
    ));
}

#[test]
fn deterministic_csv() {
    let (f, g) = disk(128);
    let mut out = Vec::new();
    for _ in 0..2 {
        let tree = build_backward_tree(&f, &z(0.3, 0.2), 6, &g, DEFAULT_NODE_BUDGET).unwrap();
        let mut buf = Vec::new();
        tree.write_csv(&mut buf).unwrap();
        out.push(buf);
    }
    assert_eq!(out[0], out[1]);
    let text = String::from_utf8(out.pop().unwrap()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# basin-metric-lab v1"));
    assert_eq!(lines.next(), Some("node_id,parent_id,depth,re,im,chart,component_id,residual"));
    assert!(lines.next().unwrap().starts_with("0,-1,0,"));
    assert_eq!(lines.count(), 126);
}

#[test]
fn nearest_node_agrees_with_scans() {
    let (f, g) = disk(128);
    let tree = build_backward_tree(&f, &z(0.5, 0.0), 5, &g, DEFAULT_NODE_BUDGET).unwrap();
    let graph = MetricGraph::new(&g, 1).unwrap();
    let mut field = DistanceField::new(&graph);
    let sources: Vec<_> = tree
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, n)| (n.cell, (n.depth as u32, n.cell as u32), i as u32))
        .collect();
    field.add_sources(&sources);
    for q in [z(0.0, 0.0), z(0.1, -0.6), z(-0.8, 0.3), z(0.05, 0.9)] {
        let (idx, res) = nearest_orbit_point(&q, &tree, &graph, &g).unwrap();
        let start = graph.cell_of(&q).unwrap();
        let dist = graph.single_source(start).unwrap();
        let best = tree.nodes().iter().map(|n| dist[n.cell]).fold(f64::INFINITY, f64::min);
        assert!((res.value - best).abs() <= 1e-12 * best.max(1.0));
        assert!((dist[tree.nodes()[idx].cell] - best).abs() <= 1e-12 * best.max(1.0));
        let (fd, _) = field.nearest(start).unwrap();
        assert!((fd - best).abs() <= 1e-9 * best.max(1.0));
    }
    let shallow = nearest_orbit_point_up_to(&z(-0.8, 0.3), &tree, &graph, 0).unwrap();
    assert_eq!(shallow.0, 0);
}

#[test]
fn no_node_in_component() {
    // Newton map: the tree of 1 never enters components without a preimage of 1 at depth 0
    let f = RationalMap64::from_real(&[1.0, 0.0, 0.0, 2.0], &[0.0, 0.0, 3.0]).unwrap();
    let g = build_grid(&f, &z(1.0, 0.0), &GridSpec::new(128)).unwrap();
    let tree = build_backward_tree(&f, &z(1.0, 0.0), 1, &g, DEFAULT_NODE_BUDGET).unwrap();
    let far = (2..=g.component_count() as u32)
        .find(|&c| tree.nodes().iter().all(|n| n.component_id != c))
        .unwrap();
    let graph = MetricGraph::new(&g, far).unwrap();
    let q = g.center(graph.vertices()[0]);
    assert!(matches!(
        nearest_orbit_point(&q, &tree, &graph, &g),
        Err(OrbitError::NoOrbitNodeInComponent { .. })
    ));
}

mod common;

use common::{circle_mesh, polygon_area, rng, ELLIPSE_AREA};
use shapeopt::fem::VectorField;
use shapeopt::mesh::{
    apply_deformation, check_invertibility, generate_mesh, load_vtk, mesh_quality, save_vtk, triangle_quality,
    InclusionShape, Mesh, Region,
};
use shapeopt::verify::smooth_field;

#[test]
fn ellipse_mesh_area_and_resolution() {
    let m = generate_mesh(&InclusionShape::ellipse([0.5, 0.5], [0.25, 0.125]), 0.05).unwrap();
    let a = m.region_area(Region::Inclusion);
    assert!((a - ELLIPSE_AREA).abs() <= 0.02 * ELLIPSE_AREA, "area {a}");
    assert!((polygon_area(&m.interface_polygon()) - a).abs() < 1e-12);
    assert!(m.max_edge_length() <= 2.0 * 0.05);
    let total: f64 = (0..m.num_triangles()).map(|e| m.area(e)).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(mesh_quality(&m).min_angle >= 15.0);
}

#[test]
fn shape_touching_the_boundary_is_rejected() {
    assert!(generate_mesh(&InclusionShape::ellipse([0.5, 0.9], [0.25, 0.125]), 0.05).is_err());
    assert!(generate_mesh(&InclusionShape::circle([0.5, 0.5], 0.2), 0.6).is_err());
}

#[test]
fn deformation_there_and_back() {
    let m = circle_mesh(0.1);
    let v = smooth_field(&m, &mut rng(3), 0.05);
    let fwd = apply_deformation(&m, &v, 0.5).unwrap();
    let back = apply_deformation(&fwd, &v.clone().rebind(&fwd).unwrap(), -0.5).unwrap();
    for (a, b) in m.vertices().iter().zip(back.vertices()) {
        assert!((a[0] - b[0]).abs() <= 1e-14 && (a[1] - b[1]).abs() <= 1e-14);
    }
    assert_eq!(fwd.triangles(), m.triangles());
    assert_eq!(fwd.regions(), m.regions());
    assert_eq!(fwd.boundary_edges(), m.boundary_edges());

    let zero = apply_deformation(&m, &VectorField::zeros(&m), 3.0).unwrap();
    assert_eq!(zero.vertices(), m.vertices());
}

#[test]
fn smooth_fields_with_small_gradient_are_invertible() {
    let m = circle_mesh(0.08);
    for seed in 0..5 {
        let v = smooth_field(&m, &mut rng(seed), 1.0);
        let r = check_invertibility(&m, &v, 1.0).unwrap();
        // Scale so that the elementwise W^{1,∞} estimate is 0.5.
        let t = 0.5 / r.w1inf_estimate;
        let r = check_invertibility(&m, &v, t).unwrap();
        assert!(r.invertible && r.min_area_ratio > 0.0);
        let moved = apply_deformation(&m, &v, t).unwrap();
        assert!((0..moved.num_triangles()).all(|e| moved.area(e) > 0.0));
    }
}

#[test]
fn folding_and_boundary_motion_are_detected() {
    let m = circle_mesh(0.1);
    // Push one interior vertex across the opposite edge of a neighbouring triangle.
    let i = (0..m.num_vertices()).find(|&i| !m.on_boundary(i)).unwrap();
    let e = m.triangles().iter().position(|t| t.contains(&i)).unwrap();
    let t = m.triangles()[e];
    let others: Vec<usize> = t.iter().copied().filter(|&j| j != i).collect();
    let (a, b) = (m.vertex(others[0]), m.vertex(others[1]));
    let p = m.vertex(i);
    let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let mut v = VectorField::zeros(&m);
    v.values_mut()[i] = [2.0 * (mid[0] - p[0]), 2.0 * (mid[1] - p[1])];
    let r = check_invertibility(&m, &v, 1.0).unwrap();
    assert!(!r.invertible);
    assert!(r.folded_triangles.contains(&e));
    assert!(apply_deformation(&m, &v, 1.0).is_err());

    let j = (0..m.num_vertices()).find(|&j| m.on_boundary(j)).unwrap();
    let mut w = VectorField::zeros(&m);
    w.values_mut()[j] = [1e-6, 0.0];
    let r = check_invertibility(&m, &w, 1.0).unwrap();
    assert!(!r.invertible && r.moving_boundary_vertices == vec![j]);
}

#[test]
fn composition_of_deformations() {
    let m = circle_mesh(0.1);
    let v1 = smooth_field(&m, &mut rng(1), 0.03);
    let m1 = apply_deformation(&m, &v1, 1.0).unwrap();
    let v2 = smooth_field(&m1, &mut rng(2), 0.03);
    let m2 = apply_deformation(&m1, &v2, 1.0).unwrap();
    // v₂ is nodal on the deformed mesh, so v₂∘(I+v₁) has the same nodal values.
    let sum: Vec<[f64; 2]> = v1.values().iter().zip(v2.values()).map(|(a, b)| [a[0] + b[0], a[1] + b[1]]).collect();
    let once = apply_deformation(&m, &VectorField::from_values(&m, sum).unwrap(), 1.0).unwrap();
    for (a, b) in m2.vertices().iter().zip(once.vertices()) {
        assert!((a[0] - b[0]).abs() <= 1e-12 && (a[1] - b[1]).abs() <= 1e-12);
    }
}

#[test]
fn quality_of_reference_and_degenerate_triangles() {
    let s = 3f64.sqrt() / 2.0;
    let q = triangle_quality(&[[0.0, 0.0], [1.0, 0.0], [0.5, s]], &[[0, 1, 2]]);
    assert!((q.min_angle - 60.0).abs() < 1e-9);
    assert!((q.max_aspect - 1.0).abs() < 1e-12);
    let q = triangle_quality(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], &[[0, 1, 2]]);
    assert_eq!(q.min_area, 0.0);
}

#[test]
fn vtk_round_trip_with_fields() {
    let m = circle_mesh(0.1);
    let s: Vec<f64> = m.vertices().iter().map(|p| p[0] * p[1]).collect();
    let v = smooth_field(&m, &mut rng(9), 0.1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.vtk");
    save_vtk(&path, &m, &[("xy", &s)], &[("v", v.values())]).unwrap();
    let d = load_vtk(&path).unwrap();
    assert_eq!(d.mesh.vertices(), m.vertices());
    assert_eq!(d.mesh.triangles(), m.triangles());
    assert_eq!(d.mesh.regions(), m.regions());
    assert_eq!(d.scalar("xy").unwrap(), &s[..]);
    assert_eq!(d.vector("v").unwrap(), v.values());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# vtk DataFile Version"));
    assert!(text.contains("CELL_TYPES") && text.contains("CELL_DATA"));
}

#[test]
fn construction_rejects_bad_input() {
    let pts = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    assert!(Mesh::new(pts.clone(), vec![[0, 1, 5]], vec![Region::Exterior]).is_err());
    assert!(Mesh::new(pts.clone(), vec![[0, 2, 1]], vec![Region::Exterior]).is_err());
    assert!(Mesh::new(pts, vec![[0, 1, 2]], vec![]).is_err());
}

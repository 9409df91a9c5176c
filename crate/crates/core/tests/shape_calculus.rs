mod common;

use common::{circle_mesh, ellipse_target, rng};
use shapeopt::fem::VectorField;
use shapeopt::mesh::apply_deformation;
use shapeopt::model::{make_target_with, reduced_objective, ProblemConfig};
use shapeopt::shape_calculus::{assemble_shape_derivative, eulerian_fd, metric, riesz_gradient, Snapshot};
use shapeopt::verify::{mask_kinks, smooth_field};

#[test]
fn vanishes_at_exact_data_without_penalty() {
    let cfg = ProblemConfig { alpha: 0.0, ..Default::default() };
    let t = make_target_with(&cfg, 0.1, &Default::default()).unwrap();
    let m = t.mesh().clone();
    let s = Snapshot::solve(&m, &cfg, &t).unwrap();
    assert!(s.objective.abs() < 1e-24);
    let d = assemble_shape_derivative(&m, &cfg, &s).unwrap();
    assert!(d.values().iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn riesz_gradient_represents_the_derivative() {
    let cfg = ProblemConfig::default();
    let m = circle_mesh(0.1);
    let s = Snapshot::solve(&m, &cfg, &ellipse_target(0.1)).unwrap();
    let d = assemble_shape_derivative(&m, &cfg, &s).unwrap();
    let b = metric(&m, 3e-2, 0.5).unwrap();
    let g = riesz_gradient(&m, &d, &b).unwrap();
    let gf = g.to_flat();

    // b(∇J, Z) = dJ[Z] on random admissible Z.
    let mut r = rng(21);
    for _ in 0..5 {
        let z = smooth_field(&m, &mut r, 1.0);
        let lhs = b.matrix().bilinear(&z.to_flat(), &gf);
        let rhs = d.pairing(&z).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-12), "{lhs} {rhs}");
    }
    // −∇J is a descent direction with dJ[−∇J] = −‖∇J‖²_b.
    let neg = g.scaled(-1.0);
    let dn = d.pairing(&neg).unwrap();
    assert!(dn < 0.0);
    assert!((dn + b.matrix().bilinear(&gf, &gf)).abs() <= 1e-10 * dn.abs());

    // Scaling the metric by c scales the gradient by 1/c.
    let c = 4.0;
    let gc = riesz_gradient(&m, &d, &metric(&m, c * 3e-2, 0.5).unwrap()).unwrap().to_flat();
    let dot: f64 = gc.iter().zip(&gf).map(|(a, b)| a * b).sum();
    let (na, nb) = (gc.iter().map(|x| x * x).sum::<f64>().sqrt(), gf.iter().map(|x| x * x).sum::<f64>().sqrt());
    assert!((dot / (na * nb) - 1.0).abs() < 1e-12);
    assert!((na * c / nb - 1.0).abs() < 1e-10);

    for (v, &bd) in g.values().iter().zip(m.boundary_mask()) {
        if bd {
            assert_eq!(*v, [0.0; 2]);
        }
    }
}

#[test]
fn finite_difference_is_odd_and_matches_the_derivative() {
    let cfg = ProblemConfig::default();
    let t = ellipse_target(0.1);
    let m = circle_mesh(0.1);
    let s = Snapshot::solve(&m, &cfg, &t).unwrap();
    let d = assemble_shape_derivative(&m, &cfg, &s).unwrap();
    let mut fields = vec![smooth_field(&m, &mut rng(22), 0.05)];
    mask_kinks(&t, &m, &mut fields, 2e-3).unwrap();
    let v = &fields[0];
    let step = 1e-3;
    let a = eulerian_fd(&m, &cfg, &t, v, step).unwrap();
    let b = eulerian_fd(&m, &cfg, &t, &v.scaled(-1.0), step).unwrap();
    assert!((a + b).abs() <= 1e-12 * a.abs().max(1e-12));
    assert_eq!(eulerian_fd(&m, &cfg, &t, v, step).unwrap(), eulerian_fd(&m, &cfg, &t, v, -step).unwrap());
    let exact = d.pairing(v).unwrap();
    assert!((a - exact).abs() <= 1e-3 * exact.abs(), "{a} {exact}");
    assert!(eulerian_fd(&m, &cfg, &t, v, 0.0).is_err());
}

#[test]
fn zero_direction_and_mesh_binding() {
    let cfg = ProblemConfig::default();
    let t = ellipse_target(0.1);
    let m = circle_mesh(0.1);
    let s = Snapshot::solve(&m, &cfg, &t).unwrap();
    let d = assemble_shape_derivative(&m, &cfg, &s).unwrap();
    assert_eq!(d.pairing(&VectorField::zeros(&m)).unwrap(), 0.0);
    let other = circle_mesh(0.1);
    assert!(d.pairing(&VectorField::zeros(&other)).is_err());
    assert!(riesz_gradient(&other, &d, &metric(&other, 1.0, 1.0).unwrap()).is_err());
    assert_eq!(d.mesh_id(), m.id());
    // Snapshot objective is the reduced objective when u solves the state.
    assert!((s.objective - reduced_objective(&m, &cfg, &t).unwrap()).abs() < 1e-15);
    let moved = apply_deformation(&m, &smooth_field(&m, &mut rng(23), 0.02), 1.0).unwrap();
    assert!(assemble_shape_derivative(&moved, &cfg, &s).is_err());
}

mod common;

use common::{circle_mesh, rng};
use nalgebra::DMatrix;
use rand::Rng;
use shapeopt::fem::{
    assemble_mass, assemble_scalar_laplace, assemble_vector_h1_form, divergence, elem_grad, integrate_constant, solve,
    Conductivity, CsrMatrix, Definiteness, P1Element, ScalarField, SparseOperator, VectorField,
};
use shapeopt::verify::smooth_field;

#[test]
fn reference_stiffness() {
    let el = P1Element::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
    let a = DMatrix::from_fn(3, 3, |i, j| el.area * el.grads[i].dot(&el.grads[j]));
    let expect = DMatrix::from_row_slice(3, 3, &[1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5]);
    assert!((a - expect).abs().max() < 1e-15);
}

#[test]
fn laplace_linearity_and_kernel() {
    let m = circle_mesh(0.1);
    let a1 = assemble_scalar_laplace(&m, Conductivity { inclusion: 1e-6, exterior: 1.0 }).unwrap();
    let a2 = assemble_scalar_laplace(&m, Conductivity { inclusion: 2e-6, exterior: 2.0 }).unwrap();
    assert_eq!(a1.matrix().scaled(2.0), *a2.matrix());
    let ones = vec![1.0; m.num_vertices()];
    assert!(a1.apply(&ones).iter().all(|x| x.abs() < 1e-12));
    assert_eq!(a1.matrix().max_asymmetry(), 0.0);

    // Region split: inclusion-only plus exterior-only equals the whole.
    let inc = assemble_scalar_laplace(&m, Conductivity { inclusion: 1.0, exterior: 1e-300 }).unwrap();
    let ext = assemble_scalar_laplace(&m, Conductivity { inclusion: 1e-300, exterior: 1.0 }).unwrap();
    let all = assemble_scalar_laplace(&m, Conductivity::uniform(1.0)).unwrap();
    let diff = inc.matrix().add_scaled(ext.matrix(), 1.0).unwrap().add_scaled(all.matrix(), -1.0).unwrap();
    assert!(diff.norm_inf() < 1e-12);
    assert!(assemble_scalar_laplace(&m, Conductivity { inclusion: 0.0, exterior: 1.0 }).is_err());
}

#[test]
fn mass_integrates_polynomials() {
    let m = circle_mesh(0.08);
    let mass = assemble_mass(&m);
    let ones = vec![1.0; m.num_vertices()];
    assert!((mass.matrix().bilinear(&ones, &ones) - 1.0).abs() < 1e-12);
    let c = vec![3.0; m.num_vertices()];
    assert!((mass.matrix().bilinear(&c, &c) - 9.0).abs() < 1e-11);
    let y: Vec<f64> = m.vertices().iter().map(|p| p[1]).collect();
    assert!((mass.matrix().bilinear(&y, &y) - 1.0 / 3.0).abs() < 1e-10);
}

#[test]
fn vector_h1_form() {
    let m = circle_mesh(0.1);
    let b0 = assemble_vector_h1_form(&m, 0.3, 0.0).unwrap();
    let mass = assemble_mass(&m);
    // eps2 = 0: ε₁ times the scalar mass on each component.
    let v = smooth_field(&m, &mut rng(0), 1.0);
    let w = smooth_field(&m, &mut rng(1), 1.0);
    let comp = |f: &VectorField, c: usize| f.values().iter().map(|x| x[c]).collect::<Vec<_>>();
    let expect = 0.3 * (0..2).map(|c| mass.matrix().bilinear(&comp(&v, c), &comp(&w, c))).sum::<f64>();
    assert!((b0.matrix().bilinear(&v.to_flat(), &w.to_flat()) - expect).abs() < 1e-14);

    let b = assemble_vector_h1_form(&m, 0.3, 0.5).unwrap();
    let c = VectorField::from_fn(&m, |_| [0.7, -0.2]).to_flat();
    assert!((b.matrix().bilinear(&c, &c) - 0.3 * (0.49 + 0.04)).abs() < 1e-13);
    let (x, y) = (v.to_flat(), w.to_flat());
    assert!((b.matrix().bilinear(&x, &y) - b.matrix().bilinear(&y, &x)).abs() < 1e-14);
    assert!(assemble_vector_h1_form(&m, 0.0, 0.5).is_err());
    assert!(assemble_vector_h1_form(&m, 1.0, -0.1).is_err());
}

#[test]
fn solves() {
    let id = SparseOperator::new(CsrMatrix::identity(5), Definiteness::PositiveDefinite).unwrap();
    let rhs = [1.0, -2.0, 3.0, 0.5, 0.0];
    assert_eq!(solve(&id, &rhs, None).unwrap(), rhs);

    // P1 reproduces the linear solution u = y with μ ≡ 1.
    let m = circle_mesh(0.1);
    let a = assemble_scalar_laplace(&m, Conductivity::uniform(1.0))
        .unwrap()
        .with_constraints(m.dirichlet_mask().to_vec())
        .unwrap();
    let bc: Vec<f64> = m.vertices().iter().map(|p| p[1]).collect();
    let u = solve(&a, &vec![0.0; m.num_vertices()], Some(&bc)).unwrap();
    for (x, y) in u.iter().zip(&bc) {
        assert!((x - y).abs() < 1e-12);
    }

    // Random SPD against a dense Cholesky.
    let mut r = rng(4);
    let n = 50;
    let g = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let spd = &g * g.transpose() + DMatrix::identity(n, n) * n as f64;
    let trip: Vec<(usize, usize, f64)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (i, j, spd[(i, j)])).collect();
    let op = SparseOperator::new(CsrMatrix::from_triplets(n, n, &trip).unwrap(), Definiteness::PositiveDefinite).unwrap();
    let b: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let x = solve(&op, &b, None).unwrap();
    let oracle = spd.clone().cholesky().unwrap().solve(&nalgebra::DVector::from_column_slice(&b));
    let err = x.iter().zip(oracle.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-10 * oracle.amax());
    assert_eq!(solve(&op, &b, None).unwrap(), x);
}

#[test]
fn field_calculus() {
    let m = circle_mesh(0.1);
    let pos = VectorField::from_fn(&m, |p| p);
    assert!(divergence(&m, &pos).unwrap().iter().all(|d| (d - 2.0).abs() < 1e-12));
    let x = ScalarField::from_fn(&m, |p| p[0]);
    assert!(elem_grad(&m, &x).unwrap().iter().all(|g| (g[0] - 1.0).abs() < 1e-12 && g[1].abs() < 1e-12));
    let v = smooth_field(&m, &mut rng(2), 1.0);
    assert!(integrate_constant(&m, &divergence(&m, &v).unwrap()).abs() < 1e-12);

    let other = circle_mesh(0.12);
    assert!(divergence(&other, &v).is_err());
}

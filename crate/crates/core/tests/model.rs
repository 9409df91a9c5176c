mod common;

use common::{circle_mesh, ellipse_target, rng, ELLIPSE_AREA};
use rand::Rng;
use shapeopt::fem::{assemble_mass, assemble_scalar_laplace, ScalarField};
use shapeopt::mesh::{generate_mesh, MeshOptions, Region};
use shapeopt::model::{
    make_target, make_target_with, objective, reduced_objective, solve_adjoint, solve_state, target_shape,
    transfer_target, ProblemConfig, TargetField,
};

#[test]
fn homogeneous_conductivity_gives_linear_potential() {
    let cfg = ProblemConfig { mu_in: 1.0, mu_out: 1.0, ..Default::default() };
    let t = make_target(&cfg, 0.1).unwrap();
    for (z, p) in t.z().values().iter().zip(t.mesh().vertices()) {
        assert!((z - p[1]).abs() < 1e-12);
    }
    let m = circle_mesh(0.1);
    for scale in [1.0, 7.5] {
        let cfg = ProblemConfig { mu_in: 0.3 * scale, mu_out: 0.3 * scale, ..Default::default() };
        let u = solve_state(&m, &cfg).unwrap();
        assert!(u.values().iter().zip(m.vertices()).all(|(u, p)| (u - p[1]).abs() < 1e-12));
    }
}

#[test]
fn insulating_inclusion() {
    let cfg = ProblemConfig::default();
    let t = make_target(&cfg, 0.05).unwrap();
    let m = t.mesh();
    let z = t.z().values();
    let energy = |mu| {
        let a = assemble_scalar_laplace(m, mu).unwrap();
        a.matrix().bilinear(z, z)
    };
    use shapeopt::fem::Conductivity;
    let inside = energy(Conductivity { inclusion: cfg.mu_in, exterior: 1e-300 });
    let total = energy(Conductivity { inclusion: cfg.mu_in, exterior: cfg.mu_out });
    assert!(inside <= 1e-4 * total);
    assert!(z.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
    let area = m.region_area(Region::Inclusion);
    assert!((area - ELLIPSE_AREA).abs() < 0.02 * ELLIPSE_AREA);
    assert_eq!(target_shape().semi_axes, [0.25, 0.125]);
}

#[test]
fn flux_balance() {
    let m = circle_mesh(0.08);
    let cfg = ProblemConfig::default();
    let u = solve_state(&m, &cfg).unwrap();
    // Reaction forces on Dirichlet nodes: r = A u. Bottom and top nodes carry
    // opposite net flux; free nodes carry none.
    let a = assemble_scalar_laplace(&m, cfg.conductivity()).unwrap();
    let r = a.apply(u.values());
    let (mut bottom, mut top) = (0.0, 0.0);
    for (i, p) in m.vertices().iter().enumerate() {
        if !m.dirichlet_mask()[i] {
            assert!(r[i].abs() < 1e-9);
        } else if p[1] < 0.5 {
            bottom += r[i];
        } else {
            top += r[i];
        }
    }
    assert!((bottom + top).abs() < 1e-9, "{bottom} {top}");
}

#[test]
fn adjoint_properties() {
    let m = circle_mesh(0.1);
    let cfg = ProblemConfig::default();
    let u = solve_state(&m, &cfg).unwrap();
    let lam = solve_adjoint(&m, &cfg, &u, &u).unwrap();
    assert!(lam.values().iter().all(|l| l.abs() < 1e-12));

    let t = ellipse_target(0.1);
    let z = transfer_target(&t, &m).unwrap();
    let l1 = solve_adjoint(&m, &cfg, &u, &z).unwrap();
    let z3 = ScalarField::from_values(&m, u.values().iter().zip(z.values()).map(|(u, z)| u - 3.0 * (u - z)).collect()).unwrap();
    let l3 = solve_adjoint(&m, &cfg, &u, &z3).unwrap();
    for (a, b) in l1.values().iter().zip(l3.values()) {
        assert!((3.0 * a - b).abs() < 1e-10 * (1.0 + b.abs()));
    }

    // ∫ μ∇δu·∇λ = −∫ (u − z) δu for δu vanishing on the Dirichlet sides.
    let a = assemble_scalar_laplace(&m, cfg.conductivity()).unwrap();
    let mass = assemble_mass(&m);
    let diff: Vec<f64> = u.values().iter().zip(z.values()).map(|(u, z)| u - z).collect();
    let mut r = rng(5);
    for _ in 0..5 {
        let du: Vec<f64> =
            (0..m.num_vertices()).map(|i| if m.dirichlet_mask()[i] { 0.0 } else { r.random_range(-1.0..1.0) }).collect();
        let lhs = a.matrix().bilinear(&du, l1.values());
        let rhs = -mass.matrix().bilinear(&du, &diff);
        assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-6));
    }
}

#[test]
fn objective_values() {
    let m = generate_mesh(&target_shape(), 0.05).unwrap();
    let cfg0 = ProblemConfig { alpha: 0.0, ..Default::default() };
    let u = solve_state(&m, &cfg0).unwrap();
    assert_eq!(objective(&m, &cfg0, &u, &u).unwrap(), 0.0);
    let cfg = ProblemConfig::default();
    let j = objective(&m, &cfg, &u, &u).unwrap();
    let expect = 0.5 * cfg.alpha * m.region_area(Region::Inclusion);
    assert!((j - expect).abs() <= 1e-12 * expect);
    assert!((m.region_area(Region::Inclusion) - ELLIPSE_AREA).abs() < 0.02 * ELLIPSE_AREA);
    let t = ellipse_target(0.1);
    assert!(reduced_objective(&circle_mesh(0.1), &cfg, &t).unwrap() > 0.0);
}

#[test]
fn target_transfer() {
    let t = make_target_with(&ProblemConfig::default(), 0.08, &MeshOptions { seed: 2 }).unwrap();
    let own = transfer_target(&t, t.mesh()).unwrap();
    assert_eq!(own.values(), t.z().values());

    // Brute-force barycentric evaluation at random points.
    let bg = t.mesh();
    let mut r = rng(6);
    for _ in 0..200 {
        let p = [r.random_range(0.0..1.0), r.random_range(0.0..1.0)];
        let mut found = None;
        for (e, tri) in bg.triangles().iter().enumerate() {
            let [a, b, c] = tri.map(|i| bg.vertex(i));
            let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
            let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
            let l0 = 1.0 - l1 - l2;
            if l0 >= -1e-14 && l1 >= -1e-14 && l2 >= -1e-14 {
                let z = tri.map(|i| t.z().values()[i]);
                found = Some(l0 * z[0] + l1 * z[1] + l2 * z[2]);
                let _ = e;
                break;
            }
        }
        assert!((t.evaluate(p).unwrap() - found.unwrap()).abs() < 1e-13);
    }
    assert!(t.evaluate([1.5, 0.5]).is_err());
    assert!(t.evaluate([1.0 + 1e-13, 0.5]).is_ok());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.vtk");
    t.save(&path).unwrap();
    let back = TargetField::load(&path).unwrap();
    assert_eq!(back.z().values(), t.z().values());
    assert_eq!(back.mesh().vertices(), t.mesh().vertices());
}

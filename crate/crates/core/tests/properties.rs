mod common;

use std::path::PathBuf;

use proptest::prelude::*;
use shapeopt::config::{MeshSource, RunConfig, TargetSource};
use shapeopt::driver::{LineSearch, NewtonFallback, Schedule, StateUpdate, StepMode};
use shapeopt::fem::{assemble_vector_h1_form, VectorField};
use shapeopt::history::{History, HistoryRow, HistoryWriter};
use shapeopt::kkt::ResidualNorm;
use shapeopt::mesh::{apply_deformation, check_invertibility, InclusionShape, Mesh};
use shapeopt::model::{Mutation, ProblemConfig};
use shapeopt::pseudoinverse::epsilon_table;
use std::sync::OnceLock;

fn mesh() -> &'static Mesh {
    static M: OnceLock<Mesh> = OnceLock::new();
    M.get_or_init(|| common::circle_mesh(0.15))
}

fn pos() -> impl Strategy<Value = f64> {
    (-8.0..1.0f64).prop_map(|e| 10f64.powf(e))
}

fn shape() -> impl Strategy<Value = InclusionShape> {
    prop_oneof![
        (0.3..0.7f64, 0.3..0.7f64, 0.05..0.25f64).prop_map(|(x, y, r)| InclusionShape::circle([x, y], r)),
        (0.3..0.7f64, 0.3..0.7f64, 0.05..0.25f64, 0.05..0.25f64)
            .prop_map(|(x, y, a, b)| InclusionShape::ellipse([x, y], [a, b])),
    ]
}

fn run_config() -> impl Strategy<Value = RunConfig> {
    let problem = (pos(), pos(), pos(), 0..3usize).prop_map(|(alpha, mu_in, mu_out, m)| ProblemConfig {
        alpha,
        mu_in,
        mu_out,
        mutation: [Mutation::None, Mutation::FlipHessianTerm, Mutation::AlphaOverDomain][m],
    });
    let schedule = (
        (0..50usize, 0..100usize, pos(), pos(), pos(), pos(), pos()),
        (any::<bool>(), any::<bool>(), proptest::option::of(pos()), any::<bool>(), any::<bool>()),
    )
        .prop_map(|((ng, mi, gs, ns, e1, e2, tv), (ls, su, ed, rn, nf))| Schedule {
            n_gradient_iters: ng,
            max_iters: mi,
            gradient_step: gs,
            newton_step: ns,
            eps1: e1,
            eps2: e2,
            tol_v: tv,
            line_search: if ls { LineSearch::Backtracking } else { LineSearch::Fixed },
            state_update: if su { StateUpdate::Resolve } else { StateUpdate::OneShot },
            eps_decrease: ed,
            residual_norm: if rn { ResidualNorm::Euclidean } else { ResidualNorm::Metric },
            newton_fallback: if nf { NewtonFallback::Abort } else { NewtonFallback::Gradient },
        });
    let mesh = prop_oneof![
        (0.01..0.2f64, shape()).prop_map(|(h, shape)| MeshSource::Generate { h, shape }),
        "[a-z]{1,8}\\.vtk".prop_map(|p| MeshSource::Load { path: PathBuf::from(p) }),
    ];
    let target = prop_oneof![
        (0.01..0.2f64, shape()).prop_map(|(h, shape)| TargetSource::Generate { h, shape }),
        "[a-z]{1,8}\\.vtk".prop_map(|p| TargetSource::Load { path: PathBuf::from(p) }),
    ];
    (problem, schedule, mesh, target, "[a-z_]{1,10}", any::<u64>(), any::<bool>()).prop_map(
        |(problem, schedule, mesh, target, dir, seed, emit_vtk)| RunConfig {
            problem,
            schedule,
            mesh,
            target,
            output_dir: PathBuf::from(dir),
            seed,
            emit_vtk,
        },
    )
}

fn history() -> impl Strategy<Value = Vec<HistoryRow>> {
    let num = prop_oneof![pos(), Just(0.0), -1e3..1e3f64];
    let row = (num.clone(), pos(), pos(), num, 0..4usize);
    prop::collection::vec(row, 0..12).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(k, (objective, grad_norm, residual, step, m))| HistoryRow {
                k,
                objective,
                grad_norm,
                residual,
                step,
                mode: [StepMode::Gradient, StepMode::Newton, StepMode::Fallback, StepMode::Stop][m],
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_survives_serialization(cfg in run_config()) {
        let text = cfg.serialize();
        prop_assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn history_survives_a_round_trip(rows in history()) {
        let mut w = HistoryWriter::new(Vec::new()).unwrap();
        for r in &rows {
            w.push(r).unwrap();
        }
        w.comment("termination: converged").unwrap();
        let h = History::read(w.into_inner().as_slice()).unwrap();
        prop_assert_eq!(h.rows, rows);
        prop_assert_eq!(h.comments, vec!["termination: converged".to_string()]);
    }

    #[test]
    fn deformation_is_undone_by_the_opposite_step(seed in any::<u64>(), t in 0.01..1.0f64) {
        let m = mesh();
        let v = shapeopt::verify::smooth_field(m, &mut common::rng(seed), 0.02);
        prop_assume!(check_invertibility(m, &v, t).unwrap().invertible);
        let moved = apply_deformation(m, &v, t).unwrap();
        let back = VectorField::from_values(&moved, v.values().to_vec()).unwrap();
        let m2 = apply_deformation(&moved, &back, -t).unwrap();
        for (a, b) in m.vertices().iter().zip(m2.vertices()) {
            prop_assert!((a[0] - b[0]).abs() <= 1e-15 && (a[1] - b[1]).abs() <= 1e-15);
        }
        prop_assert_eq!(m2.triangles(), m.triangles());
        prop_assert_eq!(m2.regions(), m.regions());
    }

    #[test]
    fn regularization_form_is_symmetric_and_positive(e1 in pos(), e2 in 0.0..10.0f64, seed in any::<u64>()) {
        let m = mesh();
        let b = assemble_vector_h1_form(m, e1, e2).unwrap();
        let a = b.matrix();
        prop_assert!(a.max_asymmetry() <= 1e-14 * a.norm_inf());
        let v = shapeopt::verify::smooth_field(m, &mut common::rng(seed), 1.0).to_flat();
        prop_assert!(a.bilinear(&v, &v) > 0.0);
    }

    #[test]
    fn tikhonov_error_stays_below_the_spectral_bound(seed in any::<u64>(), n in 3..16usize, frac in 0.1..0.9f64) {
        let rank = ((n as f64 * frac) as usize).clamp(1, n - 1);
        let (h, ms, b) = shapeopt::pseudoinverse::random_singular_system(&mut common::rng(seed), n, rank).unwrap();
        prop_assume!(b.norm() > 1e-8);
        let eps = [1.0, 1e-1, 1e-2, 1e-3, 1e-4];
        let t = epsilon_table(&h, &b, &ms, &eps).unwrap();
        prop_assert!(t.errors_monotone());
        prop_assert!(t.within_bound());
    }
}

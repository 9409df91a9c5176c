mod common;

use common::{circle_mesh, ellipse_target};
use shapeopt::driver::{
    line_search, run_two_phase, run_two_phase_with, steepest_descent, LineSearch, Schedule, StepMode, Termination,
};
use shapeopt::model::{reduced_objective, ProblemConfig};
use shapeopt::shape_calculus::{assemble_shape_derivative, metric, riesz_gradient, Snapshot};
use shapeopt::Error;

fn short(n_gradient_iters: usize, max_iters: usize) -> Schedule {
    Schedule { n_gradient_iters, max_iters, ..Default::default() }
}

#[test]
fn steepest_descent_never_increases_the_objective() {
    let cfg = ProblemConfig::default();
    let sched = Schedule { max_iters: 8, line_search: LineSearch::Backtracking, ..Default::default() };
    let out = steepest_descent(&circle_mesh(0.1), &cfg, &ellipse_target(0.1), &sched).unwrap();
    assert_eq!(out.history.len(), 9);
    for w in out.history.windows(2) {
        assert!(w[1].objective <= w[0].objective);
    }
    assert!(out.history.last().unwrap().objective < 0.5 * out.history[0].objective);
    assert_eq!(out.history.last().unwrap().mode, StepMode::Stop);
    assert_eq!(out.termination, Termination::MaxIterations);
}

#[test]
fn two_phase_switches_modes_after_the_warm_up() {
    let cfg = ProblemConfig::default();
    let t = ellipse_target(0.1);
    let out = run_two_phase(&circle_mesh(0.1), &cfg, &t, &short(4, 8)).unwrap();
    let modes: Vec<StepMode> = out.history.iter().map(|r| r.mode).collect();
    assert_eq!(modes[..4], [StepMode::Gradient; 4]);
    assert!(modes[4..8].iter().all(|&m| m == StepMode::Newton));
    assert_eq!(modes[8], StepMode::Stop);
    assert!(out.history.iter().enumerate().all(|(i, r)| r.k == i));
    // The first Newton steps shrink the residual well below the warm-up level.
    assert!(out.history[8].residual < 0.1 * out.history[4].residual);
}

#[test]
fn gradient_only_when_warm_up_covers_the_run() {
    let cfg = ProblemConfig::default();
    let out = run_two_phase(&circle_mesh(0.1), &cfg, &ellipse_target(0.1), &short(5, 5)).unwrap();
    assert!(out.history[..5].iter().all(|r| r.mode == StepMode::Gradient));
    let out = run_two_phase(&circle_mesh(0.1), &cfg, &ellipse_target(0.1), &short(9, 5)).unwrap();
    assert!(out.history[..5].iter().all(|r| r.mode == StepMode::Gradient));
}

#[test]
fn zero_iterations_records_the_initial_state() {
    let cfg = ProblemConfig::default();
    let m = circle_mesh(0.1);
    let t = ellipse_target(0.1);
    let out = run_two_phase(&m, &cfg, &t, &short(0, 0)).unwrap();
    assert_eq!(out.history.len(), 1);
    assert_eq!(out.history[0].mode, StepMode::Stop);
    assert_eq!(out.mesh.vertices(), m.vertices());
    assert!((out.history[0].objective - reduced_objective(&m, &cfg, &t).unwrap()).abs() < 1e-15);
}

#[test]
fn runs_are_deterministic() {
    let cfg = ProblemConfig::default();
    let run = || {
        let mut seen = Vec::new();
        let out = run_two_phase_with(&circle_mesh(0.1), &cfg, &ellipse_target(0.1), &short(3, 6), |r, _, _| {
            seen.push(*r);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, out.history);
        out
    };
    let (a, b) = (run(), run());
    assert_eq!(a.history, b.history);
    assert_eq!(a.mesh.vertices(), b.mesh.vertices());
}

#[test]
fn observer_errors_abort_the_run() {
    let cfg = ProblemConfig::default();
    let r = run_two_phase_with(&circle_mesh(0.1), &cfg, &ellipse_target(0.1), &short(2, 4), |r, _, _| {
        if r.k == 1 {
            Err(Error::InvalidArgument("stop".into()))
        } else {
            Ok(())
        }
    });
    assert!(r.is_err());
}

#[test]
fn line_search_rejects_ascent_directions() {
    let cfg = ProblemConfig::default();
    let m = circle_mesh(0.1);
    let t = ellipse_target(0.1);
    let s = Snapshot::solve(&m, &cfg, &t).unwrap();
    let d = assemble_shape_derivative(&m, &cfg, &s).unwrap();
    let g = riesz_gradient(&m, &d, &metric(&m, 3e-2, 0.5).unwrap()).unwrap();
    let dj = d.pairing(&g).unwrap();
    assert!(dj > 0.0);
    let err = line_search(&m, &cfg, &t, &g, s.objective, dj, 1.0, LineSearch::Backtracking, 1e-9);
    assert!(matches!(err, Err(Error::LineSearch(_))));

    let down = g.scaled(-1.0);
    let ok = line_search(&m, &cfg, &t, &down, s.objective, -dj, 1.0, LineSearch::Backtracking, 1e-9).unwrap();
    assert!(ok.objective <= s.objective - 1e-4 * ok.step * dj);
    assert!(ok.step <= 1.0);
    let fixed = line_search(&m, &cfg, &t, &down, s.objective, -dj, 1e-3, LineSearch::Fixed, 1e-9).unwrap();
    assert_eq!(fixed.step, 1e-3);
}

#[test]
fn invalid_schedules_are_rejected() {
    let cfg = ProblemConfig::default();
    let m = circle_mesh(0.1);
    let t = ellipse_target(0.1);
    for bad in [
        Schedule { eps1: 0.0, ..Default::default() },
        Schedule { eps2: -1.0, ..Default::default() },
        Schedule { newton_step: f64::NAN, ..Default::default() },
        Schedule { eps_decrease: Some(0.0), ..Default::default() },
    ] {
        assert!(bad.validate().is_err());
        assert!(run_two_phase(&m, &cfg, &t, &bad).is_err());
    }
}

//! Optimization loops: Armijo steepest descent and the two-phase schedule
//! (projected gradient warm-up followed by regularized Newton steps).

use crate::fem::{ScalarField, SparseOperator, VectorField};
use crate::kkt::{assemble_kkt, kkt_residual_norm, KktStep, ResidualNorm};
use crate::mesh::{apply_deformation, check_invertibility, Mesh};
use crate::model::{ProblemConfig, TargetField};
use crate::shape_calculus::{assemble_shape_derivative, metric, Snapshot};
use crate::{Error, Result};

const ARMIJO_C1: f64 = 1e-4;
const MAX_HALVINGS: usize = 30;
/// A run whose residual grows by this factor over the initial one is
/// declared divergent.
const DIVERGENCE_FACTOR: f64 = 1e8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LineSearch {
    /// Take the scheduled step, halving only to keep the mesh untangled.
    #[default]
    Fixed,
    /// Armijo backtracking on the reduced objective.
    Backtracking,
}

/// How `u` and `λ` follow the mesh in the two-phase run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StateUpdate {
    /// Add the KKT increments `δu`, `δλ` (all variables move together).
    #[default]
    OneShot,
    /// Re-solve state and adjoint on every new mesh.
    Resolve,
}

/// What to do when a Newton solve fails.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NewtonFallback {
    /// Take one projected gradient step instead (recorded as such).
    #[default]
    Gradient,
    Abort,
}

impl LineSearch {
    pub fn name(self) -> &'static str {
        match self {
            LineSearch::Fixed => "fixed",
            LineSearch::Backtracking => "backtracking",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "fixed" => Some(LineSearch::Fixed),
            "backtracking" => Some(LineSearch::Backtracking),
            _ => None,
        }
    }
}

impl StateUpdate {
    pub fn name(self) -> &'static str {
        match self {
            StateUpdate::OneShot => "one-shot",
            StateUpdate::Resolve => "resolve",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "one-shot" => Some(StateUpdate::OneShot),
            "resolve" => Some(StateUpdate::Resolve),
            _ => None,
        }
    }
}

impl NewtonFallback {
    pub fn name(self) -> &'static str {
        match self {
            NewtonFallback::Gradient => "gradient",
            NewtonFallback::Abort => "abort",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "gradient" => Some(NewtonFallback::Gradient),
            "abort" => Some(NewtonFallback::Abort),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    pub n_gradient_iters: usize,
    pub gradient_step: f64,
    pub newton_step: f64,
    pub max_iters: usize,
    pub eps1: f64,
    pub eps2: f64,
    pub tol_v: f64,
    pub line_search: LineSearch,
    pub state_update: StateUpdate,
    /// When set to `c`, the Newton phase uses `ε₁,k = min(ε₁, c‖V^{k−1}‖)`.
    pub eps_decrease: Option<f64>,
    pub residual_norm: ResidualNorm,
    pub newton_fallback: NewtonFallback,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            n_gradient_iters: 20,
            gradient_step: 0.9,
            newton_step: 1.0,
            max_iters: 60,
            eps1: 3e-2,
            eps2: 0.5,
            tol_v: 1e-9,
            line_search: LineSearch::Fixed,
            state_update: StateUpdate::OneShot,
            eps_decrease: None,
            residual_norm: ResidualNorm::Metric,
            newton_fallback: NewtonFallback::Gradient,
        }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gradient_step", self.gradient_step),
            ("newton_step", self.newton_step),
            ("eps1", self.eps1),
            ("tol_v", self.tol_v),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.eps2 >= 0.0 && self.eps2.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps2 must be non-negative, got {}", self.eps2)));
        }
        if let Some(c) = self.eps_decrease {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidArgument(format!("eps_decrease must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepMode {
    Gradient,
    Newton,
    /// Gradient step taken because the Newton solve failed.
    Fallback,
    /// No step: the record closes the run.
    Stop,
}

impl StepMode {
    pub fn name(self) -> &'static str {
        match self {
            StepMode::Gradient => "gradient",
            StepMode::Newton => "newton",
            StepMode::Fallback => "fallback",
            StepMode::Stop => "stop",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "gradient" => Some(StepMode::Gradient),
            "newton" => Some(StepMode::Newton),
            "fallback" => Some(StepMode::Fallback),
            "stop" => Some(StepMode::Stop),
            _ => None,
        }
    }
}

/// Scalars describing iterate `k` and the step taken from it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub objective: f64,
    /// `‖∇J‖_b` of the shape derivative at iterate `k`.
    pub grad_norm: f64,
    /// Norm of the KKT right-hand side at iterate `k`.
    pub residual: f64,
    /// Step length applied to the direction (0 for the closing record).
    pub step: f64,
    pub mode: StepMode,
    /// Smallest deformed-to-original area ratio of the accepted step.
    pub invertibility_margin: f64,
    /// Largest nodal length of the direction `V^k`.
    pub v_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    /// `‖V^k‖ ≤ tol_v`.
    Converged,
    MaxIterations,
    Diverged(String),
    Failed(String),
}

impl Termination {
    pub fn describe(&self) -> String {
        match self {
            Termination::Converged => "converged".into(),
            Termination::MaxIterations => "max-iterations".into(),
            Termination::Diverged(s) => format!("diverged: {s}"),
            Termination::Failed(s) => format!("failed: {s}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub mesh: Mesh,
    pub history: Vec<IterationRecord>,
    pub termination: Termination,
    pub snapshot: Snapshot,
}

/// `‖∇J‖_b = sqrt(dᵀ B⁻¹ d)`.
fn gradient_norm(m: &Mesh, cfg: &ProblemConfig, s: &Snapshot, b: &SparseOperator) -> Result<f64> {
    let d = assemble_shape_derivative(m, cfg, s)?;
    let g = crate::fem::solve(b, d.values(), None)?;
    Ok(d.values().iter().zip(&g).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt())
}

/// Largest step `t ≤ t0` from `{t0, t0/2, …}` that keeps the mesh untangled.
fn invertible_step(m: &Mesh, v: &VectorField, t0: f64) -> Result<(f64, f64)> {
    let mut t = t0;
    for _ in 0..=MAX_HALVINGS {
        let report = check_invertibility(m, v, t)?;
        if report.invertible {
            return Ok((t, report.min_area_ratio));
        }
        t *= 0.5;
    }
    Err(Error::NonInvertible(format!("no untangled step after {MAX_HALVINGS} halvings")))
}

#[derive(Clone, Debug)]
pub struct LineSearchResult {
    pub step: f64,
    pub mesh: Mesh,
    pub objective: f64,
}

/// Backtracking line search along `v` starting at `t0`. With
/// [`LineSearch::Backtracking`] the Armijo condition
/// `J(t) ≤ J0 + c₁ t dJ[V]` must hold; both modes require an untangled mesh.
#[allow(clippy::too_many_arguments)]
pub fn line_search(
    m: &Mesh,
    cfg: &ProblemConfig,
    target: &TargetField,
    v: &VectorField,
    j0: f64,
    dj_v: f64,
    t0: f64,
    mode: LineSearch,
    tol_v: f64,
) -> Result<LineSearchResult> {
    let tiny = v.max_abs() <= tol_v;
    if mode == LineSearch::Backtracking && !tiny && dj_v >= 0.0 {
        return Err(Error::LineSearch(format!("not a descent direction: dJ[V] = {dj_v:e}")));
    }
    let mut t = t0;
    for _ in 0..=MAX_HALVINGS {
        if check_invertibility(m, v, t)?.invertible {
            let mesh = apply_deformation(m, v, t)?;
            let j = crate::model::reduced_objective(&mesh, cfg, target)?;
            if mode == LineSearch::Fixed || tiny || j <= j0 + ARMIJO_C1 * t * dj_v {
                return Ok(LineSearchResult { step: t, mesh, objective: j });
            }
        }
        t *= 0.5;
    }
    Err(Error::LineSearch(format!("no admissible step after {MAX_HALVINGS} halvings")))
}

/// Algorithm: `b(V, Z) = −dJ[Z]`, Armijo line search, `Ω ← (I + tV)Ω`,
/// with exact state and adjoint solves on every iterate.
pub fn steepest_descent(m0: &Mesh, cfg: &ProblemConfig, target: &TargetField, sched: &Schedule) -> Result<RunOutcome> {
    steepest_descent_with(m0, cfg, target, sched, |_, _, _| Ok(()))
}

pub fn steepest_descent_with<F>(
    m0: &Mesh,
    cfg: &ProblemConfig,
    target: &TargetField,
    sched: &Schedule,
    mut observe: F,
) -> Result<RunOutcome>
where
    F: FnMut(&IterationRecord, &Mesh, &Snapshot) -> Result<()>,
{
    cfg.validate()?;
    sched.validate()?;
    let mut m = m0.clone();
    let mut s = Snapshot::solve(&m, cfg, target)?;
    let mut history = Vec::new();
    let mut termination = Termination::MaxIterations;
    for k in 0..=sched.max_iters {
        let b = metric(&m, sched.eps1, sched.eps2)?;
        let d = assemble_shape_derivative(&m, cfg, &s)?;
        let g = crate::fem::solve(&b, d.values(), None)?;
        let grad_norm = d.values().iter().zip(&g).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt();
        let residual = kkt_residual_norm(&m, cfg, &s, sched.eps2, sched.residual_norm)?;
        let v = VectorField::from_flat(&m, &g)?.scaled(-1.0);
        let mut rec = IterationRecord {
            k,
            objective: s.objective,
            grad_norm,
            residual,
            step: 0.0,
            mode: StepMode::Stop,
            invertibility_margin: 1.0,
            v_norm: v.max_abs(),
        };
        if k == sched.max_iters || rec.v_norm <= sched.tol_v {
            if rec.v_norm <= sched.tol_v {
                termination = Termination::Converged;
            }
            observe(&rec, &m, &s)?;
            history.push(rec);
            break;
        }
        let dj_v = -grad_norm * grad_norm;
        let ls = match line_search(&m, cfg, target, &v, s.objective, dj_v, sched.gradient_step, LineSearch::Backtracking, sched.tol_v) {
            Ok(ls) => ls,
            Err(e) => {
                observe(&rec, &m, &s)?;
                history.push(rec);
                termination = Termination::Failed(e.to_string());
                break;
            }
        };
        rec.step = ls.step;
        rec.mode = StepMode::Gradient;
        rec.invertibility_margin = check_invertibility(&m, &v, ls.step)?.min_area_ratio;
        observe(&rec, &m, &s)?;
        history.push(rec);
        m = ls.mesh;
        s = Snapshot::solve(&m, cfg, target)?;
    }
    Ok(RunOutcome { mesh: m, history, termination, snapshot: s })
}

/// Projected gradient steps for the first `n_gradient_iters` iterations,
/// regularized Newton steps afterwards.
pub fn run_two_phase(m0: &Mesh, cfg: &ProblemConfig, target: &TargetField, sched: &Schedule) -> Result<RunOutcome> {
    run_two_phase_with(m0, cfg, target, sched, |_, _, _| Ok(()))
}

/// Moves the mesh by `t V` and the state and adjoint by `t_state (δu, δλ)`.
#[allow(clippy::too_many_arguments)]
fn advance(
    m: &Mesh,
    cfg: &ProblemConfig,
    target: &TargetField,
    s: &Snapshot,
    step: &KktStep,
    t: f64,
    t_state: f64,
    update: StateUpdate,
) -> Result<(Mesh, Snapshot)> {
    let next = apply_deformation(m, &step.v, t)?;
    let snap = match update {
        StateUpdate::Resolve => Snapshot::solve(&next, cfg, target)?,
        StateUpdate::OneShot => {
            let add = |a: &ScalarField, d: &ScalarField| -> Result<ScalarField> {
                let vals = a.values().iter().zip(d.values()).map(|(x, y)| x + t_state * y).collect();
                ScalarField::from_values(&next, vals)
            };
            let u = add(&s.u, &step.du)?;
            let lambda = add(&s.lambda, &step.dl)?;
            Snapshot::from_fields(&next, cfg, u, lambda, target.sample(&next)?)?
        }
    };
    Ok((next, snap))
}

pub fn run_two_phase_with<F>(
    m0: &Mesh,
    cfg: &ProblemConfig,
    target: &TargetField,
    sched: &Schedule,
    mut observe: F,
) -> Result<RunOutcome>
where
    F: FnMut(&IterationRecord, &Mesh, &Snapshot) -> Result<()>,
{
    cfg.validate()?;
    sched.validate()?;
    let mut m = m0.clone();
    let mut s = Snapshot::solve(&m, cfg, target)?;
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut termination = Termination::MaxIterations;
    let mut initial_residual = None;
    let mut last_v = f64::INFINITY;

    for k in 0..=sched.max_iters {
        let newton_phase = k >= sched.n_gradient_iters;
        let eps1 = match sched.eps_decrease {
            Some(c) if newton_phase && last_v.is_finite() => sched.eps1.min(c * last_v).max(f64::MIN_POSITIVE),
            _ => sched.eps1,
        };
        let b = metric(&m, sched.eps1, sched.eps2)?;
        let grad_norm = gradient_norm(&m, cfg, &s, &b)?;
        let sys = assemble_kkt(&m, cfg, &s, eps1, sched.eps2)?;
        let residual = sys.residual_norm(&m, sched.residual_norm)?;
        let mut rec = IterationRecord {
            k,
            objective: s.objective,
            grad_norm,
            residual,
            step: 0.0,
            mode: StepMode::Stop,
            invertibility_margin: 1.0,
            v_norm: 0.0,
        };
        let r0 = *initial_residual.get_or_insert(residual);
        if !(s.objective.is_finite() && residual.is_finite()) || residual > DIVERGENCE_FACTOR * r0.max(f64::MIN_POSITIVE) {
            termination = Termination::Diverged(format!("residual {residual:e} at iteration {k}"));
            observe(&rec, &m, &s)?;
            history.push(rec);
            break;
        }
        if k == sched.max_iters {
            observe(&rec, &m, &s)?;
            history.push(rec);
            break;
        }

        let (step, mode, t0) = if newton_phase {
            match sys.newton_step(&m) {
                Ok(step) => (step, StepMode::Newton, sched.newton_step),
                Err(e) => match sched.newton_fallback {
                    NewtonFallback::Gradient => (sys.projected_gradient_step(&m)?, StepMode::Fallback, sched.gradient_step),
                    NewtonFallback::Abort => {
                        termination = Termination::Diverged(format!("Newton solve failed: {e}"));
                        observe(&rec, &m, &s)?;
                        history.push(rec);
                        break;
                    }
                },
            }
        } else {
            (sys.projected_gradient_step(&m)?, StepMode::Gradient, sched.gradient_step)
        };
        rec.mode = mode;
        rec.v_norm = step.v.max_abs();
        last_v = rec.v_norm;
        if !rec.v_norm.is_finite() {
            termination = Termination::Diverged(format!("non-finite step at iteration {k}"));
            rec.mode = StepMode::Stop;
            observe(&rec, &m, &s)?;
            history.push(rec);
            break;
        }
        if rec.v_norm <= sched.tol_v {
            termination = Termination::Converged;
            rec.mode = StepMode::Stop;
            observe(&rec, &m, &s)?;
            history.push(rec);
            break;
        }

        let t = match sched.line_search {
            LineSearch::Fixed => match invertible_step(&m, &step.v, t0) {
                Ok((t, margin)) => {
                    rec.invertibility_margin = margin;
                    t
                }
                Err(e) => {
                    termination = Termination::Diverged(e.to_string());
                    observe(&rec, &m, &s)?;
                    history.push(rec);
                    break;
                }
            },
            LineSearch::Backtracking => {
                let d = assemble_shape_derivative(&m, cfg, &s)?;
                let dj_v = d.pairing(&step.v)?;
                match line_search(&m, cfg, target, &step.v, s.objective, dj_v, t0, LineSearch::Backtracking, sched.tol_v) {
                    Ok(ls) => {
                        rec.invertibility_margin = check_invertibility(&m, &step.v, ls.step)?.min_area_ratio;
                        ls.step
                    }
                    Err(e) => {
                        termination = Termination::Failed(e.to_string());
                        observe(&rec, &m, &s)?;
                        history.push(rec);
                        break;
                    }
                }
            }
        };
        rec.step = t;
        observe(&rec, &m, &s)?;
        history.push(rec);
        let (next, snap) = match mode {
            StepMode::Gradient | StepMode::Fallback => {
                let scaled = sys.projected_gradient_step_scaled(&m, t)?;
                advance(&m, cfg, target, &s, &scaled, 1.0, 1.0, sched.state_update)?
            }
            _ => advance(&m, cfg, target, &s, &step, t, t, sched.state_update)?,
        };
        m = next;
        s = snap;
    }
    Ok(RunOutcome { mesh: m, history, termination, snapshot: s })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_validation() {
        assert!(Schedule::default().validate().is_ok());
        assert!(Schedule { max_iters: 0, ..Default::default() }.validate().is_ok());
        let bad = Schedule { gradient_step: f64::NAN, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = Schedule { eps1: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [StepMode::Gradient, StepMode::Newton, StepMode::Fallback, StepMode::Stop] {
            assert_eq!(StepMode::from_name(m.name()), Some(m));
        }
    }
}

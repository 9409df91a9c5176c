//! C ABI for `shapeopt`.
//!
//! Objects cross the boundary as opaque handles (`ShapeoptMesh`,
//! `ShapeoptTarget`, `ShapeoptRun`) created by `*_generate`, `*_load` or
//! `shapeopt_optimize` and released with the matching `*_free`. Every
//! fallible function returns a [`ShapeoptStatus`]; on failure the message is
//! available from [`shapeopt_last_error`] on the same thread. Panics are
//! caught at the boundary and reported as `SHAPEOPT_STATUS_PANIC`.
//!
//! Handles are not synchronized. A handle may move between threads but must
//! not be used from two threads at once.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use shapeopt::driver::{run_two_phase, LineSearch, NewtonFallback, RunOutcome, Schedule, StateUpdate, StepMode, Termination};
use shapeopt::kkt::ResidualNorm;
use shapeopt::mesh::{generate_mesh_with, load_vtk, save_vtk, InclusionShape, Mesh, MeshOptions, Region};
use shapeopt::model::{make_target_for, reduced_objective, Mutation, ProblemConfig, TargetField};
use shapeopt::pseudoinverse::{epsilon_solve, min_norm_solve, DenseOperator, MetricSpace};
use shapeopt::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapeoptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMesh = 3,
    NonInvertible = 4,
    Singular = 5,
    Infeasible = 6,
    Parse = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
    Other = 11,
}

impl From<&Error> for ShapeoptStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::InvalidShape(_) | Error::MeshMismatch(_) => ShapeoptStatus::InvalidArgument,
            Error::InvalidMesh(_) | Error::PointLocation { .. } => ShapeoptStatus::InvalidMesh,
            Error::NonInvertible(_) => ShapeoptStatus::NonInvertible,
            Error::Singular(_) => ShapeoptStatus::Singular,
            Error::Infeasible(_) => ShapeoptStatus::Infeasible,
            Error::Parse { .. } => ShapeoptStatus::Parse,
            Error::Io(_) => ShapeoptStatus::Io,
            _ => ShapeoptStatus::Other,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(ShapeoptStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail((&e).into(), e.to_string())
    }
}

fn fail(status: ShapeoptStatus, msg: impl Into<String>) -> Fail {
    Fail(status, msg.into())
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ShapeoptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ShapeoptStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            ShapeoptStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| fail(ShapeoptStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| fail(ShapeoptStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(fail(ShapeoptStatus::NullPointer, "path is NULL"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| fail(ShapeoptStatus::InvalidArgument, "path is not UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(fail(ShapeoptStatus::NullPointer, format!("{what} is NULL")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn shapeopt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn shapeopt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapeoptShapeKind {
    Circle = 0,
    Ellipse = 1,
}

/// Axis-aligned inclusion. A circle uses `semi_axis_a` as its radius.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct ShapeoptShape {
    pub kind: ShapeoptShapeKind,
    pub center_x: f64,
    pub center_y: f64,
    pub semi_axis_a: f64,
    pub semi_axis_b: f64,
}

impl ShapeoptShape {
    fn to_shape(self) -> Result<InclusionShape, Fail> {
        let c = [self.center_x, self.center_y];
        let s = match self.kind {
            ShapeoptShapeKind::Circle => InclusionShape::circle(c, self.semi_axis_a),
            ShapeoptShapeKind::Ellipse => InclusionShape::ellipse(c, [self.semi_axis_a, self.semi_axis_b]),
        };
        s.validate()?;
        Ok(s)
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct ShapeoptProblem {
    pub alpha: f64,
    pub mu_in: f64,
    pub mu_out: f64,
}

impl From<&ShapeoptProblem> for ProblemConfig {
    fn from(p: &ShapeoptProblem) -> Self {
        ProblemConfig { alpha: p.alpha, mu_in: p.mu_in, mu_out: p.mu_out, mutation: Mutation::None }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapeoptStateUpdate {
    OneShot = 0,
    Resolve = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapeoptResidualNorm {
    Metric = 0,
    Euclidean = 1,
}

/// Two-phase schedule. `eps_decrease <= 0` disables the adaptive ε.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct ShapeoptSchedule {
    pub n_gradient_iters: usize,
    pub max_iters: usize,
    pub gradient_step: f64,
    pub newton_step: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub tol_v: f64,
    pub eps_decrease: f64,
    pub backtracking: bool,
    pub state_update: ShapeoptStateUpdate,
    pub residual_norm: ShapeoptResidualNorm,
    pub abort_on_newton_failure: bool,
}

impl From<&ShapeoptSchedule> for Schedule {
    fn from(s: &ShapeoptSchedule) -> Self {
        Schedule {
            n_gradient_iters: s.n_gradient_iters,
            gradient_step: s.gradient_step,
            newton_step: s.newton_step,
            max_iters: s.max_iters,
            eps1: s.eps1,
            eps2: s.eps2,
            tol_v: s.tol_v,
            line_search: if s.backtracking { LineSearch::Backtracking } else { LineSearch::Fixed },
            state_update: match s.state_update {
                ShapeoptStateUpdate::OneShot => StateUpdate::OneShot,
                ShapeoptStateUpdate::Resolve => StateUpdate::Resolve,
            },
            eps_decrease: (s.eps_decrease > 0.0).then_some(s.eps_decrease),
            residual_norm: match s.residual_norm {
                ShapeoptResidualNorm::Metric => ResidualNorm::Metric,
                ShapeoptResidualNorm::Euclidean => ResidualNorm::Euclidean,
            },
            newton_fallback: if s.abort_on_newton_failure { NewtonFallback::Abort } else { NewtonFallback::Gradient },
        }
    }
}

/// Fills `out` with the default problem parameters.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one struct.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_problem_default(out_problem: *mut ShapeoptProblem) -> ShapeoptStatus {
    guard(|| {
        let d = ProblemConfig::default();
        *out(out_problem, "out_problem")? = ShapeoptProblem { alpha: d.alpha, mu_in: d.mu_in, mu_out: d.mu_out };
        Ok(())
    })
}

/// Fills `out` with the default schedule.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one struct.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_schedule_default(out_schedule: *mut ShapeoptSchedule) -> ShapeoptStatus {
    guard(|| {
        let d = Schedule::default();
        *out(out_schedule, "out_schedule")? = ShapeoptSchedule {
            n_gradient_iters: d.n_gradient_iters,
            max_iters: d.max_iters,
            gradient_step: d.gradient_step,
            newton_step: d.newton_step,
            eps1: d.eps1,
            eps2: d.eps2,
            tol_v: d.tol_v,
            eps_decrease: d.eps_decrease.unwrap_or(0.0),
            backtracking: d.line_search == LineSearch::Backtracking,
            state_update: ShapeoptStateUpdate::OneShot,
            residual_norm: ShapeoptResidualNorm::Metric,
            abort_on_newton_failure: d.newton_fallback == NewtonFallback::Abort,
        };
        Ok(())
    })
}

/// Triangulation of the unit square with a marked inclusion.
pub struct ShapeoptMesh {
    inner: Mesh,
}

/// Target potential on its own background mesh.
pub struct ShapeoptTarget {
    inner: TargetField,
}

/// Result of an optimization run.
pub struct ShapeoptRun {
    inner: RunOutcome,
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Generates a mesh fitted to `shape` with target edge length `h`.
///
/// # Safety
/// `shape` must point to a valid struct; `out_mesh` to writable storage for
/// one pointer.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_mesh_generate(
    shape: *const ShapeoptShape,
    h: f64,
    seed: u64,
    out_mesh: *mut *mut ShapeoptMesh,
) -> ShapeoptStatus {
    guard(|| {
        let shape = deref(shape, "shape")?.to_shape()?;
        let slot = out(out_mesh, "out_mesh")?;
        let m = generate_mesh_with(&shape, h, &MeshOptions { seed })?;
        *slot = boxed(ShapeoptMesh { inner: m });
        Ok(())
    })
}

/// Reads a mesh from a legacy ASCII VTK file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_mesh` writable.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_mesh_load_vtk(path: *const c_char, out_mesh: *mut *mut ShapeoptMesh) -> ShapeoptStatus {
    guard(|| {
        let p = path_arg(path)?;
        let slot = out(out_mesh, "out_mesh")?;
        *slot = boxed(ShapeoptMesh { inner: load_vtk(p)?.mesh });
        Ok(())
    })
}

/// Writes a mesh (no point data) as legacy ASCII VTK.
///
/// # Safety
/// `mesh` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_mesh_save_vtk(mesh: *const ShapeoptMesh, path: *const c_char) -> ShapeoptStatus {
    guard(|| {
        let m = deref(mesh, "mesh")?;
        save_vtk(path_arg(path)?, &m.inner, &[], &[])?;
        Ok(())
    })
}

/// Releases a mesh. NULL is ignored.
///
/// # Safety
/// `mesh` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_mesh_free(mesh: *mut ShapeoptMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// # Safety
/// `mesh` must be a live handle; the out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_mesh_counts(
    mesh: *const ShapeoptMesh,
    out_vertices: *mut usize,
    out_triangles: *mut usize,
) -> ShapeoptStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.inner;
        *out(out_vertices, "out_vertices")? = m.num_vertices();
        *out(out_triangles, "out_triangles")? = m.num_triangles();
        Ok(())
    })
}

/// Copies vertex coordinates as `x0 y0 x1 y1 ...` into `buf`, which must
/// hold `2 * vertices` doubles.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_mesh_vertices(mesh: *const ShapeoptMesh, buf: *mut f64, len: usize) -> ShapeoptStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.inner;
        let need = 2 * m.num_vertices();
        if len < need {
            return Err(fail(ShapeoptStatus::BufferTooSmall, format!("need {need} doubles, got {len}")));
        }
        if buf.is_null() {
            return Err(fail(ShapeoptStatus::NullPointer, "buf is NULL"));
        }
        let dst = std::slice::from_raw_parts_mut(buf, need);
        for (d, p) in dst.chunks_exact_mut(2).zip(m.vertices()) {
            d.copy_from_slice(p);
        }
        Ok(())
    })
}

/// Copies triangle vertex indices (three per triangle) into `buf`, which
/// must hold `3 * triangles` entries, and, if `regions` is not NULL, one
/// region per triangle (0 outside, 1 inside the inclusion).
///
/// # Safety
/// `buf` must point to `len` writable entries; `regions` to `triangles`
/// writable entries or be NULL.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_mesh_triangles(
    mesh: *const ShapeoptMesh,
    buf: *mut usize,
    len: usize,
    regions: *mut i32,
) -> ShapeoptStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.inner;
        let need = 3 * m.num_triangles();
        if len < need {
            return Err(fail(ShapeoptStatus::BufferTooSmall, format!("need {need} indices, got {len}")));
        }
        if buf.is_null() {
            return Err(fail(ShapeoptStatus::NullPointer, "buf is NULL"));
        }
        let dst = std::slice::from_raw_parts_mut(buf, need);
        for (d, t) in dst.chunks_exact_mut(3).zip(m.triangles()) {
            d.copy_from_slice(t);
        }
        if !regions.is_null() {
            let r = std::slice::from_raw_parts_mut(regions, m.num_triangles());
            for (d, reg) in r.iter_mut().zip(m.regions()) {
                *d = i32::from(*reg == Region::Inclusion);
            }
        }
        Ok(())
    })
}

/// Area of the inclusion region of the mesh.
///
/// # Safety
/// `mesh` must be a live handle; `out_area` writable.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_mesh_inclusion_area(mesh: *const ShapeoptMesh, out_area: *mut f64) -> ShapeoptStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.inner;
        *out(out_area, "out_area")? = m.region_area(Region::Inclusion);
        Ok(())
    })
}

/// Solves the state equation for an inclusion of the given shape on a
/// background mesh of resolution `h`.
///
/// # Safety
/// Pointers must be valid as for the other constructors.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_target_generate(
    problem: *const ShapeoptProblem,
    shape: *const ShapeoptShape,
    h: f64,
    seed: u64,
    out_target: *mut *mut ShapeoptTarget,
) -> ShapeoptStatus {
    guard(|| {
        let cfg = ProblemConfig::from(deref(problem, "problem")?);
        let shape = deref(shape, "shape")?.to_shape()?;
        let slot = out(out_target, "out_target")?;
        *slot = boxed(ShapeoptTarget { inner: make_target_for(&cfg, &shape, h, &MeshOptions { seed })? });
        Ok(())
    })
}

/// Reads a target from VTK (point scalar `z`).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_target` writable.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_target_load_vtk(path: *const c_char, out_target: *mut *mut ShapeoptTarget) -> ShapeoptStatus {
    guard(|| {
        let p = path_arg(path)?;
        let slot = out(out_target, "out_target")?;
        *slot = boxed(ShapeoptTarget { inner: TargetField::load(p)? });
        Ok(())
    })
}

/// # Safety
/// `target` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_target_save_vtk(target: *const ShapeoptTarget, path: *const c_char) -> ShapeoptStatus {
    guard(|| {
        let t = deref(target, "target")?;
        t.inner.save(path_arg(path)?)?;
        Ok(())
    })
}

/// Value of the target at `(x, y)`.
///
/// # Safety
/// `target` must be a live handle; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_target_evaluate(
    target: *const ShapeoptTarget,
    x: f64,
    y: f64,
    out_value: *mut f64,
) -> ShapeoptStatus {
    guard(|| {
        let t = deref(target, "target")?;
        *out(out_value, "out_value")? = t.inner.evaluate([x, y])?;
        Ok(())
    })
}

/// Releases a target. NULL is ignored.
///
/// # Safety
/// `target` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_target_free(target: *mut ShapeoptTarget) {
    if !target.is_null() {
        drop(Box::from_raw(target));
    }
}

/// Reduced objective `J(Ω)` of the mesh against the target.
///
/// # Safety
/// Handles must be live; `problem` valid; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_objective(
    mesh: *const ShapeoptMesh,
    problem: *const ShapeoptProblem,
    target: *const ShapeoptTarget,
    out_value: *mut f64,
) -> ShapeoptStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.inner;
        let cfg = ProblemConfig::from(deref(problem, "problem")?);
        let t = &deref(target, "target")?.inner;
        *out(out_value, "out_value")? = reduced_objective(m, &cfg, t)?;
        Ok(())
    })
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapeoptMode {
    Gradient = 0,
    Newton = 1,
    Fallback = 2,
    Stop = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct ShapeoptRecord {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub residual: f64,
    pub step: f64,
    pub mode: ShapeoptMode,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapeoptTermination {
    Converged = 0,
    MaxIterations = 1,
    Diverged = 2,
    Failed = 3,
}

/// Runs the two-phase schedule starting from `mesh`.
///
/// # Safety
/// Handles must be live; structs valid; `out_run` writable.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_optimize(
    mesh: *const ShapeoptMesh,
    problem: *const ShapeoptProblem,
    target: *const ShapeoptTarget,
    schedule: *const ShapeoptSchedule,
    out_run: *mut *mut ShapeoptRun,
) -> ShapeoptStatus {
    guard(|| {
        let m = &deref(mesh, "mesh")?.inner;
        let cfg = ProblemConfig::from(deref(problem, "problem")?);
        let t = &deref(target, "target")?.inner;
        let sched = Schedule::from(deref(schedule, "schedule")?);
        let slot = out(out_run, "out_run")?;
        *slot = boxed(ShapeoptRun { inner: run_two_phase(m, &cfg, t, &sched)? });
        Ok(())
    })
}

/// Number of history records (iterations 0 through the last one).
///
/// # Safety
/// `run` must be a live handle; `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_run_history_len(run: *const ShapeoptRun, out_len: *mut usize) -> ShapeoptStatus {
    guard(|| {
        *out(out_len, "out_len")? = deref(run, "run")?.inner.history.len();
        Ok(())
    })
}

/// # Safety
/// `run` must be a live handle; `out_record` writable.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_run_record(
    run: *const ShapeoptRun,
    index: usize,
    out_record: *mut ShapeoptRecord,
) -> ShapeoptStatus {
    guard(|| {
        let h = &deref(run, "run")?.inner.history;
        let r = h
            .get(index)
            .ok_or_else(|| fail(ShapeoptStatus::InvalidArgument, format!("record {index} out of range ({})", h.len())))?;
        *out(out_record, "out_record")? = ShapeoptRecord {
            iteration: r.k,
            objective: r.objective,
            grad_norm: r.grad_norm,
            residual: r.residual,
            step: r.step,
            mode: match r.mode {
                StepMode::Gradient => ShapeoptMode::Gradient,
                StepMode::Newton => ShapeoptMode::Newton,
                StepMode::Fallback => ShapeoptMode::Fallback,
                StepMode::Stop => ShapeoptMode::Stop,
            },
        };
        Ok(())
    })
}

/// # Safety
/// `run` must be a live handle; `out_termination` writable.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_run_termination(
    run: *const ShapeoptRun,
    out_termination: *mut ShapeoptTermination,
) -> ShapeoptStatus {
    guard(|| {
        *out(out_termination, "out_termination")? = match deref(run, "run")?.inner.termination {
            Termination::Converged => ShapeoptTermination::Converged,
            Termination::MaxIterations => ShapeoptTermination::MaxIterations,
            Termination::Diverged(_) => ShapeoptTermination::Diverged,
            Termination::Failed(_) => ShapeoptTermination::Failed,
        };
        Ok(())
    })
}

/// Copies the final mesh of a run into a new handle.
///
/// # Safety
/// `run` must be a live handle; `out_mesh` writable.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_run_mesh(run: *const ShapeoptRun, out_mesh: *mut *mut ShapeoptMesh) -> ShapeoptStatus {
    guard(|| {
        let m = deref(run, "run")?.inner.mesh.clone();
        *out(out_mesh, "out_mesh")? = boxed(ShapeoptMesh { inner: m });
        Ok(())
    })
}

/// Releases a run. NULL is ignored.
///
/// # Safety
/// `run` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_run_free(run: *mut ShapeoptRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

unsafe fn dense_system(
    n: usize,
    h: *const f64,
    g: *const f64,
    b: *const f64,
) -> Result<(DenseOperator, MetricSpace, DVector<f64>), Fail> {
    if n == 0 {
        return Err(fail(ShapeoptStatus::InvalidArgument, "dimension must be positive"));
    }
    let ms = if g.is_null() {
        MetricSpace::euclidean(n)?
    } else {
        MetricSpace::new(DMatrix::from_row_slice(n, n, slice_arg(g, n * n, "g")?))?
    };
    let hm = DMatrix::from_row_slice(n, n, slice_arg(h, n * n, "h")?);
    let op = DenseOperator::new(hm, &ms)?;
    Ok((op, ms, DVector::from_column_slice(slice_arg(b, n, "b")?)))
}

unsafe fn write_vec(v: &DVector<f64>, dst: *mut f64) -> Result<(), Fail> {
    if dst.is_null() {
        return Err(fail(ShapeoptStatus::NullPointer, "out_v is NULL"));
    }
    std::slice::from_raw_parts_mut(dst, v.len()).copy_from_slice(v.as_slice());
    Ok(())
}

/// Minimum-norm solution of `H v = b` in the inner product `g`. Matrices
/// are `n × n`, row-major; `g` may be NULL for the Euclidean inner product.
///
/// # Safety
/// `h` (and `g` if not NULL) must point to `n * n` doubles; `b` and `out_v`
/// to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn shapeopt_min_norm_solve(
    n: usize,
    h: *const f64,
    g: *const f64,
    b: *const f64,
    out_v: *mut f64,
) -> ShapeoptStatus {
    guard(|| {
        let (op, ms, rhs) = dense_system(n, h, g, b)?;
        write_vec(&min_norm_solve(&op, &rhs, &ms)?, out_v)
    })
}

/// Solution of `(H + ε I) v = b` in the geometry of `g`; `H` must be
/// self-adjoint in `g` and positive semidefinite. Layout as in
/// [`shapeopt_min_norm_solve`].
///
/// # Safety
/// As for [`shapeopt_min_norm_solve`].
#[no_mangle]
pub unsafe extern "C" fn shapeopt_epsilon_solve(
    n: usize,
    h: *const f64,
    g: *const f64,
    b: *const f64,
    eps: f64,
    out_v: *mut f64,
) -> ShapeoptStatus {
    guard(|| {
        let (op, ms, rhs) = dense_system(n, h, g, b)?;
        write_vec(&epsilon_solve(&op, &rhs, &ms, eps)?, out_v)
    })
}

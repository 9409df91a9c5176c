#ifndef SHAPEOPT_H
#define SHAPEOPT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum ShapeoptStatus {
  SHAPEOPT_STATUS_OK = 0,
  SHAPEOPT_STATUS_NULL_POINTER = 1,
  SHAPEOPT_STATUS_INVALID_ARGUMENT = 2,
  SHAPEOPT_STATUS_INVALID_MESH = 3,
  SHAPEOPT_STATUS_NON_INVERTIBLE = 4,
  SHAPEOPT_STATUS_SINGULAR = 5,
  SHAPEOPT_STATUS_INFEASIBLE = 6,
  SHAPEOPT_STATUS_PARSE = 7,
  SHAPEOPT_STATUS_IO = 8,
  SHAPEOPT_STATUS_BUFFER_TOO_SMALL = 9,
  SHAPEOPT_STATUS_PANIC = 10,
  SHAPEOPT_STATUS_OTHER = 11,
} ShapeoptStatus;

typedef enum ShapeoptStateUpdate {
  SHAPEOPT_STATE_UPDATE_ONE_SHOT = 0,
  SHAPEOPT_STATE_UPDATE_RESOLVE = 1,
} ShapeoptStateUpdate;

typedef enum ShapeoptResidualNorm {
  SHAPEOPT_RESIDUAL_NORM_METRIC = 0,
  SHAPEOPT_RESIDUAL_NORM_EUCLIDEAN = 1,
} ShapeoptResidualNorm;

typedef enum ShapeoptShapeKind {
  SHAPEOPT_SHAPE_KIND_CIRCLE = 0,
  SHAPEOPT_SHAPE_KIND_ELLIPSE = 1,
} ShapeoptShapeKind;

typedef enum ShapeoptMode {
  SHAPEOPT_MODE_GRADIENT = 0,
  SHAPEOPT_MODE_NEWTON = 1,
  SHAPEOPT_MODE_FALLBACK = 2,
  SHAPEOPT_MODE_STOP = 3,
} ShapeoptMode;

typedef enum ShapeoptTermination {
  SHAPEOPT_TERMINATION_CONVERGED = 0,
  SHAPEOPT_TERMINATION_MAX_ITERATIONS = 1,
  SHAPEOPT_TERMINATION_DIVERGED = 2,
  SHAPEOPT_TERMINATION_FAILED = 3,
} ShapeoptTermination;

// Triangulation of the unit square with a marked inclusion.
typedef struct ShapeoptMesh ShapeoptMesh;

// Result of an optimization run.
typedef struct ShapeoptRun ShapeoptRun;

// Target potential on its own background mesh.
typedef struct ShapeoptTarget ShapeoptTarget;

typedef struct ShapeoptProblem {
  double alpha;
  double mu_in;
  double mu_out;
} ShapeoptProblem;

// Two-phase schedule. `eps_decrease <= 0` disables the adaptive ε.
typedef struct ShapeoptSchedule {
  size_t n_gradient_iters;
  size_t max_iters;
  double gradient_step;
  double newton_step;
  double eps1;
  double eps2;
  double tol_v;
  double eps_decrease;
  bool backtracking;
  enum ShapeoptStateUpdate state_update;
  enum ShapeoptResidualNorm residual_norm;
  bool abort_on_newton_failure;
} ShapeoptSchedule;

// Axis-aligned inclusion. A circle uses `semi_axis_a` as its radius.
typedef struct ShapeoptShape {
  enum ShapeoptShapeKind kind;
  double center_x;
  double center_y;
  double semi_axis_a;
  double semi_axis_b;
} ShapeoptShape;

typedef struct ShapeoptRecord {
  size_t iteration;
  double objective;
  double grad_norm;
  double residual;
  double step;
  enum ShapeoptMode mode;
} ShapeoptRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next call into the library on this thread.
const char *shapeopt_last_error(void);

// Library version as a static NUL-terminated string.
const char *shapeopt_version(void);

// Fills `out` with the default problem parameters.
//
// # Safety
// `out` must be NULL or point to writable memory for one struct.
enum ShapeoptStatus shapeopt_problem_default(struct ShapeoptProblem *out_problem);

// Fills `out` with the default schedule.
//
// # Safety
// `out` must be NULL or point to writable memory for one struct.
enum ShapeoptStatus shapeopt_schedule_default(struct ShapeoptSchedule *out_schedule);

// Generates a mesh fitted to `shape` with target edge length `h`.
//
// # Safety
// `shape` must point to a valid struct; `out_mesh` to writable storage for
// one pointer.
enum ShapeoptStatus shapeopt_mesh_generate(const struct ShapeoptShape *shape,
                                           double h,
                                           uint64_t seed,
                                           struct ShapeoptMesh **out_mesh);

// Reads a mesh from a legacy ASCII VTK file.
//
// # Safety
// `path` must be a NUL-terminated string; `out_mesh` writable.
enum ShapeoptStatus shapeopt_mesh_load_vtk(const char *path, struct ShapeoptMesh **out_mesh);

// Writes a mesh (no point data) as legacy ASCII VTK.
//
// # Safety
// `mesh` must be a live handle; `path` a NUL-terminated string.
enum ShapeoptStatus shapeopt_mesh_save_vtk(const struct ShapeoptMesh *mesh, const char *path);

// Releases a mesh. NULL is ignored.
//
// # Safety
// `mesh` must be NULL or a handle not yet freed.
void shapeopt_mesh_free(struct ShapeoptMesh *mesh);

// # Safety
// `mesh` must be a live handle; the out pointers writable.
enum ShapeoptStatus shapeopt_mesh_counts(const struct ShapeoptMesh *mesh,
                                         size_t *out_vertices,
                                         size_t *out_triangles);

// Copies vertex coordinates as `x0 y0 x1 y1 ...` into `buf`, which must
// hold `2 * vertices` doubles.
//
// # Safety
// `buf` must point to `len` writable doubles.
enum ShapeoptStatus shapeopt_mesh_vertices(const struct ShapeoptMesh *mesh,
                                           double *buf,
                                           size_t len);

// Copies triangle vertex indices (three per triangle) into `buf`, which
// must hold `3 * triangles` entries, and, if `regions` is not NULL, one
// region per triangle (0 outside, 1 inside the inclusion).
//
// # Safety
// `buf` must point to `len` writable entries; `regions` to `triangles`
// writable entries or be NULL.
enum ShapeoptStatus shapeopt_mesh_triangles(const struct ShapeoptMesh *mesh,
                                            size_t *buf,
                                            size_t len,
                                            int32_t *regions);

// Area of the inclusion region of the mesh.
//
// # Safety
// `mesh` must be a live handle; `out_area` writable.
enum ShapeoptStatus shapeopt_mesh_inclusion_area(const struct ShapeoptMesh *mesh, double *out_area);

// Solves the state equation for an inclusion of the given shape on a
// background mesh of resolution `h`.
//
// # Safety
// Pointers must be valid as for the other constructors.
enum ShapeoptStatus shapeopt_target_generate(const struct ShapeoptProblem *problem,
                                             const struct ShapeoptShape *shape,
                                             double h,
                                             uint64_t seed,
                                             struct ShapeoptTarget **out_target);

// Reads a target from VTK (point scalar `z`).
//
// # Safety
// `path` must be a NUL-terminated string; `out_target` writable.
enum ShapeoptStatus shapeopt_target_load_vtk(const char *path, struct ShapeoptTarget **out_target);

// # Safety
// `target` must be a live handle; `path` a NUL-terminated string.
enum ShapeoptStatus shapeopt_target_save_vtk(const struct ShapeoptTarget *target, const char *path);

// Value of the target at `(x, y)`.
//
// # Safety
// `target` must be a live handle; `out_value` writable.
enum ShapeoptStatus shapeopt_target_evaluate(const struct ShapeoptTarget *target,
                                             double x,
                                             double y,
                                             double *out_value);

// Releases a target. NULL is ignored.
//
// # Safety
// `target` must be NULL or a handle not yet freed.
void shapeopt_target_free(struct ShapeoptTarget *target);

// Reduced objective `J(Ω)` of the mesh against the target.
//
// # Safety
// Handles must be live; `problem` valid; `out_value` writable.
enum ShapeoptStatus shapeopt_objective(const struct ShapeoptMesh *mesh,
                                       const struct ShapeoptProblem *problem,
                                       const struct ShapeoptTarget *target,
                                       double *out_value);

// Runs the two-phase schedule starting from `mesh`.
//
// # Safety
// Handles must be live; structs valid; `out_run` writable.
enum ShapeoptStatus shapeopt_optimize(const struct ShapeoptMesh *mesh,
                                      const struct ShapeoptProblem *problem,
                                      const struct ShapeoptTarget *target,
                                      const struct ShapeoptSchedule *schedule,
                                      struct ShapeoptRun **out_run);

// Number of history records (iterations 0 through the last one).
//
// # Safety
// `run` must be a live handle; `out_len` writable.
enum ShapeoptStatus shapeopt_run_history_len(const struct ShapeoptRun *run, size_t *out_len);

// # Safety
// `run` must be a live handle; `out_record` writable.
enum ShapeoptStatus shapeopt_run_record(const struct ShapeoptRun *run,
                                        size_t index,
                                        struct ShapeoptRecord *out_record);

// # Safety
// `run` must be a live handle; `out_termination` writable.
enum ShapeoptStatus shapeopt_run_termination(const struct ShapeoptRun *run,
                                             enum ShapeoptTermination *out_termination);

// Copies the final mesh of a run into a new handle.
//
// # Safety
// `run` must be a live handle; `out_mesh` writable.
enum ShapeoptStatus shapeopt_run_mesh(const struct ShapeoptRun *run,
                                      struct ShapeoptMesh **out_mesh);

// Releases a run. NULL is ignored.
//
// # Safety
// `run` must be NULL or a handle not yet freed.
void shapeopt_run_free(struct ShapeoptRun *run);

// Minimum-norm solution of `H v = b` in the inner product `g`. Matrices
// are `n × n`, row-major; `g` may be NULL for the Euclidean inner product.
//
// # Safety
// `h` (and `g` if not NULL) must point to `n * n` doubles; `b` and `out_v`
// to `n` doubles.
enum ShapeoptStatus shapeopt_min_norm_solve(size_t n,
                                            const double *h,
                                            const double *g,
                                            const double *b,
                                            double *out_v);

// Solution of `(H + ε I) v = b` in the geometry of `g`; `H` must be
// self-adjoint in `g` and positive semidefinite. Layout as in
// [`shapeopt_min_norm_solve`].
//
// # Safety
// As for [`shapeopt_min_norm_solve`].
enum ShapeoptStatus shapeopt_epsilon_solve(size_t n,
                                           const double *h,
                                           const double *g,
                                           const double *b,
                                           double eps,
                                           double *out_v);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHAPEOPT_H */

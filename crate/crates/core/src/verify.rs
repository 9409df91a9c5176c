//! Oracle suites: finite-difference checks of the shape derivative and the
//! linear shape Hessian, Taylor remainders, the pseudoinverse ε-table and the
//! pullback relation between the shape gradient and the gradient in
//! deformation space.
//!
//! Every check produces a [`CheckOutcome`]; [`run`] bundles them into a
//! JSON-serializable [`Report`].

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::fem::{solve, SparseOperator, VectorField};
use crate::kkt::{assemble_linear_shape_hessian, volume_derivative, volume_hessian};
use crate::mesh::{apply_deformation, generate_mesh_with, Mesh, MeshOptions, Region};
use crate::model::{initial_shape, make_target_with, reduced_objective, Mutation, ProblemConfig, TargetField};
use crate::pseudoinverse::{epsilon_table, min_norm_solve, random_singular_system};
use crate::shape_calculus::{assemble_shape_derivative, eulerian_fd, metric, Snapshot};
use crate::{Error, Result};

pub const GRADIENT_MIN_ORDER: f64 = 1.9;
pub const HESSIAN_MIN_ORDER: f64 = 1.8;
pub const SYMMETRY_RTOL: f64 = 1e-12;
pub const TAYLOR_MIN_SLOPE: f64 = 2.7;
pub const VOLUME_TAYLOR_TOL: f64 = 1e-12;
pub const HALVING_RATIO: (f64, f64) = (0.45, 0.55);
pub const PULLBACK_RTOL: f64 = 1e-6;
/// Minimum-norm solutions agree with the whitening oracle to this.
pub const ORACLE_RTOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub mutation: Mutation,
    /// Resolution of the working mesh and of the target's background mesh.
    pub h: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 0, mutation: Mutation::None, h: 0.1 }
    }
}

/// Circle mesh, ellipse target data and the solved state on it.
pub struct Fixture {
    pub cfg: ProblemConfig,
    pub target: TargetField,
    pub mesh: Mesh,
    pub snapshot: Snapshot,
}

impl Fixture {
    pub fn new(opts: &VerifyOptions) -> Result<Self> {
        let cfg = ProblemConfig { mutation: opts.mutation, ..Default::default() };
        let target = make_target_with(&cfg, opts.h, &MeshOptions { seed: opts.seed.wrapping_add(1) })?;
        let mesh = generate_mesh_with(&initial_shape(), opts.h, &MeshOptions { seed: opts.seed })?;
        let snapshot = Snapshot::solve(&mesh, &cfg, &target)?;
        Ok(Fixture { cfg, target, mesh, snapshot })
    }

    fn objective_at(&self, v: &VectorField, t: f64) -> Result<f64> {
        reduced_objective(&apply_deformation(&self.mesh, v, t)?, &self.cfg, &self.target)
    }
}

/// Smooth random field: the bump `16 x(1−x) y(1−y)` times a sum of three
/// random plane waves per component, scaled to `amplitude`.
pub fn smooth_field<R: Rng>(m: &Mesh, rng: &mut R, amplitude: f64) -> VectorField {
    let waves: Vec<[f64; 4]> = (0..6)
        .map(|_| {
            [
                rng.random_range(-1.0..1.0),
                rng.random_range(0.5..3.0),
                rng.random_range(0.5..3.0),
                rng.random_range(0.0..std::f64::consts::TAU),
            ]
        })
        .collect();
    let mut v = VectorField::from_fn(m, |[x, y]| {
        let bump = 16.0 * x * (1.0 - x) * y * (1.0 - y);
        let comp = |c: usize| {
            waves[3 * c..3 * c + 3]
                .iter()
                .map(|[a, kx, ky, ph]| a * (std::f64::consts::PI * (kx * x + ky * y) + ph).sin())
                .sum::<f64>()
                / 3.0
        };
        [amplitude * bump * comp(0), amplitude * bump * comp(1)]
    });
    for (val, &b) in v.values_mut().iter_mut().zip(m.boundary_mask()) {
        if b {
            *val = [0.0; 2];
        }
    }
    v
}

/// Zeroes every vertex that could reach a kink of the sampled target: a
/// vertex is kept only if it stays inside its background element for all
/// displacements up to `reach · Σ|F_k|` over the given fields.
pub fn mask_kinks(target: &TargetField, m: &Mesh, fields: &mut [VectorField], reach: f64) -> Result<()> {
    for i in 0..m.num_vertices() {
        let total: f64 = fields.iter().map(|f| f.values()[i][0].hypot(f.values()[i][1])).sum();
        if total == 0.0 {
            continue;
        }
        if target.kink_distance(m.vertex(i))? <= reach * total {
            for f in fields.iter_mut() {
                f.values_mut()[i] = [0.0; 2];
            }
        }
    }
    Ok(())
}

/// Least-squares slope of `log y` over `log x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    if n < 2 {
        return f64::NAN;
    }
    let lx: Vec<f64> = x[..n].iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y[..n].iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Slope over the points whose error is above `floor(step)`, the size of
/// rounding noise at that step. Uses all points if fewer than three survive.
fn slope_above_noise(steps: &[f64], errors: &[f64], floor: impl Fn(f64) -> f64) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) = steps.iter().zip(errors).filter(|(s, e)| **e > floor(**s)).map(|(s, e)| (*s, *e)).unzip();
    if x.len() >= 3 {
        fit_slope(&x, &y)
    } else {
        fit_slope(steps, errors)
    }
}

fn ladder(start: f64, factor: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| start * factor.powi(k as i32)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// The measured quantity the threshold applies to.
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

fn outcome(name: &str, passed: bool, value: f64, threshold: f64, detail: String) -> CheckOutcome {
    CheckOutcome { name: name.into(), passed, value, threshold, detail }
}

#[derive(Clone, Debug)]
pub struct OrderCheck {
    pub steps: Vec<f64>,
    /// One error sequence per random direction.
    pub errors: Vec<Vec<f64>>,
    pub orders: Vec<f64>,
}

impl OrderCheck {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Central-difference check of `dJ[V]` for `n` random fields over
/// `t ∈ [1e-2, 1e-4]`.
pub fn gradient_check<R: Rng>(fx: &Fixture, rng: &mut R, n: usize) -> Result<OrderCheck> {
    let steps = ladder(1e-2, 10f64.powf(-0.5), 5);
    let d = assemble_shape_derivative(&fx.mesh, &fx.cfg, &fx.snapshot)?;
    let j = fx.snapshot.objective;
    let mut errors = Vec::with_capacity(n);
    let mut orders = Vec::with_capacity(n);
    for _ in 0..n {
        let mut f = [smooth_field(&fx.mesh, rng, 0.1)];
        mask_kinks(&fx.target, &fx.mesh, &mut f, 2.0 * steps[0])?;
        let exact = d.pairing(&f[0])?;
        let e = steps
            .iter()
            .map(|&t| Ok((eulerian_fd(&fx.mesh, &fx.cfg, &fx.target, &f[0], t)? - exact).abs()))
            .collect::<Result<Vec<f64>>>()?;
        orders.push(slope_above_noise(&steps, &e, |t| 64.0 * f64::EPSILON * j / t));
        errors.push(e);
    }
    Ok(OrderCheck { steps, errors, orders })
}

/// Mixed central second differences of `(s₁, s₂) ↦ J((I + s₁V + s₂W)Ω)`
/// against the linear shape Hessian.
pub fn hessian_check<R: Rng>(fx: &Fixture, rng: &mut R, n: usize) -> Result<OrderCheck> {
    let steps = ladder(1e-2, 0.5, 5);
    let hs = assemble_linear_shape_hessian(&fx.mesh, &fx.cfg, &fx.snapshot)?;
    let j = fx.snapshot.objective;
    let mut errors = Vec::with_capacity(n);
    let mut orders = Vec::with_capacity(n);
    for _ in 0..n {
        let mut f = [smooth_field(&fx.mesh, rng, 0.1), smooth_field(&fx.mesh, rng, 0.1)];
        mask_kinks(&fx.target, &fx.mesh, &mut f, 2.0 * steps[0])?;
        let [v, w] = &f;
        let exact = hs.value(&fx.mesh, v, w)?;
        let plus = v.add_scaled(w, 1.0)?;
        let minus = v.add_scaled(w, -1.0)?;
        let e = steps
            .iter()
            .map(|&s| {
                let mixed = (fx.objective_at(&plus, s)? - fx.objective_at(&minus, s)? - fx.objective_at(&minus, -s)?
                    + fx.objective_at(&plus, -s)?)
                    / (4.0 * s * s);
                Ok((mixed - exact).abs())
            })
            .collect::<Result<Vec<f64>>>()?;
        orders.push(slope_above_noise(&steps, &e, |s| 64.0 * f64::EPSILON * j / (s * s)));
        errors.push(e);
    }
    Ok(OrderCheck { steps, errors, orders })
}

/// Largest `|H[V,W] − H[W,V]| / max(|H[V,W]|, |H[W,V]|)` over `n` pairs.
pub fn hessian_symmetry<R: Rng>(fx: &Fixture, rng: &mut R, n: usize) -> Result<f64> {
    let hs = assemble_linear_shape_hessian(&fx.mesh, &fx.cfg, &fx.snapshot)?;
    let mut worst = 0.0f64;
    for _ in 0..n {
        let v = smooth_field(&fx.mesh, rng, 0.1);
        let w = smooth_field(&fx.mesh, rng, 0.1);
        let a = hs.value(&fx.mesh, &v, &w)?;
        let b = hs.value(&fx.mesh, &w, &v)?;
        let scale = a.abs().max(b.abs());
        if scale > 0.0 {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct TaylorCheck {
    pub steps: Vec<f64>,
    pub remainders: Vec<f64>,
    pub slope: f64,
}

/// `r(t) = J(Ω + tV) − J − t dJ[V] − (t²/2) J''[V,V]` over `t ∈ [1e-1, 1e-3]`.
pub fn taylor_check<R: Rng>(fx: &Fixture, rng: &mut R) -> Result<TaylorCheck> {
    let steps = ladder(1e-1, 10f64.powf(-0.5), 5);
    let mut f = [smooth_field(&fx.mesh, rng, 0.01)];
    mask_kinks(&fx.target, &fx.mesh, &mut f, 2.0 * steps[0])?;
    let v = &f[0];
    let d = assemble_shape_derivative(&fx.mesh, &fx.cfg, &fx.snapshot)?.pairing(v)?;
    let h = assemble_linear_shape_hessian(&fx.mesh, &fx.cfg, &fx.snapshot)?.value(&fx.mesh, v, v)?;
    let j = fx.snapshot.objective;
    let remainders = steps
        .iter()
        .map(|&t| Ok((fx.objective_at(v, t)? - j - t * d - 0.5 * t * t * h).abs()))
        .collect::<Result<Vec<f64>>>()?;
    let slope = slope_above_noise(&steps, &remainders, |_| 1024.0 * f64::EPSILON * j);
    Ok(TaylorCheck { steps, remainders, slope })
}

/// Largest remainder of the second-order expansion of `|Ω0|`, which is a
/// quadratic polynomial in `t` and therefore exact.
pub fn volume_taylor_check<R: Rng>(fx: &Fixture, rng: &mut R) -> Result<f64> {
    let v = smooth_field(&fx.mesh, rng, 0.1);
    let a0 = fx.mesh.region_area(Region::Inclusion);
    let d = volume_derivative(&fx.mesh, &v, Some(Region::Inclusion))?;
    let h = volume_hessian(&fx.mesh, &v, &v, Some(Region::Inclusion))?;
    let mut worst = 0.0f64;
    for t in [0.5, 0.1, 0.01] {
        let at = apply_deformation(&fx.mesh, &v, t)?.region_area(Region::Inclusion);
        worst = worst.max((at - a0 - t * d - 0.5 * t * t * h).abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug, Default)]
pub struct PseudoCheck {
    pub systems: usize,
    pub all_monotone: bool,
    pub all_within_bound: bool,
    /// Extremes of the error ratio over halvings with `ε ≤ 1e-3 σ⁺`.
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Largest null-space component of `V_ε − V̂`, relative to `‖V̂‖_g`.
    pub max_null_component: f64,
    /// Largest disagreement with the whitening oracle, relative.
    pub max_oracle_error: f64,
}

/// `g^{1/2}` by eigen decomposition; independent of the Cholesky whitening
/// used by the solver.
fn sym_sqrt(g: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let e = g.clone().symmetric_eigen();
    let d = e.eigenvalues.map(f64::sqrt);
    let s = &e.eigenvectors * DMatrix::from_diagonal(&d) * e.eigenvectors.transpose();
    let si = &e.eigenvectors * DMatrix::from_diagonal(&d.map(|x| 1.0 / x)) * e.eigenvectors.transpose();
    (s, si)
}

/// `V̂ = g^{-1/2} (H g^{-1/2})⁺ b`.
pub fn whitening_oracle(h: &DMatrix<f64>, g: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (_, si) = sym_sqrt(g);
    let a = h * &si;
    let tol = a.norm() * 1e-10;
    let p = a.pseudo_inverse(tol).map_err(|e| Error::Singular(e.to_string()))?;
    Ok(si * p * b)
}

/// Random singular systems: ε-convergence towards the minimum-norm solution.
pub fn pseudo_check<R: Rng>(rng: &mut R, n_systems: usize) -> Result<PseudoCheck> {
    let mut out = PseudoCheck { all_monotone: true, all_within_bound: true, min_ratio: f64::INFINITY, max_ratio: 0.0, ..Default::default() };
    for _ in 0..n_systems {
        let n = rng.random_range(3..=20);
        let rank = rng.random_range(1..n);
        let (h, ms, b) = random_singular_system(rng, n, rank)?;
        let vhat = min_norm_solve(&h, &b, &ms)?;
        let oracle = whitening_oracle(h.matrix(), ms.matrix(), &b)?;
        out.max_oracle_error = out.max_oracle_error.max((&vhat - &oracle).norm() / oracle.norm().max(f64::MIN_POSITIVE));

        let absolute: Vec<f64> = (1..=6).map(|k| 10f64.powi(-k)).collect();
        let t = epsilon_table(&h, &b, &ms, &absolute)?;
        let sigma = t.sigma_min;
        let halving: Vec<f64> = (-3..=14).map(|k| sigma * 0.5f64.powi(k)).collect();
        let th = epsilon_table(&h, &b, &ms, &halving)?;
        out.all_monotone &= t.errors_monotone() && th.errors_monotone();
        out.all_within_bound &= t.within_bound() && th.within_bound();
        for r in &th.rows {
            if let Some(ratio) = r.ratio {
                if r.eps <= 1e-3 * sigma {
                    out.min_ratio = out.min_ratio.min(ratio);
                    out.max_ratio = out.max_ratio.max(ratio);
                }
            }
        }
        let vn = ms.norm(&t.min_norm).max(f64::MIN_POSITIVE);
        for r in t.rows.iter().chain(&th.rows) {
            out.max_null_component = out.max_null_component.max(r.null_component / vn);
        }
        out.systems += 1;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct PullbackCheck {
    /// `‖∇f − ∇J∘T‖_g / ‖∇J∘T‖_g` with the metric pulled back from the
    /// reference mesh.
    pub relative_error: f64,
    /// The same comparison when the metric is instead assembled on the
    /// deformed mesh (not expected to be small).
    pub deformed_metric_error: f64,
}

fn dual_norm(g: &SparseOperator, r: &[f64]) -> Result<f64> {
    let x = solve(g, r, None)?;
    Ok(r.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt())
}

/// Gradient of `f(T) = J(T(Ω⁰))` with respect to the vertex positions, by
/// central differences, against the shape gradient on the deformed mesh.
/// A nodal field composed with `T` keeps its nodal values, so the pulled
/// back metric `b_T(Z₁, Z₂) = g(Z₁∘T, Z₂∘T)` has the matrix of `g`.
pub fn pullback_check<R: Rng>(fx: &Fixture, rng: &mut R) -> Result<PullbackCheck> {
    let (eps1, eps2) = (3e-2, 0.5);
    let g = metric(&fx.mesh, eps1, eps2)?;
    let deform = smooth_field(&fx.mesh, rng, 0.05);
    let mt = apply_deformation(&fx.mesh, &deform, 1.0)?;
    let st = Snapshot::solve(&mt, &fx.cfg, &fx.target)?;
    let d = assemble_shape_derivative(&mt, &fx.cfg, &st)?;

    let n = mt.num_vertices();
    let mut fd = vec![0.0; 2 * n];
    for (i, &b) in mt.boundary_mask().iter().enumerate() {
        if b {
            continue;
        }
        let kd = fx.target.kink_distance(mt.vertex(i))?;
        let delta = if kd > 0.0 { (0.25 * kd).min(1e-6) } else { 1e-6 };
        for c in 0..2 {
            let mut e = VectorField::zeros(&mt);
            e.values_mut()[i][c] = 1.0;
            let plus = reduced_objective(&apply_deformation(&mt, &e, delta)?, &fx.cfg, &fx.target)?;
            let minus = reduced_objective(&apply_deformation(&mt, &e, -delta)?, &fx.cfg, &fx.target)?;
            fd[2 * i + c] = (plus - minus) / (2.0 * delta);
        }
    }
    let diff: Vec<f64> = fd.iter().zip(d.values()).map(|(a, b)| a - b).collect();
    let scale = dual_norm(&g, d.values())?;
    let relative_error = dual_norm(&g, &diff)? / scale;

    let gt = metric(&mt, eps1, eps2)?;
    let ga = solve(&g, d.values(), None)?;
    let gb = solve(&gt, d.values(), None)?;
    let gap: Vec<f64> = ga.iter().zip(&gb).map(|(a, b)| a - b).collect();
    let m0 = g.matrix();
    let deformed_metric_error = (m0.bilinear(&gap, &gap).max(0.0) / m0.bilinear(&ga, &ga)).sqrt();
    Ok(PullbackCheck { relative_error, deformed_metric_error })
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub seed: u64,
    pub mutation: String,
    pub h: f64,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(k);
    r
}

/// Runs every suite. Solver failures inside a suite become failed entries.
pub fn run(opts: &VerifyOptions) -> Result<Report> {
    let fx = Fixture::new(opts)?;
    let seed = opts.seed;
    let mut checks = Vec::new();
    let mut record = |name: &str, r: Result<CheckOutcome>| {
        checks.push(r.unwrap_or_else(|e| outcome(name, false, f64::NAN, f64::NAN, format!("error: {e}"))));
    };

    record(
        "fd_gradient",
        gradient_check(&fx, &mut stream(seed, 1), 10).map(|c| {
            let o = c.min_order();
            outcome("fd_gradient", o >= GRADIENT_MIN_ORDER, o, GRADIENT_MIN_ORDER, format!("orders {:?}", round(&c.orders)))
        }),
    );
    record(
        "fd_hessian",
        hessian_check(&fx, &mut stream(seed, 2), 5).map(|c| {
            let o = c.min_order();
            outcome("fd_hessian", o >= HESSIAN_MIN_ORDER, o, HESSIAN_MIN_ORDER, format!("orders {:?}", round(&c.orders)))
        }),
    );
    record(
        "hessian_symmetry",
        hessian_symmetry(&fx, &mut stream(seed, 3), 100)
            .map(|a| outcome("hessian_symmetry", a <= SYMMETRY_RTOL, a, SYMMETRY_RTOL, "100 random pairs".into())),
    );
    record(
        "taylor",
        taylor_check(&fx, &mut stream(seed, 4)).map(|c| {
            outcome("taylor", c.slope >= TAYLOR_MIN_SLOPE, c.slope, TAYLOR_MIN_SLOPE, format!("remainders {:?}", c.remainders))
        }),
    );
    record(
        "volume_taylor",
        volume_taylor_check(&fx, &mut stream(seed, 5))
            .map(|e| outcome("volume_taylor", e <= VOLUME_TAYLOR_TOL, e, VOLUME_TAYLOR_TOL, "area of the inclusion".into())),
    );
    record(
        "pseudoinverse",
        pseudo_check(&mut stream(seed, 6), 50).map(|c| {
            let ok = c.all_monotone
                && c.all_within_bound
                && c.min_ratio >= HALVING_RATIO.0
                && c.max_ratio <= HALVING_RATIO.1
                && c.max_null_component <= 1e-9
                && c.max_oracle_error <= ORACLE_RTOL;
            outcome(
                "pseudoinverse",
                ok,
                c.max_ratio,
                HALVING_RATIO.1,
                format!(
                    "{} systems, monotone {}, bound {}, ratios [{:.4}, {:.4}], null component {:.1e}, oracle error {:.1e}",
                    c.systems, c.all_monotone, c.all_within_bound, c.min_ratio, c.max_ratio, c.max_null_component, c.max_oracle_error
                ),
            )
        }),
    );
    record(
        "pullback",
        pullback_check(&fx, &mut stream(seed, 7)).map(|c| {
            outcome(
                "pullback",
                c.relative_error <= PULLBACK_RTOL,
                c.relative_error,
                PULLBACK_RTOL,
                format!("metric assembled on the deformed mesh instead: {:.2e}", c.deformed_metric_error),
            )
        }),
    );
    let passed = checks.iter().all(|c| c.passed);
    Ok(Report { seed, mutation: opts.mutation.name().into(), h: opts.h, passed, checks })
}

fn round(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1000.0).round() / 1000.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [1e-1, 1e-2, 1e-3];
        let y: Vec<f64> = x.iter().map(|t: &f64| 3.0 * t.powi(2)).collect();
        assert!((fit_slope(&x, &y) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn smooth_field_vanishes_on_the_boundary() {
        let m = generate_mesh_with(&initial_shape(), 0.15, &MeshOptions::default()).unwrap();
        let v = smooth_field(&m, &mut ChaCha8Rng::seed_from_u64(1), 0.1);
        for (val, &b) in v.values().iter().zip(m.boundary_mask()) {
            if b {
                assert_eq!(*val, [0.0; 2]);
            }
        }
        assert!(v.max_abs() > 0.0 && v.max_abs() <= 0.1);
    }

    #[test]
    fn suites_pass_and_mutations_are_caught() {
        let r = run(&VerifyOptions::default()).unwrap();
        for c in &r.checks {
            assert!(c.passed, "{c:?}");
        }
        let flipped = run(&VerifyOptions { mutation: Mutation::FlipHessianTerm, ..Default::default() }).unwrap();
        assert!(!flipped.checks.iter().find(|c| c.name == "fd_hessian").unwrap().passed);
        let alpha = run(&VerifyOptions { mutation: Mutation::AlphaOverDomain, ..Default::default() }).unwrap();
        assert!(!alpha.checks.iter().find(|c| c.name == "fd_gradient").unwrap().passed);
    }
}

//! Minimum-norm solutions of singular linear systems in a general inner
//! product, and their Tikhonov approximations.
//!
//! Everything is dense and meant for small systems. Spectral work happens in
//! whitened coordinates `Y = Lᵀ V`, where `g = L Lᵀ` is the Cholesky factor
//! of the metric.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::{Error, Result};

/// Relative residual below which `b` counts as lying in the range of `H`.
pub const RANGE_RTOL: f64 = 1e-10;
/// Relative tolerance for the self-adjointness flag.
pub const SELF_ADJOINT_RTOL: f64 = 1e-12;

/// `ℝⁿ` with the inner product `g(x, y) = xᵀ g y`.
#[derive(Clone, Debug)]
pub struct MetricSpace {
    g: DMatrix<f64>,
    /// Lower Cholesky factor of `g`.
    l: DMatrix<f64>,
}

impl MetricSpace {
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        if !g.is_square() || g.nrows() == 0 {
            return Err(Error::InvalidArgument(format!("metric must be square and non-empty, got {}x{}", g.nrows(), g.ncols())));
        }
        let scale = g.amax().max(f64::MIN_POSITIVE);
        if (&g - g.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidArgument("metric is not symmetric".into()));
        }
        let l = g
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidArgument("metric is not positive definite".into()))?
            .l();
        Ok(MetricSpace { g, l })
    }

    pub fn euclidean(n: usize) -> Result<Self> {
        Self::new(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&(&self.g * y))
    }

    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        self.inner(x, x).max(0.0).sqrt()
    }

    /// `Lᵀ x`.
    fn whiten(&self, x: &DVector<f64>) -> DVector<f64> {
        self.l.transpose() * x
    }

    /// `L⁻ᵀ y`.
    fn unwhiten(&self, y: &DVector<f64>) -> DVector<f64> {
        self.l.transpose().solve_upper_triangular(y).expect("Cholesky factor is invertible")
    }

    /// `L⁻¹ A`.
    fn left_inv(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        self.l.solve_lower_triangular(a).expect("Cholesky factor is invertible")
    }

    fn check_dim(&self, n: usize, what: &str) -> Result<()> {
        if n != self.dim() {
            return Err(Error::InvalidArgument(format!("{what} has dimension {n}, metric has {}", self.dim())));
        }
        Ok(())
    }
}

/// A square matrix with its structural flags relative to one metric.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    h: DMatrix<f64>,
    self_adjoint: bool,
    positive_semidefinite: bool,
}

impl DenseOperator {
    /// Classifies `h` in the geometry of `ms`. The semidefiniteness flag is
    /// only set for self-adjoint operators.
    pub fn new(h: DMatrix<f64>, ms: &MetricSpace) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::InvalidArgument(format!("operator must be square, got {}x{}", h.nrows(), h.ncols())));
        }
        ms.check_dim(h.nrows(), "operator")?;
        let gh = ms.matrix() * &h;
        let scale = gh.amax().max(f64::MIN_POSITIVE);
        let self_adjoint = (&gh - gh.transpose()).amax() <= SELF_ADJOINT_RTOL * scale;
        let positive_semidefinite = self_adjoint && {
            let eig = whitened(&h, ms).symmetric_eigenvalues();
            let top = eig.amax();
            eig.iter().all(|&e| e >= -1e-10 * top.max(f64::MIN_POSITIVE))
        };
        Ok(DenseOperator { h, self_adjoint, positive_semidefinite })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.self_adjoint
    }

    pub fn is_positive_semidefinite(&self) -> bool {
        self.positive_semidefinite
    }
}

/// `L⁻¹ (g H) L⁻ᵀ`, symmetric when `H` is self-adjoint in `g`.
fn whitened(h: &DMatrix<f64>, ms: &MetricSpace) -> DMatrix<f64> {
    let gh = ms.matrix() * h;
    let a = ms.left_inv(&gh);
    let a = ms.left_inv(&a.transpose()).transpose();
    (&a + a.transpose()) * 0.5
}

/// `argmin g(V, V)` subject to `H V = b`.
///
/// With `Y = Lᵀ V` the problem becomes a Euclidean least-norm problem for
/// `H L⁻ᵀ`, solved by SVD.
pub fn min_norm_solve(h: &DenseOperator, b: &DVector<f64>, ms: &MetricSpace) -> Result<DVector<f64>> {
    ms.check_dim(h.dim(), "operator")?;
    ms.check_dim(b.len(), "right-hand side")?;
    // H L⁻ᵀ = (L⁻¹ Hᵀ)ᵀ
    let a = ms.left_inv(&h.h.transpose()).transpose();
    let y = svd_solve(&a, b)?;
    let v = ms.unwhiten(&y);
    let residual = (&h.h * &v - b).norm();
    let scale = b.norm();
    if residual > RANGE_RTOL * scale.max(f64::MIN_POSITIVE) && scale > 0.0 {
        return Err(Error::Infeasible(residual / scale));
    }
    Ok(v)
}

/// Least-squares minimum-norm solution of `a y = b` from a full SVD.
/// Computed with faer: the nalgebra SVD loses accuracy on some
/// rank-deficient inputs.
fn svd_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let m = faer::Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
    let svd = m.svd().map_err(|e| Error::Singular(format!("SVD did not converge: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let top = (0..s.nrows()).map(|k| s[k]).fold(0.0f64, f64::max);
    let tol = top * (a.nrows().max(a.ncols()) as f64) * f64::EPSILON * 16.0;
    let mut y = DVector::zeros(a.ncols());
    for k in 0..s.nrows() {
        if s[k] > tol {
            let c = (0..a.nrows()).map(|i| u[(i, k)] * b[i]).sum::<f64>() / s[k];
            for j in 0..a.ncols() {
                y[j] += c * v[(j, k)];
            }
        }
    }
    Ok(y)
}

/// `argmin ½ g(HV, V) − g(b, V) + (ε/2) g(V, V)`, i.e. `(H + ε I) V = b`.
pub fn epsilon_solve(h: &DenseOperator, b: &DVector<f64>, ms: &MetricSpace, eps: f64) -> Result<DVector<f64>> {
    ms.check_dim(h.dim(), "operator")?;
    ms.check_dim(b.len(), "right-hand side")?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    if !h.self_adjoint {
        return Err(Error::InvalidArgument("operator is not self-adjoint in the metric".into()));
    }
    if !h.positive_semidefinite {
        return Err(Error::InvalidArgument("operator is not positive semidefinite".into()));
    }
    // Solved in the eigenbasis. `b` is only in the range up to rounding, and
    // its numerical null-space part would come back amplified by 1/ε, so
    // modes below the rank threshold are dropped as in `min_norm_solve`.
    let e = whitened(&h.h, ms).symmetric_eigen();
    let top = e.eigenvalues.amax();
    let mut c = e.eigenvectors.tr_mul(&ms.whiten(b));
    for (ci, &l) in c.iter_mut().zip(e.eigenvalues.iter()) {
        *ci = if l > RANGE_RTOL * top { *ci / (l + eps) } else { 0.0 };
    }
    Ok(ms.unwhiten(&(&e.eigenvectors * c)))
}

/// Eigenvalues of `H` as a self-adjoint operator on `(ℝⁿ, g)`, ascending.
pub fn metric_eigenvalues(h: &DenseOperator, ms: &MetricSpace) -> Result<Vec<f64>> {
    if !h.self_adjoint {
        return Err(Error::InvalidArgument("operator is not self-adjoint in the metric".into()));
    }
    let mut e: Vec<f64> = whitened(&h.h, ms).symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// Smallest eigenvalue above `1e-10` times the largest one.
pub fn smallest_positive_eigenvalue(h: &DenseOperator, ms: &MetricSpace) -> Result<Option<f64>> {
    let e = metric_eigenvalues(h, ms)?;
    let top = e.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    Ok(e.into_iter().find(|&x| x > 1e-10 * top))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonRow {
    pub eps: f64,
    /// `‖V_ε − V̂‖_g`.
    pub error: f64,
    /// `ε / (σ⁺ + ε) ‖V̂‖_g`.
    pub bound: f64,
    /// Error divided by the previous row's error.
    pub ratio: Option<f64>,
    /// Norm of the g-projection of `V_ε − V̂` onto the null space.
    pub null_component: f64,
}

#[derive(Clone, Debug)]
pub struct EpsilonTable {
    pub min_norm: DVector<f64>,
    pub sigma_min: f64,
    pub rows: Vec<EpsilonRow>,
}

impl EpsilonTable {
    pub fn errors_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }

    pub fn within_bound(&self) -> bool {
        self.rows.iter().all(|r| r.error <= r.bound * (1.0 + 1e-8) + 1e-14)
    }
}

/// `V_ε` against `V̂` over a list of ε.
pub fn epsilon_table(h: &DenseOperator, b: &DVector<f64>, ms: &MetricSpace, eps: &[f64]) -> Result<EpsilonTable> {
    let vhat = min_norm_solve(h, b, ms)?;
    let sigma_min = smallest_positive_eigenvalue(h, ms)?
        .ok_or_else(|| Error::InvalidArgument("operator has no positive eigenvalue".into()))?;
    let null = null_space_g_orthonormal(h, ms)?;
    let vnorm = ms.norm(&vhat);
    let mut rows: Vec<EpsilonRow> = Vec::with_capacity(eps.len());
    for &e in eps {
        let ve = epsilon_solve(h, b, ms, e)?;
        let y = &ve - &vhat;
        let error = ms.norm(&y);
        let null_component = null.iter().map(|n| ms.inner(&y, n).powi(2)).sum::<f64>().sqrt();
        let ratio = rows.last().map(|r| error / r.error);
        rows.push(EpsilonRow { eps: e, error, bound: e / (sigma_min + e) * vnorm, ratio, null_component });
    }
    Ok(EpsilonTable { min_norm: vhat, sigma_min, rows })
}

/// A g-orthonormal basis of `null(H)` for a self-adjoint `H`.
pub fn null_space_g_orthonormal(h: &DenseOperator, ms: &MetricSpace) -> Result<Vec<DVector<f64>>> {
    if !h.self_adjoint {
        return Err(Error::InvalidArgument("operator is not self-adjoint in the metric".into()));
    }
    let eig = whitened(&h.h, ms).symmetric_eigen();
    let top = eig.eigenvalues.amax();
    Ok((0..h.dim())
        .filter(|&i| eig.eigenvalues[i].abs() <= 1e-10 * top.max(f64::MIN_POSITIVE))
        .map(|i| ms.unwhiten(&eig.eigenvectors.column(i).into_owned()))
        .collect())
}

/// A random instance: SPD metric `g`, an operator of the given rank that is
/// self-adjoint and positive semidefinite in `g`, and `b` in its range.
pub fn random_singular_system<R: Rng>(rng: &mut R, n: usize, rank: usize) -> Result<(DenseOperator, MetricSpace, DVector<f64>)> {
    if n == 0 || rank == 0 || rank >= n {
        return Err(Error::InvalidArgument(format!("need 0 < rank < n, got rank {rank}, n {n}")));
    }
    let mut normal = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
    let a = normal(n, n);
    let g = a.transpose() * &a + DMatrix::identity(n, n) * 0.5;
    let c = normal(n, rank);
    let gh = &c * c.transpose();
    let ms = MetricSpace::new(g)?;
    let h = ms.g.clone().cholesky().expect("metric is SPD").solve(&gh);
    let w = normal(n, 1).column(0).into_owned();
    let b = &h * w;
    Ok((DenseOperator::new(h, &ms)?, ms, b))
}

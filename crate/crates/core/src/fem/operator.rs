use std::sync::Once;

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::Side;

use super::iterative::{conjugate_gradient, minres};
use super::sparse::CsrMatrix;
use crate::{Error, Result};

/// Relative residual every [`solve`] must reach.
pub const SOLVE_RTOL: f64 = 1e-11;

const REFINEMENT_STEPS: usize = 4;
const KRYLOV_MAX_ITER: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Definiteness {
    /// Symmetric positive definite once constraints are applied.
    PositiveDefinite,
    /// Symmetric indefinite (saddle-point systems).
    Indefinite,
}

/// Square sparse operator plus a set of constrained (Dirichlet) rows.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    matrix: CsrMatrix,
    constrained: Vec<bool>,
    definiteness: Definiteness,
}

impl SparseOperator {
    pub fn new(matrix: CsrMatrix, definiteness: Definiteness) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidArgument(format!(
                "operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let n = matrix.nrows();
        Ok(SparseOperator { matrix, constrained: vec![false; n], definiteness })
    }

    pub fn with_constraints(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "constraint mask of length {} for dimension {}",
                mask.len(),
                self.dim()
            )));
        }
        self.constrained = mask;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// The assembled matrix without constraints applied.
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }

    pub fn definiteness(&self) -> Definiteness {
        self.definiteness
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(x)
    }

    /// Matrix with constrained rows and columns replaced by identity.
    pub fn constrained_matrix(&self) -> CsrMatrix {
        let c = &self.constrained;
        let t: Vec<_> = self
            .matrix
            .triplets()
            .filter(|&(i, j, _)| !c[i] && !c[j])
            .chain((0..self.dim()).filter(|&i| c[i]).map(|i| (i, i, 1.0)))
            .collect();
        CsrMatrix::from_triplets(self.dim(), self.dim(), &t).expect("indices in range")
    }

    pub fn factorize(&self) -> Result<Factorization> {
        Factorization::new(self)
    }
}

enum Direct {
    Llt(Llt<usize, f64>),
    Lu(Lu<usize, f64>),
    Unavailable,
}

/// Factorized constrained operator, reusable for several right-hand sides.
pub struct Factorization {
    full: CsrMatrix,
    reduced: CsrMatrix,
    constrained: Vec<bool>,
    definiteness: Definiteness,
    direct: Direct,
}

static SEQUENTIAL: Once = Once::new();

impl Factorization {
    fn new(op: &SparseOperator) -> Result<Self> {
        // Sequential factorizations keep results bitwise reproducible.
        SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
        let reduced = op.constrained_matrix();
        let sparse = reduced.to_faer()?;
        let mut direct = Direct::Unavailable;
        if op.definiteness == Definiteness::PositiveDefinite {
            if let Ok(f) = sparse.sp_cholesky(Side::Lower) {
                direct = Direct::Llt(f);
            }
        }
        if matches!(direct, Direct::Unavailable) {
            if let Ok(f) = sparse.sp_lu() {
                direct = Direct::Lu(f);
            }
        }
        Ok(Factorization {
            full: op.matrix.clone(),
            reduced,
            constrained: op.constrained.clone(),
            definiteness: op.definiteness,
            direct,
        })
    }

    pub fn dim(&self) -> usize {
        self.full.nrows()
    }

    fn direct_solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let col = Col::<f64>::from_fn(b.len(), |i| b[i]);
        let x = match &self.direct {
            Direct::Llt(f) => {
                let mut x = col;
                f.solve_in_place(x.as_mat_mut());
                x
            }
            Direct::Lu(f) => f.solve(&col),
            Direct::Unavailable => return None,
        };
        let x: Vec<f64> = (0..b.len()).map(|i| x[i]).collect();
        x.iter().all(|v| v.is_finite()).then_some(x)
    }

    /// Solves the constrained system. Constrained entries take the values in
    /// `bc` (zero when `None`); free rows see the lifted right-hand side.
    pub fn solve(&self, rhs: &[f64], bc: Option<&[f64]>) -> Result<Vec<f64>> {
        let n = self.dim();
        if rhs.len() != n || bc.is_some_and(|g| g.len() != n) {
            return Err(Error::InvalidArgument(format!("right-hand side length does not match dimension {n}")));
        }
        let mut b = rhs.to_vec();
        if let Some(g) = bc {
            let lifted: Vec<f64> = (0..n).map(|j| if self.constrained[j] { g[j] } else { 0.0 }).collect();
            let shift = self.full.mul_vec(&lifted);
            for i in 0..n {
                b[i] -= shift[i];
            }
        }
        for i in 0..n {
            if self.constrained[i] {
                b[i] = bc.map_or(0.0, |g| g[i]);
            }
        }
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        if bnorm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let residual = |x: &[f64]| -> Vec<f64> {
            let ax = self.reduced.mul_vec(x);
            b.iter().zip(&ax).map(|(b, a)| b - a).collect()
        };
        let rel = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm;

        let mut x = self.direct_solve(&b).unwrap_or_else(|| vec![0.0; n]);
        for _ in 0..REFINEMENT_STEPS {
            let r = residual(&x);
            if rel(&r) <= 0.1 * SOLVE_RTOL {
                return Ok(x);
            }
            match self.direct_solve(&r) {
                Some(dx) => x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d),
                None => break,
            }
        }
        if rel(&residual(&x)) <= SOLVE_RTOL {
            return Ok(x);
        }

        let precond: Vec<f64> = self
            .reduced
            .diagonal()
            .iter()
            .map(|d| if d.abs() > 0.0 { d.abs() } else { 1.0 })
            .collect();
        if !x.iter().all(|v| v.is_finite()) {
            x = vec![0.0; n];
        }
        let apply = |v: &[f64]| self.reduced.mul_vec(v);
        let out = match self.definiteness {
            Definiteness::PositiveDefinite => conjugate_gradient(apply, &precond, &b, &mut x, SOLVE_RTOL, KRYLOV_MAX_ITER),
            Definiteness::Indefinite => minres(apply, &precond, &b, &mut x, SOLVE_RTOL, KRYLOV_MAX_ITER),
        };
        if out.converged {
            Ok(x)
        } else {
            Err(Error::Singular(format!(
                "linear solve stalled at relative residual {:e} after {} Krylov iterations",
                out.relative_residual, out.iterations
            )))
        }
    }
}

/// One-shot factorize-and-solve.
pub fn solve(op: &SparseOperator, rhs: &[f64], bc: Option<&[f64]>) -> Result<Vec<f64>> {
    op.factorize()?.solve(rhs, bc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let op = SparseOperator::new(CsrMatrix::identity(5), Definiteness::PositiveDefinite).unwrap();
        let b = [1.0, -2.0, 3.0, 0.5, 7.0];
        assert_eq!(solve(&op, &b, None).unwrap(), b.to_vec());
    }

    #[test]
    fn constraints_are_lifted() {
        // 1D Laplacian with both ends fixed: linear interpolation.
        let n = 6;
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.extend([(i, i, 1.0), (i + 1, i + 1, 1.0), (i, i + 1, -1.0), (i + 1, i, -1.0)]);
        }
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let mut mask = vec![false; n];
        mask[0] = true;
        mask[n - 1] = true;
        let op = SparseOperator::new(a, Definiteness::PositiveDefinite).unwrap().with_constraints(mask).unwrap();
        let mut g = vec![0.0; n];
        g[n - 1] = 5.0;
        let x = solve(&op, &vec![0.0; n], Some(&g)).unwrap();
        for (i, v) in x.iter().enumerate() {
            assert!((v - i as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_system_reported() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        let op = SparseOperator::new(a, Definiteness::Indefinite).unwrap();
        assert!(matches!(solve(&op, &[1.0, 0.0], None), Err(Error::Singular(_))));
    }
}

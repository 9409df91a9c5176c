//! Linear second shape derivative, the full KKT system in
//! `(δu, V, δλ)` and the two step computations built on it.
//!
//! Unknowns are ordered `[u (n), V (2n, interleaved), λ (n)]`. Test spaces:
//! `u` and `λ` vanish on the bottom and top sides, `V` on the whole hold-all
//! boundary.

use std::io::Write;

use crate::fem::{
    assemble_mass, assemble_scalar_laplace, assemble_vector_h1_form, CsrMatrix, Definiteness, Factorization,
    ScalarField, SparseOperator, VectorField,
};
use crate::mesh::{Mesh, MeshId, Region};
use crate::model::ProblemConfig;
use crate::shape_calculus::{
    assemble_shape_derivative, element_states, lambda_cross, second_variation, u_cross, LocalDirection, Snapshot,
};
use crate::{Error, Result};

/// Relative block residual a Newton solve must reach.
const STEP_RTOL: f64 = 1e-10;

#[derive(Clone, Debug)]
struct Blocks {
    n: usize,
    /// `∂²_X L`, 2n × 2n.
    lxx: CsrMatrix,
    /// `∂_u ∂_X L`, n × 2n.
    lux: CsrMatrix,
    /// `∂_λ ∂_X L`, n × 2n.
    llx: CsrMatrix,
    mass: CsrMatrix,
    stiffness: CsrMatrix,
}

fn assemble_blocks(m: &Mesh, cfg: &ProblemConfig, s: &Snapshot) -> Result<Blocks> {
    let states = element_states(m, cfg, s)?;
    let n = m.num_vertices();
    let mut txx = Vec::with_capacity(36 * states.len());
    let mut tux = Vec::with_capacity(18 * states.len());
    let mut tlx = Vec::with_capacity(18 * states.len());
    for st in &states {
        let dirs: Vec<LocalDirection> = (0..6).map(|k| LocalDirection::unit(st, k / 2, k % 2)).collect();
        let dof = |k: usize| 2 * st.nodes[k / 2] + k % 2;
        for a in 0..6 {
            for b in 0..6 {
                txx.push((dof(a), dof(b), second_variation(st, &dirs[a], &dirs[b], cfg.mutation)));
            }
        }
        for i in 0..3 {
            let mut e = [0.0; 3];
            e[i] = 1.0;
            for b in 0..6 {
                tux.push((st.nodes[i], dof(b), u_cross(st, e, &dirs[b])));
                tlx.push((st.nodes[i], dof(b), lambda_cross(st, e, &dirs[b])));
            }
        }
    }
    Ok(Blocks {
        n,
        lxx: CsrMatrix::from_triplets(2 * n, 2 * n, &txx)?,
        lux: CsrMatrix::from_triplets(n, 2 * n, &tux)?,
        llx: CsrMatrix::from_triplets(n, 2 * n, &tlx)?,
        mass: assemble_mass(m).matrix().clone(),
        stiffness: assemble_scalar_laplace(m, cfg.conductivity())?.matrix().clone(),
    })
}

fn zero_masked(mut x: Vec<f64>, mask: &[bool]) -> Vec<f64> {
    for (v, &c) in x.iter_mut().zip(mask) {
        if c {
            *v = 0.0;
        }
    }
    x
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_field(m: &Mesh, id: MeshId, v: &VectorField) -> Result<()> {
    v.ensure_on(m)?;
    if m.id() != id {
        return Err(Error::MeshMismatch("operator was assembled on a different mesh".into()));
    }
    Ok(())
}

/// Second derivative of the reduced objective `X ↦ J(u(X), X)` as a
/// bilinear form in deformation directions.
pub struct LinearShapeHessian {
    mesh: MeshId,
    blocks: Blocks,
    dirichlet: Vec<bool>,
    state: Factorization,
}

pub fn assemble_linear_shape_hessian(m: &Mesh, cfg: &ProblemConfig, s: &Snapshot) -> Result<LinearShapeHessian> {
    let blocks = assemble_blocks(m, cfg, s)?;
    let dirichlet = m.dirichlet_mask().to_vec();
    let state = SparseOperator::new(blocks.stiffness.clone(), Definiteness::PositiveDefinite)?
        .with_constraints(dirichlet.clone())?
        .factorize()?;
    Ok(LinearShapeHessian { mesh: m.id(), blocks, dirichlet, state })
}

impl LinearShapeHessian {
    /// `∂²_X L` with state and adjoint frozen.
    pub fn shape_block(&self) -> &CsrMatrix {
        &self.blocks.lxx
    }

    /// Material derivatives `(ṁu[V], ṁλ[V])` from the linearized state and
    /// adjoint equations.
    pub fn material_derivatives(&self, v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let b = &self.blocks;
        let rhs_u: Vec<f64> = b.llx.mul_vec(v).iter().map(|x| -x).collect();
        let du = self.state.solve(&zero_masked(rhs_u, &self.dirichlet), None)?;
        let mdu = b.mass.mul_vec(&du);
        let luxv = b.lux.mul_vec(v);
        let rhs_l: Vec<f64> = mdu.iter().zip(&luxv).map(|(a, c)| -(a + c)).collect();
        let dl = self.state.solve(&zero_masked(rhs_l, &self.dirichlet), None)?;
        Ok((du, dl))
    }

    /// `L''[(ṁu[V], V, ṁλ[V]), (ṁu[W], W, ṁλ[W])]`.
    pub fn value(&self, m: &Mesh, v: &VectorField, w: &VectorField) -> Result<f64> {
        check_field(m, self.mesh, v)?;
        check_field(m, self.mesh, w)?;
        let (v, w) = (v.to_flat(), w.to_flat());
        let (duv, dlv) = self.material_derivatives(&v)?;
        let (duw, dlw) = self.material_derivatives(&w)?;
        let b = &self.blocks;
        let constraint = |dl: &[f64], du: &[f64], x: &[f64]| {
            let k = b.stiffness.mul_vec(du);
            let c = b.llx.mul_vec(x);
            dot(dl, &k) + dot(dl, &c)
        };
        Ok(b.lxx.bilinear(&v, &w)
            + b.mass.bilinear(&duv, &duw)
            + dot(&duv, &b.lux.mul_vec(&w))
            + dot(&duw, &b.lux.mul_vec(&v))
            + constraint(&dlv, &duw, &w)
            + constraint(&dlw, &duv, &v))
    }
}

/// First variation of the area of `region` (all triangles for `None`):
/// `∫ div V`.
pub fn volume_derivative(m: &Mesh, v: &VectorField, region: Option<Region>) -> Result<f64> {
    let div = crate::fem::divergence(m, v)?;
    Ok((0..m.num_triangles())
        .filter(|&e| region.is_none_or(|r| m.region(e) == r))
        .map(|e| m.area(e) * div[e])
        .sum())
}

/// Second variation of the area of `region`, the surrogate with `g ≡ 1` and
/// all material derivatives zero: `∫ div V div W − tr(DV DW)`.
pub fn volume_hessian(m: &Mesh, v: &VectorField, w: &VectorField, region: Option<Region>) -> Result<f64> {
    let dv = crate::fem::elem_jacobian(m, v)?;
    let dw = crate::fem::elem_jacobian(m, w)?;
    Ok((0..m.num_triangles())
        .filter(|&e| region.is_none_or(|r| m.region(e) == r))
        .map(|e| m.area(e) * (dv[e].trace() * dw[e].trace() - (dv[e] * dw[e]).trace()))
        .sum())
}

/// How the KKT residual is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ResidualNorm {
    /// Dual norm: inverse mass on the `u` and `λ` blocks, inverse of the
    /// unit-weight regularization form `b_{1, ε₂}` on the deformation block.
    #[default]
    Metric,
    Euclidean,
}

impl ResidualNorm {
    pub fn name(self) -> &'static str {
        match self {
            ResidualNorm::Metric => "metric",
            ResidualNorm::Euclidean => "euclidean",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "metric" => Some(ResidualNorm::Metric),
            "euclidean" => Some(ResidualNorm::Euclidean),
            _ => None,
        }
    }
}

/// A step `(δu, V, δλ)`.
#[derive(Clone, Debug)]
pub struct KktStep {
    pub du: ScalarField,
    pub v: VectorField,
    pub dl: ScalarField,
}

/// The regularized KKT system at one iterate.
pub struct KktSystem {
    mesh: MeshId,
    blocks: Blocks,
    regularizer: CsrMatrix,
    rhs: Vec<f64>,
    mask: Vec<bool>,
    eps2: f64,
}

fn kkt_mask(m: &Mesh) -> Vec<bool> {
    let dir = m.dirichlet_mask();
    let mut mask = dir.to_vec();
    mask.extend(m.vector_boundary_mask());
    mask.extend_from_slice(dir);
    mask
}

fn kkt_rhs(m: &Mesh, cfg: &ProblemConfig, s: &Snapshot, mass: &CsrMatrix, stiffness: &CsrMatrix, mask: &[bool]) -> Result<Vec<f64>> {
    let w: Vec<f64> = s.u.values().iter().zip(s.target.z.values()).map(|(a, b)| a - b).collect();
    let mw = mass.mul_vec(&w);
    let kl = stiffness.mul_vec(s.lambda.values());
    let ku = stiffness.mul_vec(s.u.values());
    let d = assemble_shape_derivative(m, cfg, s)?;
    let mut rhs = Vec::with_capacity(4 * m.num_vertices());
    rhs.extend(mw.iter().zip(&kl).map(|(a, b)| -(a + b)));
    rhs.extend(d.values().iter().map(|x| -x));
    rhs.extend(ku.iter().map(|x| -x));
    Ok(zero_masked(rhs, mask))
}

fn rhs_norm(m: &Mesh, rhs: &[f64], mass: &CsrMatrix, eps2: f64, norm: ResidualNorm) -> Result<f64> {
    if norm == ResidualNorm::Euclidean {
        return Ok(dot(rhs, rhs).sqrt());
    }
    let n = m.num_vertices();
    let mass = SparseOperator::new(mass.clone(), Definiteness::PositiveDefinite)?
        .with_constraints(m.dirichlet_mask().to_vec())?
        .factorize()?;
    let metric = assemble_vector_h1_form(m, 1.0, eps2)?.factorize()?;
    let (ru, rx, rl) = (&rhs[..n], &rhs[n..3 * n], &rhs[3 * n..]);
    let s = dot(ru, &mass.solve(ru, None)?) + dot(rx, &metric.solve(rx, None)?) + dot(rl, &mass.solve(rl, None)?);
    Ok(s.max(0.0).sqrt())
}

/// Norm of the KKT right-hand side at `s` without assembling the Hessian.
pub fn kkt_residual_norm(m: &Mesh, cfg: &ProblemConfig, s: &Snapshot, eps2: f64, norm: ResidualNorm) -> Result<f64> {
    let mass = assemble_mass(m).matrix().clone();
    let stiffness = assemble_scalar_laplace(m, cfg.conductivity())?.matrix().clone();
    let rhs = kkt_rhs(m, cfg, s, &mass, &stiffness, &kkt_mask(m))?;
    rhs_norm(m, &rhs, &mass, eps2, norm)
}

/// Assembles
///
/// ```text
/// [ M       L_uX        K      ] [δu]     [L_u]
/// [ L_Xu    L_XX + εb   L_Xλ   ] [V ] = − [L_X]
/// [ K       L_λX        0      ] [δλ]     [L_λ]
/// ```
///
/// where `εb` is the regularization form with weights `eps1`, `eps2`.
pub fn assemble_kkt(m: &Mesh, cfg: &ProblemConfig, s: &Snapshot, eps1: f64, eps2: f64) -> Result<KktSystem> {
    let regularizer = assemble_vector_h1_form(m, eps1, eps2)?.matrix().clone();
    let blocks = assemble_blocks(m, cfg, s)?;
    let mask = kkt_mask(m);
    let rhs = kkt_rhs(m, cfg, s, &blocks.mass, &blocks.stiffness, &mask)?;
    Ok(KktSystem { mesh: m.id(), blocks, regularizer, rhs, mask, eps2 })
}

impl KktSystem {
    pub fn dim(&self) -> usize {
        4 * self.blocks.n
    }

    /// Right-hand side `−(L_u, L_X, L_λ)` with constrained entries zeroed.
    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn constrained(&self) -> &[bool] {
        &self.mask
    }

    pub fn shape_block(&self) -> &CsrMatrix {
        &self.blocks.lxx
    }

    pub fn regularizer(&self) -> &CsrMatrix {
        &self.regularizer
    }

    fn triplets(&self, hessian: bool) -> Vec<(usize, usize, f64)> {
        let b = &self.blocks;
        let n = b.n;
        let (ox, ol) = (n, 3 * n);
        let mut t = Vec::new();
        let mut put = |mat: &CsrMatrix, r0: usize, c0: usize, transpose: bool| {
            for (i, j, v) in mat.triplets() {
                if transpose {
                    t.push((r0 + j, c0 + i, v));
                } else {
                    t.push((r0 + i, c0 + j, v));
                }
            }
        };
        if hessian {
            put(&b.mass, 0, 0, false);
            put(&b.lux, 0, ox, false);
            put(&b.lux, ox, 0, true);
            put(&b.lxx, ox, ox, false);
        }
        put(&self.regularizer, ox, ox, false);
        put(&b.stiffness, 0, ol, false);
        put(&b.stiffness, ol, 0, false);
        put(&b.llx, ox, ol, true);
        put(&b.llx, ol, ox, false);
        t
    }

    /// Full matrix before constraints are applied.
    pub fn matrix(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.dim(), self.dim(), &self.triplets(true)).expect("indices in range")
    }

    /// Full matrix as a constrained operator.
    pub fn operator(&self) -> Result<SparseOperator> {
        SparseOperator::new(self.matrix(), Definiteness::Indefinite)?.with_constraints(self.mask.clone())
    }

    fn split(&self, m: &Mesh, x: &[f64]) -> Result<KktStep> {
        let n = self.blocks.n;
        Ok(KktStep {
            du: ScalarField::from_values(m, x[..n].to_vec())?,
            v: VectorField::from_flat(m, &x[n..3 * n])?,
            dl: ScalarField::from_values(m, x[3 * n..].to_vec())?,
        })
    }

    fn check_mesh(&self, m: &Mesh) -> Result<()> {
        if m.id() != self.mesh {
            return Err(Error::MeshMismatch("KKT system was assembled on a different mesh".into()));
        }
        Ok(())
    }

    /// Regularized Newton step: solves the full system.
    pub fn newton_step(&self, m: &Mesh) -> Result<KktStep> {
        self.check_mesh(m)?;
        let op = self.operator()?;
        let x = op.factorize()?.solve(&self.rhs, None)?;
        let reduced = op.constrained_matrix();
        let r = reduced.mul_vec(&x);
        let res = r.iter().zip(&self.rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = self.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(res <= STEP_RTOL * scale.max(f64::MIN_POSITIVE)) && scale > 0.0 {
            return Err(Error::Singular(format!("Newton system residual {:e} relative", res / scale)));
        }
        self.split(m, &x)
    }

    /// Projected gradient step: the same system with `M`, `L_uX` and `L_XX`
    /// dropped, solved block by block.
    pub fn projected_gradient_step(&self, m: &Mesh) -> Result<KktStep> {
        self.projected_gradient_step_scaled(m, 1.0)
    }

    /// Projected gradient step whose deformation is shortened to `t V`. The
    /// adjoint update does not depend on `V` and is kept in full; the state
    /// update is the linearized state equation for the shortened deformation.
    pub fn projected_gradient_step_scaled(&self, m: &Mesh, t: f64) -> Result<KktStep> {
        self.check_mesh(m)?;
        let b = &self.blocks;
        let n = b.n;
        let dir = &self.mask[..n];
        let state = SparseOperator::new(b.stiffness.clone(), Definiteness::PositiveDefinite)?
            .with_constraints(dir.to_vec())?
            .factorize()?;
        let reg = SparseOperator::new(self.regularizer.clone(), Definiteness::PositiveDefinite)?
            .with_constraints(self.mask[n..3 * n].to_vec())?
            .factorize()?;
        let (ru, rx, rl) = (&self.rhs[..n], &self.rhs[n..3 * n], &self.rhs[3 * n..]);
        let dl = state.solve(ru, None)?;
        let coupling = b.llx.transpose_mul_vec(&dl);
        let rhs_v: Vec<f64> = rx.iter().zip(&coupling).map(|(a, c)| a - c).collect();
        let v: Vec<f64> = reg.solve(&rhs_v, None)?.into_iter().map(|x| t * x).collect();
        let lv = b.llx.mul_vec(&v);
        let rhs_u: Vec<f64> = rl.iter().zip(&lv).map(|(a, c)| a - c).collect();
        let du = state.solve(&zero_masked(rhs_u, dir), None)?;
        let mut x = du;
        x.extend(v);
        x.extend(dl);
        self.split(m, &x)
    }

    /// Norm of the right-hand side.
    pub fn residual_norm(&self, m: &Mesh, norm: ResidualNorm) -> Result<f64> {
        self.check_mesh(m)?;
        rhs_norm(m, &self.rhs, &self.blocks.mass, self.eps2, norm)
    }

    /// Writes the constrained matrix as `row col value` lines.
    pub fn write_coo<W: Write>(&self, mut w: W) -> Result<()> {
        let reduced = self.operator()?.constrained_matrix();
        writeln!(w, "# {} {} {}", reduced.nrows(), reduced.ncols(), reduced.nnz())?;
        for (i, j, v) in reduced.triplets() {
            writeln!(w, "{i} {j} {v:e}")?;
        }
        Ok(())
    }

    /// The reduced matrix used by the projected gradient step.
    pub fn reduced_matrix(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.dim(), self.dim(), &self.triplets(false)).expect("indices in range")
    }
}

/// Assembles the KKT system and takes a projected gradient step.
pub fn projected_gradient_step(m: &Mesh, cfg: &ProblemConfig, s: &Snapshot, eps1: f64, eps2: f64) -> Result<KktStep> {
    assemble_kkt(m, cfg, s, eps1, eps2)?.projected_gradient_step(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, InclusionShape};
    use crate::model::{make_target, Mutation};

    fn setup(mutation: Mutation) -> (Mesh, ProblemConfig, Snapshot) {
        let cfg = ProblemConfig { mutation, ..Default::default() };
        let t = make_target(&cfg, 0.15).unwrap();
        let m = generate_mesh(&InclusionShape::circle([0.5, 0.5], 0.2), 0.15).unwrap();
        let s = Snapshot::solve(&m, &cfg, &t).unwrap();
        (m, cfg, s)
    }

    #[test]
    fn rhs_respects_constraints() {
        let (m, cfg, s) = setup(Mutation::None);
        let sys = assemble_kkt(&m, &cfg, &s, 0.1, 0.5).unwrap();
        assert_eq!(sys.dim(), sys.rhs().len());
        assert!(sys.rhs().iter().zip(sys.constrained()).all(|(r, &c)| !c || *r == 0.0));
        // State and adjoint hold exactly, so only the shape block is nonzero.
        let n = m.num_vertices();
        assert!(sys.rhs()[..n].iter().chain(&sys.rhs()[3 * n..]).all(|r| r.abs() < 1e-12));
        assert!(sys.rhs()[n..3 * n].iter().any(|r| r.abs() > 1e-8));
    }

    #[test]
    fn residual_norms_agree_with_the_free_function() {
        let (m, cfg, s) = setup(Mutation::None);
        let sys = assemble_kkt(&m, &cfg, &s, 0.1, 0.5).unwrap();
        for norm in [ResidualNorm::Metric, ResidualNorm::Euclidean] {
            let a = sys.residual_norm(&m, norm).unwrap();
            let b = kkt_residual_norm(&m, &cfg, &s, 0.5, norm).unwrap();
            assert!(a > 0.0 && (a - b).abs() <= 1e-14 * a);
        }
        for norm in [ResidualNorm::Metric, ResidualNorm::Euclidean] {
            assert_eq!(ResidualNorm::from_name(norm.name()), Some(norm));
        }
    }

    #[test]
    fn hessian_mutation_only_touches_the_shape_block() {
        let (m, cfg, s) = setup(Mutation::None);
        let (_, cfg_f, _) = setup(Mutation::FlipHessianTerm);
        let a = assemble_kkt(&m, &cfg, &s, 0.1, 0.5).unwrap();
        let b = assemble_kkt(&m, &cfg_f, &s, 0.1, 0.5).unwrap();
        assert_eq!(a.rhs(), b.rhs());
        assert_eq!(a.reduced_matrix().to_dense(), b.reduced_matrix().to_dense());
        assert!((a.shape_block().to_dense() - b.shape_block().to_dense()).amax() > 1e-8);
    }
}

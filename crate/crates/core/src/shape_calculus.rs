//! Volume-form shape derivative of the Lagrangian, Riesz gradients and the
//! finite-difference oracle.
//!
//! Vertex positions are the design variables and deformation directions are
//! P1 vector fields, so every formula here is the exact derivative of the
//! discrete Lagrangian
//!
//! `L(u, X, λ) = ½ (u − z(X))ᵀ M(X) (u − z(X)) + (α/2)|Ω0(X)| + λᵀ K(X) u`
//!
//! with respect to the vertex positions `X`.

use nalgebra::{Matrix2, Vector2};

use crate::fem::{assemble_vector_h1_form, P1Element, ScalarField, SparseOperator, VectorField};
use crate::mesh::{apply_deformation, Mesh, MeshId, Region};
use crate::model::{objective, reduced_objective, solve_adjoint, solve_state, Mutation, ProblemConfig, TargetField, TargetOnMesh};
use crate::{Error, Result};

/// State, adjoint and sampled target on one mesh.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub u: ScalarField,
    pub lambda: ScalarField,
    pub target: TargetOnMesh,
    pub objective: f64,
}

impl Snapshot {
    /// Solves state and adjoint from scratch.
    pub fn solve(m: &Mesh, cfg: &ProblemConfig, target: &TargetField) -> Result<Self> {
        let t = target.sample(m)?;
        let u = solve_state(m, cfg)?;
        let lambda = solve_adjoint(m, cfg, &u, &t.z)?;
        Self::from_fields(m, cfg, u, lambda, t)
    }

    /// Wraps given `u` and `λ` (for one-shot iterations where they are not
    /// exact solutions).
    pub fn from_fields(m: &Mesh, cfg: &ProblemConfig, u: ScalarField, lambda: ScalarField, target: TargetOnMesh) -> Result<Self> {
        u.ensure_on(m)?;
        lambda.ensure_on(m)?;
        target.z.ensure_on(m)?;
        let objective = objective(m, cfg, &u, &target.z)?;
        Ok(Snapshot { u, lambda, target, objective })
    }
}

/// Everything the element-level variations need, frozen for one element.
#[derive(Clone, Debug)]
pub(crate) struct ElementState {
    pub el: P1Element,
    pub nodes: [usize; 3],
    /// `M_e w`.
    pub mw: [f64; 3],
    pub grad_u: Vector2<f64>,
    pub grad_lambda: Vector2<f64>,
    /// `μ_e |e|`.
    pub mu_area: f64,
    /// `∫_e ½(u − z)² + α_e + μ ∇u·∇λ`.
    pub g: f64,
    /// Background target gradient at each vertex.
    pub zgrad: [[f64; 2]; 3],
}

pub(crate) fn element_states(m: &Mesh, cfg: &ProblemConfig, s: &Snapshot) -> Result<Vec<ElementState>> {
    s.u.ensure_on(m)?;
    s.lambda.ensure_on(m)?;
    s.target.z.ensure_on(m)?;
    let (u, l, z) = (s.u.values(), s.lambda.values(), s.target.z.values());
    Ok((0..m.num_triangles())
        .map(|e| {
            let el = m.element(e);
            let nodes = m.triangles()[e];
            let w = nodes.map(|i| u[i] - z[i]);
            let mw = el.mass_apply(w);
            let grad_u = el.grad(nodes.map(|i| u[i]));
            let grad_lambda = el.grad(nodes.map(|i| l[i]));
            let mu_area = cfg.mu(m.region(e)) * el.area;
            let alpha_here = match (m.region(e), cfg.mutation) {
                (Region::Inclusion, _) | (_, Mutation::AlphaOverDomain) => 0.5 * cfg.alpha,
                _ => 0.0,
            };
            let g = 0.5 * (w[0] * mw[0] + w[1] * mw[1] + w[2] * mw[2])
                + alpha_here * el.area
                + mu_area * grad_u.dot(&grad_lambda);
            ElementState { el, nodes, mw, grad_u, grad_lambda, mu_area, g, zgrad: nodes.map(|i| s.target.grad[i]) }
        })
        .collect())
}

/// A deformation direction restricted to one element.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LocalDirection {
    pub dv: Matrix2<f64>,
    pub div: f64,
    /// Nodal material derivative of the sampled target, `∇z(x_k)·V_k`.
    pub mz: [f64; 3],
}

impl LocalDirection {
    pub fn new(st: &ElementState, v: [[f64; 2]; 3]) -> Self {
        let dv = st.el.jacobian(v);
        LocalDirection {
            dv,
            div: dv.trace(),
            mz: std::array::from_fn(|k| st.zgrad[k][0] * v[k][0] + st.zgrad[k][1] * v[k][1]),
        }
    }

    /// Unit direction: component `c` of local vertex `a`.
    pub fn unit(st: &ElementState, a: usize, c: usize) -> Self {
        let mut v = [[0.0; 2]; 3];
        v[a][c] = 1.0;
        Self::new(st, v)
    }
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sym(a: Matrix2<f64>) -> Matrix2<f64> {
    a + a.transpose()
}

/// Part of the first variation that is not proportional to `G_e div V`.
fn first_rest(st: &ElementState, d: &LocalDirection) -> f64 {
    -dot3(st.mw, d.mz) - st.mu_area * st.grad_u.dot(&(sym(d.dv) * st.grad_lambda))
}

/// `∂_X L[V]` on one element.
pub(crate) fn first_variation(st: &ElementState, d: &LocalDirection) -> f64 {
    st.g * d.div + first_rest(st, d)
}

/// `∂²_X L[V, W]` on one element (state and adjoint nodal values frozen).
pub(crate) fn second_variation(st: &ElementState, v: &LocalDirection, w: &LocalDirection, mutation: Mutation) -> f64 {
    let (a, b) = (v.dv, w.dv);
    let s = b * a + a * b + b * a.transpose() + a * b.transpose() + (b * a).transpose() + (a * b).transpose();
    let sign = if mutation == Mutation::FlipHessianTerm { -1.0 } else { 1.0 };
    st.g * (v.div * w.div - (a * b).trace())
        + first_rest(st, v) * w.div
        + first_rest(st, w) * v.div
        + st.el.mass_product(v.mz, w.mz)
        + sign * st.mu_area * st.grad_u.dot(&(s * st.grad_lambda))
}

/// `∂_u ∂_X L[ũ, W]` on one element, `ũ` given by nodal values.
pub(crate) fn u_cross(st: &ElementState, ut: [f64; 3], w: &LocalDirection) -> f64 {
    let gu = st.el.grad(ut);
    let a = Matrix2::identity() * w.div - sym(w.dv);
    w.div * dot3(ut, st.mw) - st.el.mass_product(ut, w.mz) + st.mu_area * st.grad_lambda.dot(&(a * gu))
}

/// `∂_λ ∂_X L[λ̃, W]` on one element.
pub(crate) fn lambda_cross(st: &ElementState, lt: [f64; 3], w: &LocalDirection) -> f64 {
    let gl = st.el.grad(lt);
    let a = Matrix2::identity() * w.div - sym(w.dv);
    st.mu_area * st.grad_u.dot(&(a * gl))
}

/// The shape derivative as a dual vector on the interleaved deformation
/// dofs `2 i + c`. Entries of hold-all boundary vertices are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeGradientFunctional {
    mesh: MeshId,
    values: Vec<f64>,
}

impl ShapeGradientFunctional {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mesh_id(&self) -> MeshId {
        self.mesh
    }

    /// `dJ[V]`.
    pub fn pairing(&self, v: &VectorField) -> Result<f64> {
        if v.mesh_id() != self.mesh {
            return Err(Error::MeshMismatch("deformation field belongs to a different mesh".into()));
        }
        Ok(v.to_flat().iter().zip(&self.values).map(|(a, b)| a * b).sum())
    }
}

/// `dL[V] = ∫ div V (½(u − z)² + (α/2)χ_Ω0 + μ∇u·∇λ) − (u − z)∇zᵀV − μ∇uᵀ(DV + DVᵀ)∇λ`.
///
/// Equals the derivative of the reduced objective when `u` and `λ` solve the
/// state and adjoint equations.
pub fn assemble_shape_derivative(m: &Mesh, cfg: &ProblemConfig, s: &Snapshot) -> Result<ShapeGradientFunctional> {
    let states = element_states(m, cfg, s)?;
    let mut values = vec![0.0; 2 * m.num_vertices()];
    for st in &states {
        for a in 0..3 {
            for c in 0..2 {
                values[2 * st.nodes[a] + c] += first_variation(st, &LocalDirection::unit(st, a, c));
            }
        }
    }
    for (i, &b) in m.boundary_mask().iter().enumerate() {
        if b {
            values[2 * i] = 0.0;
            values[2 * i + 1] = 0.0;
        }
    }
    Ok(ShapeGradientFunctional { mesh: m.id(), values })
}

/// The regularization form, also the default Riesz metric.
pub fn metric(m: &Mesh, eps1: f64, eps2: f64) -> Result<SparseOperator> {
    assemble_vector_h1_form(m, eps1, eps2)
}

/// `∇J` with `b(∇J, Z) = dJ[Z]` for all admissible `Z`.
pub fn riesz_gradient(m: &Mesh, d: &ShapeGradientFunctional, metric: &SparseOperator) -> Result<VectorField> {
    if d.mesh != m.id() {
        return Err(Error::MeshMismatch("shape derivative belongs to a different mesh".into()));
    }
    let g = crate::fem::solve(metric, &d.values, None)?;
    VectorField::from_flat(m, &g)
}

/// `(J((I + tV)Ω) − J((I − tV)Ω)) / 2t`, re-solving the state and
/// re-sampling the target on both deformed meshes.
pub fn eulerian_fd(m: &Mesh, cfg: &ProblemConfig, target: &TargetField, v: &VectorField, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Err(Error::InvalidArgument("finite-difference step must be non-zero".into()));
    }
    let plus = reduced_objective(&apply_deformation(m, v, t)?, cfg, target)?;
    let minus = reduced_objective(&apply_deformation(m, v, -t)?, cfg, target)?;
    Ok((plus - minus) / (2.0 * t))
}

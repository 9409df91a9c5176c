//! The interface identification problem: find Ω0 such that the potential `u`
//! solving `-div(μ ∇u) = 0` with `u = x₂` on the bottom and top sides matches a
//! measured field `z` in the least-squares sense, plus `α/2 · vol(Ω0)`.

use std::path::Path;

use nalgebra::Vector2;

use crate::fem::{
    assemble_mass, assemble_scalar_laplace, solve, Conductivity, P1Element, ScalarField, SparseOperator,
};
use crate::mesh::{self, generate_mesh_with, InclusionShape, Mesh, MeshOptions, Point, Region};
use crate::{Error, Result};

/// Deliberate defects used as negative controls for the oracle suites.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mutation {
    #[default]
    None,
    /// Flips the sign of the second-order Jacobian product term of the
    /// linear shape Hessian.
    FlipHessianTerm,
    /// Integrates the α term of the shape derivative over all of Ω instead
    /// of Ω0.
    AlphaOverDomain,
}

impl Mutation {
    pub fn name(self) -> &'static str {
        match self {
            Mutation::None => "none",
            Mutation::FlipHessianTerm => "flip-hessian-term",
            Mutation::AlphaOverDomain => "alpha-over-domain",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Mutation::None),
            "flip-hessian-term" => Some(Mutation::FlipHessianTerm),
            "alpha-over-domain" => Some(Mutation::AlphaOverDomain),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProblemConfig {
    pub alpha: f64,
    pub mu_in: f64,
    pub mu_out: f64,
    pub mutation: Mutation,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            alpha: 1e-6,
            mu_in: 1e-6,
            mu_out: 1.0,
            mutation: Mutation::None,
        }
    }
}

impl ProblemConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        self.conductivity().validate()
    }

    pub fn conductivity(&self) -> Conductivity {
        Conductivity { inclusion: self.mu_in, exterior: self.mu_out }
    }

    pub fn mu(&self, r: Region) -> f64 {
        self.conductivity().on(r)
    }
}

/// The inclusion that generates the measurements.
pub fn target_shape() -> InclusionShape {
    InclusionShape::ellipse([0.5, 0.5], [0.25, 0.125])
}

/// Default initial guess.
pub fn initial_shape() -> InclusionShape {
    InclusionShape::circle([0.5, 0.5], 0.2)
}

/// Uniform bucket grid over the unit square for point location.
#[derive(Clone, Debug)]
struct PointLocator {
    cells: usize,
    buckets: Vec<Vec<usize>>,
}

const LOCATE_TOL: f64 = 1e-12;

impl PointLocator {
    fn new(m: &Mesh) -> Self {
        let cells = ((m.num_triangles() as f64 / 2.0).sqrt().ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); cells * cells];
        let cell = |x: f64| ((x * cells as f64).floor().max(0.0) as usize).min(cells - 1);
        for e in 0..m.num_triangles() {
            let p = m.triangle_points(e);
            let (x0, x1) = (p.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min), p.iter().map(|q| q[0]).fold(f64::NEG_INFINITY, f64::max));
            let (y0, y1) = (p.iter().map(|q| q[1]).fold(f64::INFINITY, f64::min), p.iter().map(|q| q[1]).fold(f64::NEG_INFINITY, f64::max));
            for j in cell(y0 - LOCATE_TOL)..=cell(y1 + LOCATE_TOL) {
                for i in cell(x0 - LOCATE_TOL)..=cell(x1 + LOCATE_TOL) {
                    buckets[j * cells + i].push(e);
                }
            }
        }
        PointLocator { cells, buckets }
    }

    /// Element containing `p` and its barycentric coordinates. Among several
    /// candidates (points on edges) the one with the largest minimal
    /// coordinate wins; ties go to the lowest element index.
    fn locate(&self, m: &Mesh, p: Point) -> Result<(usize, [f64; 3])> {
        if !(p[0] >= -LOCATE_TOL && p[0] <= 1.0 + LOCATE_TOL && p[1] >= -LOCATE_TOL && p[1] <= 1.0 + LOCATE_TOL) {
            return Err(Error::PointLocation { x: p[0], y: p[1] });
        }
        let q = [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0)];
        let cell = |x: f64| ((x * self.cells as f64).floor() as usize).min(self.cells - 1);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &e in &self.buckets[cell(q[1]) * self.cells + cell(q[0])] {
            let b = barycentric(m.triangle_points(e), q);
            let worst = b[0].min(b[1]).min(b[2]);
            if best.as_ref().is_none_or(|(_, _, w)| worst > *w) {
                best = Some((e, b, worst));
            }
        }
        match best {
            Some((e, b, w)) if w >= -1e-10 => Ok((e, b)),
            _ => Err(Error::PointLocation { x: p[0], y: p[1] }),
        }
    }
}

fn barycentric(t: [Point; 3], p: Point) -> [f64; 3] {
    let area = mesh::signed_area(t[0], t[1], t[2]);
    [
        mesh::signed_area(p, t[1], t[2]) / area,
        mesh::signed_area(t[0], p, t[2]) / area,
        mesh::signed_area(t[0], t[1], p) / area,
    ]
}

/// Measured potential on a frozen background mesh. It is a fixed function
/// of space: deforming the working mesh re-samples it, never transports it.
#[derive(Clone, Debug)]
pub struct TargetField {
    mesh: Mesh,
    z: ScalarField,
    locator: PointLocator,
}

/// Target sampled at the vertices of a working mesh, with the background
/// gradient at each vertex (the derivative of the sampled value with respect
/// to the vertex position).
#[derive(Clone, Debug)]
pub struct TargetOnMesh {
    pub z: ScalarField,
    pub grad: Vec<[f64; 2]>,
}

impl TargetField {
    pub fn new(mesh: Mesh, z: ScalarField) -> Result<Self> {
        z.ensure_on(&mesh)?;
        let locator = PointLocator::new(&mesh);
        Ok(TargetField { mesh, z, locator })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn z(&self) -> &ScalarField {
        &self.z
    }

    fn element_values(&self, e: usize) -> [f64; 3] {
        self.mesh.triangles()[e].map(|v| self.z.values()[v])
    }

    pub fn evaluate(&self, p: Point) -> Result<f64> {
        let (e, b) = self.locator.locate(&self.mesh, p)?;
        let z = self.element_values(e);
        Ok(b[0] * z[0] + b[1] * z[1] + b[2] * z[2])
    }

    /// Gradient of the background element containing `p`.
    pub fn gradient_at(&self, p: Point) -> Result<Vector2<f64>> {
        let (e, _) = self.locator.locate(&self.mesh, p)?;
        Ok(self.mesh.element(e).grad(self.element_values(e)))
    }

    /// Distance from `p` to the edges of its background element, i.e. how far
    /// `p` can move before the sampled target stops being linear in it.
    pub fn kink_distance(&self, p: Point) -> Result<f64> {
        let (e, b) = self.locator.locate(&self.mesh, p)?;
        let el: P1Element = self.mesh.element(e);
        Ok((0..3).map(|i| b[i].max(0.0) / el.grads[i].norm()).fold(f64::INFINITY, f64::min))
    }

    pub fn sample(&self, m: &Mesh) -> Result<TargetOnMesh> {
        let mut z = Vec::with_capacity(m.num_vertices());
        let mut grad = Vec::with_capacity(m.num_vertices());
        for &p in m.vertices() {
            let (e, b) = self.locator.locate(&self.mesh, p)?;
            let v = self.element_values(e);
            z.push(b[0] * v[0] + b[1] * v[1] + b[2] * v[2]);
            let g = self.mesh.element(e).grad(v);
            grad.push([g[0], g[1]]);
        }
        Ok(TargetOnMesh { z: ScalarField::from_values(m, z)?, grad })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        mesh::save_vtk(path, &self.mesh, &[("z", self.z.values())], &[])
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let data = mesh::load_vtk(path)?;
        let z = data
            .scalar("z")
            .ok_or_else(|| Error::Parse { line: 0, msg: "target file has no point scalar z".into() })?
            .to_vec();
        let z = ScalarField::from_values(&data.mesh, z)?;
        TargetField::new(data.mesh, z)
    }
}

/// Solves the state equation on a mesh of [`target_shape`] at resolution `h`.
pub fn make_target(cfg: &ProblemConfig, h: f64) -> Result<TargetField> {
    make_target_with(cfg, h, &MeshOptions::default())
}

pub fn make_target_with(cfg: &ProblemConfig, h: f64, opts: &MeshOptions) -> Result<TargetField> {
    make_target_for(cfg, &target_shape(), h, opts)
}

/// Target data generated by an arbitrary inclusion.
pub fn make_target_for(cfg: &ProblemConfig, shape: &InclusionShape, h: f64, opts: &MeshOptions) -> Result<TargetField> {
    cfg.validate()?;
    let m = generate_mesh_with(shape, h, opts)?;
    let z = solve_state(&m, cfg)?;
    TargetField::new(m, z)
}

fn state_operator(m: &Mesh, cfg: &ProblemConfig) -> Result<SparseOperator> {
    assemble_scalar_laplace(m, cfg.conductivity())?.with_constraints(m.dirichlet_mask().to_vec())
}

/// `u = x₂` on the bottom and top sides, insulated on the others.
pub fn solve_state(m: &Mesh, cfg: &ProblemConfig) -> Result<ScalarField> {
    cfg.validate()?;
    let op = state_operator(m, cfg)?;
    let lift: Vec<f64> = m.vertices().iter().map(|p| p[1]).collect();
    let u = solve(&op, &vec![0.0; m.num_vertices()], Some(&lift))?;
    ScalarField::from_values(m, u)
}

/// Adjoint with homogeneous data on the bottom and top sides:
/// `∫ μ ∇ũ·∇λ + (u − z) ũ = 0` for all admissible `ũ`.
pub fn solve_adjoint(m: &Mesh, cfg: &ProblemConfig, u: &ScalarField, z: &ScalarField) -> Result<ScalarField> {
    u.ensure_on(m)?;
    z.ensure_on(m)?;
    let op = state_operator(m, cfg)?;
    let w: Vec<f64> = u.values().iter().zip(z.values()).map(|(a, b)| a - b).collect();
    let rhs: Vec<f64> = assemble_mass(m).apply(&w).iter().map(|v| -v).collect();
    ScalarField::from_values(m, solve(&op, &rhs, None)?)
}

/// `J = ½∫(u − z)² + (α/2)·|Ω0|`.
pub fn objective(m: &Mesh, cfg: &ProblemConfig, u: &ScalarField, z: &ScalarField) -> Result<f64> {
    u.ensure_on(m)?;
    z.ensure_on(m)?;
    let (u, z) = (u.values(), z.values());
    let mut misfit = 0.0;
    for (e, tri) in m.triangles().iter().enumerate() {
        let w = tri.map(|i| u[i] - z[i]);
        misfit += m.element(e).mass_product(w, w);
    }
    Ok(0.5 * misfit + 0.5 * cfg.alpha * m.region_area(Region::Inclusion))
}

/// Target values at the vertices of `m`.
pub fn transfer_target(t: &TargetField, m: &Mesh) -> Result<ScalarField> {
    let z = m.vertices().iter().map(|&p| t.evaluate(p)).collect::<Result<Vec<_>>>()?;
    ScalarField::from_values(m, z)
}

/// Solves state and target sampling in one go and returns `J`.
pub fn reduced_objective(m: &Mesh, cfg: &ProblemConfig, target: &TargetField) -> Result<f64> {
    let u = solve_state(m, cfg)?;
    let z = transfer_target(target, m)?;
    objective(m, cfg, &u, &z)
}

use super::operator::{Definiteness, SparseOperator};
use super::sparse::CsrMatrix;
use crate::mesh::{Mesh, Region};
use crate::{Error, Result};

/// Piecewise constant conductivity, one value per region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conductivity {
    pub inclusion: f64,
    pub exterior: f64,
}

impl Conductivity {
    pub fn uniform(mu: f64) -> Self {
        Conductivity { inclusion: mu, exterior: mu }
    }

    pub fn on(&self, r: Region) -> f64 {
        match r {
            Region::Inclusion => self.inclusion,
            Region::Exterior => self.exterior,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inclusion > 0.0 && self.exterior > 0.0) || !self.inclusion.is_finite() || !self.exterior.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "conductivities must be positive and finite, got {} and {}",
                self.inclusion, self.exterior
            )));
        }
        Ok(())
    }
}

/// `A[i, j] = Σ_e μ_e ∫_e ∇φ_i·∇φ_j`, unconstrained.
pub fn assemble_scalar_laplace(m: &Mesh, mu: Conductivity) -> Result<SparseOperator> {
    mu.validate()?;
    let mut t = Vec::with_capacity(9 * m.num_triangles());
    for (e, tri) in m.triangles().iter().enumerate() {
        let el = m.element(e);
        let c = mu.on(m.region(e)) * el.area;
        for a in 0..3 {
            for b in 0..3 {
                t.push((tri[a], tri[b], c * el.grads[a].dot(&el.grads[b])));
            }
        }
    }
    let n = m.num_vertices();
    SparseOperator::new(CsrMatrix::from_triplets(n, n, &t)?, Definiteness::PositiveDefinite)
}

/// Consistent P1 mass matrix, unconstrained.
pub fn assemble_mass(m: &Mesh) -> SparseOperator {
    let mut t = Vec::with_capacity(9 * m.num_triangles());
    for (e, tri) in m.triangles().iter().enumerate() {
        let el = m.element(e);
        for a in 0..3 {
            for b in 0..3 {
                t.push((tri[a], tri[b], el.mass(a, b)));
            }
        }
    }
    let n = m.num_vertices();
    let a = CsrMatrix::from_triplets(n, n, &t).expect("indices in range");
    SparseOperator::new(a, Definiteness::PositiveDefinite).expect("square")
}

/// `b(W, V) = ∫ ε₁(⟨W, V⟩ + ε₂⟨∇W, ∇V⟩_F)` on interleaved vector dofs
/// `2 i + c`, constrained on every hold-all boundary vertex.
pub fn assemble_vector_h1_form(m: &Mesh, eps1: f64, eps2: f64) -> Result<SparseOperator> {
    if !(eps1 > 0.0 && eps1.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps1 must be positive, got {eps1}")));
    }
    if !(eps2 >= 0.0 && eps2.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps2 must be non-negative, got {eps2}")));
    }
    let mut t = Vec::with_capacity(18 * m.num_triangles());
    for (e, tri) in m.triangles().iter().enumerate() {
        let el = m.element(e);
        for a in 0..3 {
            for b in 0..3 {
                let v = eps1 * (el.mass(a, b) + eps2 * el.area * el.grads[a].dot(&el.grads[b]));
                for c in 0..2 {
                    t.push((2 * tri[a] + c, 2 * tri[b] + c, v));
                }
            }
        }
    }
    let n = 2 * m.num_vertices();
    SparseOperator::new(CsrMatrix::from_triplets(n, n, &t)?, Definiteness::PositiveDefinite)?
        .with_constraints(m.vector_boundary_mask())
}

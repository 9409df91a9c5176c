//! P1 finite elements: nodal fields, assembly and constrained sparse solves.

mod assembly;
mod calculus;
mod element;
pub mod iterative;
mod operator;
mod sparse;

pub use assembly::{assemble_mass, assemble_scalar_laplace, assemble_vector_h1_form, Conductivity};
pub use calculus::{divergence, elem_grad, elem_jacobian, integrate, integrate_constant};
pub use element::P1Element;
pub use operator::{solve, Definiteness, Factorization, SparseOperator, SOLVE_RTOL};
pub use sparse::CsrMatrix;

use crate::mesh::{Mesh, MeshId, Point};
use crate::{Error, Result};

fn mismatch(what: &str) -> Error {
    Error::MeshMismatch(format!("{what} belongs to a different mesh"))
}

/// Nodal P1 scalar function.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    mesh: MeshId,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(m: &Mesh) -> Self {
        ScalarField { mesh: m.id(), values: vec![0.0; m.num_vertices()] }
    }

    pub fn from_fn(m: &Mesh, f: impl Fn(Point) -> f64) -> Self {
        ScalarField { mesh: m.id(), values: m.vertices().iter().map(|&p| f(p)).collect() }
    }

    pub fn from_values(m: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != m.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} vertices",
                values.len(),
                m.num_vertices()
            )));
        }
        Ok(ScalarField { mesh: m.id(), values })
    }

    pub fn mesh_id(&self) -> MeshId {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn ensure_on(&self, m: &Mesh) -> Result<()> {
        if self.mesh == m.id() {
            Ok(())
        } else {
            Err(mismatch("scalar field"))
        }
    }

    /// Reinterprets the nodal values on a mesh with the same vertex count.
    pub fn rebind(self, m: &Mesh) -> Result<Self> {
        Self::from_values(m, self.values)
    }
}

/// Nodal P1 vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    mesh: MeshId,
    values: Vec<[f64; 2]>,
}

impl VectorField {
    pub fn zeros(m: &Mesh) -> Self {
        VectorField { mesh: m.id(), values: vec![[0.0; 2]; m.num_vertices()] }
    }

    pub fn from_fn(m: &Mesh, f: impl Fn(Point) -> [f64; 2]) -> Self {
        VectorField { mesh: m.id(), values: m.vertices().iter().map(|&p| f(p)).collect() }
    }

    pub fn from_values(m: &Mesh, values: Vec<[f64; 2]>) -> Result<Self> {
        if values.len() != m.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "{} vectors for {} vertices",
                values.len(),
                m.num_vertices()
            )));
        }
        Ok(VectorField { mesh: m.id(), values })
    }

    /// From the interleaved layout `[x0, y0, x1, y1, ...]`.
    pub fn from_flat(m: &Mesh, flat: &[f64]) -> Result<Self> {
        if flat.len() != 2 * m.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "{} components for {} vertices",
                flat.len(),
                m.num_vertices()
            )));
        }
        Self::from_values(m, flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn mesh_id(&self) -> MeshId {
        self.mesh
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [[f64; 2]] {
        &mut self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        VectorField { mesh: self.mesh, values: self.values.iter().map(|v| [c * v[0], c * v[1]]).collect() }
    }

    /// `self + c * other`; both on the same mesh.
    pub fn add_scaled(&self, other: &VectorField, c: f64) -> Result<Self> {
        if self.mesh != other.mesh {
            return Err(mismatch("vector field"));
        }
        Ok(VectorField {
            mesh: self.mesh,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| [a[0] + c * b[0], a[1] + c * b[1]])
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max)
    }

    pub fn ensure_on(&self, m: &Mesh) -> Result<()> {
        if self.mesh == m.id() {
            Ok(())
        } else {
            Err(mismatch("vector field"))
        }
    }

    pub fn rebind(self, m: &Mesh) -> Result<Self> {
        Self::from_values(m, self.values)
    }
}

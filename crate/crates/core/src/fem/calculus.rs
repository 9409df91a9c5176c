use nalgebra::{Matrix2, Vector2};

use super::{P1Element, ScalarField, VectorField};
use crate::mesh::Mesh;
use crate::Result;

/// Per-element gradient of a P1 scalar field.
pub fn elem_grad(m: &Mesh, u: &ScalarField) -> Result<Vec<Vector2<f64>>> {
    u.ensure_on(m)?;
    let v = u.values();
    Ok((0..m.num_triangles())
        .map(|e| m.element(e).grad(m.triangles()[e].map(|i| v[i])))
        .collect())
}

/// Per-element Jacobian `DV` of a P1 vector field.
pub fn elem_jacobian(m: &Mesh, v: &VectorField) -> Result<Vec<Matrix2<f64>>> {
    v.ensure_on(m)?;
    let vals = v.values();
    Ok((0..m.num_triangles())
        .map(|e| m.element(e).jacobian(m.triangles()[e].map(|i| vals[i])))
        .collect())
}

pub fn divergence(m: &Mesh, v: &VectorField) -> Result<Vec<f64>> {
    Ok(elem_jacobian(m, v)?.iter().map(|d| d.trace()).collect())
}

/// Sum over elements of `f(e, element)`, where `f` returns the integral over
/// element `e`.
pub fn integrate<F>(m: &Mesh, mut f: F) -> f64
where
    F: FnMut(usize, &P1Element) -> f64,
{
    (0..m.num_triangles()).map(|e| f(e, &m.element(e))).sum()
}

/// `∫ c` for an elementwise constant `c`.
pub fn integrate_constant(m: &Mesh, c: &[f64]) -> f64 {
    integrate(m, |e, el| el.area * c[e])
}

use nalgebra::{Matrix2, Vector2};

use crate::mesh::{signed_area, Point};

/// Geometry of one linear triangle: area and the constant gradients of the
/// three hat functions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct P1Element {
    pub area: f64,
    pub grads: [Vector2<f64>; 3],
}

impl P1Element {
    pub fn new(p: [Point; 3]) -> Self {
        let area = signed_area(p[0], p[1], p[2]);
        let twice = 2.0 * area;
        let grads = std::array::from_fn(|i| {
            let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
            Vector2::new((a[1] - b[1]) / twice, (b[0] - a[0]) / twice)
        });
        P1Element { area, grads }
    }

    /// Exact local mass matrix entry `∫ φ_i φ_j`.
    pub fn mass(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.area / 6.0
        } else {
            self.area / 12.0
        }
    }

    /// `∫ a b` for two P1 functions given by their vertex values.
    pub fn mass_product(&self, a: [f64; 3], b: [f64; 3]) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.mass(i, j) * a[i] * b[j];
            }
        }
        s
    }

    /// `M_e a` for vertex values `a`.
    pub fn mass_apply(&self, a: [f64; 3]) -> [f64; 3] {
        let s = a[0] + a[1] + a[2];
        a.map(|x| self.area / 12.0 * (x + s))
    }

    pub fn grad(&self, values: [f64; 3]) -> Vector2<f64> {
        self.grads[0] * values[0] + self.grads[1] * values[1] + self.grads[2] * values[2]
    }

    /// Constant Jacobian `DV` with `DV[(i, j)] = ∂_j V_i`.
    pub fn jacobian(&self, values: [[f64; 2]; 3]) -> Matrix2<f64> {
        let mut d = Matrix2::zeros();
        for k in 0..3 {
            d += Vector2::new(values[k][0], values[k][1]) * self.grads[k].transpose();
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_triangle() {
        let e = P1Element::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(e.area, 0.5);
        assert_eq!(e.grads[0], Vector2::new(-1.0, -1.0));
        assert_eq!(e.grads[1], Vector2::new(1.0, 0.0));
        assert_eq!(e.grads[2], Vector2::new(0.0, 1.0));
        let total: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| e.mass(i, j)).sum();
        assert!((total - 0.5).abs() < 1e-15);
    }

    #[test]
    fn jacobian_of_linear_field() {
        let p = [[0.1, 0.2], [0.7, 0.3], [0.4, 0.9]];
        let e = P1Element::new(p);
        // V(x) = A x + c
        let a = Matrix2::new(1.5, -0.3, 0.2, 0.7);
        let vals = p.map(|q| {
            let v = a * Vector2::new(q[0], q[1]);
            [v[0] + 1.0, v[1] - 2.0]
        });
        assert!((e.jacobian(vals) - a).norm() < 1e-13);
    }

    #[test]
    fn mass_apply_matches_entries() {
        let e = P1Element::new([[0.1, 0.2], [0.7, 0.3], [0.4, 0.9]]);
        let a = [1.0, -2.0, 0.5];
        let m = e.mass_apply(a);
        for i in 0..3 {
            let direct: f64 = (0..3).map(|j| e.mass(i, j) * a[j]).sum();
            assert!((m[i] - direct).abs() < 1e-15);
        }
    }
}

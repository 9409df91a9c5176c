use std::f64::consts::PI;

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::{Mesh, Point, Region};
use crate::{Error, Result};

/// Minimum number of interface vertices a generated mesh must have.
const MIN_INTERFACE_VERTICES: usize = 8;

/// Interior lattice points closer than this many `h` to a constrained curve
/// are dropped.
const CLEARANCE: f64 = 0.6;

const SMOOTHING_SWEEPS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InclusionKind {
    Ellipse,
    Circle,
}

/// Axis-aligned elliptic (or circular) inclusion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InclusionShape {
    pub kind: InclusionKind,
    pub center: Point,
    pub semi_axes: [f64; 2],
}

impl InclusionShape {
    pub fn ellipse(center: Point, semi_axes: [f64; 2]) -> Self {
        InclusionShape {
            kind: InclusionKind::Ellipse,
            center,
            semi_axes,
        }
    }

    pub fn circle(center: Point, radius: f64) -> Self {
        InclusionShape {
            kind: InclusionKind::Circle,
            center,
            semi_axes: [radius, radius],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.semi_axes;
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidShape(format!("semi-axes must be positive, got ({a}, {b})")));
        }
        if self.kind == InclusionKind::Circle && a != b {
            return Err(Error::InvalidShape("circle needs equal semi-axes".into()));
        }
        let [cx, cy] = self.center;
        let inside = cx - a > 0.0 && cx + a < 1.0 && cy - b > 0.0 && cy + b < 1.0;
        if !inside {
            return Err(Error::InvalidShape(format!(
                "inclusion centred at ({cx}, {cy}) with semi-axes ({a}, {b}) leaves the unit square"
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        PI * self.semi_axes[0] * self.semi_axes[1]
    }

    pub fn point_at(&self, theta: f64) -> Point {
        [
            self.center[0] + self.semi_axes[0] * theta.cos(),
            self.center[1] + self.semi_axes[1] * theta.sin(),
        ]
    }

    /// Cumulative arc length at `samples + 1` equally spaced parameter values.
    fn arc_table(&self, samples: usize) -> Vec<f64> {
        let mut table = Vec::with_capacity(samples + 1);
        table.push(0.0);
        let mut prev = self.point_at(0.0);
        let mut s = 0.0;
        for i in 1..=samples {
            let p = self.point_at(2.0 * PI * i as f64 / samples as f64);
            s += (p[0] - prev[0]).hypot(p[1] - prev[1]);
            table.push(s);
            prev = p;
        }
        table
    }

    pub fn perimeter(&self) -> f64 {
        *self.arc_table(1 << 14).last().expect("non-empty")
    }

    /// `n` boundary points, counter-clockwise, equally spaced in arc length and
    /// starting at parameter angle 0.
    pub fn boundary_points(&self, n: usize) -> Vec<Point> {
        if self.kind == InclusionKind::Circle {
            return (0..n).map(|i| self.point_at(2.0 * PI * i as f64 / n as f64)).collect();
        }
        let samples = 1 << 14;
        let table = self.arc_table(samples);
        let total = table[samples];
        let mut out = Vec::with_capacity(n);
        let mut j = 0;
        for i in 0..n {
            let target = total * i as f64 / n as f64;
            while table[j + 1] < target {
                j += 1;
            }
            let frac = (target - table[j]) / (table[j + 1] - table[j]);
            let theta = 2.0 * PI * (j as f64 + frac) / samples as f64;
            out.push(self.point_at(theta));
        }
        out
    }

    /// Euclidean distance from `p` to the inclusion boundary curve.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        let [a, b] = self.semi_axes;
        let d2 = |t: f64| {
            let q = self.point_at(t);
            (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)
        };
        let coarse = 720;
        let mut best = (0.0, f64::INFINITY);
        for i in 0..coarse {
            let t = 2.0 * PI * i as f64 / coarse as f64;
            let d = d2(t);
            if d < best.1 {
                best = (t, d);
            }
        }
        // Newton on the stationarity condition of the squared distance.
        let (x, y) = (p[0] - self.center[0], p[1] - self.center[1]);
        let mut t = best.0;
        for _ in 0..50 {
            let (s, c) = t.sin_cos();
            let f = (b * b - a * a) * s * c + a * x * s - b * y * c;
            let df = (b * b - a * a) * (c * c - s * s) + a * x * c + b * y * s;
            if df.abs() < 1e-300 {
                break;
            }
            let step = f / df;
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        d2(t).min(best.1).sqrt()
    }

    pub fn contains(&self, p: Point) -> bool {
        let x = (p[0] - self.center[0]) / self.semi_axes[0];
        let y = (p[1] - self.center[1]) / self.semi_axes[1];
        x * x + y * y < 1.0
    }
}

/// Knobs for [`generate_mesh_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct MeshOptions {
    /// Selects the offset of the interior point lattice. Different seeds give
    /// different but equally good meshes, which keeps unrelated meshes from
    /// sharing interior vertices.
    pub seed: u64,
}

pub fn generate_mesh(shape: &InclusionShape, target_h: f64) -> Result<Mesh> {
    generate_mesh_with(shape, target_h, &MeshOptions::default())
}

/// Interface-fitted constrained Delaunay mesh of the unit square.
///
/// The square boundary and the inclusion polygon are sampled with spacing at
/// most `target_h`; interior points come from a hexagonal lattice of spacing
/// `target_h` with a clearance band around both curves, followed by a few
/// Laplacian smoothing sweeps.
pub fn generate_mesh_with(shape: &InclusionShape, target_h: f64, opts: &MeshOptions) -> Result<Mesh> {
    if !(target_h > 0.0 && target_h < 0.5) {
        return Err(Error::InvalidArgument(format!("target_h must lie in (0, 0.5), got {target_h}")));
    }
    shape.validate()?;
    let n_interface = (shape.perimeter() / target_h).ceil() as usize;
    if n_interface < MIN_INTERFACE_VERTICES {
        return Err(Error::InvalidArgument(format!(
            "target_h = {target_h} gives only {n_interface} interface vertices (need {MIN_INTERFACE_VERTICES})"
        )));
    }
    let polygon = shape.boundary_points(n_interface);

    let m = (1.0 / target_h).ceil() as usize;
    let mut square = Vec::with_capacity(4 * m);
    for i in 0..m {
        square.push([i as f64 / m as f64, 0.0]);
    }
    for i in 0..m {
        square.push([1.0, i as f64 / m as f64]);
    }
    for i in 0..m {
        square.push([1.0 - i as f64 / m as f64, 1.0]);
    }
    for i in 0..m {
        square.push([0.0, 1.0 - i as f64 / m as f64]);
    }

    let clearance = CLEARANCE * target_h;
    let keep = |p: Point| {
        p[0].min(1.0 - p[0]).min(p[1]).min(1.0 - p[1]) >= clearance
            && polygon_distance(&polygon, p) >= clearance
    };
    let mut interior = lattice_points(target_h, opts.seed);
    interior.retain(|&p| keep(p));

    let fixed = square.len() + polygon.len();
    let mut points: Vec<Point> = square.iter().chain(&polygon).chain(&interior).copied().collect();
    let mut triangles = triangulate(&points, square.len(), polygon.len())?;

    for _ in 0..SMOOTHING_SWEEPS {
        let mut sum = vec![[0.0, 0.0]; points.len()];
        let mut count = vec![0usize; points.len()];
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                for (i, j) in [(a, b), (b, a)] {
                    sum[i][0] += points[j][0];
                    sum[i][1] += points[j][1];
                    count[i] += 1;
                }
            }
        }
        for i in fixed..points.len() {
            let c = [sum[i][0] / count[i] as f64, sum[i][1] / count[i] as f64];
            if keep(c) {
                points[i] = c;
            }
        }
        triangles = triangulate(&points, square.len(), polygon.len())?;
    }

    let regions = triangles
        .iter()
        .map(|t| {
            let c = [
                (points[t[0]][0] + points[t[1]][0] + points[t[2]][0]) / 3.0,
                (points[t[0]][1] + points[t[1]][1] + points[t[2]][1]) / 3.0,
            ];
            if point_in_polygon(&polygon, c) {
                Region::Inclusion
            } else {
                Region::Exterior
            }
        })
        .collect();
    Mesh::new(points, triangles, regions)
}

fn lattice_points(h: f64, seed: u64) -> Vec<Point> {
    // Golden-ratio offsets: distinct seeds give well separated lattice shifts.
    const PHI: f64 = 0.618_033_988_749_894_9;
    let ox = ((seed as f64 * PHI) + 0.25).fract() * h;
    let oy = ((seed as f64 * PHI * PHI) + 0.35).fract() * h;
    let dy = h * 3f64.sqrt() / 2.0;
    let mut pts = Vec::new();
    let mut j = 0usize;
    loop {
        let y = oy + j as f64 * dy;
        if y >= 1.0 {
            break;
        }
        let shift = if j % 2 == 1 { 0.5 * h } else { 0.0 };
        let mut i = 0usize;
        loop {
            let x = ox + shift + i as f64 * h;
            if x >= 1.0 {
                break;
            }
            pts.push([x, y]);
            i += 1;
        }
        j += 1;
    }
    pts
}

fn triangulate(points: &[Point], n_square: usize, n_polygon: usize) -> Result<Vec<[usize; 3]>> {
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
    for (i, p) in points.iter().enumerate() {
        let handle = cdt
            .insert(Point2::new(p[0], p[1]))
            .map_err(|e| Error::InvalidMesh(format!("cannot insert point {i}: {e:?}")))?;
        if handle.index() != i {
            return Err(Error::InvalidMesh(format!("point {i} duplicates point {}", handle.index())));
        }
    }
    let handles: Vec<_> = cdt.fixed_vertices().collect();
    for (start, len) in [(0, n_square), (n_square, n_polygon)] {
        for k in 0..len {
            let (a, b) = (start + k, start + (k + 1) % len);
            cdt.add_constraint(handles[a], handles[b]);
        }
    }
    let mut triangles: Vec<[usize; 3]> = cdt
        .inner_faces()
        .map(|f| f.vertices().map(|v| v.fix().index()))
        .collect();
    triangles.sort_unstable();
    Ok(triangles)
}

fn polygon_distance(polygon: &[Point], p: Point) -> f64 {
    let n = polygon.len();
    (0..n)
        .map(|i| segment_distance(polygon[i], polygon[(i + 1) % n], p))
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn segment_distance(a: Point, b: Point, p: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (a[0] + t * dx - p[0]).hypot(a[1] + t * dy - p[1])
}

pub(crate) fn point_in_polygon(polygon: &[Point], p: Point) -> bool {
    let n = polygon.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0] {
            inside = !inside;
        }
        j = i;
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipse_distance_matches_axes() {
        let s = InclusionShape::ellipse([0.5, 0.5], [0.25, 0.125]);
        assert!((s.distance_to_boundary([0.5, 0.5]) - 0.125).abs() < 1e-12);
        assert!((s.distance_to_boundary([0.9, 0.5]) - 0.15).abs() < 1e-12);
        assert!(s.distance_to_boundary(s.point_at(1.1)) < 1e-12);
    }

    #[test]
    fn boundary_points_equally_spaced() {
        let s = InclusionShape::ellipse([0.5, 0.5], [0.25, 0.125]);
        let pts = s.boundary_points(40);
        let d: Vec<f64> = (0..40)
            .map(|i| {
                let (p, q) = (pts[i], pts[(i + 1) % 40]);
                (p[0] - q[0]).hypot(p[1] - q[1])
            })
            .collect();
        let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
        assert!(hi / lo < 1.01, "spacing ratio {}", hi / lo);
    }

    #[test]
    fn perimeter_of_circle() {
        let s = InclusionShape::circle([0.5, 0.5], 0.2);
        assert!((s.perimeter() - 2.0 * PI * 0.2).abs() < 1e-7);
    }

    #[test]
    fn shape_validation() {
        assert!(InclusionShape::ellipse([0.5, 0.9], [0.25, 0.125]).validate().is_err());
        assert!(InclusionShape::ellipse([0.5, 0.5], [0.0, 0.125]).validate().is_err());
        assert!(InclusionShape::circle([0.5, 0.5], 0.2).validate().is_ok());
    }
}

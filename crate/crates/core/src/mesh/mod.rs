//! Interface-fitted triangle meshes of the unit square.
//!
//! A [`Mesh`] is immutable once built. Deformations produce a new mesh with the
//! same connectivity and tags but a fresh [`MeshId`], so fields created on the
//! old mesh are rejected by operations on the new one unless they are
//! explicitly rebound.

mod generate;
mod vtk;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::fem::{P1Element, VectorField};
use crate::{Error, Result};

pub use generate::{generate_mesh, generate_mesh_with, InclusionKind, InclusionShape, MeshOptions};
pub use vtk::{load_vtk, read_vtk, save_vtk, write_vtk, VtkData};

/// A point in the plane.
pub type Point = [f64; 2];

/// Tolerance used to decide whether a point lies on the hold-all boundary.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// Tolerance on the covered area of the unit square.
const COVER_TOL: f64 = 1e-9;

/// Boundary tolerance for deformation fields on the hold-all boundary.
const FIXED_BOUNDARY_TOL: f64 = 1e-12;

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

/// Identity of a mesh instance. Deformed meshes get a new id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MeshId(u64);

impl MeshId {
    fn fresh() -> Self {
        MeshId(NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed))
    }
}

/// Sides of the unit square. `Bottom` is Γ0, `Left` Γ1, `Top` Γ2, `Right` Γ3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundaryTag {
    Bottom,
    Left,
    Top,
    Right,
}

impl BoundaryTag {
    pub fn index(self) -> usize {
        match self {
            BoundaryTag::Bottom => 0,
            BoundaryTag::Left => 1,
            BoundaryTag::Top => 2,
            BoundaryTag::Right => 3,
        }
    }

    /// Tag of the straight edge `a`-`b` if it lies on a side of the unit square.
    fn classify(a: Point, b: Point) -> Option<Self> {
        let on = |s: f64, t: f64, c: f64| (s - c).abs() <= BOUNDARY_TOL && (t - c).abs() <= BOUNDARY_TOL;
        if on(a[1], b[1], 0.0) {
            Some(BoundaryTag::Bottom)
        } else if on(a[0], b[0], 0.0) {
            Some(BoundaryTag::Left)
        } else if on(a[1], b[1], 1.0) {
            Some(BoundaryTag::Top)
        } else if on(a[0], b[0], 1.0) {
            Some(BoundaryTag::Right)
        } else {
            None
        }
    }
}

/// Material region of a triangle: the inclusion Ω0 or the exterior Ω1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Inclusion,
    Exterior,
}

impl Region {
    pub fn index(self) -> i32 {
        match self {
            Region::Inclusion => 0,
            Region::Exterior => 1,
        }
    }

    pub fn from_index(i: i64) -> Option<Self> {
        match i {
            0 => Some(Region::Inclusion),
            1 => Some(Region::Exterior),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    id: MeshId,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    regions: Vec<Region>,
    boundary_edges: Vec<BoundaryEdge>,
    interface: Vec<usize>,
    on_boundary: Vec<bool>,
    dirichlet: Vec<bool>,
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Builds a mesh and checks every invariant: positive orientation,
    /// conformity, boundary edges on the unit square, full coverage and a
    /// single closed interface polygon strictly inside the square.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, regions: Vec<Region>) -> Result<Self> {
        if regions.len() != triangles.len() {
            return Err(Error::InvalidMesh(format!(
                "{} region tags for {} triangles",
                regions.len(),
                triangles.len()
            )));
        }
        let nv = vertices.len();
        for (e, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {e} references a missing vertex")));
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            if signed_area(a, b, c) <= 0.0 {
                return Err(Error::InvalidMesh(format!("triangle {e} has non-positive area")));
            }
        }

        let mut edge_count: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (e, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                edge_count.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push(e);
            }
        }

        let mut on_boundary = vec![false; nv];
        let mut dirichlet = vec![false; nv];
        let mut boundary_edges = Vec::new();
        let mut interface_edges = Vec::new();
        for (e, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let owners = &edge_count[&edge_key(a, b)];
                match owners.len() {
                    1 => {
                        let tag = BoundaryTag::classify(vertices[a], vertices[b]).ok_or_else(|| {
                            Error::InvalidMesh(format!(
                                "free edge ({a}, {b}) does not lie on the unit square boundary"
                            ))
                        })?;
                        on_boundary[a] = true;
                        on_boundary[b] = true;
                        if matches!(tag, BoundaryTag::Bottom | BoundaryTag::Top) {
                            dirichlet[a] = true;
                            dirichlet[b] = true;
                        }
                        boundary_edges.push(BoundaryEdge { vertices: [a, b], tag });
                    }
                    2 => {
                        let other = if owners[0] == e { owners[1] } else { owners[0] };
                        if e < other && regions[e] != regions[other] {
                            interface_edges.push(edge_key(a, b));
                        }
                    }
                    n => {
                        return Err(Error::InvalidMesh(format!("edge ({a}, {b}) is shared by {n} triangles")));
                    }
                }
            }
        }

        let total: f64 = triangles
            .iter()
            .map(|t| signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]))
            .sum();
        if (total - 1.0).abs() > COVER_TOL {
            return Err(Error::InvalidMesh(format!("triangles cover area {total}, expected 1")));
        }

        let interface = order_interface(&vertices, &interface_edges)?;
        if let Some(&v) = interface.iter().find(|&&v| on_boundary[v]) {
            return Err(Error::InvalidMesh(format!("interface vertex {v} lies on the hold-all boundary")));
        }

        Ok(Mesh {
            id: MeshId::fresh(),
            vertices,
            triangles,
            regions,
            boundary_edges,
            interface,
            on_boundary,
            dirichlet,
        })
    }

    pub fn id(&self) -> MeshId {
        self.id
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, e: usize) -> Region {
        self.regions[e]
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    /// Interface vertices in counter-clockwise order around Ω0.
    pub fn interface_vertices(&self) -> &[usize] {
        &self.interface
    }

    pub fn interface_polygon(&self) -> Vec<Point> {
        self.interface.iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, e: usize) -> [Point; 3] {
        self.triangles[e].map(|v| self.vertices[v])
    }

    pub fn element(&self, e: usize) -> P1Element {
        P1Element::new(self.triangle_points(e))
    }

    pub fn area(&self, e: usize) -> f64 {
        let [a, b, c] = self.triangle_points(e);
        signed_area(a, b, c)
    }

    pub fn region_area(&self, region: Region) -> f64 {
        (0..self.num_triangles())
            .filter(|&e| self.regions[e] == region)
            .map(|e| self.area(e))
            .sum()
    }

    /// True for vertices on ∂D (deformation fields vanish there).
    pub fn on_boundary(&self, i: usize) -> bool {
        self.on_boundary[i]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.on_boundary
    }

    /// Vertices on Γ0 ∪ Γ2, where the potential is prescribed.
    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet
    }

    /// Boundary mask expanded to the interleaved vector dof layout `2 * i + c`.
    pub fn vector_boundary_mask(&self) -> Vec<bool> {
        self.on_boundary.iter().flat_map(|&b| [b, b]).collect()
    }

    pub fn max_edge_length(&self) -> f64 {
        let mut h: f64 = 0.0;
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (self.vertices[tri[k]], self.vertices[tri[(k + 1) % 3]]);
                h = h.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        h
    }

    /// Same topology and tags with new vertex positions. Boundary vertices must
    /// stay on their sides; orientation is checked.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Result<Mesh> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::InvalidArgument(format!(
                "{} positions for a mesh with {} vertices",
                vertices.len(),
                self.vertices.len()
            )));
        }
        for (e, tri) in self.triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|v| vertices[v]);
            if signed_area(a, b, c) <= 0.0 {
                return Err(Error::NonInvertible(format!("triangle {e} would have non-positive area")));
            }
        }
        for edge in &self.boundary_edges {
            let [a, b] = edge.vertices.map(|v| vertices[v]);
            if BoundaryTag::classify(a, b) != Some(edge.tag) {
                return Err(Error::InvalidArgument(format!(
                    "boundary edge {:?} left side {:?}",
                    edge.vertices, edge.tag
                )));
            }
        }
        Ok(Mesh {
            id: MeshId::fresh(),
            vertices,
            ..self.clone()
        })
    }
}

fn order_interface(vertices: &[Point], edges: &[(usize, usize)]) -> Result<Vec<usize>> {
    if edges.is_empty() {
        return Err(Error::InvalidMesh("mesh has no inclusion interface".into()));
    }
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for &(a, b) in edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    if let Some((v, n)) = adj.iter().find(|(_, n)| n.len() != 2) {
        return Err(Error::InvalidMesh(format!(
            "interface vertex {v} has {} interface edges",
            n.len()
        )));
    }
    let start = *adj.keys().min().expect("non-empty");
    let first = *adj[&start].iter().min().expect("two neighbours");
    let mut cycle = vec![start];
    let (mut prev, mut cur) = (start, first);
    while cur != start {
        cycle.push(cur);
        let n = &adj[&cur];
        let next = if n[0] == prev { n[1] } else { n[0] };
        prev = cur;
        cur = next;
        if cycle.len() > adj.len() {
            break;
        }
    }
    if cycle.len() != adj.len() {
        return Err(Error::InvalidMesh("interface is not a single closed polygon".into()));
    }
    if cycle.len() < 3 {
        return Err(Error::InvalidMesh("interface has fewer than 3 vertices".into()));
    }
    let area: f64 = (0..cycle.len())
        .map(|i| {
            let (p, q) = (vertices[cycle[i]], vertices[cycle[(i + 1) % cycle.len()]]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum();
    if area < 0.0 {
        cycle[1..].reverse();
    }
    Ok(cycle)
}

/// Result of [`check_invertibility`].
#[derive(Clone, Debug, PartialEq)]
pub struct InvertibilityReport {
    pub invertible: bool,
    /// Smallest ratio of deformed to original triangle area.
    pub min_area_ratio: f64,
    /// Triangles whose deformed signed area is not positive.
    pub folded_triangles: Vec<usize>,
    /// Hold-all boundary vertices where the field does not vanish.
    pub moving_boundary_vertices: Vec<usize>,
    /// Elementwise estimate of `‖t v‖_{W^{1,∞}}`.
    pub w1inf_estimate: f64,
}

/// Checks that `x ↦ x + t v(x)` maps every triangle to a positively oriented
/// triangle and keeps the hold-all boundary fixed.
pub fn check_invertibility(m: &Mesh, v: &VectorField, t: f64) -> Result<InvertibilityReport> {
    v.ensure_on(m)?;
    let vals = v.values();
    let moved: Vec<Point> = m
        .vertices
        .iter()
        .zip(vals)
        .map(|(x, d)| [x[0] + t * d[0], x[1] + t * d[1]])
        .collect();

    let mut folded = Vec::new();
    let mut min_ratio = f64::INFINITY;
    let mut max_grad: f64 = 0.0;
    for (e, tri) in m.triangles.iter().enumerate() {
        let [a, b, c] = tri.map(|i| moved[i]);
        let ratio = signed_area(a, b, c) / m.area(e);
        min_ratio = min_ratio.min(ratio);
        if ratio <= 0.0 {
            folded.push(e);
        }
        let dv = m.element(e).jacobian(tri.map(|i| vals[i]));
        max_grad = max_grad.max((t * dv).norm());
    }
    let max_val = vals.iter().map(|d| t.abs() * d[0].hypot(d[1])).fold(0.0, f64::max);
    let moving: Vec<usize> = (0..m.num_vertices())
        .filter(|&i| m.on_boundary[i] && (t * vals[i][0]).hypot(t * vals[i][1]) > FIXED_BOUNDARY_TOL)
        .collect();

    Ok(InvertibilityReport {
        invertible: folded.is_empty() && moving.is_empty(),
        min_area_ratio: min_ratio,
        folded_triangles: folded,
        moving_boundary_vertices: moving,
        w1inf_estimate: max_grad + max_val,
    })
}

/// Moves vertex `i` to `x_i + t v(x_i)`.
pub fn apply_deformation(m: &Mesh, v: &VectorField, t: f64) -> Result<Mesh> {
    let report = check_invertibility(m, v, t)?;
    if !report.moving_boundary_vertices.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "deformation moves {} hold-all boundary vertices (first: {})",
            report.moving_boundary_vertices.len(),
            report.moving_boundary_vertices[0]
        )));
    }
    if !report.folded_triangles.is_empty() {
        return Err(Error::NonInvertible(format!(
            "{} triangles fold (first: {}, min area ratio {:e})",
            report.folded_triangles.len(),
            report.folded_triangles[0],
            report.min_area_ratio
        )));
    }
    let moved = m
        .vertices
        .iter()
        .zip(v.values())
        .map(|(x, d)| [x[0] + t * d[0], x[1] + t * d[1]])
        .collect();
    m.with_vertices(moved)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshQuality {
    /// Smallest interior angle in degrees.
    pub min_angle: f64,
    /// Largest `longest edge * perimeter / (4 sqrt(3) area)`, 1 for equilateral.
    pub max_aspect: f64,
    pub min_area: f64,
}

pub fn mesh_quality(m: &Mesh) -> MeshQuality {
    triangle_quality(&m.vertices, &m.triangles)
}

/// Quality report for an arbitrary triangle soup; degenerate triangles report
/// zero area and an infinite aspect ratio.
pub fn triangle_quality(vertices: &[Point], triangles: &[[usize; 3]]) -> MeshQuality {
    let mut q = MeshQuality {
        min_angle: 180.0,
        max_aspect: 0.0,
        min_area: f64::INFINITY,
    };
    for tri in triangles {
        let p = tri.map(|v| vertices[v]);
        let area = signed_area(p[0], p[1], p[2]);
        let len = |i: usize, j: usize| (p[i][0] - p[j][0]).hypot(p[i][1] - p[j][1]);
        let l = [len(1, 2), len(2, 0), len(0, 1)];
        for k in 0..3 {
            let (a, b, c) = (l[k], l[(k + 1) % 3], l[(k + 2) % 3]);
            let cos = ((b * b + c * c - a * a) / (2.0 * b * c)).clamp(-1.0, 1.0);
            q.min_angle = q.min_angle.min(cos.acos().to_degrees());
        }
        let longest = l.iter().cloned().fold(0.0, f64::max);
        let perimeter: f64 = l.iter().sum();
        let aspect = if area > 0.0 {
            longest * perimeter / (4.0 * 3f64.sqrt() * area)
        } else {
            f64::INFINITY
        };
        q.max_aspect = q.max_aspect.max(aspect);
        q.min_area = q.min_area.min(area.max(0.0));
    }
    q
}

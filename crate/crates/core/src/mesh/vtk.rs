//! Legacy ASCII VTK (unstructured grid) reader and writer.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Mesh, Region};
use crate::{Error, Result};

/// Contents of a VTK file: the mesh plus any point data found in it.
#[derive(Clone, Debug)]
pub struct VtkData {
    pub mesh: Mesh,
    pub point_scalars: Vec<(String, Vec<f64>)>,
    pub point_vectors: Vec<(String, Vec<[f64; 2]>)>,
}

impl VtkData {
    pub fn scalar(&self, name: &str) -> Option<&[f64]> {
        self.point_scalars.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn vector(&self, name: &str) -> Option<&[[f64; 2]]> {
        self.point_vectors.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }
}

/// Writes `mesh` with optional nodal data. Region tags go to cell data as
/// `region` (0 = inclusion, 1 = exterior).
pub fn write_vtk<W: Write>(
    w: W,
    mesh: &Mesh,
    scalars: &[(&str, &[f64])],
    vectors: &[(&str, &[[f64; 2]])],
) -> Result<()> {
    let nv = mesh.num_vertices();
    for (name, data) in scalars {
        check_name(name)?;
        if data.len() != nv {
            return Err(Error::InvalidArgument(format!("scalar field {name} has {} values for {nv} points", data.len())));
        }
    }
    for (name, data) in vectors {
        check_name(name)?;
        if data.len() != nv {
            return Err(Error::InvalidArgument(format!("vector field {name} has {} values for {nv} points", data.len())));
        }
    }

    let mut w = BufWriter::new(w);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "shapeopt mesh")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {nv} double")?;
    for p in mesh.vertices() {
        writeln!(w, "{:e} {:e} 0", p[0], p[1])?;
    }
    let nt = mesh.num_triangles();
    writeln!(w, "CELLS {nt} {}", 4 * nt)?;
    for t in mesh.triangles() {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "5")?;
    }
    writeln!(w, "CELL_DATA {nt}")?;
    writeln!(w, "SCALARS region int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for r in mesh.regions() {
        writeln!(w, "{}", r.index())?;
    }
    if !scalars.is_empty() || !vectors.is_empty() {
        writeln!(w, "POINT_DATA {nv}")?;
    }
    for (name, data) in scalars {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for x in *data {
            writeln!(w, "{x:e}")?;
        }
    }
    for (name, data) in vectors {
        writeln!(w, "VECTORS {name} double")?;
        for x in *data {
            writeln!(w, "{:e} {:e} 0", x[0], x[1])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.chars().any(char::is_whitespace) {
        return Err(Error::InvalidArgument(format!("invalid VTK field name {name:?}")));
    }
    Ok(())
}

pub fn save_vtk(
    path: impl AsRef<Path>,
    mesh: &Mesh,
    scalars: &[(&str, &[f64])],
    vectors: &[(&str, &[[f64; 2]])],
) -> Result<()> {
    write_vtk(File::create(path)?, mesh, scalars, vectors)
}

pub fn load_vtk(path: impl AsRef<Path>) -> Result<VtkData> {
    read_vtk(BufReader::new(File::open(path)?))
}

struct Tokens {
    lines: Vec<(usize, String)>,
    line: usize,
    col: usize,
}

impl Tokens {
    fn new<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = Vec::new();
        for (i, l) in r.lines().enumerate() {
            lines.push((i + 1, l?));
        }
        Ok(Tokens { lines, line: 0, col: 0 })
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        let line = self.lines.get(self.line).map_or(self.lines.len(), |l| l.0);
        Error::Parse { line, msg: msg.into() }
    }

    fn raw_line(&mut self) -> Result<String> {
        let l = self.lines.get(self.line).ok_or_else(|| self.err("unexpected end of file"))?.1.clone();
        self.line += 1;
        self.col = 0;
        Ok(l)
    }

    fn next(&mut self) -> Option<&str> {
        while self.line < self.lines.len() {
            let rest = &self.lines[self.line].1[self.col..];
            let trimmed = rest.trim_start();
            if trimmed.is_empty() {
                self.line += 1;
                self.col = 0;
                continue;
            }
            let start = self.col + rest.len() - trimmed.len();
            let len = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
            self.col = start + len;
            return Some(&self.lines[self.line].1[start..start + len]);
        }
        None
    }

    fn word(&mut self) -> Result<String> {
        match self.next() {
            Some(s) => Ok(s.to_string()),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn expect(&mut self, kw: &str) -> Result<()> {
        let w = self.word()?;
        if w.eq_ignore_ascii_case(kw) {
            Ok(())
        } else {
            Err(self.err(format!("expected {kw}, found {w}")))
        }
    }

    fn parse<T: std::str::FromStr>(&mut self) -> Result<T> {
        let w = self.word()?;
        w.parse().map_err(|_| self.err(format!("cannot parse {w:?}")))
    }

    fn skip_rest_of_line(&mut self) {
        if self.col > 0 {
            self.line += 1;
            self.col = 0;
        }
    }
}

/// Reads a triangle mesh written by [`write_vtk`] (or any legacy ASCII
/// unstructured grid of triangles with a `region` cell array).
pub fn read_vtk<R: Read>(r: R) -> Result<VtkData> {
    let mut t = Tokens::new(BufReader::new(r))?;
    let header = t.raw_line()?;
    if !header.starts_with("# vtk DataFile") {
        return Err(Error::Parse { line: 1, msg: "missing VTK header".into() });
    }
    t.raw_line()?;
    t.expect("ASCII")?;
    t.expect("DATASET")?;
    t.expect("UNSTRUCTURED_GRID")?;

    let mut vertices: Option<Vec<[f64; 2]>> = None;
    let mut triangles: Option<Vec<[usize; 3]>> = None;
    let mut regions: Option<Vec<Region>> = None;
    let mut point_scalars = Vec::new();
    let mut point_vectors = Vec::new();
    let mut section = "";

    while let Some(kw) = t.next().map(str::to_ascii_uppercase) {
        match kw.as_str() {
            "POINTS" => {
                let n: usize = t.parse()?;
                t.word()?;
                let mut pts = Vec::with_capacity(n);
                for _ in 0..n {
                    let x: f64 = t.parse()?;
                    let y: f64 = t.parse()?;
                    let z: f64 = t.parse()?;
                    if z != 0.0 {
                        return Err(t.err("points must lie in the plane z = 0"));
                    }
                    pts.push([x, y]);
                }
                vertices = Some(pts);
            }
            "CELLS" => {
                let n: usize = t.parse()?;
                let _size: usize = t.parse()?;
                let mut tris = Vec::with_capacity(n);
                for _ in 0..n {
                    let k: usize = t.parse()?;
                    if k != 3 {
                        return Err(t.err(format!("only triangles are supported, found a cell with {k} points")));
                    }
                    tris.push([t.parse()?, t.parse()?, t.parse()?]);
                }
                triangles = Some(tris);
            }
            "CELL_TYPES" => {
                let n: usize = t.parse()?;
                for _ in 0..n {
                    let ty: u32 = t.parse()?;
                    if ty != 5 {
                        return Err(t.err(format!("unsupported cell type {ty}")));
                    }
                }
            }
            "CELL_DATA" => {
                t.parse::<usize>()?;
                section = "cell";
            }
            "POINT_DATA" => {
                t.parse::<usize>()?;
                section = "point";
            }
            "SCALARS" => {
                let name = t.word()?;
                t.word()?;
                t.skip_rest_of_line();
                t.expect("LOOKUP_TABLE")?;
                t.word()?;
                let n = match section {
                    "cell" => triangles.as_ref().map(Vec::len),
                    "point" => vertices.as_ref().map(Vec::len),
                    _ => None,
                }
                .ok_or_else(|| t.err("data section before geometry"))?;
                let mut data = Vec::with_capacity(n);
                for _ in 0..n {
                    data.push(t.parse::<f64>()?);
                }
                if section == "cell" {
                    if name == "region" {
                        let r = data
                            .iter()
                            .map(|&x| Region::from_index(x as i64).ok_or_else(|| t.err(format!("bad region tag {x}"))))
                            .collect::<Result<Vec<_>>>()?;
                        regions = Some(r);
                    }
                } else {
                    point_scalars.push((name, data));
                }
            }
            "VECTORS" => {
                let name = t.word()?;
                t.word()?;
                let n = match section {
                    "cell" => triangles.as_ref().map(Vec::len),
                    "point" => vertices.as_ref().map(Vec::len),
                    _ => None,
                }
                .ok_or_else(|| t.err("data section before geometry"))?;
                let mut data = Vec::with_capacity(n);
                for _ in 0..n {
                    let x: f64 = t.parse()?;
                    let y: f64 = t.parse()?;
                    t.parse::<f64>()?;
                    data.push([x, y]);
                }
                if section == "point" {
                    point_vectors.push((name, data));
                }
            }
            other => return Err(t.err(format!("unexpected keyword {other}"))),
        }
    }

    let vertices = vertices.ok_or_else(|| t.err("missing POINTS"))?;
    let triangles = triangles.ok_or_else(|| t.err("missing CELLS"))?;
    let regions = regions.ok_or_else(|| t.err("missing region cell data"))?;
    let mesh = Mesh::new(vertices, triangles, regions)?;
    Ok(VtkData { mesh, point_scalars, point_vectors })
}

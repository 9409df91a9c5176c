//! Run configuration: `key = value` lines grouped under `[section]` headers.
//!
//! ```text
//! [problem]
//! alpha = 1e-6
//! mu_in = 1e-6
//! mu_out = 1
//! mutation = none
//!
//! [schedule]
//! eps1 = 0.03
//! ...
//!
//! [mesh]
//! source = generate
//! h = 0.0195
//! shape = circle
//! center = 0.5 0.5
//! radius = 0.2
//!
//! [target]
//! source = load
//! path = target.vtk
//!
//! [run]
//! output_dir = out
//! seed = 0
//! emit_vtk = false
//! ```
//!
//! Blank lines and lines starting with `#` or `;` are ignored. Missing keys
//! take their defaults; unknown sections and keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::driver::{LineSearch, NewtonFallback, Schedule, StateUpdate};
use crate::kkt::ResidualNorm;
use crate::mesh::{InclusionKind, InclusionShape};
use crate::model::{initial_shape, target_shape, Mutation, ProblemConfig};
use crate::{Error, Result};

/// Resolution of the default meshes; about 6000 triangles.
pub const DEFAULT_H: f64 = 0.0195;

#[derive(Clone, Debug, PartialEq)]
pub enum MeshSource {
    Generate { h: f64, shape: InclusionShape },
    Load { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub enum TargetSource {
    Generate { h: f64, shape: InclusionShape },
    Load { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub schedule: Schedule,
    pub mesh: MeshSource,
    pub target: TargetSource,
    pub output_dir: PathBuf,
    /// Seed of the working mesh; generated target meshes use `seed + 1`.
    pub seed: u64,
    /// Write a VTK snapshot of every iterate, not only the final one.
    pub emit_vtk: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: ProblemConfig::default(),
            schedule: Schedule::default(),
            mesh: MeshSource::Generate { h: DEFAULT_H, shape: initial_shape() },
            target: TargetSource::Generate { h: DEFAULT_H, shape: target_shape() },
            output_dir: PathBuf::from("out"),
            seed: 0,
            emit_vtk: false,
        }
    }
}

type Section = BTreeMap<String, (String, usize)>;

fn bad(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn split_sections(text: &str) -> Result<BTreeMap<String, Section>> {
    const SECTIONS: [&str; 5] = ["problem", "schedule", "mesh", "target", "run"];
    let mut out: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with(';') {
            continue;
        }
        if let Some(name) = t.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| bad(line, "unterminated section header"))?.trim();
            if !SECTIONS.contains(&name) {
                return Err(bad(line, format!("unknown section [{name}]")));
            }
            if out.contains_key(name) {
                return Err(bad(line, format!("section [{name}] appears twice")));
            }
            out.insert(name.to_string(), Section::new());
            current = Some(name.to_string());
            continue;
        }
        let (k, v) = t.split_once('=').ok_or_else(|| bad(line, "expected `key = value`"))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(bad(line, "empty key"));
        }
        let section = current.as_ref().ok_or_else(|| bad(line, "key outside of a section"))?;
        let entries = out.get_mut(section).expect("section was inserted");
        if entries.insert(k.to_string(), (v.to_string(), line)).is_some() {
            return Err(bad(line, format!("duplicate key `{k}`")));
        }
    }
    Ok(out)
}

/// Typed access to one section; tracks which keys were consumed.
struct Reader<'a> {
    name: &'a str,
    entries: Section,
}

impl Reader<'_> {
    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.take(key) {
            None => Ok(default),
            Some((v, line)) => v.parse().map_err(|_| bad(line, format!("invalid value for `{key}`: {v}"))),
        }
    }

    fn named<T>(&mut self, key: &str, default: T, from: impl Fn(&str) -> Option<T>) -> Result<T> {
        match self.take(key) {
            None => Ok(default),
            Some((v, line)) => from(&v).ok_or_else(|| bad(line, format!("invalid value for `{key}`: {v}"))),
        }
    }

    fn pair(&mut self, key: &str, default: [f64; 2]) -> Result<[f64; 2]> {
        match self.take(key) {
            None => Ok(default),
            Some((v, line)) => {
                let p: Vec<f64> = v
                    .split_whitespace()
                    .map(|s| s.parse())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad(line, format!("invalid value for `{key}`: {v}")))?;
                <[f64; 2]>::try_from(p).map_err(|_| bad(line, format!("`{key}` needs two numbers")))
            }
        }
    }

    fn finish(self) -> Result<()> {
        match self.entries.into_iter().min_by_key(|(_, (_, line))| *line) {
            None => Ok(()),
            Some((k, (_, line))) => Err(bad(line, format!("unknown key `{k}` in [{}]", self.name))),
        }
    }
}

fn reader<'a>(sections: &mut BTreeMap<String, Section>, name: &'a str) -> Reader<'a> {
    Reader { name, entries: sections.remove(name).unwrap_or_default() }
}

fn read_shape(r: &mut Reader, default: &InclusionShape) -> Result<InclusionShape> {
    let kind = r.named("shape", default.kind, |s| match s {
        "circle" => Some(InclusionKind::Circle),
        "ellipse" => Some(InclusionKind::Ellipse),
        _ => None,
    })?;
    let center = r.pair("center", default.center)?;
    let shape = match kind {
        InclusionKind::Circle => {
            if let Some((_, line)) = r.take("semi_axes") {
                return Err(bad(line, "a circle takes `radius`, not `semi_axes`"));
            }
            InclusionShape::circle(center, r.parse("radius", default.semi_axes[0])?)
        }
        InclusionKind::Ellipse => {
            if let Some((_, line)) = r.take("radius") {
                return Err(bad(line, "an ellipse takes `semi_axes`, not `radius`"));
            }
            InclusionShape::ellipse(center, r.pair("semi_axes", default.semi_axes)?)
        }
    };
    shape.validate()?;
    Ok(shape)
}

enum Source {
    Generate(f64, InclusionShape),
    Load(PathBuf),
}

fn read_source(r: &mut Reader, default_shape: &InclusionShape) -> Result<Source> {
    let (kind, line) = r.take("source").unwrap_or_else(|| ("generate".into(), 0));
    match kind.as_str() {
        "generate" => {
            if let Some((_, l)) = r.take("path") {
                return Err(bad(l, format!("[{}] generates its mesh; `path` is not allowed", r.name)));
            }
            let h = r.parse("h", DEFAULT_H)?;
            Ok(Source::Generate(h, read_shape(r, default_shape)?))
        }
        "load" => {
            let (path, l) = r.take("path").ok_or_else(|| bad(line, format!("[{}] source = load needs `path`", r.name)))?;
            for key in ["h", "shape", "center", "radius", "semi_axes"] {
                if r.take(key).is_some() {
                    return Err(bad(l, format!("[{}] loads from a file; `{key}` is not allowed", r.name)));
                }
            }
            Ok(Source::Load(PathBuf::from(path)))
        }
        other => Err(bad(line, format!("unknown source `{other}` (expected generate or load)"))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections = split_sections(text)?;
        let d = RunConfig::default();

        let mut r = reader(&mut sections, "problem");
        let problem = ProblemConfig {
            alpha: r.parse("alpha", d.problem.alpha)?,
            mu_in: r.parse("mu_in", d.problem.mu_in)?,
            mu_out: r.parse("mu_out", d.problem.mu_out)?,
            mutation: r.named("mutation", d.problem.mutation, Mutation::from_name)?,
        };
        r.finish()?;

        let mut r = reader(&mut sections, "schedule");
        let s = d.schedule;
        let schedule = Schedule {
            n_gradient_iters: r.parse("n_gradient_iters", s.n_gradient_iters)?,
            gradient_step: r.parse("gradient_step", s.gradient_step)?,
            newton_step: r.parse("newton_step", s.newton_step)?,
            max_iters: r.parse("max_iters", s.max_iters)?,
            eps1: r.parse("eps1", s.eps1)?,
            eps2: r.parse("eps2", s.eps2)?,
            tol_v: r.parse("tol_v", s.tol_v)?,
            line_search: r.named("line_search", s.line_search, LineSearch::from_name)?,
            state_update: r.named("state_update", s.state_update, StateUpdate::from_name)?,
            eps_decrease: r.named("eps_decrease", s.eps_decrease, |v| match v {
                "none" => Some(None),
                _ => v.parse().ok().map(Some),
            })?,
            residual_norm: r.named("residual_norm", s.residual_norm, ResidualNorm::from_name)?,
            newton_fallback: r.named("newton_fallback", s.newton_fallback, NewtonFallback::from_name)?,
        };
        r.finish()?;

        let mut r = reader(&mut sections, "mesh");
        let mesh = match read_source(&mut r, &initial_shape())? {
            Source::Generate(h, shape) => MeshSource::Generate { h, shape },
            Source::Load(path) => MeshSource::Load { path },
        };
        r.finish()?;

        let mut r = reader(&mut sections, "target");
        let target = match read_source(&mut r, &target_shape())? {
            Source::Generate(h, shape) => TargetSource::Generate { h, shape },
            Source::Load(path) => TargetSource::Load { path },
        };
        r.finish()?;

        let mut r = reader(&mut sections, "run");
        let output_dir = r.take("output_dir").map(|(v, _)| PathBuf::from(v)).unwrap_or(d.output_dir);
        let seed = r.parse("seed", d.seed)?;
        let emit_vtk = r.parse("emit_vtk", d.emit_vtk)?;
        r.finish()?;

        let cfg = RunConfig { problem, schedule, mesh, target, output_dir, seed, emit_vtk };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        self.schedule.validate()?;
        for (what, h) in [
            ("mesh", match &self.mesh {
                MeshSource::Generate { h, .. } => Some(*h),
                MeshSource::Load { .. } => None,
            }),
            ("target", match &self.target {
                TargetSource::Generate { h, .. } => Some(*h),
                TargetSource::Load { .. } => None,
            }),
        ] {
            if let Some(h) = h {
                if !(h > 0.0 && h < 0.5) {
                    return Err(Error::InvalidArgument(format!("{what} h must lie in (0, 0.5), got {h}")));
                }
            }
        }
        Ok(())
    }

    /// Full configuration text; `parse(serialize())` reproduces `self`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let p = &self.problem;
        let _ = writeln!(s, "[problem]");
        let _ = writeln!(s, "alpha = {:e}", p.alpha);
        let _ = writeln!(s, "mu_in = {:e}", p.mu_in);
        let _ = writeln!(s, "mu_out = {:e}", p.mu_out);
        let _ = writeln!(s, "mutation = {}", p.mutation.name());
        let q = &self.schedule;
        let _ = writeln!(s, "\n[schedule]");
        let _ = writeln!(s, "n_gradient_iters = {}", q.n_gradient_iters);
        let _ = writeln!(s, "gradient_step = {:e}", q.gradient_step);
        let _ = writeln!(s, "newton_step = {:e}", q.newton_step);
        let _ = writeln!(s, "max_iters = {}", q.max_iters);
        let _ = writeln!(s, "eps1 = {:e}", q.eps1);
        let _ = writeln!(s, "eps2 = {:e}", q.eps2);
        let _ = writeln!(s, "tol_v = {:e}", q.tol_v);
        let _ = writeln!(s, "line_search = {}", q.line_search.name());
        let _ = writeln!(s, "state_update = {}", q.state_update.name());
        match q.eps_decrease {
            None => {
                let _ = writeln!(s, "eps_decrease = none");
            }
            Some(c) => {
                let _ = writeln!(s, "eps_decrease = {c:e}");
            }
        }
        let _ = writeln!(s, "residual_norm = {}", q.residual_norm.name());
        let _ = writeln!(s, "newton_fallback = {}", q.newton_fallback.name());
        let write_shape = |s: &mut String, shape: &InclusionShape| {
            let [cx, cy] = shape.center;
            match shape.kind {
                InclusionKind::Circle => {
                    let _ = writeln!(s, "shape = circle\ncenter = {cx:e} {cy:e}\nradius = {:e}", shape.semi_axes[0]);
                }
                InclusionKind::Ellipse => {
                    let [a, b] = shape.semi_axes;
                    let _ = writeln!(s, "shape = ellipse\ncenter = {cx:e} {cy:e}\nsemi_axes = {a:e} {b:e}");
                }
            }
        };
        let _ = writeln!(s, "\n[mesh]");
        match &self.mesh {
            MeshSource::Generate { h, shape } => {
                let _ = writeln!(s, "source = generate\nh = {h:e}");
                write_shape(&mut s, shape);
            }
            MeshSource::Load { path } => {
                let _ = writeln!(s, "source = load\npath = {}", path.display());
            }
        }
        let _ = writeln!(s, "\n[target]");
        match &self.target {
            TargetSource::Generate { h, shape } => {
                let _ = writeln!(s, "source = generate\nh = {h:e}");
                write_shape(&mut s, shape);
            }
            TargetSource::Load { path } => {
                let _ = writeln!(s, "source = load\npath = {}", path.display());
            }
        }
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "emit_vtk = {}", self.emit_vtk);
        s
    }
}

/// One `[section] key = value` assignment layered over a configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Override {
    pub section: String,
    pub key: String,
    pub value: String,
}

impl Override {
    pub fn new(section: &str, key: &str, value: impl Into<String>) -> Self {
        Override { section: section.into(), key: key.into(), value: value.into() }
    }

    /// Parses `section.key=value`.
    pub fn parse(s: &str) -> Result<Self> {
        let (path, value) = s.split_once('=').ok_or_else(|| bad(0, format!("expected section.key=value, got `{s}`")))?;
        let (section, key) = path.trim().split_once('.').ok_or_else(|| bad(0, format!("expected section.key, got `{path}`")))?;
        Ok(Override::new(section.trim(), key.trim(), value.trim()))
    }
}

const SHAPE_KEYS: [&str; 5] = ["h", "shape", "center", "radius", "semi_axes"];

impl RunConfig {
    /// Applies assignments in order and re-validates. Setting `path` on
    /// `[mesh]` or `[target]` switches that source to `load`; setting any
    /// of `h`, `shape`, `center`, `radius`, `semi_axes` switches it to
    /// `generate`. Changing `shape` drops the size keys of the old shape.
    pub fn with_overrides(&self, overrides: &[Override]) -> Result<Self> {
        let mut sections: Vec<(String, Vec<(String, String)>)> = Vec::new();
        for line in self.serialize().lines() {
            let t = line.trim();
            if let Some(name) = t.strip_prefix('[').and_then(|n| n.strip_suffix(']')) {
                sections.push((name.to_string(), Vec::new()));
            } else if let Some((k, v)) = t.split_once('=') {
                sections.last_mut().expect("serialized text starts with a section").1.push((k.trim().into(), v.trim().into()));
            }
        }
        for o in overrides {
            let (_, entries) = sections
                .iter_mut()
                .find(|(n, _)| *n == o.section)
                .ok_or_else(|| bad(0, format!("unknown section [{}]", o.section)))?;
            let set = |entries: &mut Vec<(String, String)>, k: &str, v: &str| match entries.iter_mut().find(|(key, _)| key == k) {
                Some(e) => e.1 = v.to_string(),
                None => entries.push((k.to_string(), v.to_string())),
            };
            if o.section == "mesh" || o.section == "target" {
                if o.key == "path" {
                    entries.retain(|(k, _)| !SHAPE_KEYS.contains(&k.as_str()));
                    set(entries, "source", "load");
                } else if SHAPE_KEYS.contains(&o.key.as_str()) {
                    if entries.iter().any(|(k, v)| k == "source" && v == "load") {
                        entries.retain(|(k, _)| k != "path");
                        set(entries, "source", "generate");
                    }
                    if o.key == "shape" {
                        entries.retain(|(k, _)| k != "radius" && k != "semi_axes");
                    }
                }
            }
            set(entries, &o.key, &o.value);
        }
        let mut text = String::new();
        for (name, entries) in &sections {
            let _ = writeln!(text, "[{name}]");
            for (k, v) in entries {
                let _ = writeln!(text, "{k} = {v}");
            }
        }
        RunConfig::parse(&text)
    }
}

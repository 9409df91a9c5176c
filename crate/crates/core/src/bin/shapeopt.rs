use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use sha2::{Digest, Sha256};

use shapeopt::config::{MeshSource, Override, RunConfig, TargetSource};
use shapeopt::driver::{run_two_phase_with, Termination};
use shapeopt::history::{HistoryRow, HistoryWriter};
use shapeopt::mesh::{generate_mesh_with, load_vtk, save_vtk, InclusionKind, InclusionShape, Mesh, MeshOptions};
use shapeopt::model::{make_target_for, Mutation, TargetField};
use shapeopt::pseudoinverse::{epsilon_table, random_singular_system};
use shapeopt::verify::{self, VerifyOptions};
use shapeopt::{Error, Result};

#[derive(Parser)]
#[command(name = "shapeopt", version, about = "Shape optimization in deformation space for 2D interface identification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the state equation on the target inclusion and write it as VTK
    /// together with a JSON metadata sidecar.
    GenerateTarget {
        #[command(flatten)]
        run: RunArgs,
        /// Output file; defaults to `<output_dir>/target.vtk`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the gradient/Newton schedule and write history.txt and VTK meshes.
    Optimize {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the oracle suites and print a JSON report.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "none")]
        mutation: String,
        /// Resolution of the test meshes.
        #[arg(long, default_value_t = 0.1)]
        h: f64,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the ε-convergence table of a random singular system.
    PseudoDemo {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        rank: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// `--config` plus one flag per configuration key; flags win over the file.
#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Generic `section.key=value` assignment, repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    sets: Vec<String>,

    #[arg(long, help_heading = "problem")]
    alpha: Option<String>,
    #[arg(long, help_heading = "problem")]
    mu_in: Option<String>,
    #[arg(long, help_heading = "problem")]
    mu_out: Option<String>,
    #[arg(long, help_heading = "problem")]
    mutation: Option<String>,

    #[arg(long, help_heading = "schedule")]
    n_gradient_iters: Option<String>,
    #[arg(long, help_heading = "schedule")]
    gradient_step: Option<String>,
    #[arg(long, help_heading = "schedule")]
    newton_step: Option<String>,
    #[arg(long, help_heading = "schedule")]
    max_iters: Option<String>,
    #[arg(long, help_heading = "schedule")]
    eps1: Option<String>,
    #[arg(long, help_heading = "schedule")]
    eps2: Option<String>,
    #[arg(long, help_heading = "schedule")]
    tol_v: Option<String>,
    #[arg(long, help_heading = "schedule")]
    line_search: Option<String>,
    #[arg(long, help_heading = "schedule")]
    state_update: Option<String>,
    #[arg(long, help_heading = "schedule")]
    eps_decrease: Option<String>,
    #[arg(long, help_heading = "schedule")]
    residual_norm: Option<String>,
    #[arg(long, help_heading = "schedule")]
    newton_fallback: Option<String>,

    /// Generate the working mesh at this resolution.
    #[arg(long, help_heading = "mesh")]
    mesh_h: Option<String>,
    /// Load the working mesh from a VTK file.
    #[arg(long, help_heading = "mesh")]
    mesh_path: Option<String>,
    /// Generate the target at this resolution.
    #[arg(long, help_heading = "target")]
    target_h: Option<String>,
    /// Load the target from a VTK file with point scalar `z`.
    #[arg(long, help_heading = "target")]
    target_path: Option<String>,

    #[arg(long, help_heading = "run")]
    output_dir: Option<String>,
    #[arg(long, help_heading = "run")]
    seed: Option<String>,
    #[arg(long, help_heading = "run")]
    emit_vtk: Option<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let named = [
            ("problem", "alpha", &self.alpha),
            ("problem", "mu_in", &self.mu_in),
            ("problem", "mu_out", &self.mu_out),
            ("problem", "mutation", &self.mutation),
            ("schedule", "n_gradient_iters", &self.n_gradient_iters),
            ("schedule", "gradient_step", &self.gradient_step),
            ("schedule", "newton_step", &self.newton_step),
            ("schedule", "max_iters", &self.max_iters),
            ("schedule", "eps1", &self.eps1),
            ("schedule", "eps2", &self.eps2),
            ("schedule", "tol_v", &self.tol_v),
            ("schedule", "line_search", &self.line_search),
            ("schedule", "state_update", &self.state_update),
            ("schedule", "eps_decrease", &self.eps_decrease),
            ("schedule", "residual_norm", &self.residual_norm),
            ("schedule", "newton_fallback", &self.newton_fallback),
            ("mesh", "h", &self.mesh_h),
            ("mesh", "path", &self.mesh_path),
            ("target", "h", &self.target_h),
            ("target", "path", &self.target_path),
            ("run", "output_dir", &self.output_dir),
            ("run", "seed", &self.seed),
            ("run", "emit_vtk", &self.emit_vtk),
        ];
        let mut overrides = self.sets.iter().map(|s| Override::parse(s)).collect::<Result<Vec<_>>>()?;
        overrides.extend(named.iter().filter_map(|(s, k, v)| v.as_ref().map(|v| Override::new(s, k, v.as_str()))));
        base.with_overrides(&overrides)
    }
}

fn sha256_hex(path: &Path) -> Result<String> {
    let digest = Sha256::digest(fs::read(path)?);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn shape_json(s: &InclusionShape) -> serde_json::Value {
    let kind = match s.kind {
        InclusionKind::Circle => "circle",
        InclusionKind::Ellipse => "ellipse",
    };
    json!({ "kind": kind, "center": s.center, "semi_axes": s.semi_axes })
}

fn generate_target(cfg: &RunConfig, out: Option<PathBuf>) -> Result<()> {
    let TargetSource::Generate { h, shape } = &cfg.target else {
        return Err(Error::InvalidArgument("generate-target needs [target] source = generate".into()));
    };
    fs::create_dir_all(&cfg.output_dir)?;
    let path = out.unwrap_or_else(|| cfg.output_dir.join("target.vtk"));
    let mesh_seed = cfg.seed.wrapping_add(1);
    let target = make_target_for(&cfg.problem, shape, *h, &MeshOptions { seed: mesh_seed })?;
    target.save(&path)?;
    let meta = json!({
        "file": path.file_name().map(|f| f.to_string_lossy().into_owned()),
        "sha256": sha256_hex(&path)?,
        "vertices": target.mesh().num_vertices(),
        "triangles": target.mesh().num_triangles(),
        "parameters": {
            "alpha": cfg.problem.alpha,
            "mu_in": cfg.problem.mu_in,
            "mu_out": cfg.problem.mu_out,
            "h": h,
            "shape": shape_json(shape),
            "mesh_seed": mesh_seed,
        },
        "config": cfg.serialize(),
    });
    let sidecar = path.with_extension("json");
    fs::write(&sidecar, serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n")?;
    eprintln!("wrote {} and {}", path.display(), sidecar.display());
    Ok(())
}

fn working_mesh(cfg: &RunConfig) -> Result<Mesh> {
    match &cfg.mesh {
        MeshSource::Generate { h, shape } => generate_mesh_with(shape, *h, &MeshOptions { seed: cfg.seed }),
        MeshSource::Load { path } => Ok(load_vtk(path)?.mesh),
    }
}

fn target_field(cfg: &RunConfig) -> Result<TargetField> {
    match &cfg.target {
        TargetSource::Generate { h, shape } => {
            make_target_for(&cfg.problem, shape, *h, &MeshOptions { seed: cfg.seed.wrapping_add(1) })
        }
        TargetSource::Load { path } => TargetField::load(path),
    }
}

/// Returns whether the run ended without diverging or failing.
fn optimize(cfg: &RunConfig) -> Result<bool> {
    fs::create_dir_all(&cfg.output_dir)?;
    let dir = &cfg.output_dir;
    fs::write(dir.join("config.txt"), cfg.serialize())?;
    let mesh = working_mesh(cfg)?;
    let target = target_field(cfg)?;
    let mut history = HistoryWriter::create(dir.join("history.txt"))?;
    let start = Instant::now();
    let outcome = run_two_phase_with(&mesh, &cfg.problem, &target, &cfg.schedule, |rec, m, s| {
        history.push(&HistoryRow::from(rec))?;
        if cfg.emit_vtk {
            save_vtk(
                dir.join(format!("iter_{:04}.vtk", rec.k)),
                m,
                &[("u", s.u.values()), ("lambda", s.lambda.values()), ("z", s.target.z.values())],
                &[],
            )?;
        }
        Ok(())
    })?;
    let s = &outcome.snapshot;
    save_vtk(
        dir.join("final.vtk"),
        &outcome.mesh,
        &[("u", s.u.values()), ("lambda", s.lambda.values()), ("z", s.target.z.values())],
        &[],
    )?;
    history.comment(&format!(
        "termination: {}\nvertices: {}\ntriangles: {}\nruntime_s: {:.3}",
        outcome.termination.describe(),
        mesh.num_vertices(),
        mesh.num_triangles(),
        start.elapsed().as_secs_f64()
    ))?;
    let last = outcome.history.last();
    eprintln!(
        "{} after {} iterations, J = {:e}, residual = {:e}",
        outcome.termination.describe(),
        last.map_or(0, |r| r.k),
        last.map_or(f64::NAN, |r| r.objective),
        last.map_or(f64::NAN, |r| r.residual)
    );
    Ok(matches!(outcome.termination, Termination::Converged | Termination::MaxIterations))
}

fn run_verify(seed: u64, mutation: &str, h: f64, out: Option<PathBuf>) -> Result<bool> {
    let mutation =
        Mutation::from_name(mutation).ok_or_else(|| Error::InvalidArgument(format!("unknown mutation `{mutation}`")))?;
    let report = verify::run(&VerifyOptions { seed, mutation, h })?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    if let Some(p) = out {
        fs::write(p, text + "\n")?;
    }
    for c in &report.checks {
        eprintln!("{} {} ({:e} vs {:e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.threshold);
    }
    Ok(report.passed)
}

fn pseudo_demo(n: usize, rank: usize, seed: u64) -> Result<()> {
    if rank == 0 || rank >= n {
        return Err(Error::InvalidArgument(format!("rank must lie in 1..{n}, got {rank}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, ms, b) = random_singular_system(&mut rng, n, rank)?;
    let eps: Vec<f64> = (1..=6).map(|k| 10f64.powi(-k)).collect();
    let t = epsilon_table(&h, &b, &ms, &eps)?;
    println!("# n = {n}, rank = {rank}, smallest positive eigenvalue = {:e}", t.sigma_min);
    println!("# |V_hat|_g = {:e}", ms.norm(&t.min_norm));
    println!("eps error bound ratio null_component");
    for r in &t.rows {
        let ratio = r.ratio.map_or("-".to_string(), |x| format!("{x:.4}"));
        println!("{:e} {:e} {:e} {ratio} {:e}", r.eps, r.error, r.bound, r.null_component);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenerateTarget { run, out } => run.resolve().and_then(|c| generate_target(&c, out)).map(|_| true),
        Command::Optimize { run } => run.resolve().and_then(|c| optimize(&c)),
        Command::Verify { seed, mutation, h, out } => run_verify(seed, &mutation, h, out),
        Command::PseudoDemo { n, rank, seed } => pseudo_demo(n, rank, seed).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

use std::path::Path;
use std::process::{Command, Output};

use shapeopt::config::RunConfig;
use shapeopt::driver::StepMode;
use shapeopt::history::History;
use shapeopt::model::TargetField;

fn shapeopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shapeopt")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_target_is_reproducible_and_has_a_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.vtk"), dir.path().join("b.vtk"));
    for out in [&a, &b] {
        let o = shapeopt(&["generate-target", "--target-h", "0.1", "--out", path(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let t = TargetField::load(&a).unwrap();
    assert!(t.mesh().num_vertices() > 50);

    let side: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("a.json")).unwrap()).unwrap();
    let sha = side["sha256"].as_str().unwrap();
    assert_eq!(sha.len(), 64);
    assert!(sha.chars().all(|c| c.is_ascii_hexdigit()));
    assert_eq!(side["vertices"].as_u64().unwrap() as usize, t.mesh().num_vertices());
    assert_eq!(side["parameters"]["h"].as_f64().unwrap(), 0.1);
}

#[test]
fn optimize_with_zero_iterations_writes_only_the_initial_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = shapeopt(&[
        "optimize", "--mesh-h", "0.1", "--target-h", "0.1", "--max-iters", "0", "--n-gradient-iters", "0",
        "--output-dir", path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let h = History::load(out.join("history.txt")).unwrap();
    assert_eq!(h.rows.len(), 1);
    assert_eq!((h.rows[0].k, h.rows[0].mode), (0, StepMode::Stop));
    assert!(out.join("final.vtk").exists());
}

#[test]
fn optimize_from_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = format!(
        "[schedule]\nn_gradient_iters = 2\nmax_iters = 4\n\n[mesh]\nh = 0.1\n\n[target]\nh = 0.1\n\n[run]\noutput_dir = {}\nemit_vtk = true\n",
        path(&out)
    );
    let file = dir.path().join("run.cfg");
    std::fs::write(&file, cfg).unwrap();
    let o = shapeopt(&["optimize", "--config", path(&file), "--set", "schedule.eps1=0.05"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let h = History::load(out.join("history.txt")).unwrap();
    assert_eq!(h.rows.len(), 5);
    let modes: Vec<StepMode> = h.rows.iter().map(|r| r.mode).collect();
    assert_eq!(modes[..2], [StepMode::Gradient; 2]);
    assert_eq!(modes[4], StepMode::Stop);
    assert!(h.comments.iter().any(|c| c.starts_with("termination: max-iterations")));
    assert!(h.rows[4].objective < h.rows[0].objective);
    for k in 0..=4 {
        assert!(out.join(format!("iter_{k:04}.vtk")).exists());
    }
    let saved = RunConfig::load(out.join("config.txt")).unwrap();
    assert_eq!(saved.schedule.eps1, 0.05);
    assert_eq!(saved.schedule.max_iters, 4);
}

#[test]
fn bad_input_is_an_error() {
    assert_eq!(shapeopt(&["optimize", "--set", "schedule.nope=1"]).status.code(), Some(1));
    assert_eq!(shapeopt(&["optimize", "--eps1=-1"]).status.code(), Some(1));
    assert!(!shapeopt(&["frobnicate"]).status.success());
}

#[test]
fn verify_passes_and_catches_a_mutation() {
    let o = shapeopt(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["checks"].as_array().unwrap().len(), 7);

    let o = shapeopt(&["verify", "--mutation", "flip-hessian-term"]);
    assert_eq!(o.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"fd_hessian"), "{failed:?}");
    assert!(!failed.contains(&"fd_gradient"));
}

#[test]
fn pseudo_demo_prints_the_convergence_table() {
    let o = shapeopt(&["pseudo-demo", "--n", "10", "--rank", "4", "--seed", "3"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().filter(|l| !l.starts_with('#')).map(|l| l.split_whitespace().collect()).collect();
    assert_eq!(rows[0], ["eps", "error", "bound", "ratio", "null_component"]);
    // ε steps by decades, so the error ratio tends to 0.1.
    let ratios: Vec<f64> = rows[2..].iter().map(|r| r[3].parse().unwrap()).collect();
    assert!((ratios.last().unwrap() - 0.1).abs() < 1e-3, "{ratios:?}");
    for r in &rows[1..] {
        assert!(r[1].parse::<f64>().unwrap() <= r[2].parse::<f64>().unwrap());
    }
    assert!(!shapeopt(&["pseudo-demo", "--n", "3", "--rank", "3"]).status.success());
}

#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shapeopt::mesh::{generate_mesh_with, Mesh, MeshOptions};
use shapeopt::model::{initial_shape, make_target_with, ProblemConfig, TargetField};

pub const ELLIPSE_AREA: f64 = std::f64::consts::PI * 0.25 * 0.125;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn circle_mesh(h: f64) -> Mesh {
    generate_mesh_with(&initial_shape(), h, &MeshOptions { seed: 0 }).unwrap()
}

pub fn ellipse_target(h: f64) -> TargetField {
    make_target_with(&ProblemConfig::default(), h, &MeshOptions { seed: 1 }).unwrap()
}

/// Distance from `p` to the ellipse `((x−0.5)/0.25)² + ((y−0.5)/0.125)² = 1`,
/// by dense sampling of the boundary followed by a golden-section refinement.
pub fn distance_to_target_ellipse(p: [f64; 2]) -> f64 {
    let at = |th: f64| {
        let (x, y) = (0.5 + 0.25 * th.cos(), 0.5 + 0.125 * th.sin());
        (x - p[0]).hypot(y - p[1])
    };
    let n = 720;
    let step = std::f64::consts::TAU / n as f64;
    let k = (0..n).min_by(|&a, &b| at(a as f64 * step).total_cmp(&at(b as f64 * step))).unwrap();
    let (mut a, mut b) = ((k as f64 - 1.0) * step, (k as f64 + 1.0) * step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if at(c) < at(d) {
            b = d;
        } else {
            a = c;
        }
    }
    at(0.5 * (a + b))
}

/// Shoelace area of a closed polygon.
pub fn polygon_area(p: &[[f64; 2]]) -> f64 {
    let n = p.len();
    0.5 * (0..n).map(|i| p[i][0] * p[(i + 1) % n][1] - p[(i + 1) % n][0] * p[i][1]).sum::<f64>().abs()
}

//! Krylov fallbacks: preconditioned CG for SPD systems and preconditioned
//! MINRES for symmetric indefinite ones. Both take a symmetric positive
//! definite diagonal preconditioner.

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOutcome {
    pub iterations: usize,
    /// Final relative residual `‖b − Ax‖ / ‖b‖`.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Conjugate gradients on `A x = b` starting from `x`.
pub fn conjugate_gradient<F>(apply: F, precond: &[f64], b: &[f64], x: &mut [f64], rtol: f64, max_iter: usize) -> KrylovOutcome
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let ax = apply(x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z: Vec<f64> = r.iter().zip(precond).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut it = 0;
    while it < max_iter && norm(&r) > rtol * bnorm {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..z.len() {
            z[i] = r[i] / precond[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
    }
    let rel = norm(&r) / bnorm;
    KrylovOutcome { iterations: it, relative_residual: rel, converged: rel <= rtol }
}

/// Preconditioned MINRES on a symmetric (possibly indefinite) `A x = b`.
pub fn minres<F>(apply: F, precond: &[f64], b: &[f64], x: &mut [f64], rtol: f64, max_iter: usize) -> KrylovOutcome
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let ax = apply(x);
    let r0: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z: Vec<f64> = r0.iter().zip(precond).map(|(r, d)| r / d).collect();
    let mut beta = dot(&r0, &z).sqrt();
    if beta == 0.0 {
        return KrylovOutcome { iterations: 0, relative_residual: norm(&r0) / bnorm, converged: true };
    }
    let mut r1 = r0.clone();
    let mut r2 = r0;
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let (mut oldb, mut dbar, mut epsln) = (0.0, 0.0, 0.0);
    let (mut cs, mut sn) = (-1.0, 0.0);
    let mut phibar = beta;
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let s = 1.0 / beta;
        let v: Vec<f64> = z.iter().map(|y| s * y).collect();
        let mut y = apply(&v);
        if it >= 2 {
            for i in 0..n {
                y[i] -= (beta / oldb) * r1[i];
            }
        }
        let alfa = dot(&v, &y);
        for i in 0..n {
            y[i] -= (alfa / beta) * r2[i];
        }
        r1 = std::mem::replace(&mut r2, y);
        z = r2.iter().zip(precond).map(|(r, d)| r / d).collect();
        oldb = beta;
        beta = dot(&r2, &z).max(0.0).sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::MIN_POSITIVE);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let w1 = std::mem::replace(&mut w2, w.clone());
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
            x[i] += phi * w[i];
        }
        if beta == 0.0 {
            break;
        }
        // phibar tracks the preconditioned residual; confirm with the true one.
        if phibar.abs() <= rtol * bnorm * 1e-2 || it % 25 == 0 {
            let ax = apply(x);
            let res = b.iter().zip(&ax).map(|(b, a)| (b - a).powi(2)).sum::<f64>().sqrt();
            if res <= rtol * bnorm {
                return KrylovOutcome { iterations: it, relative_residual: res / bnorm, converged: true };
            }
        }
    }
    let ax = apply(x);
    let rel = b.iter().zip(&ax).map(|(b, a)| (b - a).powi(2)).sum::<f64>().sqrt() / bnorm;
    KrylovOutcome { iterations: it, relative_residual: rel, converged: rel <= rtol }
}

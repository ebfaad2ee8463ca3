//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's derivative code.
#![allow(dead_code)]

use svgd::kernels::{Kernel, KernelFamily};
use svgd::targets::Target;
use svgd::ParticleEnsemble;

pub fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `|a - b| / max(|b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

pub fn rel_err_vec(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(b).max(floor)
}

pub fn central_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + step;
            let up = f(&p);
            p[i] = x[i] - step;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Divergence in `y` of `∇₁k(x, y)` by central differences of `grad1`.
pub fn central_mixed_trace(kernel: &Kernel, x: &[f64], y: &[f64], step: f64) -> f64 {
    let mut p = y.to_vec();
    let mut acc = 0.0;
    for i in 0..y.len() {
        p[i] = y[i] + step;
        let up = kernel.grad1(x, &p).unwrap()[i];
        p[i] = y[i] - step;
        let down = kernel.grad1(x, &p).unwrap()[i];
        p[i] = y[i];
        acc += (up - down) / (2.0 * step);
    }
    acc
}

/// `(k, ∇₁k, tr ∇₁∇₂k)` written out per family.
pub fn closed_form(kernel: &Kernel, x: &[f64], y: &[f64]) -> (f64, Vec<f64>, f64) {
    let d = x.len() as f64;
    let r2 = sq_dist(x, y);
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    match kernel.family() {
        KernelFamily::Rbf { bandwidth: h } => {
            let h2 = h * h;
            let k = (-r2 / (2.0 * h2)).exp();
            let g = diff.iter().map(|v| -v / h2 * k).collect();
            let tr = (d / h2 - r2 / (h2 * h2)) * k;
            (k, g, tr)
        }
        KernelFamily::Imq {
            offset: c,
            exponent: b,
        } => {
            let u = c * c + r2;
            let k = u.powf(b);
            let g = diff.iter().map(|v| 2.0 * b * u.powf(b - 1.0) * v).collect();
            let tr = -2.0 * d * b * u.powf(b - 1.0) - 4.0 * b * (b - 1.0) * u.powf(b - 2.0) * r2;
            (k, g, tr)
        }
    }
}

pub fn naive_stein_kernel(target: &dyn Target, kernel: &Kernel, x: &[f64], y: &[f64]) -> f64 {
    let sx = target.score(x).unwrap();
    let sy = target.score(y).unwrap();
    let (k, g_xy, tr) = closed_form(kernel, x, y);
    let (_, g_yx, _) = closed_form(kernel, y, x);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    tr + dot(&sy, &g_xy) + dot(&sx, &g_yx) + dot(&sx, &sy) * k
}

/// `(V, U)` statistics by the plain double loop.
pub fn naive_ksd(e: &ParticleEnsemble, target: &dyn Target, kernel: &Kernel) -> (f64, f64) {
    let pts: Vec<&[f64]> = e.points().collect();
    let n = pts.len() as f64;
    let (mut total, mut diag) = (0.0, 0.0);
    for (i, x) in pts.iter().enumerate() {
        for (j, y) in pts.iter().enumerate() {
            let u = naive_stein_kernel(target, kernel, x, y);
            total += u;
            if i == j {
                diag += u;
            }
        }
    }
    (total / (n * n), (total - diag) / (n * (n - 1.0)))
}

/// SVGD field by the plain double loop.
pub fn naive_direction(
    e: &ParticleEnsemble,
    target: &dyn Target,
    kernel: &Kernel,
) -> Vec<Vec<f64>> {
    let pts: Vec<&[f64]> = e.points().collect();
    let n = pts.len() as f64;
    pts.iter()
        .map(|xi| {
            let mut g = vec![0.0; xi.len()];
            for xj in &pts {
                let s = target.score(xj).unwrap();
                let (k, grad, _) = closed_form(kernel, xj, xi);
                for a in 0..g.len() {
                    g[a] += (s[a] * k + grad[a]) / n;
                }
            }
            g
        })
        .collect()
}

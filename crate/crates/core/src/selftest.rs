//! Built-in correctness checks: finite-difference oracles for kernel and
//! score derivatives, brute-force Stein discrepancy, Wasserstein axioms and
//! sampler fixed points. Output is deterministic.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::diagnostics::{
    ksd_squared, ksd_squared_rkhs_form, stein_kernel, w2_squared_1d, w2_squared_1d_unequal,
    w2_squared_assignment, KsdMode,
};
use crate::error::Result;
use crate::kernels::{Kernel, PairKernel};
use crate::rng;
use crate::svgd::{svgd_direction, svgd_step, FIELD_BOUND_TOL};
use crate::targets::{GaussianTarget, Target, TargetSpec};
use crate::ParticleEnsemble;

/// Step of the central differences.
pub const FD_STEP: f64 = 1e-5;
/// Relative tolerance against the finite-difference oracles.
pub const FD_TOL: f64 = 1e-6;
const SEED: u64 = 0x5e1f_7e57;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    fn from_result(name: impl Into<String>, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(name, passed, detail),
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn render(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{status}  {:width$}  {}\n", c.name, c.detail));
        }
        out.push_str(&format!(
            "{} checks, {} failed\n",
            self.checks.len(),
            self.failures()
        ));
        out
    }
}

/// `|a - b| / max(|b|, floor)`.
fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

fn rel_err_vec(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / scale.max(floor)
}

fn random_points(rng: &mut impl Rng, count: usize, d: usize, sd: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            (0..d)
                .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect()
}

/// Central-difference gradient of `f` at `x`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> Result<f64>, x: &[f64], step: f64) -> Result<Vec<f64>> {
    let mut p = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        p[i] = x[i] + step;
        let up = f(&p)?;
        p[i] = x[i] - step;
        let down = f(&p)?;
        p[i] = x[i];
        g[i] = (up - down) / (2.0 * step);
    }
    Ok(g)
}

/// Central-difference `Σᵢ ∂/∂yᵢ (∇₁k(x, y))ᵢ`.
pub fn fd_trace_grad12(kernel: &dyn PairKernel, x: &[f64], y: &[f64], step: f64) -> Result<f64> {
    let mut p = y.to_vec();
    let mut acc = 0.0;
    for i in 0..y.len() {
        p[i] = y[i] + step;
        let up = kernel.grad1(x, &p)?[i];
        p[i] = y[i] - step;
        let down = kernel.grad1(x, &p)?[i];
        p[i] = y[i];
        acc += (up - down) / (2.0 * step);
    }
    Ok(acc)
}

/// Derivative checks for any kernel implementation. The relative error is
/// taken against `max(|oracle|, 1e-3)` so values near zero are compared in
/// absolute terms.
pub fn kernel_checks(name: &str, kernel: &dyn PairKernel) -> Vec<Check> {
    let mut r = rng::stream(SEED, 1);
    let d = kernel.dim();
    let xs = random_points(&mut r, 20, d, 1.0);
    let ys = random_points(&mut r, 20, d, 1.0);
    let floor = 1e-3;

    let grad = (|| {
        let mut worst: f64 = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            let fd = fd_gradient(|p| kernel.eval(p, y), x, FD_STEP)?;
            worst = worst.max(rel_err_vec(&kernel.grad1(x, y)?, &fd, floor));
        }
        Ok((worst <= FD_TOL, format!("max rel err {worst:.2e}")))
    })();
    let trace = (|| {
        let mut worst: f64 = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            let fd = fd_trace_grad12(kernel, x, y, FD_STEP)?;
            worst = worst.max(rel_err(kernel.trace_grad12(x, y)?, fd, floor));
        }
        Ok((worst <= FD_TOL, format!("max rel err {worst:.2e}")))
    })();
    let symmetry = (|| {
        let mut worst: f64 = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            worst = worst.max((kernel.eval(x, y)? - kernel.eval(y, x)?).abs());
        }
        Ok((worst <= 1e-15, format!("max |k(x,y)-k(y,x)| {worst:.2e}")))
    })();
    vec![
        Check::from_result(format!("{name}: gradient vs central differences"), grad),
        Check::from_result(format!("{name}: mixed trace vs central differences"), trace),
        Check::from_result(format!("{name}: symmetry"), symmetry),
    ]
}

fn gram_check(name: &str, kernel: &Kernel) -> Check {
    let r = (|| {
        let mut rg = rng::stream(SEED, 2);
        let pts = random_points(&mut rg, 30, kernel.dim(), 1.5);
        let n = pts.len();
        let mut gram = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                gram[(i, j)] = kernel.eval(&pts[i], &pts[j])?;
            }
        }
        let min = gram.symmetric_eigenvalues().min();
        Ok((min >= -1e-10, format!("min eigenvalue {min:.2e}")))
    })();
    Check::from_result(format!("{name}: Gram matrix positive semidefinite"), r)
}

fn score_check(name: &str, target: &dyn Target, sd: f64) -> Check {
    let r = (|| {
        let mut rg = rng::stream(SEED, 3);
        let mut worst: f64 = 0.0;
        for x in random_points(&mut rg, 20, target.dim(), sd) {
            let fd = fd_gradient(|p| Ok(target.log_density_unnormalized(p)), &x, FD_STEP)?;
            worst = worst.max(rel_err_vec(&target.score(&x)?, &fd, 1e-3));
        }
        Ok((worst <= 1e-6, format!("max rel err {worst:.2e}")))
    })();
    Check::from_result(format!("{name}: score vs central differences"), r)
}

fn ksd_checks(name: &str, target: &dyn Target, kernel: &Kernel) -> Vec<Check> {
    let mut rg = rng::stream(SEED, 4);
    let pts = random_points(&mut rg, 40, target.dim(), 2.0);
    let brute = (|| {
        let e = ParticleEnsemble::from_rows(&pts)?;
        let n = pts.len() as f64;
        let (mut total, mut diag) = (0.0, 0.0);
        for (i, x) in pts.iter().enumerate() {
            for (j, y) in pts.iter().enumerate() {
                let u = stein_kernel(target, kernel, x, y)?;
                total += u;
                if i == j {
                    diag += u;
                }
            }
        }
        let v_ref = total / (n * n);
        let u_ref = (total - diag) / (n * (n - 1.0));
        let v = ksd_squared(&e, target, kernel, KsdMode::V)?;
        let u = ksd_squared(&e, target, kernel, KsdMode::U)?;
        let rkhs = ksd_squared_rkhs_form(&e, target, kernel)?;
        let ev = rel_err(v, v_ref, 1e-12);
        let eu = rel_err(u, u_ref, 1e-12);
        let er = rel_err(rkhs, v_ref, 1e-12);
        let worst = ev.max(eu).max(er);
        Ok((
            worst <= 1e-10 && v >= 0.0,
            format!("V {v:.6e}, U {u:.6e}, max rel err {worst:.2e}"),
        ))
    })();
    let field = (|| {
        let e = ParticleEnsemble::from_rows(&pts)?;
        let dir = svgd_direction(&e, target, kernel)?;
        let ksd = ksd_squared(&e, target, kernel, KsdMode::V)?;
        let d = e.dim();
        let max_norm = dir
            .chunks(d)
            .map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let bound = kernel.bound() * ksd.sqrt();
        Ok((
            max_norm <= bound + FIELD_BOUND_TOL,
            format!("max |g| {max_norm:.4e} <= B sqrt(KSD2) {bound:.4e}"),
        ))
    })();
    vec![
        Check::from_result(
            format!("{name}: Stein V/U statistics and RKHS form vs double loop"),
            brute,
        ),
        Check::from_result(format!("{name}: field norm bounded by B times KSD"), field),
    ]
}

fn wasserstein_checks() -> Vec<Check> {
    let mut rg = rng::stream(SEED, 5);
    let axioms = (|| {
        let draw = |rg: &mut _, n, shift: f64| -> Result<ParticleEnsemble> {
            let pts: Vec<f64> = random_points(rg, n, 1, 1.0)
                .into_iter()
                .map(|p| p[0] + shift)
                .collect();
            ParticleEnsemble::from_scalars(&pts)
        };
        let a = draw(&mut rg, 50, 0.0)?;
        let b = draw(&mut rg, 50, 1.0)?;
        let c = draw(&mut rg, 50, -0.5)?;
        let ab = w2_squared_1d(&a, &b)?;
        let ba = w2_squared_1d(&b, &a)?;
        let aa = w2_squared_1d(&a, &a)?;
        let ac = w2_squared_1d(&a, &c)?;
        let cb = w2_squared_1d(&c, &b)?;
        let triangle = ab.sqrt() <= ac.sqrt() + cb.sqrt() + 1e-12;
        let hung = w2_squared_assignment(&a, &b)?;
        let merged = w2_squared_1d_unequal(&a, &b)?;
        let agree = rel_err(hung, ab, 1e-12).max(rel_err(merged, ab, 1e-12));
        let ok = aa == 0.0 && ab == ba && triangle && agree <= 1e-10;
        Ok((
            ok,
            format!("W2^2 {ab:.6e}, identity {aa:.1e}, solvers agree to {agree:.1e}"),
        ))
    })();
    vec![Check::from_result(
        "wasserstein: identity, symmetry, triangle, solver agreement",
        axioms,
    )]
}

fn fixed_point_check() -> Check {
    let r = (|| {
        let target = GaussianTarget::isotropic(vec![1.0, -2.0], 0.7)?;
        let kernel = Kernel::rbf(1.0, 2)?;
        let e = ParticleEnsemble::from_rows(&[vec![1.0, -2.0]])?;
        let mut worst: f64 = 0.0;
        for gamma in [0.01, 0.1, 1.0] {
            let next = svgd_step(&e, &target, &kernel, gamma)?;
            for (a, b) in next.as_flat().iter().zip(e.as_flat()) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok((worst == 0.0, format!("max displacement {worst:.1e}")))
    })();
    Check::from_result("svgd: single particle at the mode is a fixed point", r)
}

/// Runs every built-in check plus derivative checks for `extra_kernels`.
pub fn run_with(extra_kernels: &[(&str, &dyn PairKernel)]) -> SelftestReport {
    let mut checks = Vec::new();
    let kernels: Vec<(String, Kernel)> = vec![
        ("rbf h=1 d=1".into(), Kernel::rbf(1.0, 1).unwrap()),
        ("rbf h=0.7 d=3".into(), Kernel::rbf(0.7, 3).unwrap()),
        (
            "imq c=1 b=-0.5 d=1".into(),
            Kernel::imq(1.0, -0.5, 1).unwrap(),
        ),
        (
            "imq c=0.8 b=-0.3 d=3".into(),
            Kernel::imq(0.8, -0.3, 3).unwrap(),
        ),
    ];
    for (name, k) in &kernels {
        checks.extend(kernel_checks(name, k));
        checks.push(gram_check(name, k));
    }
    for (name, k) in extra_kernels {
        checks.extend(kernel_checks(name, *k));
    }

    let mixture = TargetSpec::default_mixture().build().unwrap();
    let cov = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5]);
    let gaussian = GaussianTarget::new(vec![0.5, -1.0, 2.0], cov).unwrap();
    checks.push(score_check("mixture target", mixture.as_ref(), 3.0));
    checks.push(score_check("gaussian target d=3", &gaussian, 1.5));

    checks.extend(ksd_checks(
        "mixture target",
        mixture.as_ref(),
        &kernels[0].1,
    ));
    checks.extend(ksd_checks("gaussian target d=3", &gaussian, &kernels[1].1));
    checks.extend(wasserstein_checks());
    checks.push(fixed_point_check());
    SelftestReport { checks }
}

pub fn run() -> SelftestReport {
    run_with(&[])
}

/// `selftest`: prints the table and returns `0` iff every check passed.
pub fn cmd_selftest() -> i32 {
    let report = run();
    print!("{}", report.render());
    if report.passed() {
        0
    } else {
        1
    }
}

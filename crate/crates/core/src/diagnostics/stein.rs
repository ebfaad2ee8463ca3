use serde::{Deserialize, Serialize};

use crate::ensemble::{dot, ParticleEnsemble};
use crate::error::{check_dim, Error, Result};
use crate::kernels::Kernel;
use crate::pairwise;
use crate::targets::Target;

/// Which double-sum estimator of the squared KSD to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KsdMode {
    /// All `N²` pairs. Equals the squared RKHS norm of the Stein field of
    /// the empirical measure, hence nonnegative.
    #[default]
    V,
    /// Off-diagonal pairs only. Unbiased, may be negative.
    U,
}

/// The Stein kernel
/// `u(x,y) = ∇₁·∇₂k(x,y) + ⟨s(y), ∇₁k(x,y)⟩ + ⟨s(x), ∇₁k(y,x)⟩ + ⟨s(x), s(y)⟩ k(x,y)`
/// with `s = ∇log π`.
pub fn stein_kernel(target: &dyn Target, kernel: &Kernel, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(target.dim(), kernel.dim())?;
    let sx = target.score(x)?;
    let sy = target.score(y)?;
    let k = kernel.eval(x, y)?;
    let g_xy = kernel.grad1(x, y)?;
    let g_yx = kernel.grad1(y, x)?;
    Ok(kernel.trace_grad12(x, y)? + dot(&sy, &g_xy) + dot(&sx, &g_yx) + dot(&sx, &sy) * k)
}

/// Squared KSD of the empirical measure of `ensemble`.
pub fn ksd_squared(
    ensemble: &ParticleEnsemble,
    target: &dyn Target,
    kernel: &Kernel,
    mode: KsdMode,
) -> Result<f64> {
    check_dim(kernel.dim(), ensemble.dim())?;
    let n = ensemble.len();
    if mode == KsdMode::U && n < 2 {
        return Err(Error::DegenerateEnsemble(
            "U-statistic needs at least two particles".into(),
        ));
    }
    let scores = pairwise::scores(ensemble, target)?;
    let (total, diag) = pairwise::stein_sums(ensemble, &scores, kernel);
    Ok(combine(total, diag, n, mode))
}

pub(crate) fn combine(total: f64, diag: f64, n: usize, mode: KsdMode) -> f64 {
    let nf = n as f64;
    match mode {
        KsdMode::V => total / (nf * nf),
        KsdMode::U => (total - diag) / (nf * (nf - 1.0)),
    }
}

/// `‖(1/N) Σⱼ [sⱼ k(xⱼ,·) + ∇₁k(xⱼ,·)]‖²_H` expanded through the reproducing
/// property term by term, using `∇₂k(x,y) = ∇₁k(y,x)`. Quadratic in `N` and
/// kept as an independent route to the V-statistic.
pub fn ksd_squared_rkhs_form(
    ensemble: &ParticleEnsemble,
    target: &dyn Target,
    kernel: &Kernel,
) -> Result<f64> {
    check_dim(kernel.dim(), ensemble.dim())?;
    let n = ensemble.len();
    let scores: Vec<Vec<f64>> = ensemble
        .points()
        .map(|x| target.score(x))
        .collect::<Result<_>>()?;
    let mut acc = 0.0;
    for i in 0..n {
        let xi = ensemble.point(i);
        for j in 0..n {
            let xj = ensemble.point(j);
            // ⟨sᵢ k(xᵢ,·), sⱼ k(xⱼ,·)⟩
            let kk = dot(&scores[i], &scores[j]) * kernel.eval(xi, xj)?;
            // ⟨sᵢ k(xᵢ,·), ∇₁k(xⱼ,·)⟩ = ⟨sᵢ, ∇₂k(xᵢ,xⱼ)⟩
            let kg = dot(&scores[i], &kernel.grad1(xj, xi)?);
            // ⟨∇₁k(xᵢ,·), sⱼ k(xⱼ,·)⟩ = ⟨sⱼ, ∇₁k(xᵢ,xⱼ)⟩
            let gk = dot(&scores[j], &kernel.grad1(xi, xj)?);
            // ⟨∇₁k(xᵢ,·), ∇₁k(xⱼ,·)⟩ = Σₐ ∂²k/∂xₐ∂yₐ (xᵢ,xⱼ)
            let gg = kernel.trace_grad12(xi, xj)?;
            acc += kk + kg + gk + gg;
        }
    }
    Ok(acc / (n * n) as f64)
}

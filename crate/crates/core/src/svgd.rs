//! The finite-particle SVGD update and the step-size planner.
//!
//! Every particle moves along the kernelized field of the current empirical
//! measure,
//!
//! ```text
//! g(xᵢ) = (1/N) Σⱼ [ ∇log π(xⱼ) k(xⱼ, xᵢ) + ∇₁k(xⱼ, xᵢ) ]
//! xᵢ ← xᵢ + γ g(xᵢ)
//! ```
//!
//! with all directions computed from the pre-step ensemble.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{KdeBandwidth, KlEstimator, KlGrid, KsdMode};
use crate::ensemble::{norm, ParticleEnsemble};
use crate::error::{check_dim, Error, Result};
use crate::kernels::{median_bandwidth, Kernel};
use crate::pairwise;
use crate::targets::Target;
use crate::trace::{Trace, TraceRecord};

/// Slack allowed in the pointwise field bound.
pub const FIELD_BOUND_TOL: f64 = 1e-9;

/// Descent constants: with `γ ≤ min((α−1)/(αB√C), 2/((α²+M)B²))` each step
/// lowers the KL by at least `c_γ · KSD²` where
/// `c_γ = γ (1 − γ (α²+M) B² / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSizePlan {
    pub alpha: f64,
    #[serde(rename = "B")]
    pub kernel_bound: f64,
    #[serde(rename = "M")]
    pub hessian_bound: f64,
    #[serde(rename = "C")]
    pub ksd_bound: f64,
    pub gamma: f64,
    pub c_gamma: f64,
}

impl StepSizePlan {
    /// `(α−1)/(αB√C)`: keeps `I − γ Jg` invertible with `‖(I − γ Jg)⁻¹‖ ≤ α`.
    pub fn invertibility_limit(&self) -> f64 {
        (self.alpha - 1.0) / (self.alpha * self.kernel_bound * self.ksd_bound.sqrt())
    }

    /// `2/((α²+M)B²)`: the largest step with a nonnegative descent constant.
    pub fn descent_limit(&self) -> f64 {
        2.0 / ((self.alpha * self.alpha + self.hessian_bound) * self.kernel_bound.powi(2))
    }

    /// Constants for a user-chosen step size. `c_gamma` may be nonpositive.
    pub fn for_step(alpha: f64, b: f64, m: f64, c: f64, gamma: f64) -> Self {
        Self {
            alpha,
            kernel_bound: b,
            hessian_bound: m,
            ksd_bound: c,
            gamma,
            c_gamma: descent_constant(alpha, b, m, gamma),
        }
    }

    pub fn within_limits(&self) -> bool {
        self.gamma <= self.invertibility_limit() && self.gamma <= self.descent_limit()
    }
}

fn descent_constant(alpha: f64, b: f64, m: f64, gamma: f64) -> f64 {
    gamma * (1.0 - gamma * (alpha * alpha + m) * b * b / 2.0)
}

/// Picks `γ = safety · min((α−1)/(αB√C), 2/((α²+M)B²))`.
pub fn plan_step_size(alpha: f64, b: f64, m: f64, c: f64, safety: f64) -> Result<StepSizePlan> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "alpha must exceed 1, got {alpha}"
        )));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "kernel bound B must be positive, got {b}"
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "KSD bound C must be positive, got {c}"
        )));
    }
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Hessian bound M must be nonnegative, got {m}"
        )));
    }
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "safety must lie in (0, 1], got {safety}"
        )));
    }
    let mut plan = StepSizePlan::for_step(alpha, b, m, c, 0.0);
    plan.gamma = safety * plan.invertibility_limit().min(plan.descent_limit());
    plan.c_gamma = descent_constant(alpha, b, m, plan.gamma);
    if plan.c_gamma <= 1e-12 * plan.gamma {
        return Err(Error::InvalidParameter(format!(
            "descent constant c_gamma = {} is not positive at gamma = {}",
            plan.c_gamma, plan.gamma
        )));
    }
    Ok(plan)
}

fn check_inputs(ensemble: &ParticleEnsemble, target: &dyn Target, kernel: &Kernel) -> Result<()> {
    check_dim(target.dim(), ensemble.dim())?;
    check_dim(kernel.dim(), ensemble.dim())
}

/// The SVGD field at every particle, row-major `N × d`. The update is
/// `x + γ g`.
pub fn svgd_direction(
    ensemble: &ParticleEnsemble,
    target: &dyn Target,
    kernel: &Kernel,
) -> Result<Vec<f64>> {
    check_inputs(ensemble, target, kernel)?;
    let scores = pairwise::scores(ensemble, target)?;
    Ok(pairwise::field_at(
        ensemble,
        &scores,
        kernel,
        ensemble.as_flat(),
    ))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma >= 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "step size must be nonnegative, got {gamma}"
        )))
    }
}

fn apply(ensemble: &mut ParticleEnsemble, direction: &[f64], gamma: f64) {
    for (x, g) in ensemble.as_flat_mut().iter_mut().zip(direction) {
        *x += gamma * g;
    }
}

/// One synchronous SVGD update.
pub fn svgd_step(
    ensemble: &ParticleEnsemble,
    target: &dyn Target,
    kernel: &Kernel,
    gamma: f64,
) -> Result<ParticleEnsemble> {
    check_gamma(gamma)?;
    let dir = svgd_direction(ensemble, target, kernel)?;
    let mut next = ensemble.clone();
    apply(&mut next, &dir, gamma);
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthPolicy {
    /// Keep the kernel passed to [`run`]. The planner's `B` stays valid.
    #[default]
    Fixed,
    /// Re-select the RBF bandwidth by the median heuristic before every
    /// update. The descent constants then hold only heuristically.
    MedianEachIteration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlSettings {
    pub grid: KlGrid,
    pub bandwidth: KdeBandwidth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgdConfig {
    pub iterations: usize,
    pub step_size: f64,
    /// Check the pointwise field bound every this many iterations; 0 disables.
    pub check_every: usize,
    pub bandwidth_policy: BandwidthPolicy,
    pub ksd_mode: KsdMode,
    pub kl: Option<KlSettings>,
    /// Assumed bound `C` on the squared KSD along the run, monitored only.
    pub ksd_bound: Option<f64>,
    /// Fill `time_ms` with elapsed wall time. Off keeps traces reproducible
    /// byte for byte.
    pub record_wall_time: bool,
}

impl SvgdConfig {
    pub fn new(iterations: usize, step_size: f64) -> Self {
        Self {
            iterations,
            step_size,
            check_every: 1,
            bandwidth_policy: BandwidthPolicy::Fixed,
            ksd_mode: KsdMode::V,
            kl: None,
            ksd_bound: None,
            record_wall_time: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Trace,
    pub ensemble: ParticleEnsemble,
    /// Kernel in effect at the last update.
    pub kernel: Kernel,
}

/// Iterates the SVGD update, recording one [`TraceRecord`] per update.
pub fn run(
    config: &SvgdConfig,
    initial: &ParticleEnsemble,
    target: &dyn Target,
    kernel: &Kernel,
) -> Result<RunOutput> {
    check_inputs(initial, target, kernel)?;
    check_gamma(config.step_size)?;
    if config.ksd_mode == KsdMode::U && initial.len() < 2 && config.iterations > 0 {
        return Err(Error::DegenerateEnsemble(
            "U-statistic needs at least two particles".into(),
        ));
    }
    let kl = config
        .kl
        .map(|s| KlEstimator::new(target, s.grid).map(|e| (e, s.bandwidth)))
        .transpose()?;

    let started = Instant::now();
    let mut x = initial.clone();
    let mut kernel = *kernel;
    let mut trace = Trace::default();
    let n = x.len();
    let d = x.dim();
    let mut ksd_sum = 0.0;

    for iter in 1..=config.iterations {
        if config.bandwidth_policy == BandwidthPolicy::MedianEachIteration {
            kernel = kernel.with_bandwidth(median_bandwidth(&x)?)?;
        }
        let scores = pairwise::scores(&x, target)?;
        let eval = pairwise::field_and_stein(&x, &scores, &kernel);
        let ksd_v =
            crate::diagnostics::stein::combine(eval.stein_total, eval.stein_diag, n, KsdMode::V);
        let ksd2 = match config.ksd_mode {
            KsdMode::V => ksd_v,
            KsdMode::U => {
                crate::diagnostics::stein::combine(eval.stein_total, eval.stein_diag, n, KsdMode::U)
            }
        };
        let kl_est = match &kl {
            Some((est, bw)) => {
                let e = est.estimate(&x, *bw)?;
                trace.kl_mass_warnings += usize::from(e.mass_warning);
                Some(e.value)
            }
            None => None,
        };
        let max_dir_norm = eval.direction.chunks_exact(d).map(norm).fold(0.0, f64::max);

        let bound_ok = if config.check_every > 0 && (iter - 1) % config.check_every == 0 {
            let ok = max_dir_norm <= kernel.bound() * ksd_v.max(0.0).sqrt() + FIELD_BOUND_TOL;
            trace.field_bound_failures += usize::from(!ok);
            Some(ok)
        } else {
            None
        };
        if let Some(c) = config.ksd_bound {
            trace.ksd_bound_exceedances += usize::from(ksd_v >= c);
        }

        apply(&mut x, &eval.direction, config.step_size);
        if !x.is_finite() {
            return Err(Error::NonFiniteParticle { iteration: iter });
        }

        ksd_sum += ksd2;
        let time_ms = if config.record_wall_time {
            started.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        trace.records.push(TraceRecord {
            iter,
            ksd2,
            avg_ksd2: ksd_sum / iter as f64,
            kl_est,
            max_dir_norm,
            time_ms,
            bound_ok,
        });
    }

    if let Some((est, bw)) = &kl {
        if config.iterations > 0 {
            let e = est.estimate(&x, *bw)?;
            trace.kl_mass_warnings += usize::from(e.mass_warning);
            trace.final_kl = Some(e.value);
        }
    }
    Ok(RunOutput {
        trace,
        ensemble: x,
        kernel,
    })
}

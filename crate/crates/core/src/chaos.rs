//! Finite-particle versus population experiment.
//!
//! The population law `μ_n` has no closed form, so it is represented by a
//! large reference ensemble evolved with the same update. For each particle
//! count `N` the first `N` reference draws also start an interacting system
//! (which sees only its own empirical measure) and a system of coupled
//! independent particles (each moved by the reference field). Distances are
//! averaged over seeded repetitions.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{fit_loglog, w2_squared_1d_unequal, w2_squared_assignment};
use crate::ensemble::{sq_dist, ParticleEnsemble};
use crate::error::{check_dim, Error, Result};
use crate::kernels::Kernel;
use crate::pairwise;
use crate::rng;
use crate::targets::Target;

/// Relative slack in the variance-growth check.
pub const VARIANCE_GROWTH_TOL: f64 = 0.05;

/// `L = C_V (D + 1) + B M`, the Lipschitz constant of the SVGD field in the
/// point and in the measure (for `W₂`).
pub fn lipschitz_constant(score_bound: f64, kernel_lipschitz: f64, b: f64, m: f64) -> Result<f64> {
    for (name, v) in [
        ("C_V", score_bound),
        ("D", kernel_lipschitz),
        ("B", b),
        ("M", m),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be nonnegative, got {v}"
            )));
        }
    }
    Ok(score_bound * (kernel_lipschitz + 1.0) + b * m)
}

/// `½ (√var₀ e^{LT} / √N) (e^{2LT} − 1)`, the bound on `E[W₂²(μ_n, μ̂_n)]`
/// for every `n ≤ T/γ`. Expects `L, var₀, T ≥ 0` and `N ≥ 1`.
pub fn chaos_bound(lipschitz: f64, var0: f64, horizon: f64, n: usize) -> f64 {
    let lt = lipschitz * horizon;
    0.5 * (var0.sqrt() * lt.exp() / (n as f64).sqrt()) * (2.0 * lt).exp_m1()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupledRun {
    /// Interacting-system sizes `N` to sweep.
    pub sizes: Vec<usize>,
    /// Reference ensemble size, at least `10 · max(N)` (or exactly `N` for
    /// the degenerate self-coupling check).
    pub reference_size: usize,
    pub horizon: f64,
    pub step_size: f64,
    pub repetitions: usize,
    pub seed: u64,
    /// Record every this many steps; the last step is always recorded.
    pub record_every: usize,
    /// Overrides `floor(T/γ)`; required when `γ = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl CoupledRun {
    pub fn num_steps(&self) -> usize {
        match self.steps {
            Some(s) => s,
            None => ((self.horizon / self.step_size) * (1.0 + 1e-12)).floor() as usize,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::InvalidParameter(
                "chaos sizes must be positive".into(),
            ));
        }
        let max_n = *self.sizes.iter().max().unwrap();
        let degenerate = self.sizes.len() == 1 && self.reference_size == max_n;
        if !degenerate && self.reference_size < 10 * max_n {
            return Err(Error::InvalidParameter(format!(
                "reference size {} must be at least 10 x max N = {}",
                self.reference_size,
                10 * max_n
            )));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "invalid horizon {}",
                self.horizon
            )));
        }
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "invalid step size {}",
                self.step_size
            )));
        }
        if self.step_size == 0.0 && self.steps.is_none() {
            return Err(Error::InvalidParameter(
                "a zero step size needs explicit `steps`".into(),
            ));
        }
        if self.num_steps() < 1 {
            return Err(Error::InvalidParameter(
                "horizon must allow at least one step".into(),
            ));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidParameter(
                "need at least one repetition".into(),
            ));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter(
                "record_every must be positive".into(),
            ));
        }
        Ok(())
    }

    fn recorded(&self, n: usize) -> bool {
        n.is_multiple_of(self.record_every) || n == self.num_steps()
    }
}

/// Gaussian initial law `N(mean, sd² I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialLaw {
    pub mean: Vec<f64>,
    pub sd: f64,
}

impl InitialLaw {
    /// `E‖x − E x‖² = d sd²`.
    pub fn variance(&self) -> f64 {
        self.mean.len() as f64 * self.sd * self.sd
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChaosRow {
    pub n: usize,
    #[serde(rename = "N")]
    pub particles: usize,
    pub w2sq_mean: f64,
    pub w2sq_stderr: f64,
    pub bound: Option<f64>,
}

/// Mean squared distance between the interacting and coupled independent
/// particles, `(1/N) Σᵢ ‖Xⁱ − X̄ⁱ‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingRow {
    pub n: usize,
    #[serde(rename = "N")]
    pub particles: usize,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChaosConstants {
    #[serde(rename = "L")]
    pub lipschitz: Option<f64>,
    #[serde(rename = "D")]
    pub kernel_lipschitz: f64,
    #[serde(rename = "B")]
    pub kernel_bound: f64,
    #[serde(rename = "M")]
    pub hessian_bound: f64,
    #[serde(rename = "C_V")]
    pub score_bound: Option<f64>,
    pub var0: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceCheck {
    /// Largest `√var(μ̂_n) / (√var₀ e^{TL})` over systems and steps.
    pub max_ratio: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChaosResult {
    pub rows: Vec<ChaosRow>,
    pub coupling: Vec<CouplingRow>,
    pub constants: ChaosConstants,
    pub variance: Option<VarianceCheck>,
}

impl ChaosResult {
    pub fn final_step(&self) -> usize {
        self.rows.iter().map(|r| r.n).max().unwrap_or(0)
    }

    pub fn rows_at(&self, n: usize) -> Vec<ChaosRow> {
        let mut rows: Vec<ChaosRow> = self.rows.iter().filter(|r| r.n == n).copied().collect();
        rows.sort_by_key(|r| r.particles);
        rows
    }

    /// Log-log slope of `w2sq_mean` against `N` at step `n`.
    pub fn decay_fit(&self, n: usize) -> Result<(f64, f64, f64)> {
        let rows = self.rows_at(n);
        let xs: Vec<f64> = rows.iter().map(|r| r.particles as f64).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.w2sq_mean).collect();
        fit_loglog(&xs, &ys)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,N,w2sq_mean,w2sq_stderr,bound\n");
        for r in &self.rows {
            let bound = r.bound.map(|b| b.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.n, r.particles, r.w2sq_mean, r.w2sq_stderr, bound
            ));
        }
        out
    }
}

/// Per-repetition measurements keyed by `(size index, record index)`.
struct Repetition {
    w2: Vec<Vec<f64>>,
    coupling: Vec<Vec<f64>>,
    max_sd: f64,
}

fn step_with_own_field(
    x: &mut ParticleEnsemble,
    target: &dyn Target,
    kernel: &Kernel,
    gamma: f64,
) -> Result<()> {
    let scores = pairwise::scores(x, target)?;
    let dir = pairwise::field_at(x, &scores, kernel, x.as_flat());
    for (v, g) in x.as_flat_mut().iter_mut().zip(&dir) {
        *v += gamma * g;
    }
    Ok(())
}

fn w2_to_reference(
    x: &ParticleEnsemble,
    reference: &ParticleEnsemble,
    subsample_rng: &mut rand_chacha::ChaCha20Rng,
) -> Result<f64> {
    if x.dim() == 1 {
        return w2_squared_1d_unequal(x, reference);
    }
    if x.len() == reference.len() {
        return w2_squared_assignment(x, reference);
    }
    let picks = sample(subsample_rng, reference.len(), x.len());
    let rows: Vec<Vec<f64>> = picks.iter().map(|i| reference.point(i).to_vec()).collect();
    w2_squared_assignment(x, &ParticleEnsemble::from_rows(&rows)?)
}

fn run_repetition(
    config: &CoupledRun,
    target: &dyn Target,
    kernel: &Kernel,
    init: &InitialLaw,
    reference_size: usize,
    rep: usize,
) -> Result<Repetition> {
    let steps = config.num_steps();
    let gamma = config.step_size;
    let mut init_rng = rng::repetition_stream(config.seed, rep);
    let mut sub_rng = rng::stream(config.seed, rng::SUBSAMPLE_STREAM_BASE + rep as u64);
    let start = rng::gaussian_ensemble(&mut init_rng, reference_size, &init.mean, init.sd)?;

    // reference trajectory with the scores used at each step
    let mut snapshots = Vec::with_capacity(steps + 1);
    let mut ref_scores = Vec::with_capacity(steps);
    let mut x = start.clone();
    let mut max_sd = x.variance().sqrt();
    for iter in 0..steps {
        let s = pairwise::scores(&x, target)?;
        let dir = pairwise::field_at(&x, &s, kernel, x.as_flat());
        snapshots.push(x.clone());
        ref_scores.push(s);
        for (v, g) in x.as_flat_mut().iter_mut().zip(&dir) {
            *v += gamma * g;
        }
        if !x.is_finite() {
            return Err(Error::NonFiniteParticle {
                iteration: iter + 1,
            });
        }
        max_sd = max_sd.max(x.variance().sqrt());
    }
    snapshots.push(x);

    let mut w2 = Vec::with_capacity(config.sizes.len());
    let mut coupling = Vec::with_capacity(config.sizes.len());
    for &n_particles in &config.sizes {
        let mut inter = start.truncated(n_particles)?;
        let mut indep = inter.clone();
        let mut w2_row = Vec::new();
        let mut c_row = Vec::new();
        for n in 0..=steps {
            if config.recorded(n) {
                w2_row.push(w2_to_reference(&inter, &snapshots[n], &mut sub_rng)?);
                let dist = inter
                    .points()
                    .zip(indep.points())
                    .map(|(a, b)| sq_dist(a, b))
                    .sum::<f64>()
                    / n_particles as f64;
                c_row.push(dist);
            }
            max_sd = max_sd.max(inter.variance().sqrt());
            if n == steps {
                break;
            }
            step_with_own_field(&mut inter, target, kernel, gamma)?;
            if !inter.is_finite() {
                return Err(Error::NonFiniteParticle { iteration: n + 1 });
            }
            let field = pairwise::field_at(&snapshots[n], &ref_scores[n], kernel, indep.as_flat());
            for (v, g) in indep.as_flat_mut().iter_mut().zip(&field) {
                *v += gamma * g;
            }
        }
        w2.push(w2_row);
        coupling.push(c_row);
    }
    Ok(Repetition {
        w2,
        coupling,
        max_sd,
    })
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

pub fn constants(
    config: &CoupledRun,
    target: &dyn Target,
    kernel: &Kernel,
    init: &InitialLaw,
) -> Result<ChaosConstants> {
    let b = kernel.bound();
    let d = kernel.lipschitz_bound();
    let m = target.hessian_bound();
    let cv = target.score_bound();
    let lipschitz = cv.map(|cv| lipschitz_constant(cv, d, b, m)).transpose()?;
    Ok(ChaosConstants {
        lipschitz,
        kernel_lipschitz: d,
        kernel_bound: b,
        hessian_bound: m,
        score_bound: cv,
        var0: init.variance(),
        horizon: config.horizon,
    })
}

fn run_with_reference_size(
    config: &CoupledRun,
    target: &dyn Target,
    kernel: &Kernel,
    init: &InitialLaw,
    reference_size: usize,
) -> Result<ChaosResult> {
    config.validate()?;
    check_dim(target.dim(), kernel.dim())?;
    check_dim(target.dim(), init.mean.len())?;
    let consts = constants(config, target, kernel, init)?;

    let reps: Vec<Repetition> = (0..config.repetitions)
        .into_par_iter()
        .map(|r| run_repetition(config, target, kernel, init, reference_size, r))
        .collect::<Result<_>>()?;

    let recorded: Vec<usize> = (0..=config.num_steps())
        .filter(|&n| config.recorded(n))
        .collect();
    let mut rows = Vec::new();
    let mut coupling = Vec::new();
    for (si, &n_particles) in config.sizes.iter().enumerate() {
        let bound = consts
            .lipschitz
            .map(|l| chaos_bound(l, consts.var0, config.horizon, n_particles));
        for (ri, &n) in recorded.iter().enumerate() {
            let w: Vec<f64> = reps.iter().map(|rep| rep.w2[si][ri]).collect();
            let (w2sq_mean, w2sq_stderr) = mean_stderr(&w);
            rows.push(ChaosRow {
                n,
                particles: n_particles,
                w2sq_mean,
                w2sq_stderr,
                bound,
            });
            let c: Vec<f64> = reps.iter().map(|rep| rep.coupling[si][ri]).collect();
            let (mean, stderr) = mean_stderr(&c);
            coupling.push(CouplingRow {
                n,
                particles: n_particles,
                mean,
                stderr,
            });
        }
    }

    let variance = consts.lipschitz.map(|l| {
        let scale = consts.var0.sqrt() * (config.horizon * l).exp();
        let max_sd = reps.iter().map(|r| r.max_sd).fold(0.0, f64::max);
        let max_ratio = if scale > 0.0 {
            max_sd / scale
        } else {
            f64::INFINITY
        };
        VarianceCheck {
            max_ratio,
            ok: max_ratio <= 1.0 + VARIANCE_GROWTH_TOL,
        }
    });
    Ok(ChaosResult {
        rows,
        coupling,
        constants: consts,
        variance,
    })
}

/// Runs every repetition (in parallel) and aggregates by repetition index.
pub fn run_coupled(
    config: &CoupledRun,
    target: &dyn Target,
    kernel: &Kernel,
    init: &InitialLaw,
) -> Result<ChaosResult> {
    run_with_reference_size(config, target, kernel, init, config.reference_size)
}

/// Change in each recorded estimate when the reference ensemble is doubled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProxyRow {
    pub n: usize,
    #[serde(rename = "N")]
    pub particles: usize,
    pub delta: f64,
    pub stderr: f64,
    pub ok: bool,
}

/// Reruns `config` with a doubled reference ensemble and compares against
/// `base`. A row is `ok` when the change is below that row's standard error.
pub fn reference_sensitivity(
    config: &CoupledRun,
    target: &dyn Target,
    kernel: &Kernel,
    init: &InitialLaw,
    base: &ChaosResult,
) -> Result<Vec<ProxyRow>> {
    let doubled = run_with_reference_size(config, target, kernel, init, 2 * config.reference_size)?;
    Ok(base
        .rows
        .iter()
        .zip(&doubled.rows)
        .map(|(a, b)| {
            let delta = b.w2sq_mean - a.w2sq_mean;
            ProxyRow {
                n: a.n,
                particles: a.particles,
                delta,
                stderr: a.w2sq_stderr,
                ok: delta.abs() < a.w2sq_stderr,
            }
        })
        .collect())
}

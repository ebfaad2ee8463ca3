//! JSON-configured experiments: a traced SVGD run and the
//! propagation-of-chaos sweep, each writing CSV and JSON artifacts.
//!
//! Exit codes used by the command wrappers: `0` success, `2` invalid
//! configuration, `3` numerical failure during the run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::chaos::{self, ChaosResult, CoupledRun, InitialLaw};
use crate::diagnostics::{
    fit_rate, ksd_squared, verify_descent, DescentReport, KdeBandwidth, KlGrid, KsdMode, RateFit,
};
use crate::error::{Error, Result};
use crate::kernels::{median_bandwidth, Kernel, KernelFamily};
use crate::rng;
use crate::svgd::{self, plan_step_size, BandwidthPolicy, KlSettings, StepSizePlan, SvgdConfig};
use crate::targets::{Target, TargetSpec};
use crate::trace::Trace;
use crate::ParticleEnsemble;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthSpec {
    Median,
    #[serde(untagged)]
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelSpec {
    Rbf { bandwidth: BandwidthSpec },
    Imq { offset: f64, exponent: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitSpec {
    /// `N(mean, sd² I)`
    Gaussian { mean: Vec<f64>, sd: f64 },
    /// CSV file with one particle per row.
    File { path: PathBuf },
}

fn default_alpha() -> f64 {
    2.0
}
fn default_safety() -> f64 {
    0.5
}
fn default_margin() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase", deny_unknown_fields)]
pub enum StepSpec {
    /// Fixed `gamma`; `alpha` and `ksd_bound` only feed the reported constants.
    Fixed {
        gamma: f64,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default)]
        ksd_bound: Option<f64>,
        #[serde(default = "default_margin")]
        ksd_margin: f64,
    },
    /// Step from the descent-lemma planner. Without `ksd_bound`, `C` is taken
    /// as `(1 + ksd_margin) · KSD²` of the initial ensemble.
    Planned {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_safety")]
        safety: f64,
        #[serde(default)]
        ksd_bound: Option<f64>,
        #[serde(default = "default_margin")]
        ksd_margin: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KlSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    #[serde(default)]
    pub bandwidth: KdeBandwidth,
}

fn default_descent_tolerance() -> f64 {
    0.02
}
fn default_check_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSpec {
    #[serde(default)]
    pub ksd_mode: KsdMode,
    #[serde(default)]
    pub kl: Option<KlSpec>,
    #[serde(default = "default_descent_tolerance")]
    pub descent_tolerance: f64,
    #[serde(default = "default_check_every")]
    pub check_every: usize,
    /// Inclusive iteration window of the rate fit.
    #[serde(default)]
    pub rate_window: Option<(usize, usize)>,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        Self {
            ksd_mode: KsdMode::V,
            kl: None,
            descent_tolerance: default_descent_tolerance(),
            check_every: default_check_every(),
            rate_window: None,
        }
    }
}

fn default_repetitions() -> usize {
    32
}
fn default_record_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChaosSpec {
    pub sizes: Vec<usize>,
    pub reference_size: usize,
    pub horizon: f64,
    pub step_size: f64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub steps: Option<usize>,
    /// Also rerun with a doubled reference ensemble and report the change.
    #[serde(default)]
    pub proxy_check: bool,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: TargetSpec,
    pub kernel: KernelSpec,
    pub init: InitSpec,
    pub particles: usize,
    pub step: StepSpec,
    pub iterations: usize,
    #[serde(default)]
    pub bandwidth_policy: BandwidthPolicy,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    #[serde(default)]
    pub chaos: Option<ChaosSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Write wall-clock milliseconds into `time_ms` (otherwise 0).
    #[serde(default)]
    pub record_wall_time: bool,
    /// Also write a gnuplot script next to the CSV output.
    #[serde(default)]
    pub gnuplot: bool,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(dir) = &overrides.output_dir {
            self.output_dir = dir.clone();
        }
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
    }

    /// The bundled toy experiment: 200 particles started far left of a
    /// two-component 1-D mixture, median RBF bandwidth, planned step.
    pub fn mixture_recipe() -> Self {
        Self {
            target: TargetSpec::default_mixture(),
            kernel: KernelSpec::Rbf {
                bandwidth: BandwidthSpec::Median,
            },
            init: InitSpec::Gaussian {
                mean: vec![-10.0],
                sd: 1.0,
            },
            particles: 200,
            step: StepSpec::Planned {
                alpha: 2.0,
                safety: 0.5,
                ksd_bound: None,
                ksd_margin: 1.0,
            },
            iterations: 10_000,
            bandwidth_policy: BandwidthPolicy::Fixed,
            diagnostics: DiagnosticsSpec {
                kl: Some(KlSpec {
                    lo: -10.0,
                    hi: 10.0,
                    points: 2000,
                    bandwidth: KdeBandwidth::Silverman,
                }),
                rate_window: Some((100, 10_000)),
                ..DiagnosticsSpec::default()
            },
            chaos: None,
            seed: 0,
            output_dir: default_output_dir(),
            record_wall_time: false,
            gnuplot: false,
        }
    }

    /// The finite-particle sweep on the same mixture.
    pub fn chaos_recipe() -> Self {
        Self {
            init: InitSpec::Gaussian {
                mean: vec![0.0],
                sd: 1.0,
            },
            kernel: KernelSpec::Rbf {
                bandwidth: BandwidthSpec::Fixed(1.0),
            },
            step: StepSpec::Fixed {
                gamma: 0.05,
                alpha: default_alpha(),
                ksd_bound: None,
                ksd_margin: default_margin(),
            },
            iterations: 0,
            diagnostics: DiagnosticsSpec::default(),
            chaos: Some(ChaosSpec {
                sizes: vec![25, 50, 100, 200],
                reference_size: 2000,
                horizon: 2.0,
                step_size: 0.05,
                repetitions: 32,
                record_every: 10,
                steps: None,
                proxy_check: false,
            }),
            ..Self::mixture_recipe()
        }
    }

    /// Fills every optional knob with the value a run would use, so the
    /// result can be re-run verbatim.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        if out.diagnostics.rate_window.is_none() {
            out.diagnostics.rate_window = default_rate_window(out.iterations);
        }
        out
    }
}

fn default_rate_window(iterations: usize) -> Option<(usize, usize)> {
    let lo = if iterations >= 1000 { 100 } else { 1 };
    (iterations >= lo + 9).then_some((lo, iterations))
}

fn read_particles(path: &Path) -> Result<ParticleEnsemble> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read particle file {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        rows.push(
            row.map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), lineno + 1)))?,
        );
    }
    ParticleEnsemble::from_rows(&rows)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn ensemble_to_csv(e: &ParticleEnsemble) -> String {
    let mut out = String::new();
    for p in e.points() {
        let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

/// Everything a run needs, built from a config.
pub struct Prepared {
    pub config: ExperimentConfig,
    pub target: Box<dyn Target>,
    pub initial: ParticleEnsemble,
    pub kernel: Kernel,
    pub plan: StepSizePlan,
    pub svgd: SvgdConfig,
}

fn build_kernel(spec: &KernelSpec, sample: &ParticleEnsemble) -> Result<Kernel> {
    let d = sample.dim();
    match *spec {
        KernelSpec::Rbf {
            bandwidth: BandwidthSpec::Fixed(h),
        } => Kernel::rbf(h, d),
        KernelSpec::Rbf {
            bandwidth: BandwidthSpec::Median,
        } => Kernel::rbf(median_bandwidth(sample)?, d),
        KernelSpec::Imq { offset, exponent } => Kernel::imq(offset, exponent, d),
    }
}

/// Validates the config and builds target, initial ensemble, kernel and step.
pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    let config = config.resolved();
    let target = config.target.build().map_err(config_err)?;
    let initial = match &config.init {
        InitSpec::Gaussian { mean, sd } => {
            if config.particles == 0 {
                return Err(Error::Config("particles must be positive".into()));
            }
            let mut r = rng::stream(config.seed, rng::RUN_STREAM);
            rng::gaussian_ensemble(&mut r, config.particles, mean, *sd).map_err(config_err)?
        }
        InitSpec::File { path } => {
            let e = read_particles(path)?;
            if e.len() != config.particles {
                return Err(Error::Config(format!(
                    "particle file {} has {} rows, config says particles = {}",
                    path.display(),
                    e.len(),
                    config.particles
                )));
            }
            e
        }
    };
    if initial.dim() != target.dim() {
        return Err(Error::Config(format!(
            "init has dimension {}, target has dimension {}",
            initial.dim(),
            target.dim()
        )));
    }
    let kernel = build_kernel(&config.kernel, &initial).map_err(config_err)?;
    let b = kernel.bound();
    let m = target.hessian_bound();
    let initial_ksd = || ksd_squared(&initial, target.as_ref(), &kernel, KsdMode::V);
    let plan = match &config.step {
        StepSpec::Planned {
            alpha,
            safety,
            ksd_bound,
            ksd_margin,
        } => {
            let c = match ksd_bound {
                Some(c) => *c,
                None => (1.0 + ksd_margin) * initial_ksd().map_err(config_err)?,
            };
            plan_step_size(*alpha, b, m, c, *safety).map_err(config_err)?
        }
        StepSpec::Fixed {
            gamma,
            alpha,
            ksd_bound,
            ksd_margin,
        } => {
            if !(*gamma >= 0.0 && gamma.is_finite()) {
                return Err(Error::Config(format!(
                    "step.gamma must be nonnegative, got {gamma}"
                )));
            }
            let c = match ksd_bound {
                Some(c) => *c,
                None => (1.0 + ksd_margin) * initial_ksd().map_err(config_err)?,
            };
            StepSizePlan::for_step(*alpha, b, m, c, *gamma)
        }
    };
    let kl = match &config.diagnostics.kl {
        Some(k) => Some(KlSettings {
            grid: KlGrid::new(k.lo, k.hi, k.points).map_err(config_err)?,
            bandwidth: k.bandwidth,
        }),
        None => None,
    };
    if kl.is_some() && (target.dim() != 1 || !target.has_exact_density()) {
        return Err(Error::Config(
            "diagnostics.kl needs a one-dimensional target with an exact density".into(),
        ));
    }
    if config.bandwidth_policy == BandwidthPolicy::MedianEachIteration
        && !matches!(kernel.family(), KernelFamily::Rbf { .. })
    {
        return Err(Error::Config(
            "median re-selection applies to RBF kernels only".into(),
        ));
    }
    let svgd = SvgdConfig {
        iterations: config.iterations,
        step_size: plan.gamma,
        check_every: config.diagnostics.check_every,
        bandwidth_policy: config.bandwidth_policy,
        ksd_mode: config.diagnostics.ksd_mode,
        kl,
        ksd_bound: Some(plan.ksd_bound),
        record_wall_time: config.record_wall_time,
    };
    Ok(Prepared {
        config,
        target,
        initial,
        kernel,
        plan,
        svgd,
    })
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub config: ExperimentConfig,
    pub trace: Trace,
    pub final_ensemble: ParticleEnsemble,
    pub plan: StepSizePlan,
    pub kernel: Kernel,
    pub rate_fit: Option<RateFit>,
    pub descent: Option<DescentReport>,
}

impl RunArtifacts {
    pub fn report(&self) -> serde_json::Value {
        let bandwidth = match self.kernel.family() {
            KernelFamily::Rbf { bandwidth } => Some(bandwidth),
            KernelFamily::Imq { .. } => None,
        };
        json!({
            "resolved_config": self.config,
            "rate_fit": self.rate_fit,
            "descent": self.descent.as_ref().map(|d| json!({
                "violations": d.violations,
                "worst_margin": d.worst_margin,
                "tolerance": d.tolerance,
                "steps": d.steps,
            })),
            "plan": self.plan,
            "kernel": { "bandwidth": bandwidth, "B": self.kernel.bound() },
            "monitors": {
                "ksd_bound_exceedances": self.trace.ksd_bound_exceedances,
                "field_bound_failures": self.trace.field_bound_failures,
                "kl_mass_warnings": self.trace.kl_mass_warnings,
                "plan_within_limits": self.plan.within_limits(),
            },
        })
    }
}

/// Runs the sampler for a prepared config and computes the summary reports.
pub fn execute_run(prepared: &Prepared) -> Result<RunArtifacts> {
    let out = svgd::run(
        &prepared.svgd,
        &prepared.initial,
        prepared.target.as_ref(),
        &prepared.kernel,
    )?;
    let rate_fit = match prepared.config.diagnostics.rate_window {
        Some(w) if w.1 <= out.trace.len() => Some(fit_rate(&out.trace, w)?),
        _ => None,
    };
    let descent = match out.trace.kl_series() {
        Some(kl) => Some(verify_descent(
            &out.trace,
            &prepared.plan,
            &kl,
            prepared.config.diagnostics.descent_tolerance,
        )?),
        None => None,
    };
    Ok(RunArtifacts {
        config: prepared.config.clone(),
        trace: out.trace,
        final_ensemble: out.ensemble,
        plan: prepared.plan,
        kernel: out.kernel,
        rate_fit,
        descent,
    })
}

/// Writes `contents` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

const TRACE_PLOT: &str = "set datafile separator ','\n\
set logscale xy\n\
set xlabel 'iteration'\n\
plot 'trace.csv' using 1:2 with lines title 'KSD^2', \\\n\
     'trace.csv' using 1:3 with lines title 'running average'\n";

pub fn write_run_outputs(artifacts: &RunArtifacts) -> Result<()> {
    let dir = &artifacts.config.output_dir;
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join("trace.csv"), artifacts.trace.to_csv().as_bytes())?;
    write_atomic(
        &dir.join("final_particles.csv"),
        ensemble_to_csv(&artifacts.final_ensemble).as_bytes(),
    )?;
    let report = serde_json::to_string_pretty(&artifacts.report())?;
    write_atomic(&dir.join("report.json"), report.as_bytes())?;
    if artifacts.config.gnuplot {
        write_atomic(&dir.join("trace.gp"), TRACE_PLOT.as_bytes())?;
    }
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn report_error(e: &Error) -> i32 {
    let code = exit_code(e);
    match e {
        Error::NonFiniteParticle { iteration } => {
            eprintln!("error: numerical failure at iteration {iteration}: {e}")
        }
        _ => eprintln!("error: {e}"),
    }
    code
}

/// `run <config.json>`: writes `trace.csv`, `final_particles.csv` and
/// `report.json` into the output directory.
pub fn cmd_run(path: &Path, overrides: &Overrides) -> i32 {
    let result = ExperimentConfig::load(path).and_then(|mut cfg| {
        cfg.apply(overrides);
        let prepared = prepare(&cfg)?;
        let artifacts = execute_run(&prepared)?;
        write_run_outputs(&artifacts)?;
        Ok(artifacts)
    });
    match result {
        Ok(a) => {
            if let Some(fit) = a.rate_fit {
                println!(
                    "rate fit over [{}, {}]: slope {:.4}, r2 {:.4}",
                    fit.window.0, fit.window.1, fit.slope, fit.r2
                );
            }
            println!("wrote {}", a.config.output_dir.display());
            EXIT_OK
        }
        Err(e) => report_error(&e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChaosSummary {
    pub final_step: usize,
    pub decay_slope: Option<f64>,
    pub decay_r2: Option<f64>,
    /// `w2sq_mean[N]` does not exceed `w2sq_mean[N']` for `N' < N` by more
    /// than two combined standard errors at the final step.
    pub monotone_in_n: bool,
    /// Every estimate is at most `bound + 2 stderr`; `None` without a bound.
    pub within_bound: Option<bool>,
}

pub fn summarize_chaos(result: &ChaosResult) -> ChaosSummary {
    let final_step = result.final_step();
    let rows = result.rows_at(final_step);
    let fit = result.decay_fit(final_step).ok();
    let monotone_in_n = rows.windows(2).all(|w| {
        let slack = 2.0 * (w[0].w2sq_stderr.powi(2) + w[1].w2sq_stderr.powi(2)).sqrt();
        w[1].w2sq_mean <= w[0].w2sq_mean + slack
    });
    let within_bound = result
        .rows
        .iter()
        .map(|r| r.bound.map(|b| r.w2sq_mean <= b + 2.0 * r.w2sq_stderr))
        .collect::<Option<Vec<bool>>>()
        .map(|v| v.into_iter().all(|ok| ok));
    ChaosSummary {
        final_step,
        decay_slope: fit.map(|f| f.0),
        decay_r2: fit.map(|f| f.2),
        monotone_in_n,
        within_bound,
    }
}

pub struct ChaosArtifacts {
    pub config: ExperimentConfig,
    pub result: ChaosResult,
    pub summary: ChaosSummary,
    pub proxy: Option<Vec<chaos::ProxyRow>>,
    pub kernel: Kernel,
}

/// Builds and runs the chaos sweep described by `config.chaos`.
pub fn execute_chaos(config: &ExperimentConfig) -> Result<ChaosArtifacts> {
    let config = config.resolved();
    let spec = config
        .chaos
        .clone()
        .ok_or_else(|| Error::Config("config has no `chaos` block".into()))?;
    let target = config.target.build().map_err(config_err)?;
    let init = match &config.init {
        InitSpec::Gaussian { mean, sd } => InitialLaw {
            mean: mean.clone(),
            sd: *sd,
        },
        InitSpec::File { .. } => {
            return Err(Error::Config(
                "chaos needs a Gaussian `init` to draw from".into(),
            ))
        }
    };
    let run = CoupledRun {
        sizes: spec.sizes.clone(),
        reference_size: spec.reference_size,
        horizon: spec.horizon,
        step_size: spec.step_size,
        repetitions: spec.repetitions,
        seed: config.seed,
        record_every: spec.record_every,
        steps: spec.steps,
    };
    run.validate().map_err(config_err)?;
    // a median bandwidth is fixed from the first repetition's reference draw
    let pilot = rng::gaussian_ensemble(
        &mut rng::repetition_stream(config.seed, 0),
        spec.reference_size,
        &init.mean,
        init.sd,
    )
    .map_err(config_err)?;
    let kernel = build_kernel(&config.kernel, &pilot).map_err(config_err)?;
    let result = chaos::run_coupled(&run, target.as_ref(), &kernel, &init)?;
    let proxy = if spec.proxy_check {
        Some(chaos::reference_sensitivity(
            &run,
            target.as_ref(),
            &kernel,
            &init,
            &result,
        )?)
    } else {
        None
    };
    let summary = summarize_chaos(&result);
    Ok(ChaosArtifacts {
        config,
        result,
        summary,
        proxy,
        kernel,
    })
}

pub fn write_chaos_outputs(a: &ChaosArtifacts) -> Result<()> {
    let dir = &a.config.output_dir;
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join("chaos.csv"), a.result.to_csv().as_bytes())?;
    let report = json!({
        "resolved_config": a.config,
        "summary": a.summary,
        "constants": a.result.constants,
        "variance": a.result.variance,
        "coupling": a.result.coupling,
        "proxy": a.proxy,
        "kernel": { "B": a.kernel.bound(), "D": a.kernel.lipschitz_bound() },
    });
    write_atomic(
        &dir.join("chaos_report.json"),
        serde_json::to_string_pretty(&report)?.as_bytes(),
    )?;
    Ok(())
}

/// `chaos <config.json>`: writes `chaos.csv` and `chaos_report.json`.
pub fn cmd_chaos(path: &Path, overrides: &Overrides) -> i32 {
    let result = ExperimentConfig::load(path).and_then(|mut cfg| {
        cfg.apply(overrides);
        let a = execute_chaos(&cfg)?;
        write_chaos_outputs(&a)?;
        Ok(a)
    });
    match result {
        Ok(a) => {
            if let Some(slope) = a.summary.decay_slope {
                println!(
                    "W2^2 vs N slope at n = {}: {slope:.4}",
                    a.summary.final_step
                );
            }
            println!("wrote {}", a.config.output_dir.display());
            EXIT_OK
        }
        Err(e) => report_error(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recipe_round_trips_through_json() {
        let cfg = ExperimentConfig::mixture_recipe();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
        let cfg = ExperimentConfig::chaos_recipe();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v = serde_json::to_value(ExperimentConfig::mixture_recipe()).unwrap();
        v["bogus"] = json!(1);
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
        let mut v = serde_json::to_value(ExperimentConfig::mixture_recipe()).unwrap();
        v["kernel"]["width"] = json!(1);
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn bandwidth_spec_forms() {
        let k: KernelSpec =
            serde_json::from_str(r#"{"family":"rbf","bandwidth":"median"}"#).unwrap();
        assert_eq!(
            k,
            KernelSpec::Rbf {
                bandwidth: BandwidthSpec::Median
            }
        );
        let k: KernelSpec = serde_json::from_str(r#"{"family":"rbf","bandwidth":0.5}"#).unwrap();
        assert_eq!(
            k,
            KernelSpec::Rbf {
                bandwidth: BandwidthSpec::Fixed(0.5)
            }
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = ExperimentConfig::from_json("{\n  \"target\": 3\n}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn default_rate_windows() {
        assert_eq!(default_rate_window(10_000), Some((100, 10_000)));
        assert_eq!(default_rate_window(50), Some((1, 50)));
        assert_eq!(default_rate_window(5), None);
        assert_eq!(default_rate_window(0), None);
    }
}

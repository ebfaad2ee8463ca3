//! Target distributions `π ∝ exp(−V)` described by their score `∇log π`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// An unnormalized log-density together with the smoothness constants used by
/// the step-size planner and the propagation-of-chaos bound.
pub trait Target: Send + Sync {
    fn dim(&self) -> usize;

    /// `log π(x)` up to an additive constant.
    fn log_density_unnormalized(&self, x: &[f64]) -> f64;

    /// Writes `∇log π(x)` into `out`. No dimension checks.
    fn score_into(&self, x: &[f64], out: &mut [f64]);

    /// Upper bound `M` on the operator norm of the Hessian of `V = −log π`.
    fn hessian_bound(&self) -> f64;

    /// Bound `C_V` on `‖∇log π‖`, when one is available.
    fn score_bound(&self) -> Option<f64> {
        None
    }

    /// Normalized `log π(x)`, when the normalizing constant is known.
    fn log_density(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    fn density(&self, x: &[f64]) -> Option<f64> {
        self.log_density(x).map(f64::exp)
    }

    fn has_exact_density(&self) -> bool {
        false
    }

    fn score(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let mut out = vec![0.0; self.dim()];
        self.score_into(x, &mut out);
        Ok(out)
    }
}

/// Multivariate Gaussian `N(mean, covariance)`.
#[derive(Debug, Clone)]
pub struct GaussianTarget {
    mean: Vec<f64>,
    covariance: DMatrix<f64>,
    precision: DMatrix<f64>,
    log_norm: f64,
    hessian_bound: f64,
}

impl GaussianTarget {
    pub fn new(mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::InvalidParameter(
                "Gaussian mean must be non-empty".into(),
            ));
        }
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: covariance.nrows(),
            });
        }
        if (&covariance - covariance.transpose()).amax() > 1e-12 * covariance.amax().max(1.0) {
            return Err(Error::InvalidParameter(
                "covariance is not symmetric".into(),
            ));
        }
        let chol = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidParameter("covariance is not positive-definite".into()))?;
        let precision = chol.inverse();
        let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        let min_eig = covariance
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig <= 0.0 {
            return Err(Error::InvalidParameter(
                "covariance is not positive-definite".into(),
            ));
        }
        Ok(Self {
            mean,
            covariance,
            precision,
            log_norm: -(d as f64) * LN_SQRT_2PI - 0.5 * log_det,
            hessian_bound: 1.0 / min_eig,
        })
    }

    /// Isotropic Gaussian with covariance `sd² I`.
    pub fn isotropic(mean: Vec<f64>, sd: f64) -> Result<Self> {
        if !(sd.is_finite() && sd > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sd must be positive, got {sd}"
            )));
        }
        let d = mean.len();
        Self::new(mean, DMatrix::from_diagonal_element(d, d, sd * sd))
    }

    pub fn standard(d: usize) -> Result<Self> {
        Self::isotropic(vec![0.0; d], 1.0)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        check_dim(self.mean.len(), shift.len())?;
        let mean = self.mean.iter().zip(shift).map(|(m, s)| m + s).collect();
        Self::new(mean, self.covariance.clone())
    }

    fn quad(&self, x: &[f64]) -> f64 {
        let diff = DVector::from_iterator(x.len(), x.iter().zip(&self.mean).map(|(a, m)| a - m));
        diff.dot(&(&self.precision * &diff))
    }
}

impl Target for GaussianTarget {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density_unnormalized(&self, x: &[f64]) -> f64 {
        -0.5 * self.quad(x)
    }

    fn score_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.mean.len();
        for (i, o) in out.iter_mut().enumerate() {
            *o = -(0..d)
                .map(|j| self.precision[(i, j)] * (x[j] - self.mean[j]))
                .sum::<f64>();
        }
    }

    fn hessian_bound(&self) -> f64 {
        self.hessian_bound
    }

    fn log_density(&self, x: &[f64]) -> Option<f64> {
        Some(self.log_norm - 0.5 * self.quad(x))
    }

    fn has_exact_density(&self) -> bool {
        true
    }
}

/// Weights, means and standard deviations of a one-dimensional Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianMixture1D {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl GaussianMixture1D {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, sds: Vec<f64>) -> Result<Self> {
        let mix = Self {
            weights,
            means,
            sds,
        };
        mix.validate()?;
        Ok(mix)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.weights.len();
        if k == 0 || self.means.len() != k || self.sds.len() != k {
            return Err(Error::InvalidParameter(
                "mixture weights, means and sds must be non-empty and of equal length".into(),
            ));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(
                "mixture weights must be nonnegative".into(),
            ));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        if self.sds.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParameter(
                "mixture sds must be positive".into(),
            ));
        }
        if self.means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidParameter(
                "mixture means must be finite".into(),
            ));
        }
        Ok(())
    }

    /// `[min(m) − 6 max(s), max(m) + 6 max(s)]`
    pub fn default_bound_interval(&self) -> (f64, f64) {
        let max_sd = self.sds.iter().cloned().fold(0.0, f64::max);
        let lo = self.means.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo - 6.0 * max_sd, hi + 6.0 * max_sd)
    }
}

/// One-dimensional Gaussian mixture target.
///
/// `M` and `C_V` are grid-search estimates of `sup |V''|` and `sup |V'|` over
/// a finite interval, inflated by a 10% margin. The score of a Gaussian
/// mixture grows linearly in the tails, so `C_V` only holds on that interval.
#[derive(Debug, Clone)]
pub struct MixtureTarget {
    mix: GaussianMixture1D,
    log_weights: Vec<f64>,
    hessian_bound: f64,
    score_bound: f64,
    interval: (f64, f64),
}

const BOUND_GRID_POINTS: usize = 10_000;
const BOUND_SAFETY: f64 = 1.1;

impl MixtureTarget {
    pub fn new(mix: GaussianMixture1D) -> Result<Self> {
        let interval = mix.default_bound_interval();
        Self::with_bound_interval(mix, interval)
    }

    pub fn with_bound_interval(mix: GaussianMixture1D, interval: (f64, f64)) -> Result<Self> {
        mix.validate()?;
        if interval.0.partial_cmp(&interval.1) != Some(std::cmp::Ordering::Less) {
            return Err(Error::InvalidParameter(format!(
                "bound interval [{}, {}] is empty",
                interval.0, interval.1
            )));
        }
        let log_weights = mix.weights.iter().map(|w| w.ln()).collect();
        let mut target = Self {
            mix,
            log_weights,
            hessian_bound: 0.0,
            score_bound: 0.0,
            interval,
        };
        let (mut m, mut c) = (0.0f64, 0.0f64);
        for i in 0..BOUND_GRID_POINTS {
            let x =
                interval.0 + (interval.1 - interval.0) * i as f64 / (BOUND_GRID_POINTS - 1) as f64;
            let (score, vpp) = target.score_and_curvature(x);
            m = m.max(vpp.abs());
            c = c.max(score.abs());
        }
        target.hessian_bound = BOUND_SAFETY * m;
        target.score_bound = BOUND_SAFETY * c;
        Ok(target)
    }

    pub fn mixture(&self) -> &GaussianMixture1D {
        &self.mix
    }

    pub fn bound_interval(&self) -> (f64, f64) {
        self.interval
    }

    /// Per-component log terms `log wⱼ + log N(x; mⱼ, sⱼ)`.
    fn component_logs(&self, x: f64) -> impl Iterator<Item = f64> + '_ {
        self.log_weights
            .iter()
            .zip(&self.mix.means)
            .zip(&self.mix.sds)
            .map(move |((lw, m), s)| {
                let z = (x - m) / s;
                lw - 0.5 * z * z - s.ln() - LN_SQRT_2PI
            })
    }

    fn log_sum(&self, x: f64) -> f64 {
        let max = self.component_logs(x).fold(f64::NEG_INFINITY, f64::max);
        max + self
            .component_logs(x)
            .map(|l| (l - max).exp())
            .sum::<f64>()
            .ln()
    }

    /// Returns `(V'(x) negated, V''(x))`, i.e. the score and the curvature of
    /// the potential, from posterior responsibilities.
    pub fn score_and_curvature(&self, x: f64) -> (f64, f64) {
        let max = self.component_logs(x).fold(f64::NEG_INFINITY, f64::max);
        let (mut z, mut s1, mut s2, mut prec) = (0.0, 0.0, 0.0, 0.0);
        for ((l, m), s) in self
            .component_logs(x)
            .zip(&self.mix.means)
            .zip(&self.mix.sds)
        {
            let r = (l - max).exp();
            let a = -(x - m) / (s * s);
            z += r;
            s1 += r * a;
            s2 += r * a * a;
            prec += r / (s * s);
        }
        let score = s1 / z;
        let var = s2 / z - score * score;
        (score, prec / z - var)
    }
}

impl Target for MixtureTarget {
    fn dim(&self) -> usize {
        1
    }

    fn log_density_unnormalized(&self, x: &[f64]) -> f64 {
        self.log_sum(x[0])
    }

    fn score_into(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.score_and_curvature(x[0]).0;
    }

    fn hessian_bound(&self) -> f64 {
        self.hessian_bound
    }

    fn score_bound(&self) -> Option<f64> {
        Some(self.score_bound)
    }

    fn log_density(&self, x: &[f64]) -> Option<f64> {
        Some(self.log_sum(x[0]))
    }

    fn has_exact_density(&self) -> bool {
        true
    }
}

/// Serializable description of a target, as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum TargetSpec {
    /// Gaussian with isotropic `sd` or a full `covariance` (row-major rows).
    Gaussian {
        mean: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sd: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        covariance: Option<Vec<Vec<f64>>>,
    },
    Mixture1d {
        weights: Vec<f64>,
        means: Vec<f64>,
        sds: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound_interval: Option<(f64, f64)>,
    },
}

impl TargetSpec {
    /// The mixture used by the bundled toy experiment.
    pub fn default_mixture() -> Self {
        TargetSpec::Mixture1d {
            weights: vec![1.0 / 3.0, 2.0 / 3.0],
            means: vec![-2.0, 2.0],
            sds: vec![1.0, 1.0],
            bound_interval: None,
        }
    }

    pub fn build(&self) -> Result<Box<dyn Target>> {
        match self {
            TargetSpec::Gaussian {
                mean,
                sd,
                covariance,
            } => match (sd, covariance) {
                (Some(sd), None) => Ok(Box::new(GaussianTarget::isotropic(mean.clone(), *sd)?)),
                (None, Some(rows)) => {
                    let d = mean.len();
                    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                        return Err(Error::Config(format!(
                            "target.covariance must be a {d}x{d} matrix"
                        )));
                    }
                    let cov = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
                    Ok(Box::new(GaussianTarget::new(mean.clone(), cov)?))
                }
                _ => Err(Error::Config(
                    "gaussian target needs exactly one of `sd` or `covariance`".into(),
                )),
            },
            TargetSpec::Mixture1d {
                weights,
                means,
                sds,
                bound_interval,
            } => {
                let mix = GaussianMixture1D::new(weights.clone(), means.clone(), sds.clone())?;
                let t = match bound_interval {
                    Some(iv) => MixtureTarget::with_bound_interval(mix, *iv)?,
                    None => MixtureTarget::new(mix)?,
                };
                Ok(Box::new(t))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mixture(w: &[f64], m: &[f64], s: &[f64]) -> MixtureTarget {
        MixtureTarget::new(GaussianMixture1D::new(w.to_vec(), m.to_vec(), s.to_vec()).unwrap())
            .unwrap()
    }

    #[test]
    fn gaussian_scores_and_bound() {
        let t = GaussianTarget::standard(1).unwrap();
        assert_eq!(t.score(&[0.0]).unwrap(), vec![0.0]);
        assert_eq!(t.score(&[2.0]).unwrap(), vec![-2.0]);
        let t = GaussianTarget::isotropic(vec![0.0], 2.0).unwrap();
        assert!((t.hessian_bound() - 0.25).abs() < 1e-15);
        assert!(t.score(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn gaussian_density_is_normalized() {
        let t = GaussianTarget::standard(1).unwrap();
        let p0 = t.density(&[0.0]).unwrap();
        assert!((p0 - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn non_spd_covariance_rejected() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(GaussianTarget::new(vec![0.0, 0.0], cov).is_err());
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(GaussianTarget::new(vec![0.0, 0.0], cov).is_err());
    }

    #[test]
    fn correlated_gaussian_hessian_bound() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let t = GaussianTarget::new(vec![0.0, 0.0], cov).unwrap();
        // eigenvalues of Σ are 1 and 3
        assert!((t.hessian_bound() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_component_mixture_is_gaussian() {
        let t = mixture(&[1.0], &[0.0], &[1.0]);
        for x in [-3.0, -0.5, 0.0, 1.7, 4.0] {
            assert!((t.score(&[x]).unwrap()[0] + x).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetric_mixture_score_vanishes_at_center() {
        let t = mixture(&[0.5, 0.5], &[-2.0, 2.0], &[1.0, 1.0]);
        assert!(t.score(&[0.0]).unwrap()[0].abs() < 1e-15);
    }

    #[test]
    fn asymmetric_mixture_score_at_two() {
        // d/dx log(w1 N(x;-2,1) + w2 N(x;2,1)) at x = 2, evaluated to 40 digits
        // by numerical differentiation in arbitrary precision.
        let t = mixture(&[1.0 / 3.0, 2.0 / 3.0], &[-2.0, 2.0], &[1.0, 1.0]);
        let s = t.score(&[2.0]).unwrap()[0];
        assert!((s - (-6.708127395028116e-4)).abs() < 1e-15);
    }

    #[test]
    fn mixture_validation() {
        assert!(GaussianMixture1D::new(vec![0.5, 0.4], vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(GaussianMixture1D::new(vec![0.5, 0.5], vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        assert!(GaussianMixture1D::new(vec![1.0], vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn mixture_curvature_bound_covers_interior_dip() {
        // V'' at the midpoint of a symmetric two-bump mixture is 1 − 4 = −3
        let t = mixture(&[0.5, 0.5], &[-2.0, 2.0], &[1.0, 1.0]);
        let (_, vpp) = t.score_and_curvature(0.0);
        assert!((vpp + 3.0).abs() < 1e-12);
        assert!(t.hessian_bound() >= 3.0);
        assert!(t.hessian_bound() <= 3.0 * 1.1 + 1e-9);
    }

    #[test]
    fn spec_builds_targets() {
        let t = TargetSpec::default_mixture().build().unwrap();
        assert_eq!(t.dim(), 1);
        assert!(t.has_exact_density());
        let bad = TargetSpec::Gaussian {
            mean: vec![0.0],
            sd: None,
            covariance: None,
        };
        assert!(bad.build().is_err());
    }
}

//! `KL(q̂ | π)` for one-dimensional ensembles, with `q̂` a Gaussian KDE of
//! the particles. Both densities are tabulated on a uniform grid and
//! normalized there by the trapezoidal rule.

use serde::{Deserialize, Serialize};

use crate::ensemble::ParticleEnsemble;
use crate::error::{Error, Result};
use crate::targets::Target;

const DENSITY_FLOOR: f64 = 1e-12;
/// KDE contributions beyond this many bandwidths are dropped.
const KDE_CUTOFF: f64 = 9.0;
const MIN_GRID_POINTS: usize = 100;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KlGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl KlGrid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        let g = Self { lo, hi, points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::InvalidParameter(format!(
                "KL grid [{}, {}] is empty",
                self.lo, self.hi
            )));
        }
        if self.points < MIN_GRID_POINTS {
            return Err(Error::InvalidParameter(format!(
                "KL grid needs at least {MIN_GRID_POINTS} points, got {}",
                self.points
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    fn node(&self, i: usize) -> f64 {
        self.lo + self.spacing() * i as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KdeBandwidth {
    /// `1.06 σ̂ N^{-1/5}`
    #[default]
    Silverman,
    #[serde(untagged)]
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlEstimate {
    pub value: f64,
    pub bandwidth: f64,
    /// Less than 99.9% of the particles lie inside the grid.
    pub mass_warning: bool,
}

/// `1.06 σ̂ N^{-1/5}` with `σ̂` the sample standard deviation.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    1.06 * var.sqrt() * n.powf(-0.2)
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Log of the trapezoidal integral of `exp(log_values)` over the grid.
fn log_trapezoid(log_values: &[f64], dx: f64) -> f64 {
    let last = log_values.len() - 1;
    let half = 0.5f64.ln();
    log_sum_exp(log_values.iter().enumerate().map(
        move |(i, &v)| {
            if i == 0 || i == last {
                v + half
            } else {
                v
            }
        },
    )) + dx.ln()
}

/// Grid estimator with the target's normalized log-density tabulated once.
#[derive(Debug, Clone)]
pub struct KlEstimator {
    grid: KlGrid,
    log_target: Vec<f64>,
}

impl KlEstimator {
    pub fn new(target: &dyn Target, grid: KlGrid) -> Result<Self> {
        grid.validate()?;
        if target.dim() != 1 {
            return Err(Error::Unsupported(format!(
                "KL estimation is one-dimensional, target has d = {}",
                target.dim()
            )));
        }
        if !target.has_exact_density() {
            return Err(Error::Unsupported("target has no exact density".into()));
        }
        let raw: Vec<f64> = (0..grid.points)
            .map(|i| {
                target
                    .log_density(&[grid.node(i)])
                    .unwrap_or(f64::NEG_INFINITY)
            })
            .collect();
        let log_z = log_trapezoid(&raw, grid.spacing());
        if !log_z.is_finite() {
            return Err(Error::InvalidParameter(
                "target density vanishes on the whole KL grid".into(),
            ));
        }
        let log_target = raw.iter().map(|v| v - log_z).collect();
        Ok(Self { grid, log_target })
    }

    pub fn grid(&self) -> KlGrid {
        self.grid
    }

    pub fn estimate(
        &self,
        ensemble: &ParticleEnsemble,
        bandwidth: KdeBandwidth,
    ) -> Result<KlEstimate> {
        if ensemble.dim() != 1 {
            return Err(Error::Unsupported(format!(
                "KL estimation is one-dimensional, ensemble has d = {}",
                ensemble.dim()
            )));
        }
        let xs = ensemble.as_flat();
        let dx = self.grid.spacing();
        let bw = match bandwidth {
            KdeBandwidth::Silverman => silverman_bandwidth(xs),
            KdeBandwidth::Fixed(h) => h,
        };
        if !(bw.is_finite() && bw >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "invalid KDE bandwidth {bw}"
            )));
        }
        // collapsed ensembles get a kernel at least two grid cells wide
        let bw = bw.max(2.0 * dx);

        let inside = xs
            .iter()
            .filter(|&&x| x >= self.grid.lo && x <= self.grid.hi)
            .count();
        let mass_warning = (inside as f64) < 0.999 * xs.len() as f64;

        let log_q = match self.kde_direct(xs, bw) {
            Some(v) => v,
            None => self.kde_log_space(xs, bw),
        };
        let log_zq = log_trapezoid(&log_q, dx);

        let mut value = 0.0;
        for (lq, lp) in log_q.iter().zip(&self.log_target) {
            let lq = lq - log_zq;
            let q = lq.exp();
            if q > DENSITY_FLOOR {
                value += q * (lq - lp) * dx;
            }
        }
        Ok(KlEstimate {
            value,
            bandwidth: bw,
            mass_warning,
        })
    }

    /// Truncated direct KDE. `None` when the density underflows on the grid.
    fn kde_direct(&self, xs: &[f64], bw: f64) -> Option<Vec<f64>> {
        let m = self.grid.points;
        let dx = self.grid.spacing();
        let mut q = vec![0.0; m];
        let reach = KDE_CUTOFF * bw;
        for &x in xs {
            let first = ((x - reach - self.grid.lo) / dx).ceil().max(0.0);
            let last = ((x + reach - self.grid.lo) / dx)
                .floor()
                .min((m - 1) as f64);
            if first > last {
                continue;
            }
            for (i, slot) in q
                .iter_mut()
                .enumerate()
                .take(last as usize + 1)
                .skip(first as usize)
            {
                let z = (self.grid.node(i) - x) / bw;
                *slot += (-0.5 * z * z).exp();
            }
        }
        let norm = (xs.len() as f64).ln() + bw.ln() + LN_SQRT_2PI;
        if q.iter().all(|&v| v < 1e-250) {
            return None;
        }
        Some(q.iter().map(|v| v.ln() - norm).collect())
    }

    fn kde_log_space(&self, xs: &[f64], bw: f64) -> Vec<f64> {
        let norm = (xs.len() as f64).ln() + bw.ln() + LN_SQRT_2PI;
        (0..self.grid.points)
            .map(|i| {
                let g = self.grid.node(i);
                log_sum_exp(xs.iter().map(move |x| {
                    let z = (g - x) / bw;
                    -0.5 * z * z
                })) - norm
            })
            .collect()
    }
}

/// One-shot [`KlEstimator`] evaluation.
pub fn kl_estimate_1d(
    ensemble: &ParticleEnsemble,
    target: &dyn Target,
    grid: KlGrid,
    bandwidth: KdeBandwidth,
) -> Result<KlEstimate> {
    KlEstimator::new(target, grid)?.estimate(ensemble, bandwidth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::GaussianTarget;

    #[test]
    fn rejects_multidimensional_and_small_grids() {
        let t2 = GaussianTarget::standard(2).unwrap();
        let grid = KlGrid::new(-5.0, 5.0, 200).unwrap();
        assert!(matches!(
            KlEstimator::new(&t2, grid),
            Err(Error::Unsupported(_))
        ));
        assert!(KlGrid::new(-5.0, 5.0, 50).is_err());
        assert!(KlGrid::new(5.0, -5.0, 500).is_err());
        let t1 = GaussianTarget::standard(1).unwrap();
        let e = ParticleEnsemble::from_rows(&[vec![0.0, 0.0]]).unwrap();
        assert!(KlEstimator::new(&t1, grid)
            .unwrap()
            .estimate(&e, KdeBandwidth::Silverman)
            .is_err());
    }

    #[test]
    fn far_away_particles_give_large_finite_value() {
        let t = GaussianTarget::standard(1).unwrap();
        let e = ParticleEnsemble::from_scalars(&[100.0, 100.5, 101.0]).unwrap();
        let est = kl_estimate_1d(
            &e,
            &t,
            KlGrid::new(-10.0, 10.0, 2000).unwrap(),
            KdeBandwidth::Silverman,
        )
        .unwrap();
        assert!(est.value.is_finite());
        assert!(est.value > 10.0);
        assert!(est.mass_warning);
    }

    #[test]
    fn truncated_and_log_space_kde_agree() {
        let t = GaussianTarget::standard(1).unwrap();
        let est = KlEstimator::new(&t, KlGrid::new(-6.0, 6.0, 1500).unwrap()).unwrap();
        let xs = [-1.3, -0.2, 0.1, 0.7, 1.9, 2.4];
        let direct = est.kde_direct(&xs, 0.4).unwrap();
        let logs = est.kde_log_space(&xs, 0.4);
        // dropped tails are below e^-40.5, negligible where log q > -15
        for (a, b) in direct.iter().zip(&logs) {
            if *b > -15.0 {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn silverman_rule() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((silverman_bandwidth(&xs) - 1.06 * sd * 4f64.powf(-0.2)).abs() < 1e-15);
    }
}

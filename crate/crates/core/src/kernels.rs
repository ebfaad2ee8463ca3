//! Radial positive-definite kernels with the analytic derivatives needed by
//! the SVGD update and the Stein kernel.
//!
//! Both families are functions of `r² = ‖x − y‖²` only, so every derivative is
//! expressed through the radial profile `φ(r²)` and its first two derivatives:
//!
//! * `∇ₓk(x, y) = 2 φ'(r²) (x − y)`
//! * `Σᵢ ∂²k/∂xᵢ∂yᵢ = −2d φ'(r²) − 4 r² φ''(r²)`

use serde::{Deserialize, Serialize};

use crate::ensemble::{sq_dist, ParticleEnsemble};
use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelFamily {
    /// `exp(−‖x−y‖² / (2h²))`
    Rbf { bandwidth: f64 },
    /// `(c² + ‖x−y‖²)^β` with `β ∈ [−1, 0)`
    Imq { offset: f64, exponent: f64 },
}

/// Value and derivatives of the radial profile at a given `r²`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RadialProfile {
    pub value: f64,
    /// `dφ/d(r²)`
    pub d1: f64,
    /// `d²φ/d(r²)²`
    pub d2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    family: KernelFamily,
    dim: usize,
}

impl Kernel {
    pub fn new(family: KernelFamily, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "kernel dimension must be positive".into(),
            ));
        }
        match family {
            KernelFamily::Rbf { bandwidth } => {
                if !(bandwidth.is_finite() && bandwidth > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "RBF bandwidth must be positive and finite, got {bandwidth}"
                    )));
                }
            }
            KernelFamily::Imq { offset, exponent } => {
                if !(offset.is_finite() && offset > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "IMQ offset must be positive, got {offset}"
                    )));
                }
                if !(-1.0..0.0).contains(&exponent) {
                    return Err(Error::InvalidParameter(format!(
                        "IMQ exponent must lie in [-1, 0), got {exponent}"
                    )));
                }
            }
        }
        Ok(Self { family, dim })
    }

    pub fn rbf(bandwidth: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Rbf { bandwidth }, dim)
    }

    pub fn imq(offset: f64, exponent: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Imq { offset, exponent }, dim)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same family with a new RBF bandwidth. IMQ kernels are returned unchanged.
    pub fn with_bandwidth(&self, bandwidth: f64) -> Result<Self> {
        match self.family {
            KernelFamily::Rbf { .. } => Self::rbf(bandwidth, self.dim),
            KernelFamily::Imq { .. } => Ok(*self),
        }
    }

    #[inline]
    pub(crate) fn profile(&self, r2: f64) -> RadialProfile {
        match self.family {
            KernelFamily::Rbf { bandwidth } => {
                let h2 = bandwidth * bandwidth;
                let value = (-r2 / (2.0 * h2)).exp();
                RadialProfile {
                    value,
                    d1: -value / (2.0 * h2),
                    d2: value / (4.0 * h2 * h2),
                }
            }
            KernelFamily::Imq { offset, exponent } => {
                let u = offset * offset + r2;
                let value = u.powf(exponent);
                let d1 = exponent * value / u;
                RadialProfile {
                    value,
                    d1,
                    d2: (exponent - 1.0) * d1 / u,
                }
            }
        }
    }

    #[inline]
    pub(crate) fn trace_from_profile(&self, p: &RadialProfile, r2: f64) -> f64 {
        -2.0 * self.dim as f64 * p.d1 - 4.0 * r2 * p.d2
    }

    fn check_pair(&self, x: &[f64], y: &[f64]) -> Result<()> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, y.len())
    }

    /// `k(x, y)`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_pair(x, y)?;
        Ok(self.profile(sq_dist(x, y)).value)
    }

    /// `∇ₓk(x, y)`, the gradient in the first argument.
    pub fn grad1(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_pair(x, y)?;
        let mut out = vec![0.0; self.dim];
        self.grad1_into(x, y, &mut out);
        Ok(out)
    }

    /// Unchecked variant of [`Kernel::grad1`] writing into `out`.
    pub fn grad1_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let p = self.profile(sq_dist(x, y));
        for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
            *o = 2.0 * p.d1 * (a - b);
        }
    }

    /// `Σᵢ ∂²k/∂xᵢ∂yᵢ (x, y)`, the trace of the mixed second derivative.
    pub fn trace_grad12(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_pair(x, y)?;
        let r2 = sq_dist(x, y);
        Ok(self.trace_from_profile(&self.profile(r2), r2))
    }

    /// The constant `B` bounding both `√k(x,x)` and `√(Σᵢ ∂²k/∂xᵢ∂yᵢ|_{y=x})`.
    pub fn bound(&self) -> f64 {
        let diag = self.profile(0.0);
        let mixed = self.trace_from_profile(&diag, 0.0);
        diag.value.sqrt().max(mixed.sqrt())
    }

    /// Lipschitz constant `D` of `k` and of `∇ₓk`, jointly in both arguments.
    ///
    /// Closed form for RBF: `max(e^{-1/2}/h, 1/h²)`. For IMQ the suprema over
    /// the radial profile are located by a dense scan and are an estimate.
    pub fn lipschitz_bound(&self) -> f64 {
        match self.family {
            KernelFamily::Rbf { bandwidth } => {
                ((-0.5f64).exp() / bandwidth).max(1.0 / (bandwidth * bandwidth))
            }
            KernelFamily::Imq { offset, .. } => {
                let r_max = 50.0 * offset;
                let steps = 100_000;
                let mut best = 0.0f64;
                for s in 0..=steps {
                    let r = r_max * s as f64 / steps as f64;
                    let p = self.profile(r * r);
                    let grad = 2.0 * p.d1.abs() * r;
                    let tangential = 2.0 * p.d1.abs();
                    let radial = (2.0 * p.d1 + 4.0 * p.d2 * r * r).abs();
                    best = best.max(grad).max(tangential).max(radial);
                }
                best
            }
        }
    }
}

/// The point-pair operations shared by every kernel implementation. The
/// derivative self-checks are written against this trait.
pub trait PairKernel {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64>;
    fn grad1(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>>;
    fn trace_grad12(&self, x: &[f64], y: &[f64]) -> Result<f64>;
}

impl PairKernel for Kernel {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Kernel::eval(self, x, y)
    }
    fn grad1(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        Kernel::grad1(self, x, y)
    }
    fn trace_grad12(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Kernel::trace_grad12(self, x, y)
    }
}

/// Median-heuristic bandwidth `h` with `h² = med / (2 ln(N+1))`.
///
/// `med` is the lower median of the squared distances over the `N(N−1)/2`
/// distinct pairs.
pub fn median_bandwidth(points: &ParticleEnsemble) -> Result<f64> {
    let n = points.len();
    if n < 2 {
        return Err(Error::DegenerateEnsemble(
            "median bandwidth needs at least two particles".into(),
        ));
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dists.push(sq_dist(points.point(i), points.point(j)));
        }
    }
    let mid = (dists.len() - 1) / 2;
    let (_, med, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    let med = *med;
    if med <= 0.0 {
        return Err(Error::DegenerateEnsemble(
            "median squared pairwise distance is zero".into(),
        ));
    }
    Ok((med / (2.0 * ((n + 1) as f64).ln())).sqrt())
}

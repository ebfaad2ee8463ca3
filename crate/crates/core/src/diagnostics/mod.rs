//! Convergence diagnostics: squared kernel Stein discrepancy, grid-based KL
//! estimates, exact Wasserstein-2 distances between empirical measures, and
//! log-log rate fits.

mod kl;
mod rate;
pub(crate) mod stein;
mod wasserstein;

pub use kl::{kl_estimate_1d, silverman_bandwidth, KdeBandwidth, KlEstimate, KlEstimator, KlGrid};
pub use rate::{fit_loglog, fit_rate, verify_descent, DescentReport, RateFit};
pub use stein::{ksd_squared, ksd_squared_rkhs_form, stein_kernel, KsdMode};
pub use wasserstein::{
    w2_squared_1d, w2_squared_1d_unequal, w2_squared_assignment, ASSIGNMENT_MAX_POINTS,
};

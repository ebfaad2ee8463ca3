//! Stein variational gradient descent (SVGD) with convergence diagnostics.
//!
//! The crate is organized around the finite-particle update
//! `xᵢ ← xᵢ + γ g(xᵢ)` and the quantities used to reason about it:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`kernels`] | RBF and IMQ kernels, analytic derivatives, median bandwidth, bound `B` |
//! | [`targets`] | Gaussian and 1-D mixture targets with scores and smoothness constants |
//! | [`svgd`] | field, synchronous step, step-size planner, traced runs |
//! | [`diagnostics`] | squared KSD, KL estimates, `W₂`, rate fits, descent checks |
//! | [`chaos`] | finite-particle vs reference-ensemble experiment and its bound |
//! | [`experiment`] | JSON-configured runs writing CSV/JSON artifacts |
//! | [`selftest`] | invariant suite behind the `selftest` command |
//!
//! ```
//! use svgd::{kernels::Kernel, targets::GaussianTarget, ParticleEnsemble};
//! use svgd::svgd::svgd_step;
//!
//! let target = GaussianTarget::standard(1).unwrap();
//! let kernel = Kernel::rbf(1.0, 1).unwrap();
//! let particles = ParticleEnsemble::from_scalars(&[-1.0, 1.0]).unwrap();
//! let next = svgd_step(&particles, &target, &kernel, 0.1).unwrap();
//! assert!(next.point(1)[0] < 1.0);
//! ```

pub mod chaos;
pub mod diagnostics;
mod ensemble;
mod error;
pub mod experiment;
pub mod kernels;
mod pairwise;
pub mod rng;
pub mod selftest;
pub mod svgd;
pub mod targets;
pub mod trace;

pub use ensemble::ParticleEnsemble;
pub use error::{Error, Result};

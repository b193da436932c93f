//! Maximum-a-posteriori inference for Gaussian Cox processes and Bayesian
//! optimization over the estimated intensity.
//!
//! The latent function `g` is linked to the intensity through a smooth
//! non-negative link `λ = κ(g)`. Writing `h² = κ(g)`, the penalized
//! negative log-likelihood
//!
//! ```text
//! J(h) = -Σ log h²(tᵢ) + ∫ h² dt + γ ‖h‖²_k
//! ```
//!
//! is rewritten as `-Σ log h²(tᵢ) + ‖h‖²_k̃` for a transformed kernel `k̃`
//! whose Mercer eigenvalues are `η / (η + γ)`. The eigen-pairs are estimated
//! by the Nyström method on a uniform grid, the representer theorem reduces
//! the problem to dual coefficients over the events, and the Laplace
//! approximation supplies the posterior covariance on the grid.
//!
//! Modules:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`kernels`] | RBF kernel, grids, grid eigensystems, transformed kernel |
//! | [`link`] | the four link functions with derivatives and inverses |
//! | [`inference`] | events, MAP fit, Laplace covariance, posterior queries |
//! | [`pointprocess`] | Poisson counts, thinning, benchmark intensities |
//! | [`acquisition`] | UCB, idle-time, cumulative-arrival and change-point scores |
//! | [`bo`] | the sequential region-sampling loop |
//! | [`metrics`] | ℓ₂ distance and integrated quantile loss |

// Checks such as `!(x >= 0.0)` are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod bo;
pub mod error;
pub mod inference;
pub mod kernels;
pub mod link;
pub mod metrics;
pub mod pointprocess;

pub use error::{Error, Result};
pub use inference::{EventSet, FitConfig, Posterior};
pub use kernels::{Grid, KernelSpec, TransformedKernelModel};
pub use link::LinkFunction;

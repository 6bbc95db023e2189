//! Bayesian nonparametric density estimation.
//!
//! Three posterior samplers share one output type, [`DensityEstimate`]:
//!
//! * [`lindsey`]: binned counts are square-root transformed and smoothed by
//!   a Bayesian cubic smoothing spline fitted with a Gibbs sampler.
//! * [`pgm`]: a penalized mixture of fixed, equally spaced Gaussians whose
//!   softmax logits carry a second-difference prior; the logits are updated
//!   by Hamiltonian Monte Carlo.
//! * [`dpmm`]: a truncated stick-breaking Dirichlet process mixture of
//!   Gaussians fitted with a blocked Gibbs sampler.
//!
//! [`laplace`] gives the large-sample normal approximation to the mixture
//! logit posterior, and [`evalbench`] runs the simulation benchmark.

// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod dpmm;
pub mod error;
pub mod estimate;
pub mod evalbench;
pub mod io;
pub mod laplace;
pub mod lindsey;
pub mod pgm;
pub mod sample;
pub mod stochastics;

pub use error::{Error, Result};
pub use estimate::{DensityEstimate, FitDiagnostics};
pub use sample::{Interval, SampleSet};
pub use stochastics::RngStream;

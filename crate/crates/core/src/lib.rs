//! Spectral Galerkin discretisation and exponential-Euler time stepping for the
//! one-dimensional fractional stochastic Burgers-type equation
//!
//! ```text
//! du = [-A^{α/2} u + ∂ₓ f(u)] dt + dW,   x ∈ (0, 1),   u(0) = u(1) = 0,
//! ```
//!
//! driven by space-time white noise, together with the tooling needed to
//! measure pathwise convergence rates in Hölder norms.
//!
//! Everything lives in the Dirichlet sine basis `e_k(x) = √2 sin(kπx)`, where
//! the fractional Laplacian, its semigroup and the Galerkin projection are all
//! diagonal. The nonlinearity is evaluated pseudospectrally on a midpoint grid
//! that is large enough to be alias-free.

pub mod basis;
pub mod error;
pub mod experiments;
pub mod io;
pub mod nonlinearity;
pub mod noise;
pub mod norms;
pub mod operator;
pub mod regression;
pub mod solver;
pub mod validation;

pub use basis::{Basis, GridField, GridTransform, SpectralField};
pub use error::{Error, Result};
pub use experiments::{
    path_regularity_study, space_convergence_study, time_convergence_study, validity_window,
    RateReport, RegularityReport, StudyOptions, WindowReport,
};
pub use nonlinearity::Polynomial;
pub use noise::{NoiseSpec, OuPath, RNG_ID};
pub use norms::HolderEstimate;
pub use operator::FracParams;
pub use solver::{SolveConfig, Trajectory};

/// Version string embedded in every artifact this crate writes.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

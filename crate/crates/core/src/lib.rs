//! Multivariate beta mixture models for soft clustering on the unit hypercube.
//!
//! - [`specfun`]: log-gamma and digamma.
//! - [`distribution`]: the multivariate beta density and sampler.
//! - [`mixture`]: the mixture model, EM fitting, prediction and the KL point distance.
//! - [`mstep`]: the bounded quasi-Newton solver behind the shape-parameter M-step.
//! - [`metrics`]: adjusted Rand index and adjusted mutual information.
//! - [`datasets`]: synthetic generators, CSV ingestion and unit scaling.
//! - [`cli`]: model files, SVG plots and the command implementations.

pub mod cli;
pub mod datasets;
pub mod distribution;
pub mod error;
pub mod metrics;
pub mod mixture;
pub mod mstep;
pub mod specfun;

pub use distribution::MBParams;
pub use error::{Error, Result};
pub use mixture::{fit, FitConfig, FitReport, FitResult, MixtureModel, Responsibilities};

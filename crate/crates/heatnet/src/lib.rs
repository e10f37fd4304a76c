//! Steady-state heat transport in harmonic oscillator networks coupled to
//! Ohmic reservoirs, static or periodically driven.
//!
//! The crate is organized around a spectral pipeline and an independent
//! time-domain oracle:
//!
//! - [`model`] — networks, baths, spectral densities, occupations
//! - [`static_solver`] — static Green's function, transfer matrix, currents
//! - [`floquet_solver`] — driven amplitudes, dynamical transfer, averaged
//!   currents and work rates, stability heuristics
//! - [`metrics`] — rectification coefficients, quasi-currents, parameter
//!   maps, transistor amplification factors
//! - [`oracle`] — discrete-bath covariance simulation used to cross-validate
//!   the spectral results
//! - [`cli`] — configuration, sweeps and deterministic CSV/JSON output

pub mod cli;
pub mod floquet_solver;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod quad;
pub mod report;
pub mod static_solver;

pub use model::{BathSpec, Model, NetworkSpec};
pub use report::{CurrentsReport, StabilityReport};

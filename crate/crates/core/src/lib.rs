//! Spectral analysis of the half-line discrete Schrödinger operator
//! with a Dirichlet wall, and Darboux transformations that add or
//! remove bound states without touching the continuous spectrum.
//!
//! The pipeline: a compactly supported potential determines exact Jost
//! coefficients ([`jost`]), whose unit-interval zeros are the bound
//! states; norming constants, scattering matrix, phase shift and
//! spectral density follow ([`spectral`]). Transforms run either
//! through the generic Gel'fand–Levitan system ([`gl`]) or through the
//! closed-form workspace ([`darboux`]); every quantity has a
//! brute-force twin in [`oracle`].

pub mod darboux;
pub mod density;
pub mod error;
pub mod gl;
pub mod io;
pub mod jost;
pub mod linalg;
pub mod oracle;
pub mod param;
pub mod potential;
pub mod quadrature;
pub mod regular;
pub mod spectral;

pub use darboux::{add_bound_state, remove_bound_state, DarbouxInput, DarbouxResult};
pub use density::{Atom, JostEval, SpectralDensity};
pub use error::{Error, Result};
pub use jost::{jost_function, jost_solution, JostData};
pub use param::{lambda_of_z, z_of_lambda, z_of_lambda_real, SpectralPoint};
pub use potential::Potential;
pub use spectral::{analyze, BoundState, EndpointClass, SpectralAnalysis};

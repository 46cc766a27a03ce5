//! Pseudospectral passive-scalar transport on the periodic box together with
//! Littlewood–Paley diagnostics: dyadic and ball-refined frequency
//! projections, commutator estimates, weighted long-time averages and the
//! band-wise variance spectrum.

pub mod commutator;
mod error;
pub mod flow;
pub mod lp;
pub mod spectra;
pub mod spectral;

pub use error::{Error, Result};

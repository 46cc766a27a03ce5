//! Weighted long-time averages, the band-wise variance spectrum and the
//! Batchelor-scale diagnostics built from them.
//!
//! The weight `e^{φ(t)}` grows without bound, so every average is kept in the
//! stabilized form `(1/T)∫₀ᵀ f e^{φ(t)-φ(T)} dt`. Ratios of two such averages
//! over the same horizon do not depend on the factor `e^{φ(T)}`.

mod batchelor;
mod report;
mod weight;

pub use batchelor::{batchelor_wavenumber, chi_phi, kappa_for_batchelor, rewritten_bound, stirring_time};
pub use report::{
    lp_spectrum, plateau_check, representative_k, theorem_check, write_spectrum_csv, BandProbe, PlateauReport,
    RunParameters, SpectrumReport, SpectrumRow,
};
pub use weight::{weighted_average, TimeWeight, WeightedAverage, WeightedAverager};

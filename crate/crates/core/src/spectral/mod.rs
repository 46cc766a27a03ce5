//! Periodic Fourier infrastructure: grids, normalized transforms, spectral
//! derivatives, fractional norms, frequency splitting and shell spectra.
//!
//! Coefficients follow the spatial-average convention
//! `c(m) = L^{-d} ∫ f(x) e^{-i m·x} dx`, so multiplier algebra reads directly
//! off the lattice and Parseval is `⟨f²⟩ = Σ_m |c(m)|²`.

mod field;
mod grid;
mod ops;
mod random;
mod velocity;

pub use field::{forward, inverse, ComplexField, ScalarField, SpectralField, HERMITIAN_TOL};
pub use grid::FourierGrid;
pub use ops::{
    dealiased_product, derivative, divergence, fractional_norm, fractional_norm_vector, gradient, laplacian,
    shell_spectrum, split_frequency, ShellSpectrum,
};
pub use random::{random_field, random_spectrum, random_spectrum_with};
pub use velocity::{normalize_budget, Budget, VelocityField};
pub(crate) use field::real_synthesis;

pub fn make_grid(length: f64, n: usize, dim: usize) -> crate::Result<FourierGrid> {
    FourierGrid::new(length, n, dim)
}

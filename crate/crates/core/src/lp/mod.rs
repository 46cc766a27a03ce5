//! Littlewood–Paley decomposition on the lattice.
//!
//! Band `ℓ` keeps frequencies with `|m|` in the open annulus
//! `(2^{ℓ-1}, 2^{ℓ+1})`; the multipliers sum to one away from the origin.
//! Each band is refined further by a ball cover of radius `σ2^ℓ`. Kernels are
//! only materialized for moment checks; projections are multiplier products.

mod bands;
mod checks;
mod cover;
mod export;
mod kernel;
mod profile;

pub use bands::{build_dyadic_family, BandSet};
pub use checks::{bernstein_check, dissipation_lower_bound_check, random_ball_field};
pub use cover::{build_ball_cover, unit_centers, BallCover};
pub use export::{write_band_multipliers, write_cover_multipliers};
pub use kernel::{
    decayed_bands, kernel_moment, kernel_samples, periodized_moment, KernelSamples, KERNEL_DECAY_TOL,
};
pub use profile::{DyadicProfile, ProfileKind};

/// Default ball-cover radius fraction.
pub const DEFAULT_SIGMA: f64 = 0.125;

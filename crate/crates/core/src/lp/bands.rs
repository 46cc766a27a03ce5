use rayon::prelude::*;

use super::profile::DyadicProfile;
use crate::error::{Error, Result};
use crate::spectral::{real_synthesis, FourierGrid, ScalarField, SpectralField};

/// Dyadic multiplier family `(Fφ_ℓ)(m)` sampled on the lattice.
///
/// The family spans every band that is nonzero somewhere on the lattice, so
/// `Σ_ℓ θ_ℓ = θ - ⟨θ⟩` holds for any field. `resolved_max` is the last band
/// whose whole annulus `(2^{ℓ-1}, 2^{ℓ+1})` sits inside the dealiased ball.
#[derive(Clone, Debug)]
pub struct BandSet {
    grid: FourierGrid,
    profile: DyadicProfile,
    min_band: i32,
    max_band: i32,
    resolved_max: i32,
    multipliers: Vec<Vec<f64>>,
}

pub fn build_dyadic_family(grid: &FourierGrid, profile: DyadicProfile) -> Result<BandSet> {
    profile.validate()?;
    let k0 = grid.fundamental();
    let kmax = grid.mag2().iter().fold(0.0f64, |m, &v| m.max(v)).sqrt();
    // bands touching [k0, kmax]: 2^{ℓ+1} > k0 and 2^{ℓ-1} < kmax
    let lo = (k0.log2() - 1.0).floor() as i32;
    let hi = (kmax.log2() + 1.0).ceil() as i32;
    let candidates: Vec<(i32, Vec<f64>)> = (lo..=hi)
        .into_par_iter()
        .map(|band| {
            let w: Vec<f64> = grid.mag2().iter().map(|&m2| profile.symbol(band, m2.sqrt())).collect();
            (band, w)
        })
        .collect();
    let nonzero: Vec<(i32, Vec<f64>)> = candidates.into_iter().filter(|(_, w)| w.iter().any(|&v| v != 0.0)).collect();
    let min_band = nonzero.first().map(|(b, _)| *b).ok_or_else(|| Error::Degenerate("no bands".into()))?;
    let max_band = nonzero.last().map(|(b, _)| *b).unwrap();
    let cutoff = grid.dealias_cutoff();
    let resolved_max = (min_band..=max_band)
        .take_while(|&b| 2f64.powi(b + 1) <= cutoff)
        .last()
        .unwrap_or(min_band - 1);
    if resolved_max < min_band + 3 {
        return Err(Error::GridTooCoarse { min: min_band, max: resolved_max });
    }
    Ok(BandSet {
        grid: grid.clone(),
        profile,
        min_band,
        max_band,
        resolved_max,
        multipliers: nonzero.into_iter().map(|(_, w)| w).collect(),
    })
}

impl BandSet {
    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn profile(&self) -> &DyadicProfile {
        &self.profile
    }

    pub fn min_band(&self) -> i32 {
        self.min_band
    }

    pub fn max_band(&self) -> i32 {
        self.max_band
    }

    pub fn resolved_max(&self) -> i32 {
        self.resolved_max
    }

    pub fn bands(&self) -> std::ops::RangeInclusive<i32> {
        self.min_band..=self.max_band
    }

    /// Bands with a nonzero multiplier inside the dealiased ball.
    pub fn dealiased_bands(&self) -> Vec<i32> {
        let cutoff = self.grid.dealias_cutoff();
        self.bands().filter(|&b| 2f64.powi(b - 1) < cutoff).collect()
    }

    /// Resolved bands away from both ends: excludes the lowest band and any
    /// band whose annulus reaches the dealiasing cutoff.
    pub fn central_bands(&self) -> Vec<i32> {
        (self.min_band + 1..=self.resolved_max).collect()
    }

    fn check(&self, band: i32) -> Result<usize> {
        if band < self.min_band || band > self.max_band {
            return Err(Error::BandOutOfRange { band, min: self.min_band, max: self.max_band });
        }
        Ok((band - self.min_band) as usize)
    }

    pub fn multiplier(&self, band: i32) -> Result<&[f64]> {
        Ok(&self.multipliers[self.check(band)?])
    }

    pub fn project_spectral(&self, f: &SpectralField, band: i32) -> Result<SpectralField> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(f.apply_real(self.multiplier(band)?))
    }

    /// `θ_ℓ = φ_ℓ ∗ θ`, applied as a lattice multiplier.
    pub fn project(&self, theta: &ScalarField, band: i32) -> Result<ScalarField> {
        let spec = self.project_spectral(&theta.forward(), band)?;
        Ok(real_synthesis(&spec))
    }

    /// Largest deviation of `Σ_ℓ (Fφ_ℓ)(m)` from 1 over nonzero lattice points
    /// (restricted to the dealiased ball when `dealiased_only`).
    pub fn partition_defect(&self, dealiased_only: bool) -> f64 {
        let mask = self.grid.dealias_mask();
        (1..self.grid.len())
            .filter(|&i| !dealiased_only || mask[i])
            .map(|i| (self.multipliers.iter().map(|w| w[i]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

use num_complex::Complex64;

use super::bands::BandSet;
use crate::error::{param, Error, Result};
use crate::spectral::FourierGrid;

/// Largest admissible `max_{half box}|K| / max|K|` for [`kernel_moment`].
pub const KERNEL_DECAY_TOL: f64 = 1e-4;

/// Real-space samples `K(y) = Σ_m w(m) e^{i m·y}` of a lattice multiplier.
/// Convolution with the continuum kernel is `L^{-d}∫K(y) f(x-y) dy`.
#[derive(Clone, Debug)]
pub struct KernelSamples {
    grid: FourierGrid,
    values: Vec<Complex64>,
}

pub fn kernel_samples(grid: &FourierGrid, multiplier: &[f64]) -> Result<KernelSamples> {
    if multiplier.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    let mut values: Vec<Complex64> = multiplier.iter().map(|&w| Complex64::new(w, 0.0)).collect();
    grid.inverse_in_place(&mut values);
    Ok(KernelSamples { grid: grid.clone(), values })
}

impl KernelSamples {
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Tail of the kernel at the box scale: largest `|K|` over cells with some
    /// coordinate at half the box, relative to `max|K|`. Zero for a zero kernel.
    pub fn decay_ratio(&self) -> f64 {
        let peak = self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        if peak == 0.0 {
            return 0.0;
        }
        let half = (self.grid.n() / 2) as i64;
        let dim = self.grid.dim();
        let tail = (0..self.grid.len())
            .filter(|&i| self.grid.lattice_index(i)[..dim].iter().any(|&c| c == -half))
            .fold(0.0f64, |m, i| m.max(self.values[i].norm()));
        tail / peak
    }

    /// `∫|φ(y)||y|^r dy` over one periodic cell with minimal-image distances.
    pub fn moment(&self, r: f64) -> f64 {
        let total: f64 = (0..self.grid.len())
            .map(|i| {
                let y = self.grid.minimal_image(i);
                let dist = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
                let weight = if r == 0.0 { 1.0 } else { dist.powf(r) };
                self.values[i].norm() * weight
            })
            .sum();
        total / self.grid.len() as f64
    }
}

fn check_order(r: f64) -> Result<()> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(param("r", format!("moment order {r} must be finite and nonnegative")));
    }
    Ok(())
}

/// Periodized kernel moment without a decay check.
pub fn periodized_moment(grid: &FourierGrid, multiplier: &[f64], r: f64) -> Result<f64> {
    check_order(r)?;
    Ok(kernel_samples(grid, multiplier)?.moment(r))
}

/// Kernel moment `∫|φ(y)||y|^r dy`, refusing kernels that have not decayed
/// at half the box so that the periodized value stands in for the
/// whole-space integral.
pub fn kernel_moment(grid: &FourierGrid, multiplier: &[f64], r: f64) -> Result<f64> {
    check_order(r)?;
    let k = kernel_samples(grid, multiplier)?;
    let tail = k.decay_ratio();
    if tail > KERNEL_DECAY_TOL {
        return Err(Error::KernelNotDecayed { tail, tol: KERNEL_DECAY_TOL });
    }
    Ok(k.moment(r))
}

/// Resolved central bands whose kernels pass the decay check.
pub fn decayed_bands(bands: &BandSet) -> Vec<i32> {
    bands
        .central_bands()
        .into_iter()
        .filter(|&b| {
            let w = bands.multiplier(b).expect("central band in range");
            kernel_samples(bands.grid(), w).map(|k| k.decay_ratio() <= KERNEL_DECAY_TOL).unwrap_or(false)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{build_dyadic_family, DyadicProfile};
    use std::f64::consts::PI;

    #[test]
    fn zero_multiplier_has_zero_moments() {
        let g = FourierGrid::new(2.0 * PI, 16, 2).unwrap();
        let w = vec![0.0; g.len()];
        for r in [0.0, 1.0, 2.0] {
            assert_eq!(kernel_moment(&g, &w, r).unwrap(), 0.0);
        }
        assert!(kernel_moment(&g, &w, -1.0).is_err());
    }

    #[test]
    fn identity_multiplier_is_a_delta() {
        let g = FourierGrid::new(1.0, 16, 2).unwrap();
        let w = vec![1.0; g.len()];
        let k = kernel_samples(&g, &w).unwrap();
        assert!((k.values()[0].re - g.len() as f64).abs() < 1e-9);
        assert!(k.values()[1..].iter().all(|v| v.norm() < 1e-9));
        assert!((k.moment(0.0) - 1.0).abs() < 1e-12);
        assert!(k.moment(1.0).abs() < 1e-9);
    }

    #[test]
    fn single_mode_kernel_moment() {
        // w = δ_{m0}: K(y) = e^{i m0·y}, so ∫|φ| = 1 and the r-moment is the
        // mean of |y|^r over the cell
        let g = FourierGrid::new(2.0, 16, 2).unwrap();
        let mut w = vec![0.0; g.len()];
        w[g.flat_index(&[3, 1])] = 1.0;
        assert!((periodized_moment(&g, &w, 0.0).unwrap() - 1.0).abs() < 1e-12);
        let mean_dist: f64 = (0..g.len())
            .map(|i| {
                let y = g.minimal_image(i);
                (y[0] * y[0] + y[1] * y[1]).sqrt()
            })
            .sum::<f64>()
            / g.len() as f64;
        assert!((periodized_moment(&g, &w, 1.0).unwrap() - mean_dist).abs() < 1e-12);
        // a pure mode never decays
        assert!(matches!(kernel_moment(&g, &w, 1.0), Err(Error::KernelNotDecayed { .. })));
    }

    #[test]
    fn low_bands_fail_decay_check() {
        let g = FourierGrid::new(2.0 * PI, 64, 2).unwrap();
        let b = build_dyadic_family(&g, DyadicProfile::default()).unwrap();
        assert!(kernel_moment(&g, b.multiplier(0).unwrap(), 0.0).is_err());
    }
}

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::field::{real_synthesis, ScalarField, SpectralField};
use super::grid::FourierGrid;

/// Whether `lattice` is the representative of the pair `{m, -m}`.
fn is_canonical(lattice: &[i64; 3]) -> bool {
    lattice.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

fn touches_nyquist(grid: &FourierGrid, lattice: &[i64; 3]) -> bool {
    let half = (grid.n() / 2) as i64;
    lattice[..grid.dim()].iter().any(|&c| c == -half)
}

/// Random real spectrum with Hermitian pairs. `weight(idx)` returns the
/// amplitude envelope at a lattice point, or `None` to leave it empty.
/// Nyquist planes and the mean are always empty.
pub fn random_spectrum_with(
    grid: &FourierGrid,
    seed: u64,
    weight: impl Fn(usize) -> Option<f64>,
) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    for idx in 0..grid.len() {
        let l = grid.lattice_index(idx);
        if !is_canonical(&l) || touches_nyquist(grid, &l) {
            continue;
        }
        let Some(w) = weight(idx) else { continue };
        let amp: f64 = rng.random_range(0.5..1.5);
        let phase: f64 = rng.random_range(0.0..2.0 * PI);
        let c = Complex64::from_polar(w * amp, phase);
        coeffs[idx] = c;
        let mirror = grid.flat_index(&[-l[0], -l[1], -l[2]]);
        coeffs[mirror] = c.conj();
    }
    SpectralField::new(grid, coeffs).expect("sized to grid")
}

/// Mean-zero random real field with amplitude `|m|^slope` on the shell range
/// `kmin <= |m| <= kmax` (all non-Nyquist modes when `band` is `None`).
pub fn random_field(grid: &FourierGrid, seed: u64, band: Option<(f64, f64)>, slope: f64) -> ScalarField {
    real_synthesis(&random_spectrum(grid, seed, band, slope))
}

pub fn random_spectrum(grid: &FourierGrid, seed: u64, band: Option<(f64, f64)>, slope: f64) -> SpectralField {
    let mag2 = grid.mag2();
    random_spectrum_with(grid, seed, |idx| {
        let k = mag2[idx].sqrt();
        match band {
            Some((lo, hi)) if k < lo || k > hi => None,
            _ => Some(k.powf(slope)),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_fields_are_real_mean_zero_and_reproducible() {
        let g = FourierGrid::new(1.0, 16, 2).unwrap();
        let a = random_spectrum(&g, 5, None, -1.0);
        assert!(a.is_hermitian(1e-15));
        assert_eq!(a.mean(), Complex64::new(0.0, 0.0));
        let b = random_spectrum(&g, 5, None, -1.0);
        assert_eq!(a.coeffs(), b.coeffs());
        let c = random_spectrum(&g, 6, None, -1.0);
        assert_ne!(a.coeffs(), c.coeffs());
        let f = random_field(&g, 5, Some((10.0, 20.0)), 0.0);
        assert!(f.mean().abs() < 1e-15);
    }
}

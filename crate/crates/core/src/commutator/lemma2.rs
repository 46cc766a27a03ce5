use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::lp::{periodized_moment, BandSet};
use crate::spectral::{fractional_norm, gradient, split_frequency, FourierGrid, ScalarField, SpectralField};

/// `⟨|[v, φ∗]q|⟩` against
/// `(∫|φ|)^{1-s} (∫|φ||y|)^s ⟨|∇^s v|²⟩^{1/2} ⟨q²⟩^{1/2}`.
///
/// Moments are those of the periodized kernel with minimal-image distances.
#[derive(Clone, Debug, Serialize)]
pub struct Lemma2Report {
    pub band: i32,
    pub s: f64,
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
    /// `∫|φ|`
    pub moment0: f64,
    /// `∫|φ||y|`
    pub moment1: f64,
    /// `min_M [2∫|φ| ⟨|v₀^M|²⟩^{1/2} + ∫|φ||y| ⟨|∇v₁^M|²⟩^{1/2}] ⟨q²⟩^{1/2}` over
    /// lattice thresholds `M`, where `v₀^M` keeps `|m| > M`.
    pub split_bound: f64,
    /// `min_M (2 M^{-s} ∫|φ| + M^{1-s} ∫|φ||y|) ⟨|∇^s v|²⟩^{1/2} ⟨q²⟩^{1/2}`.
    pub interpolation_bound: f64,
}

/// `[v, φ∗]q = v(φ∗q) - φ∗(vq)` with products on the grid (no truncation).
pub fn scalar_commutator(v: &ScalarField, q: &ScalarField, multiplier: &[f64]) -> Result<ScalarField> {
    if v.grid() != q.grid() {
        return Err(Error::GridMismatch);
    }
    let filtered_q = q.forward().apply_real(multiplier).inverse()?;
    let vq = ScalarField::new(v.grid(), v.values().iter().zip(q.values()).map(|(a, b)| a * b).collect())?;
    let filtered_vq = vq.forward().apply_real(multiplier).inverse()?;
    ScalarField::new(
        v.grid(),
        (0..v.values().len()).map(|i| v.values()[i] * filtered_q.values()[i] - filtered_vq.values()[i]).collect(),
    )
}

/// Distinct lattice magnitudes `|m|`, including 0.
fn lattice_thresholds(grid: &FourierGrid) -> Vec<f64> {
    let mut ks: Vec<f64> = grid.mag2().iter().map(|m| m.sqrt()).collect();
    ks.sort_by(f64::total_cmp);
    ks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.max(1.0));
    ks
}

fn l2_of(f: &SpectralField) -> f64 {
    f.energy().sqrt()
}

fn grad_l2(f: &SpectralField) -> f64 {
    gradient(f).iter().map(SpectralField::energy).sum::<f64>().sqrt()
}

/// Measured-to-bound ratio for one band and fractional order `s`. Exact on the
/// grid when `v` and `q` only carry modes with `|n_a| < N/4`.
pub fn lemma2_check(v: &ScalarField, q: &ScalarField, bands: &BandSet, band: i32, s: f64) -> Result<Lemma2Report> {
    if !(0.0..=1.0).contains(&s) {
        return Err(param("s", format!("fractional order {s} outside [0, 1]")));
    }
    let w = bands.multiplier(band)?;
    let grid = bands.grid();
    if v.grid() != grid || q.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let measured = scalar_commutator(v, q, w)?.l1();
    let m0 = periodized_moment(grid, w, 0.0)?;
    let m1 = periodized_moment(grid, w, 1.0)?;
    let v_hat = v.forward();
    let gs = fractional_norm(&v_hat, s)?;
    let q2 = q.l2();
    let bound = m0.powf(1.0 - s) * m1.powf(s) * gs * q2;
    if bound == 0.0 {
        if measured == 0.0 && gs == 0.0 && s == 0.0 {
            return Err(Error::Degenerate("zero v and q".into()));
        }
        return Err(Error::Degenerate(format!("zero bound at s = {s}")));
    }
    let mut split_bound = f64::INFINITY;
    let mut interpolation_bound = f64::INFINITY;
    for &m in &lattice_thresholds(grid) {
        let (high, low) = split_frequency(&v_hat, m)?;
        split_bound = split_bound.min(2.0 * m0 * l2_of(&high) + m1 * grad_l2(&low));
        if m > 0.0 {
            interpolation_bound = interpolation_bound.min(2.0 * m.powf(-s) * m0 + m.powf(1.0 - s) * m1);
        }
    }
    Ok(Lemma2Report {
        band,
        s,
        measured,
        bound,
        ratio: measured / bound,
        moment0: m0,
        moment1: m1,
        split_bound: split_bound * q2,
        interpolation_bound: interpolation_bound * gs * q2,
    })
}

/// Random real field with modes `0 < |n_a| < N/4` (lattice units), amplitude
/// `|m|^slope`; products of two such fields are resolved on the grid.
pub fn quarter_band_field(grid: &FourierGrid, seed: u64, slope: f64) -> ScalarField {
    let quarter = (grid.n() / 4) as i64;
    let dim = grid.dim();
    let spec = crate::spectral::random_spectrum_with(grid, seed, |idx| {
        let l = grid.lattice_index(idx);
        l[..dim].iter().all(|c| c.abs() < quarter).then(|| grid.magnitude(idx).powf(slope))
    });
    crate::spectral::real_synthesis(&spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{build_dyadic_family, DyadicProfile};
    use std::f64::consts::PI;

    fn bands() -> BandSet {
        let g = FourierGrid::new(2.0 * PI, 64, 2).unwrap();
        build_dyadic_family(&g, DyadicProfile::default()).unwrap()
    }

    #[test]
    fn constant_v_gives_zero() {
        let b = bands();
        let g = b.grid().clone();
        let q = quarter_band_field(&g, 1, -1.0);
        let r = lemma2_check(&ScalarField::constant(&g, 2.0), &q, &b, 2, 0.0).unwrap();
        assert!(r.measured < 1e-13 && r.ratio < 1e-13);
        assert!(lemma2_check(&ScalarField::constant(&g, 2.0), &q, &b, 2, 1.0).is_err());
    }

    #[test]
    fn ratios_respect_young_and_split_bounds() {
        let b = bands();
        let g = b.grid().clone();
        for seed in 0..4 {
            let v = quarter_band_field(&g, 2 * seed, -1.0);
            let q = quarter_band_field(&g, 2 * seed + 1, -0.5);
            for band in 1..=3 {
                let r0 = lemma2_check(&v, &q, &b, band, 0.0).unwrap();
                assert!(r0.ratio <= 2.0 + 1e-12, "s=0 ratio {}", r0.ratio);
                let r1 = lemma2_check(&v, &q, &b, band, 1.0).unwrap();
                assert!(r1.ratio <= 1.0 + 1e-9, "s=1 ratio {}", r1.ratio);
                let rh = lemma2_check(&v, &q, &b, band, 0.5).unwrap();
                assert!(rh.measured <= rh.split_bound * (1.0 + 1e-9));
                assert!(rh.split_bound <= rh.interpolation_bound * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn quarter_band_fields_stay_below_quarter() {
        let g = FourierGrid::new(1.0, 32, 2).unwrap();
        let f = quarter_band_field(&g, 3, 0.0).forward();
        for (idx, c) in f.coeffs().iter().enumerate() {
            let l = g.lattice_index(idx);
            if l[0].abs() >= 8 || l[1].abs() >= 8 {
                assert!(c.norm() < 1e-15);
            }
        }
    }
}

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::bands::BandSet;
use crate::error::{param, Error, Result};
use crate::spectral::{ComplexField, FourierGrid, ScalarField, SpectralField};

/// `exp(-1/(1 - t²))` for `t < 1`, zero otherwise.
fn ball_bump(t: f64) -> f64 {
    if t < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// Cover of the annulus `2^{ℓ-1} < |ξ| < 2^{ℓ+1}` by balls `B_{σ2^ℓ}(ξ_j)`
/// together with a subordinate partition of unity `(Fψ_{ℓ,j})(m)`.
///
/// Centres come from a fixed band-0 mesh scaled by `2^ℓ`, so
/// `(Fψ_{ℓ,j})(ξ) = (Fψ_{0,j})(2^{-ℓ}ξ)` and `j` refers to the same direction
/// and relative radius for every band.
#[derive(Clone, Debug)]
pub struct BallCover {
    grid: FourierGrid,
    band: i32,
    sigma: f64,
    unit_centers: Vec<[f64; 3]>,
    /// Sparse `(flat index, ψ_j(m))` per ball, restricted to the annulus.
    weights: Vec<Vec<(usize, f64)>>,
    /// `(Fφ_ℓ)(m)` for the same band.
    band_multiplier: Vec<f64>,
}

/// Band-0 centres on a radial–angular mesh with spacing at most `σ/√d`.
pub fn unit_centers(sigma: f64, dim: usize) -> Vec<[f64; 3]> {
    let h = sigma / (dim as f64).sqrt();
    let rings = (1.5 / h).ceil() as usize;
    let dr = 1.5 / rings as f64;
    let mut out = Vec::new();
    for i in 0..=rings {
        let r = 0.5 + i as f64 * dr;
        if dim == 2 {
            let count = ((2.0 * PI * r) / h).ceil() as usize;
            for a in 0..count {
                let ang = 2.0 * PI * a as f64 / count as f64;
                out.push([r * ang.cos(), r * ang.sin(), 0.0]);
            }
        } else {
            // Fibonacci lattice with area per point <= h²/2
            let count = ((8.0 * PI * r * r) / (h * h)).ceil() as usize;
            let golden = PI * (3.0 - 5f64.sqrt());
            for a in 0..count {
                let z = 1.0 - 2.0 * (a as f64 + 0.5) / count as f64;
                let rho = (1.0 - z * z).sqrt();
                let phi = golden * a as f64;
                out.push([r * rho * phi.cos(), r * rho * phi.sin(), r * z]);
            }
        }
    }
    out
}

pub fn build_ball_cover(bands: &BandSet, band: i32, sigma: f64) -> Result<BallCover> {
    if !(sigma > 0.0 && sigma <= 0.25) {
        return Err(param("sigma", format!("{sigma} outside (0, 1/4]")));
    }
    let band_multiplier = bands.multiplier(band)?.to_vec();
    let grid = bands.grid().clone();
    let dim = grid.dim();
    let unit = unit_centers(sigma, dim);
    let scale = 2f64.powi(band);
    let radius = sigma * scale;
    let k0 = grid.fundamental();
    let (inner, outer) = (0.5 * scale, 2.0 * scale);
    let r_idx = radius / k0;

    let mut raw: Vec<Vec<(usize, f64)>> = Vec::with_capacity(unit.len());
    let mut totals: HashMap<usize, f64> = HashMap::new();
    for c in &unit {
        let center = [c[0] * scale, c[1] * scale, c[2] * scale];
        let ci = [center[0] / k0, center[1] / k0, center[2] / k0];
        let mut entries = Vec::new();
        let lo: Vec<i64> = (0..3).map(|a| if a < dim { (ci[a] - r_idx).floor() as i64 } else { 0 }).collect();
        let hi: Vec<i64> = (0..3).map(|a| if a < dim { (ci[a] + r_idx).ceil() as i64 } else { 0 }).collect();
        for i0 in lo[0]..=hi[0] {
            for i1 in lo[1]..=hi[1] {
                for i2 in lo[2]..=hi[2] {
                    let l = [i0, i1, i2];
                    if !grid.contains_lattice(&l) {
                        continue;
                    }
                    let m = [k0 * i0 as f64, k0 * i1 as f64, k0 * i2 as f64];
                    let r = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
                    if r <= inner || r >= outer {
                        continue;
                    }
                    let d = ((m[0] - center[0]).powi(2) + (m[1] - center[1]).powi(2) + (m[2] - center[2]).powi(2)).sqrt();
                    let w = ball_bump(d / radius);
                    if w > 0.0 {
                        let idx = grid.flat_index(&l);
                        entries.push((idx, w));
                        *totals.entry(idx).or_insert(0.0) += w;
                    }
                }
            }
        }
        raw.push(entries);
    }

    // every lattice point strictly inside the annulus must be covered
    for idx in 0..grid.len() {
        let r = grid.magnitude(idx);
        if r > inner && r < outer && !totals.contains_key(&idx) {
            return Err(Error::CoverGap(grid.lattice_index(idx)[..dim].to_vec()));
        }
    }

    let weights = raw
        .into_iter()
        .map(|entries| entries.into_iter().map(|(idx, w)| (idx, w / totals[&idx])).collect())
        .collect();
    Ok(BallCover { grid, band, sigma, unit_centers: unit, weights, band_multiplier })
}

impl BallCover {
    pub fn band(&self) -> i32 {
        self.band
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.unit_centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit_centers.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.sigma * 2f64.powi(self.band)
    }

    pub fn center(&self, j: usize) -> Result<[f64; 3]> {
        let c = self.unit_centers.get(j).ok_or(Error::BallOutOfRange { index: j, count: self.len() })?;
        let s = 2f64.powi(self.band);
        Ok([c[0] * s, c[1] * s, c[2] * s])
    }

    /// Sparse `ψ_{ℓ,j}` values on lattice points of the annulus.
    pub fn weights(&self, j: usize) -> Result<&[(usize, f64)]> {
        self.weights.get(j).map(|w| w.as_slice()).ok_or(Error::BallOutOfRange { index: j, count: self.len() })
    }

    pub fn band_multiplier(&self) -> &[f64] {
        &self.band_multiplier
    }

    /// Dense `(Fφ_ℓ)(m)(Fψ_{ℓ,j})(m)`.
    pub fn refined_multiplier(&self, j: usize) -> Result<Vec<Complex64>> {
        let mut w = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for &(idx, psi) in self.weights(j)? {
            w[idx] = Complex64::new(self.band_multiplier[idx] * psi, 0.0);
        }
        Ok(w)
    }

    /// Balls with at least one lattice point where `φ_ℓ ψ_{ℓ,j} ≠ 0`.
    pub fn active_balls(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&j| self.weights[j].iter().any(|&(idx, psi)| psi * self.band_multiplier[idx] != 0.0))
            .collect()
    }

    /// Ball whose unit centre lies closest to `target` (band-0 units).
    pub fn nearest_ball(&self, target: [f64; 3]) -> usize {
        let d = |c: &[f64; 3]| (0..3).map(|a| (c[a] - target[a]).powi(2)).sum::<f64>();
        (0..self.len())
            .min_by(|&a, &b| d(&self.unit_centers[a]).total_cmp(&d(&self.unit_centers[b])))
            .expect("nonempty cover")
    }

    pub fn refined_spectral(&self, f: &SpectralField, j: usize) -> Result<SpectralField> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = SpectralField::zeros(&self.grid);
        let coeffs = out.coeffs_mut();
        for &(idx, psi) in self.weights(j)? {
            coeffs[idx] = f.coeffs()[idx] * (self.band_multiplier[idx] * psi);
        }
        Ok(out)
    }

    /// `θ_{ℓ,j} = θ_ℓ ∗ ψ_{ℓ,j}`; complex-valued in general.
    pub fn refined_project(&self, theta: &ScalarField, j: usize) -> Result<ComplexField> {
        Ok(self.refined_spectral(&theta.forward(), j)?.inverse_complex())
    }

    /// Largest `|Σ_j ψ_{ℓ,j}(m) - 1|` over lattice points of the open annulus.
    pub fn partition_defect(&self) -> f64 {
        let mut sums: HashMap<usize, f64> = HashMap::new();
        for w in &self.weights {
            for &(idx, psi) in w {
                *sums.entry(idx).or_insert(0.0) += psi;
            }
        }
        let s = 2f64.powi(self.band);
        (0..self.grid.len())
            .filter(|&i| {
                let r = self.grid.magnitude(i);
                r > 0.5 * s && r < 2.0 * s
            })
            .map(|i| (sums.get(&i).copied().unwrap_or(0.0) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{build_dyadic_family, DyadicProfile};
    use crate::spectral::random_field;

    fn setup(n: usize) -> BandSet {
        let g = FourierGrid::new(2.0 * PI, n, 2).unwrap();
        build_dyadic_family(&g, DyadicProfile::default()).unwrap()
    }

    #[test]
    fn cover_properties() {
        let b = setup(64);
        for band in 1..=3 {
            let cover = build_ball_cover(&b, band, 0.125).unwrap();
            assert!(cover.partition_defect() <= 1e-12);
            let r = cover.radius();
            for j in 0..cover.len() {
                let c = cover.center(j).unwrap();
                let norm = (c[0] * c[0] + c[1] * c[1]).sqrt();
                assert!(norm >= 2f64.powi(band - 1) - 1e-12);
                for &(idx, psi) in cover.weights(j).unwrap() {
                    let m = b.grid().wavevector(idx);
                    let d = ((m[0] - c[0]).powi(2) + (m[1] - c[1]).powi(2)).sqrt();
                    assert!(psi == 0.0 || d < r);
                }
            }
        }
        assert!(build_ball_cover(&b, 2, 0.3).is_err());
        assert!(build_ball_cover(&b, 2, 0.0).is_err());
    }

    #[test]
    fn ball_count_grows_like_sigma_to_minus_d() {
        let n8 = unit_centers(0.125, 2).len() as f64;
        let n16 = unit_centers(0.0625, 2).len() as f64;
        let ratio = n16 / n8;
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn refined_projections_sum_to_band() {
        let b = setup(64);
        let g = b.grid().clone();
        let theta = random_field(&g, 4, None, -1.0);
        let cover = build_ball_cover(&b, 3, 0.125).unwrap();
        let band = b.project(&theta, 3).unwrap();
        let spec = theta.forward();
        let mut sum = SpectralField::zeros(&g);
        for j in 0..cover.len() {
            sum = sum.add(&cover.refined_spectral(&spec, j).unwrap()).unwrap();
        }
        let back = sum.inverse_complex();
        let err = back.values().iter().zip(band.values()).fold(0.0f64, |m, (a, c)| m.max((a - c).norm()));
        assert!(err <= 1e-12 * band.max_abs());
        let zero = cover.refined_project(&ScalarField::zeros(&g), 0).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        assert!(cover.refined_project(&theta, cover.len()).is_err());
    }

    #[test]
    fn single_mode_hits_only_its_balls() {
        let b = setup(64);
        let g = b.grid().clone();
        let cover = build_ball_cover(&b, 3, 0.125).unwrap();
        let theta = ScalarField::from_fn(&g, |x| (6.0 * x[0] + 5.0 * x[1]).sin());
        let plus = g.flat_index(&[6, 5]);
        let minus = g.flat_index(&[-6, -5]);
        for j in 0..cover.len() {
            let p = cover.refined_project(&theta, j).unwrap();
            let touches = cover.weights(j).unwrap().iter().any(|&(i, psi)| psi > 0.0 && (i == plus || i == minus));
            assert_eq!(p.max_abs() > 1e-10, touches, "ball {j}");
        }
    }
}

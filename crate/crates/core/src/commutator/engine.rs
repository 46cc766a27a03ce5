use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lp::BallCover;
use crate::spectral::{ComplexField, FourierGrid, ScalarField, SpectralField, VelocityField};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Reusable state for commutators of one `(u, θ)` pair against many
/// multipliers. Products are formed on the grid with both factors truncated
/// to the dealiased ball and the result truncated again.
pub struct CommutatorEngine {
    grid: FourierGrid,
    mask: Vec<f64>,
    /// `m_a` with the Nyquist plane of axis `a` removed.
    wave: Vec<Vec<f64>>,
    velocity: Vec<Vec<f64>>,
    theta: Vec<Complex64>,
    /// `D[u·∇θ]`
    advected: Vec<Complex64>,
}

fn truncate_mask(grid: &FourierGrid) -> Vec<f64> {
    grid.dealias_mask().iter().map(|&k| if k { 1.0 } else { 0.0 }).collect()
}

impl CommutatorEngine {
    pub fn new(u: &VelocityField, theta: &SpectralField) -> Result<Self> {
        let grid = u.grid().clone();
        if theta.grid() != &grid {
            return Err(Error::GridMismatch);
        }
        let mask = truncate_mask(&grid);
        let wave: Vec<Vec<f64>> = (0..grid.dim())
            .map(|a| {
                (0..grid.len()).map(|i| if grid.is_nyquist(i, a) { 0.0 } else { grid.wavevector(i)[a] }).collect()
            })
            .collect();
        let velocity: Vec<Vec<f64>> = u
            .components()
            .iter()
            .map(|c| {
                let mut data: Vec<Complex64> = c.coeffs().iter().zip(&mask).map(|(v, m)| v * m).collect();
                grid.inverse_in_place(&mut data);
                data.into_iter().map(|v| v.re).collect()
            })
            .collect();
        let theta: Vec<Complex64> = theta.coeffs().iter().zip(&mask).map(|(v, m)| v * m).collect();
        let mut engine = Self { grid, mask, wave, velocity, theta, advected: Vec::new() };
        engine.advected = engine.advect(|i| engine.theta[i]);
        Ok(engine)
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    /// `D[u·∇f]` for the (already truncated) spectral data `f`.
    fn advect(&self, f: impl Fn(usize) -> Complex64 + Sync) -> Vec<Complex64> {
        let len = self.grid.len();
        let mut product = vec![ZERO; len];
        let mut buf = vec![ZERO; len];
        for (a, ka) in self.wave.iter().enumerate() {
            buf.par_iter_mut().enumerate().for_each(|(i, b)| {
                let c = f(i) * self.mask[i];
                *b = Complex64::new(-c.im, c.re) * ka[i];
            });
            self.grid.inverse_in_place(&mut buf);
            let ua = &self.velocity[a];
            product.par_iter_mut().zip(buf.par_iter()).enumerate().for_each(|(i, (p, g))| *p += g * ua[i]);
        }
        self.grid.forward_in_place(&mut product);
        product.par_iter_mut().zip(self.mask.par_iter()).for_each(|(p, m)| *p *= m);
        product
    }

    /// Spectral `[u·, φ∗]∇θ = D[u·D(φ∗∇θ)] - φ∗D[u·∇θ]` for a dense multiplier.
    pub fn apply_spectral(&self, multiplier: &[f64]) -> Result<SpectralField> {
        if multiplier.len() != self.grid.len() {
            return Err(Error::GridMismatch);
        }
        let filtered = self.advect(|i| self.theta[i] * multiplier[i]);
        let out = filtered.iter().enumerate().map(|(i, c)| c - self.advected[i] * multiplier[i]).collect();
        SpectralField::new(&self.grid, out)
    }

    pub fn apply(&self, multiplier: &[f64]) -> Result<ComplexField> {
        Ok(self.apply_spectral(multiplier)?.inverse_complex())
    }

    /// `(⟨|θ_{ℓ,j}|⟩, ⟨|[u·, φ_{ℓ,j}∗]∇θ|⟩)` in the split real/imaginary `L¹` norm.
    pub fn localized_norms(&self, cover: &BallCover, j: usize) -> Result<(f64, f64)> {
        let mut w = vec![0.0; self.grid.len()];
        let phi = cover.band_multiplier();
        for &(idx, psi) in cover.weights(j)? {
            w[idx] = phi[idx] * psi;
        }
        let local: Vec<Complex64> = self.theta.iter().zip(&w).map(|(c, m)| c * m).collect();
        let theta_lj = SpectralField::new(&self.grid, local)?.inverse_complex();
        let comm = self.apply(&w)?;
        Ok((theta_lj.l1_split(), comm.l1_split()))
    }
}

/// Commutator `[u·, φ∗]∇θ = u·(φ∗∇θ) - φ∗(u·∇θ)` with dealiased products; the
/// multiplier is `(Fφ)(m)` on the lattice (a band or a refined ball).
pub fn commutator(u: &VelocityField, theta: &ScalarField, multiplier: &[f64]) -> Result<ComplexField> {
    CommutatorEngine::new(u, &theta.forward())?.apply(multiplier)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{make_flow, FlowKind, FlowSpec};
    use crate::lp::{build_ball_cover, build_dyadic_family, DyadicProfile};
    use crate::spectral::random_field;
    use std::f64::consts::PI;

    fn setup() -> (FourierGrid, VelocityField, Vec<f64>) {
        let g = FourierGrid::new(2.0 * PI, 64, 2).unwrap();
        let spec = FlowSpec::new(FlowKind::RandomStream { slope: -1.0, k_min: 1.0, k_max: 6.0 }, 1.0, 1.0, 5).unwrap();
        let u = make_flow(&spec, &g).unwrap().at(0.0).unwrap();
        let b = build_dyadic_family(&g, DyadicProfile::default()).unwrap();
        (g, u, b.multiplier(3).unwrap().to_vec())
    }

    #[test]
    fn vanishes_for_zero_and_constant_velocity() {
        let (g, _, w) = setup();
        let theta = random_field(&g, 1, None, -1.0);
        let zero = commutator(&VelocityField::zero(&g), &theta, &w).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        let mut comps = vec![SpectralField::zeros(&g), SpectralField::zeros(&g)];
        comps[0].coeffs_mut()[0] = Complex64::new(0.7, 0.0);
        comps[1].coeffs_mut()[0] = Complex64::new(-1.3, 0.0);
        let c = commutator(&VelocityField::new(comps).unwrap(), &theta, &w).unwrap();
        assert!(c.max_abs() < 1e-12 * theta.max_abs());
    }

    #[test]
    fn linear_in_theta() {
        let (g, u, w) = setup();
        let a = random_field(&g, 2, None, -1.0);
        let b = random_field(&g, 3, None, -0.5);
        let combo = ScalarField::new(&g, a.values().iter().zip(b.values()).map(|(x, y)| 2.0 * x - 0.5 * y).collect())
            .unwrap();
        let ca = commutator(&u, &a, &w).unwrap();
        let cb = commutator(&u, &b, &w).unwrap();
        let cc = commutator(&u, &combo, &w).unwrap();
        let scale = cc.max_abs();
        for i in 0..g.len() {
            let expect = ca.values()[i] * 2.0 - cb.values()[i] * 0.5;
            assert!((cc.values()[i] - expect).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn band_commutator_is_real_and_balls_sum_to_band() {
        let (g, u, w) = setup();
        let theta = random_field(&g, 4, None, -1.0);
        let engine = CommutatorEngine::new(&u, &theta.forward()).unwrap();
        let band = engine.apply_spectral(&w).unwrap();
        assert!(band.is_hermitian(1e-12));
        let bands = build_dyadic_family(&g, DyadicProfile::default()).unwrap();
        let cover = build_ball_cover(&bands, 3, 0.125).unwrap();
        let mut sum = SpectralField::zeros(&g);
        for j in 0..cover.len() {
            sum = sum.add(&engine.apply_spectral(&cover.refined_multiplier(j).unwrap().iter().map(|c| c.re).collect::<Vec<_>>()).unwrap()).unwrap();
        }
        let err = sum.coeffs().iter().zip(band.coeffs()).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        assert!(err <= 1e-12 * band.max_abs());
        let (a, c) = engine.localized_norms(&cover, cover.active_balls()[0]).unwrap();
        assert!(a > 0.0 && c > 0.0);
    }
}

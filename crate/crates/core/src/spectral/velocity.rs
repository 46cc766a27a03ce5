use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{real_synthesis, ScalarField, SpectralField};
use super::grid::FourierGrid;
use super::ops::fractional_norm_vector;
use crate::error::{param, Error, Result};

/// Fixed value `G_s` of `⟨|∇^s u|²⟩^{1/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub s: f64,
    pub g: f64,
}

impl Budget {
    pub fn new(s: f64, g: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(param("s", format!("fractional order {s} outside [0, 1]")));
        }
        if !(g.is_finite() && g >= 0.0) {
            return Err(param("g_s", format!("budget {g} must be finite and nonnegative")));
        }
        Ok(Self { s, g })
    }
}

/// Velocity field given by `d` spectral components.
#[derive(Clone, Debug)]
pub struct VelocityField {
    grid: FourierGrid,
    components: Vec<SpectralField>,
    budget: Option<Budget>,
}

impl VelocityField {
    pub fn new(components: Vec<SpectralField>) -> Result<Self> {
        let grid = components.first().ok_or_else(|| param("components", "empty"))?.grid().clone();
        if components.len() != grid.dim() || components.iter().any(|c| c.grid() != &grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, components, budget: None })
    }

    pub fn zero(grid: &FourierGrid) -> Self {
        Self {
            grid: grid.clone(),
            components: (0..grid.dim()).map(|_| SpectralField::zeros(grid)).collect(),
            budget: Some(Budget { s: 0.0, g: 0.0 }),
        }
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn components(&self) -> &[SpectralField] {
        &self.components
    }

    pub fn budget(&self) -> Option<Budget> {
        self.budget
    }

    pub fn fractional_norm(&self, s: f64) -> Result<f64> {
        fractional_norm_vector(&self.components, s)
    }

    /// `max_m |m·û(m)|` relative to `max_m |m||û(m)|`.
    pub fn divergence_defect(&self) -> f64 {
        let g = &self.grid;
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for idx in 0..g.len() {
            let m = g.wavevector(idx);
            let mut dot = Complex64::new(0.0, 0.0);
            let mut amp = 0.0;
            for (k, c) in self.components.iter().enumerate() {
                dot += c.coeffs()[idx] * m[k];
                amp += c.coeffs()[idx].norm_sqr();
            }
            worst = worst.max(dot.norm());
            scale = scale.max(amp.sqrt() * g.magnitude(idx));
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub fn mean(&self) -> Vec<Complex64> {
        self.components.iter().map(|c| c.mean()).collect()
    }

    pub fn real_components(&self) -> Vec<ScalarField> {
        self.components.iter().map(real_synthesis).collect()
    }

    /// `max_x |u(x)|` over the grid samples.
    pub fn max_speed(&self) -> f64 {
        let comps = self.real_components();
        (0..self.grid.len())
            .map(|i| comps.iter().map(|c| c.values()[i].powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            components: self.components.iter().map(|c| c.scaled(a)).collect(),
            budget: self.budget.map(|b| Budget { s: b.s, g: b.g * a.abs() }),
        }
    }

    /// Rescale so that the fractional norm of order `s` equals `g`.
    pub fn normalized(&self, s: f64, g: f64) -> Result<Self> {
        normalize_budget(self, s, g)
    }
}

pub fn normalize_budget(u: &VelocityField, s: f64, g: f64) -> Result<VelocityField> {
    let budget = Budget::new(s, g)?;
    let current = u.fractional_norm(s)?;
    if current == 0.0 {
        if g > 0.0 {
            return Err(Error::Degenerate(format!("cannot normalize a zero field to G_{s} = {g}")));
        }
        let mut out = u.clone();
        out.budget = Some(budget);
        return Ok(out);
    }
    let mut out = u.scaled(g / current);
    out.budget = Some(budget);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn shear(grid: &FourierGrid, a: f64) -> VelocityField {
        let k = grid.fundamental();
        let u1 = ScalarField::from_fn(grid, |x| a * (k * x[1]).sin()).forward();
        VelocityField::new(vec![u1, SpectralField::zeros(grid)]).unwrap()
    }

    #[test]
    fn shear_is_divergence_free_and_mean_zero() {
        let g = FourierGrid::new(2.0 * PI, 16, 2).unwrap();
        let u = shear(&g, 1.0);
        assert_eq!(u.divergence_defect(), 0.0);
        assert!(u.mean().iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn normalization() {
        let g = FourierGrid::new(2.0 * PI, 16, 2).unwrap();
        let u = shear(&g, 1.0);
        let v = u.normalized(1.0, 1.0).unwrap();
        // A·k/√2 = 1 with k = 1
        let a = v.real_components()[0].max_abs();
        assert!((a - 2f64.sqrt()).abs() < 1e-12);
        assert!((v.fractional_norm(1.0).unwrap() - 1.0).abs() < 1e-14);
        let w = v.normalized(1.0, 1.0).unwrap();
        for (x, y) in w.components()[0].coeffs().iter().zip(v.components()[0].coeffs()) {
            assert!((x - y).norm() < 1e-15);
        }
        let two = shear(&g, 2.0 * 2f64.sqrt());
        assert!((two.fractional_norm(1.0).unwrap() - 2.0).abs() < 1e-13);
        let half = two.normalized(1.0, 1.0).unwrap();
        assert!((half.components()[0].coeffs()[1] - two.components()[0].coeffs()[1] * 0.5).norm() < 1e-15);
        assert!(VelocityField::zero(&g).normalized(1.0, 1.0).is_err());
        assert!(VelocityField::zero(&g).normalized(1.0, 0.0).is_ok());
    }
}

use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::FourierGrid;
use crate::error::{Error, Result};

/// Real samples of a periodic scalar.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: FourierGrid,
    values: Vec<f64>,
}

/// Fourier coefficients normalized as spatial averages of `f(x) e^{-i m·x}`.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: FourierGrid,
    coeffs: Vec<Complex64>,
}

/// Complex samples, e.g. a projection onto a single ball of frequencies.
#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: FourierGrid,
    values: Vec<Complex64>,
}

impl ScalarField {
    pub fn new(grid: &FourierGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(crate::error::param("values", format!("non-finite sample {v}")));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn zeros(grid: &FourierGrid) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &FourierGrid, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    /// Samples `f` at every grid position.
    pub fn from_fn(grid: &FourierGrid, f: impl Fn([f64; 3]) -> f64 + Sync) -> Self {
        let values = (0..grid.len()).into_par_iter().map(|i| f(grid.position(i))).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Spatial average `⟨f⟩`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `⟨|f|⟩`.
    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() / self.values.len() as f64
    }

    /// `⟨f²⟩^{1/2}`.
    pub fn l2(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Whether the mean vanishes relative to the field's amplitude.
    pub fn is_mean_zero(&self) -> bool {
        self.mean().abs() <= 1e-12 * self.max_abs()
    }

    pub fn minus_mean(&self) -> Self {
        let m = self.mean();
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v - m).collect() }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| a * v).collect() }
    }

    pub fn forward(&self) -> SpectralField {
        forward(self)
    }
}

impl SpectralField {
    pub fn new(grid: &FourierGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid: grid.clone(), coeffs })
    }

    pub fn zeros(grid: &FourierGrid) -> Self {
        Self { grid: grid.clone(), coeffs: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at a signed lattice coordinate.
    pub fn at(&self, lattice: &[i64]) -> Complex64 {
        self.coeffs[self.grid.flat_index(lattice)]
    }

    pub fn mean(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Largest `|c(-m) - conj(c(m))|` over the lattice. Nyquist planes are
    /// their own mirror and are included.
    pub fn hermitian_defect(&self) -> f64 {
        let g = &self.grid;
        (0..g.len())
            .into_par_iter()
            .map(|idx| {
                let l = g.lattice_index(idx);
                let mirror = g.flat_index(&[-l[0], -l[1], -l[2]]);
                (self.coeffs[mirror] - self.coeffs[idx].conj()).norm()
            })
            .reduce(|| 0.0, f64::max)
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermitian_defect() <= rel_tol * self.max_abs().max(f64::MIN_POSITIVE)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// `Σ_m |c(m)|²`, i.e. `⟨|f|²⟩` by Parseval.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Pointwise multiplier application `c(m) ↦ w(m)·c(m)`.
    pub fn apply_real(&self, multiplier: &[f64]) -> Self {
        assert_eq!(multiplier.len(), self.coeffs.len());
        let coeffs = self.coeffs.par_iter().zip(multiplier.par_iter()).map(|(c, w)| c * w).collect();
        Self { grid: self.grid.clone(), coeffs }
    }

    pub fn apply_complex(&self, multiplier: &[Complex64]) -> Self {
        assert_eq!(multiplier.len(), self.coeffs.len());
        let coeffs = self.coeffs.par_iter().zip(multiplier.par_iter()).map(|(c, w)| c * w).collect();
        Self { grid: self.grid.clone(), coeffs }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { grid: self.grid.clone(), coeffs })
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { grid: self.grid.clone(), coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    /// Zero every coefficient outside the dealiased ball.
    pub fn dealiased(&self) -> Self {
        let mask = self.grid.dealias_mask();
        let coeffs = self
            .coeffs
            .iter()
            .zip(mask)
            .map(|(c, &keep)| if keep { *c } else { Complex64::new(0.0, 0.0) })
            .collect();
        Self { grid: self.grid.clone(), coeffs }
    }

    /// Real synthesis; fails when the coefficients are not Hermitian.
    pub fn inverse(&self) -> Result<ScalarField> {
        inverse(self)
    }

    pub fn inverse_complex(&self) -> ComplexField {
        let mut data = self.coeffs.clone();
        self.grid.inverse_in_place(&mut data);
        ComplexField { grid: self.grid.clone(), values: data }
    }
}

impl ComplexField {
    pub fn new(grid: &FourierGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `⟨|f|⟩` with the complex modulus.
    pub fn l1_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() / self.values.len() as f64
    }

    /// `⟨|Re f|⟩ + ⟨|Im f|⟩`: both parts are real fields obeying the same
    /// linear equation, so scale-by-scale `L¹` estimates apply to each.
    pub fn l1_split(&self) -> f64 {
        self.values.iter().map(|v| v.re.abs() + v.im.abs()).sum::<f64>() / self.values.len() as f64
    }

    pub fn real_part(&self) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.values.iter().map(|v| v.re).collect() }
    }

    pub fn imag_part(&self) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.values.iter().map(|v| v.im).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn forward(&self) -> SpectralField {
        let mut data = self.values.clone();
        self.grid.forward_in_place(&mut data);
        SpectralField { grid: self.grid.clone(), coeffs: data }
    }
}

/// Spatial-average-normalized transform of a real field.
pub fn forward(f: &ScalarField) -> SpectralField {
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    f.grid.forward_in_place(&mut data);
    SpectralField { grid: f.grid.clone(), coeffs: data }
}

/// Relative tolerance on Hermitian symmetry accepted by [`inverse`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Synthesis of a real field. The coefficients are checked for Hermitian
/// symmetry first; use [`SpectralField::inverse_complex`] for general data.
pub fn inverse(f: &SpectralField) -> Result<ScalarField> {
    let defect = f.hermitian_defect();
    if defect > HERMITIAN_TOL * f.max_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(real_synthesis(f))
}

pub(crate) fn real_synthesis(f: &SpectralField) -> ScalarField {
    let mut data = f.coeffs.clone();
    f.grid.inverse_in_place(&mut data);
    ScalarField { grid: f.grid.clone(), values: data.into_iter().map(|c| c.re).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_field_has_only_mean() {
        let g = FourierGrid::new(2.0, 8, 2).unwrap();
        let f = ScalarField::constant(&g, 3.5).forward();
        assert!((f.coeffs()[0] - Complex64::new(3.5, 0.0)).norm() < 1e-15);
        assert!(f.coeffs()[1..].iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn single_sine_mode() {
        let l = 3.0;
        let g = FourierGrid::new(l, 8, 2).unwrap();
        let f = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0] / l).sin());
        let s = f.forward();
        assert!((s.at(&[1, 0]) - Complex64::new(0.0, -0.5)).norm() < 1e-15);
        assert!((s.at(&[-1, 0]) - Complex64::new(0.0, 0.5)).norm() < 1e-15);
        // quadrature of the defining average on the same 8x8 grid
        let direct: Complex64 = (0..g.len())
            .map(|i| {
                let x = g.position(i);
                f.values()[i] * Complex64::from_polar(1.0, -2.0 * PI / l * x[0])
            })
            .sum::<Complex64>()
            / g.len() as f64;
        assert!((direct - Complex64::new(0.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn roundtrip_and_hermitian() {
        let g = FourierGrid::new(1.0, 16, 2).unwrap();
        let f = ScalarField::from_fn(&g, |x| (7.0 * x[0]).sin() * (3.0 * x[1]).cos().exp());
        let s = f.forward();
        assert!(s.is_hermitian(1e-13));
        let back = s.inverse().unwrap();
        let err = back.values().iter().zip(f.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 1e-12 * f.max_abs());
    }

    #[test]
    fn inverse_rejects_non_hermitian() {
        let g = FourierGrid::new(1.0, 8, 2).unwrap();
        let mut s = SpectralField::zeros(&g);
        s.coeffs_mut()[1] = Complex64::new(1.0, 0.0);
        assert!(matches!(s.inverse(), Err(Error::NotHermitian(_))));
        let c = s.inverse_complex();
        assert!((c.l1_modulus() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn averages_of_sine() {
        let g = FourierGrid::new(2.0 * PI, 64, 2).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0].sin());
        assert!(f.mean().abs() < 1e-14);
        assert!((f.l2() - 0.5f64.sqrt()).abs() < 1e-14);
        // grid mean of |sin| converges to 2/π; 64 points gives ~1e-3
        assert!((f.l1() - 2.0 / PI).abs() < 2e-3);
        let h = 2.0 * PI / 4096.0;
        let line: f64 = (0..4096).map(|i| (i as f64 * h).sin().abs()).sum::<f64>() / 4096.0;
        assert!((line - 2.0 / PI).abs() < 1e-5);
    }
}

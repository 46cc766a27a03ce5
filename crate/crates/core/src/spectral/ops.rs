use num_complex::Complex64;
use rayon::prelude::*;

use super::field::{ScalarField, SpectralField};
use crate::error::{param, Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Spectral derivative along `axis`: `c(m) ↦ i m_k c(m)`. The Nyquist plane
/// of the differentiated axis is zeroed so real fields stay real.
pub fn derivative(f: &SpectralField, axis: usize) -> SpectralField {
    let g = f.grid();
    let coeffs = f
        .coeffs()
        .par_iter()
        .enumerate()
        .map(|(idx, c)| {
            if g.is_nyquist(idx, axis) {
                ZERO
            } else {
                let mk = g.wavevector(idx)[axis];
                Complex64::new(-mk * c.im, mk * c.re)
            }
        })
        .collect();
    SpectralField::new(g, coeffs).expect("same grid")
}

/// Gradient as `d` spectral components.
pub fn gradient(f: &SpectralField) -> Vec<SpectralField> {
    (0..f.grid().dim()).map(|axis| derivative(f, axis)).collect()
}

/// Multiplier `-|m|²`.
pub fn laplacian(f: &SpectralField) -> SpectralField {
    let mag2 = f.grid().mag2();
    let w: Vec<f64> = mag2.iter().map(|m| -m).collect();
    f.apply_real(&w)
}

pub fn divergence(components: &[SpectralField]) -> Result<SpectralField> {
    let g = components.first().ok_or_else(|| param("components", "empty"))?.grid().clone();
    if components.len() != g.dim() || components.iter().any(|c| c.grid() != &g) {
        return Err(Error::GridMismatch);
    }
    let mut out = SpectralField::zeros(&g);
    for (axis, c) in components.iter().enumerate() {
        let d = derivative(c, axis);
        out = out.add(&d)?;
    }
    Ok(out)
}

fn check_order(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(param("s", format!("fractional order {s} outside [0, 1]")));
    }
    Ok(())
}

/// `(Σ_m |m|^{2s} |c(m)|²)^{1/2}`. The mean contributes only for `s = 0`.
pub fn fractional_norm(f: &SpectralField, s: f64) -> Result<f64> {
    Ok(fractional_norm_sq(f, s)?.sqrt())
}

fn fractional_norm_sq(f: &SpectralField, s: f64) -> Result<f64> {
    check_order(s)?;
    let mag2 = f.grid().mag2();
    Ok(f
        .coeffs()
        .iter()
        .zip(mag2)
        .map(|(c, &m2)| {
            let w = if s == 0.0 { 1.0 } else if m2 == 0.0 { 0.0 } else { m2.powf(s) };
            w * c.norm_sqr()
        })
        .sum())
}

/// Fractional norm of a vector field, summed over components.
pub fn fractional_norm_vector(components: &[SpectralField], s: f64) -> Result<f64> {
    let mut total = 0.0;
    for c in components {
        total += fractional_norm_sq(c, s)?;
    }
    Ok(total.sqrt())
}

/// Split into the part above the threshold (`|m| > M`) and the rest.
pub fn split_frequency(f: &SpectralField, threshold: f64) -> Result<(SpectralField, SpectralField)> {
    if !(threshold >= 0.0) {
        return Err(param("M", format!("threshold {threshold} must be nonnegative")));
    }
    let t2 = threshold * threshold;
    let mag2 = f.grid().mag2();
    let mut high = f.clone();
    let mut low = f.clone();
    for ((h, l), &m2) in high.coeffs_mut().iter_mut().zip(low.coeffs_mut()).zip(mag2) {
        if m2 > t2 {
            *l = ZERO;
        } else {
            *h = ZERO;
        }
    }
    Ok((high, low))
}

/// Shell-summed spectrum `E(k) = Σ_{|m| ∈ shell(k)} |c(m)|²` with shells of
/// width `2π/L` centred at `k = i·2π/L`. The mean is excluded.
#[derive(Clone, Debug, PartialEq)]
pub struct ShellSpectrum {
    pub dk: f64,
    pub values: Vec<f64>,
}

impl ShellSpectrum {
    pub fn wavenumber(&self, i: usize) -> f64 {
        i as f64 * self.dk
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

pub fn shell_spectrum(f: &SpectralField) -> ShellSpectrum {
    let g = f.grid();
    let dk = g.fundamental();
    let max_shell = (g.mag2().iter().fold(0.0f64, |m, &v| m.max(v)).sqrt() / dk).round() as usize + 1;
    let mut values = vec![0.0; max_shell + 1];
    for (c, &m2) in f.coeffs().iter().zip(g.mag2()) {
        if m2 == 0.0 {
            continue;
        }
        let shell = (m2.sqrt() / dk).round() as usize;
        values[shell] += c.norm_sqr();
    }
    ShellSpectrum { dk, values }
}

/// Pointwise product of real fields formed on the grid and truncated to the
/// dealiased ball, with both factors truncated first.
pub fn dealiased_product(a: &ScalarField, b: &ScalarField) -> Result<SpectralField> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    let ad = a.forward().dealiased().inverse_complex().real_part();
    let bd = b.forward().dealiased().inverse_complex().real_part();
    let prod: Vec<f64> = ad.values().iter().zip(bd.values()).map(|(x, y)| x * y).collect();
    Ok(ScalarField::new(a.grid(), prod)?.forward().dealiased())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::FourierGrid;
    use crate::spectral::random_field;
    use std::f64::consts::PI;

    #[test]
    fn gradient_of_sine_and_constant() {
        let l = 2.5;
        let g = FourierGrid::new(l, 16, 2).unwrap();
        let c = ScalarField::constant(&g, 2.0).forward();
        for d in gradient(&c) {
            assert!(d.max_abs() < 1e-15);
        }
        let k = 2.0 * PI / l;
        let f = ScalarField::from_fn(&g, |x| (k * x[0]).sin()).forward();
        let grad = gradient(&f);
        let d0 = grad[0].inverse().unwrap();
        for i in 0..g.len() {
            let x = g.position(i);
            assert!((d0.values()[i] - k * (k * x[0]).cos()).abs() < 1e-12);
        }
        assert!(grad[1].max_abs() < 1e-15);
    }

    #[test]
    fn laplacian_is_divergence_of_gradient() {
        let g = FourierGrid::new(1.0, 16, 2).unwrap();
        let f = random_field(&g, 3, None, 0.0).forward();
        let lap = laplacian(&f);
        let div = divergence(&gradient(&f)).unwrap();
        // the Nyquist planes differ by construction; random_field leaves them empty
        for (a, b) in lap.coeffs().iter().zip(div.coeffs()) {
            assert!((a - b).norm() < 1e-10 * lap.max_abs());
        }
    }

    #[test]
    fn fractional_norm_single_shear() {
        let l = 3.0;
        let g = FourierGrid::new(l, 16, 2).unwrap();
        let a = 1.7;
        let k = 2.0 * PI / l;
        let u2 = ScalarField::from_fn(&g, |x| a * (k * x[0]).sin()).forward();
        let u1 = SpectralField::zeros(&g);
        for s in [0.0, 0.25, 0.5, 1.0] {
            let got = fractional_norm_vector(&[u1.clone(), u2.clone()], s).unwrap();
            let want = a * k.powf(s) / 2f64.sqrt();
            assert!((got - want).abs() < 1e-13 * want, "s={s}");
        }
        let c = ScalarField::constant(&g, 4.0).forward();
        assert_eq!(fractional_norm(&c, 1.0).unwrap(), 0.0);
        assert!((fractional_norm(&c, 0.0).unwrap() - 4.0).abs() < 1e-14);
        assert!(fractional_norm(&c, 1.5).is_err());
        assert!(fractional_norm(&c, -0.1).is_err());
    }

    #[test]
    fn fractional_norm_zero_order_is_l2() {
        let g = FourierGrid::new(2.0, 32, 2).unwrap();
        let f = random_field(&g, 11, None, -1.0);
        let n0 = fractional_norm(&f.forward(), 0.0).unwrap();
        assert!((n0 - f.l2()).abs() < 1e-12 * n0);
    }

    #[test]
    fn split_frequency_cases() {
        let g = FourierGrid::new(2.0 * PI, 16, 2).unwrap();
        let f = ScalarField::from_fn(&g, |x| 1.5 + (3.0 * x[0]).sin()).forward();
        let (hi, lo) = split_frequency(&f, 0.0).unwrap();
        assert!((lo.mean() - Complex64::new(1.5, 0.0)).norm() < 1e-14);
        assert!(lo.coeffs()[1..].iter().all(|c| c.norm() == 0.0));
        assert_eq!(hi.mean(), ZERO);
        let mode = ScalarField::from_fn(&g, |x| (3.0 * x[1]).cos()).forward();
        let (hi, lo) = split_frequency(&mode, 2.5).unwrap();
        assert!(lo.max_abs() < 1e-15);
        assert!((hi.energy() - 0.5).abs() < 1e-14);
        assert!(split_frequency(&mode, -1.0).is_err());
    }

    #[test]
    fn shell_spectrum_of_sine() {
        let g = FourierGrid::new(2.0 * PI, 16, 2).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0].sin()).forward();
        let e = shell_spectrum(&f);
        assert!((e.values[1] - 0.5).abs() < 1e-14);
        assert!((e.total() - 0.5).abs() < 1e-14);
        let c = shell_spectrum(&ScalarField::constant(&g, 2.0).forward());
        assert!(c.values.iter().all(|&v| v == 0.0));
        let two = ScalarField::from_fn(&g, |x| x[0].sin() + 2.0 * (3.0 * x[1]).cos()).forward();
        let e2 = shell_spectrum(&two);
        assert!((e2.values[1] - 0.5).abs() < 1e-14);
        assert!((e2.values[3] - 2.0).abs() < 1e-13);
    }
}

use num_complex::Complex64;

use super::cover::BallCover;
use crate::error::{Error, Result};
use crate::spectral::{derivative, gradient, random_spectrum_with, ComplexField, ScalarField, SpectralField};

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `-⟨sign(f)Δf⟩ / (4^ℓ⟨|f|⟩)` with sign and modulus taken on the real and
/// imaginary parts separately and summed.
pub fn dissipation_lower_bound_check(theta: &ComplexField, band: i32) -> Result<f64> {
    let spec = theta.forward();
    let lap = spec.apply_real(spec.grid().mag2()).scaled(-1.0).inverse_complex();
    let n = theta.values().len() as f64;
    let mut num = 0.0;
    for (t, l) in theta.values().iter().zip(lap.values()) {
        num -= sign(t.re) * l.re + sign(t.im) * l.im;
    }
    let den = 4f64.powi(band) * theta.l1_split();
    if den == 0.0 {
        return Err(Error::Degenerate("zero field in dissipation bound".into()));
    }
    Ok(num / n / den)
}

fn gradient_modulus_mean(components: &[ComplexField]) -> f64 {
    let n = components[0].values().len();
    (0..n).map(|i| components.iter().map(|c| c.values()[i].norm_sqr()).sum::<f64>().sqrt()).sum::<f64>() / n as f64
}

/// Bernstein-type ratios for `θ_{ℓ,j}`:
/// `⟨|θ_{ℓ,j}|⟩ / (2^{-ℓ}⟨|∇θ_{ℓ,j}|⟩)` and `⟨|∇θ_{ℓ,j}|⟩ / ⟨|∇θ|²⟩^{1/2}`.
pub fn bernstein_check(theta: &ScalarField, cover: &BallCover, j: usize) -> Result<(f64, f64)> {
    let spec = theta.forward();
    let local = cover.refined_spectral(&spec, j)?;
    let dim = spec.grid().dim();
    let grads: Vec<ComplexField> = (0..dim).map(|a| derivative(&local, a).inverse_complex()).collect();
    let grad_l1 = gradient_modulus_mean(&grads);
    let value_l1 = local.inverse_complex().l1_modulus();
    let full_grad: f64 = gradient(&spec).iter().map(SpectralField::energy).sum::<f64>().sqrt();
    if grad_l1 == 0.0 || full_grad == 0.0 {
        return Err(Error::Degenerate("zero gradient in Bernstein check".into()));
    }
    let ratio18 = value_l1 * 2f64.powi(cover.band()) / grad_l1;
    let ratio19 = grad_l1 / full_grad;
    Ok((ratio18, ratio19))
}

/// Random real field whose spectrum sits on the lattice points of ball `j`
/// where `φ_ℓψ_{ℓ,j} > 0`, together with the mirrored points.
pub fn random_ball_field(cover: &BallCover, j: usize, seed: u64) -> Result<ScalarField> {
    let grid = cover.grid();
    let mut support = vec![false; grid.len()];
    let phi = cover.band_multiplier();
    for &(idx, psi) in cover.weights(j)? {
        if psi * phi[idx] > 0.0 {
            let l = grid.lattice_index(idx);
            support[idx] = true;
            support[grid.flat_index(&[-l[0], -l[1], -l[2]])] = true;
        }
    }
    let spec = random_spectrum_with(grid, seed, |idx| support[idx].then_some(1.0));
    if spec.coeffs().iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
        return Err(Error::Degenerate(format!("ball {j} has no usable lattice points")));
    }
    spec.inverse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{build_ball_cover, build_dyadic_family, DyadicProfile};
    use crate::spectral::FourierGrid;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_dissipation_ratio() {
        let g = FourierGrid::new(2.0 * PI, 32, 2).unwrap();
        let f = ScalarField::from_fn(&g, |x| 0.7 * (3.0 * x[0] + 4.0 * x[1]).sin());
        let c = ComplexField::new(&g, f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect()).unwrap();
        // k0 = 5 in band 2: ratio (5/4)²
        let r = dissipation_lower_bound_check(&c, 2).unwrap();
        assert!((r - 25.0 / 16.0).abs() < 1e-12, "{r}");
        assert!(dissipation_lower_bound_check(&ComplexField::new(&g, vec![Complex64::new(0.0, 0.0); g.len()]).unwrap(), 2).is_err());
    }

    #[test]
    fn two_mode_dissipation_ratio_positive() {
        let g = FourierGrid::new(2.0 * PI, 64, 2).unwrap();
        let f = ScalarField::from_fn(&g, |x| (8.0 * x[0] + x[1]).sin() + 0.6 * (9.0 * x[0] + 0.5).cos());
        let c = ComplexField::new(&g, f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect()).unwrap();
        assert!(dissipation_lower_bound_check(&c, 3).unwrap() > 0.0);
    }

    #[test]
    fn bernstein_single_mode() {
        let g = FourierGrid::new(2.0 * PI, 64, 2).unwrap();
        let b = build_dyadic_family(&g, DyadicProfile::default()).unwrap();
        let cover = build_ball_cover(&b, 3, 0.125).unwrap();
        let theta = ScalarField::from_fn(&g, |x| (8.0 * x[0]).cos());
        let j = cover.nearest_ball([1.0, 0.0, 0.0]);
        let (r18, r19) = bernstein_check(&theta, &cover, j).unwrap();
        // θ_{ℓ,j} is a complex exponential at |m| = 2^ℓ, so |∇θ_{ℓ,j}| = 8|θ_{ℓ,j}|
        assert!((r18 - 1.0).abs() < 1e-12, "{r18}");
        assert!(r19 > 0.0 && r19.is_finite());
    }

    #[test]
    fn ball_fields_stay_in_their_ball() {
        let g = FourierGrid::new(2.0 * PI, 64, 2).unwrap();
        let b = build_dyadic_family(&g, DyadicProfile::default()).unwrap();
        let cover = build_ball_cover(&b, 3, 0.125).unwrap();
        let j = cover.active_balls()[3];
        let f = random_ball_field(&cover, j, 11).unwrap();
        let theta_lj = cover.refined_project(&f, j).unwrap();
        assert!(theta_lj.max_abs() > 0.0);
        let ratio = dissipation_lower_bound_check(&theta_lj, 3).unwrap();
        assert!(ratio > 0.0);
    }
}

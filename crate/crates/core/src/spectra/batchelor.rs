use super::weight::{weighted_average, TimeWeight, WeightedAverage};
use crate::error::{param, Error, Result};

fn positive(name: &'static str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(param(name, format!("{v} must be positive")));
    }
    Ok(())
}

/// `k_B = (G₁/κ)^{1/2}`.
pub fn batchelor_wavenumber(g1: f64, kappa: f64) -> Result<f64> {
    positive("g1", g1)?;
    positive("kappa", kappa)?;
    Ok((g1 / kappa).sqrt())
}

/// `τ = 1/G₁`.
pub fn stirring_time(g1: f64) -> Result<f64> {
    positive("g1", g1)?;
    Ok(1.0 / g1)
}

/// Diffusivity placing the Batchelor wave number at `k_b`.
pub fn kappa_for_batchelor(g1: f64, k_b: f64) -> Result<f64> {
    positive("g1", g1)?;
    positive("k_b", k_b)?;
    Ok(g1 / (k_b * k_b))
}

/// `χ_φ = ⟨⟨χ^{1/2}⟩⟩_φ²` from samples of `χ = κ⟨|∇θ|²⟩`. The second value is
/// the underlying weighted average of `χ^{1/2}`.
pub fn chi_phi(times: &[f64], chi: &[f64], weight: TimeWeight) -> Result<(f64, WeightedAverage)> {
    if chi.iter().any(|&c| !(c >= 0.0)) {
        return Err(Error::Series("dissipation samples must be nonnegative".into()));
    }
    let roots: Vec<f64> = chi.iter().map(|c| c.sqrt()).collect();
    let avg = weighted_average(times, &roots, weight)?;
    Ok((avg.stabilized * avg.stabilized, avg))
}

/// `[(k_B/k)^{4+2s} + (k_B/k)^6] χ_φ τ / k`.
pub fn rewritten_bound(k: f64, k_b: f64, s: f64, chi_phi: f64, tau: f64) -> Result<f64> {
    positive("k", k)?;
    positive("k_b", k_b)?;
    positive("chi_phi", chi_phi)?;
    positive("tau", tau)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(param("s", format!("fractional order {s} outside [0, 1]")));
    }
    let r = k_b / k;
    Ok((r.powf(4.0 + 2.0 * s) + r.powi(6)) * chi_phi * tau / k)
}

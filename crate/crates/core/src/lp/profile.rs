use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `e^{-1/x}` for `x > 0`, zero otherwise.
fn smooth_edge(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth step equal to 1 for `r <= 1` and 0 for `r >= 2`.
fn smooth_step(r: f64) -> f64 {
    let a = smooth_edge(2.0 - r);
    let b = smooth_edge(r - 1.0);
    a / (a + b)
}

/// Radial profile `ρ` generating the dyadic family. The band-0 symbol is
/// `ρ(|ξ|) / Σ_ℓ ρ(2^{-ℓ}|ξ|)`, supported in the open annulus `(1/2, 2)`.
#[derive(Clone)]
pub enum DyadicProfile {
    /// `ρ(t) = exp(-1/((t - 1/2)(2 - t)))` on `(1/2, 2)`.
    Bump,
    /// `ρ(t) = χ(t) - χ(2t)` with `χ` a smooth step from 1 at `t = 1` to 0 at
    /// `t = 2`. Its dyadic sum telescopes to 1, and its kernel decays faster
    /// at the box scale than the bump's.
    SmoothStep,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Bump,
    SmoothStep,
}

impl From<ProfileKind> for DyadicProfile {
    fn from(kind: ProfileKind) -> Self {
        match kind {
            ProfileKind::Bump => DyadicProfile::Bump,
            ProfileKind::SmoothStep => DyadicProfile::SmoothStep,
        }
    }
}

impl Default for DyadicProfile {
    fn default() -> Self {
        DyadicProfile::SmoothStep
    }
}

impl fmt::Debug for DyadicProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl DyadicProfile {
    pub fn name(&self) -> &'static str {
        match self {
            DyadicProfile::Bump => "bump",
            DyadicProfile::SmoothStep => "smooth_step",
            DyadicProfile::Custom(_) => "custom",
        }
    }

    pub fn rho(&self, t: f64) -> f64 {
        match self {
            DyadicProfile::Bump => {
                if t > 0.5 && t < 2.0 {
                    (-1.0 / ((t - 0.5) * (2.0 - t))).exp()
                } else {
                    0.0
                }
            }
            DyadicProfile::SmoothStep => {
                if t > 0.5 && t < 2.0 {
                    smooth_step(t) - smooth_step(2.0 * t)
                } else {
                    0.0
                }
            }
            DyadicProfile::Custom(f) => f(t),
        }
    }

    /// `Σ_ℓ ρ(2^{-ℓ} r)`; only the two octaves around `log2 r` can contribute.
    pub fn normalizer(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let base = r.log2().floor() as i32;
        (base - 2..=base + 2).map(|l| self.rho(r * 2f64.powi(-l))).sum()
    }

    /// `(Fφ_ℓ)(ξ)` at `|ξ| = r`.
    pub fn symbol(&self, band: i32, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let x = r * 2f64.powi(-band);
        let rho = self.rho(x);
        if rho == 0.0 {
            return 0.0;
        }
        rho / self.normalizer(x)
    }

    /// Checks the support requirement by sampling: `ρ` must vanish on
    /// `(0, 1/2] ∪ [2, ∞)` and be positive on `[1, 1.9]`.
    pub fn validate(&self) -> Result<()> {
        const SAMPLES: usize = 2000;
        for i in 0..=SAMPLES {
            let t_in = 0.5 * i as f64 / SAMPLES as f64;
            let t_out = 2.0 + 6.0 * i as f64 / SAMPLES as f64;
            for t in [t_in, t_out] {
                let v = self.rho(t);
                if v != 0.0 {
                    return Err(Error::ProfileSupport(format!("rho({t}) = {v:e} outside (1/2, 2)")));
                }
            }
            let t_core = 1.0 + 0.9 * i as f64 / SAMPLES as f64;
            let v = self.rho(t_core);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::ProfileSupport(format!("rho({t_core}) = {v:e} not positive on [1, 1.9]")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_profiles_are_admissible() {
        for p in [DyadicProfile::Bump, DyadicProfile::SmoothStep] {
            p.validate().unwrap();
            // partition of unity off the origin
            for i in 1..4000 {
                let r = 0.01 * i as f64;
                let total: f64 = (-10..12).map(|l| p.symbol(l, r)).sum();
                assert!((total - 1.0).abs() < 1e-14, "{} r={r}", p.name());
            }
            // dyadic radius picks a single band
            assert_eq!(p.symbol(3, 8.0), 1.0);
            assert_eq!(p.symbol(2, 8.0), 0.0);
            assert_eq!(p.symbol(4, 8.0), 0.0);
        }
    }

    #[test]
    fn smooth_step_needs_no_normalization() {
        let p = DyadicProfile::SmoothStep;
        for i in 1..500 {
            let r = 0.013 * i as f64;
            assert!((p.normalizer(r) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_wide_support() {
        let p = DyadicProfile::Custom(Arc::new(|t: f64| if t > 0.25 && t < 2.0 { 1.0 } else { 0.0 }));
        assert!(matches!(p.validate(), Err(Error::ProfileSupport(_))));
        let q = DyadicProfile::Custom(Arc::new(|t: f64| if t > 1.2 && t < 1.8 { 1.0 } else { 0.0 }));
        assert!(q.validate().is_err());
    }
}

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::batchelor::{batchelor_wavenumber, chi_phi, stirring_time};
use super::weight::{weighted_average, TimeWeight, WeightedAverage};
use crate::error::{param, Error, Result};
use crate::flow::{Observer, Snapshot};
use crate::lp::BandSet;
use crate::spectral::real_synthesis;

/// Observer recording `⟨|θ_ℓ|⟩` for every band and `⟨|∇θ|²⟩^{1/2}`.
pub struct BandProbe {
    bands: BandSet,
    band_list: Vec<i32>,
    pub times: Vec<f64>,
    /// `band_l1[k][i]`: band `band_list[k]` at checkpoint `i`.
    pub band_l1: Vec<Vec<f64>>,
    pub grad_l2: Vec<f64>,
}

impl BandProbe {
    /// Probe on the bands with a nonzero multiplier inside the dealiased ball.
    pub fn new(bands: &BandSet) -> Self {
        let band_list = bands.dealiased_bands();
        Self {
            bands: bands.clone(),
            band_l1: vec![Vec::new(); band_list.len()],
            band_list,
            times: Vec::new(),
            grad_l2: Vec::new(),
        }
    }

    pub fn bands(&self) -> &[i32] {
        &self.band_list
    }

    pub fn band_set(&self) -> &BandSet {
        &self.bands
    }
}

impl Observer for BandProbe {
    fn observe(&mut self, snap: &Snapshot<'_>) -> Result<()> {
        let grid = snap.theta.grid();
        let norms: Vec<Result<f64>> = self
            .band_list
            .par_iter()
            .map(|&b| Ok(real_synthesis(&self.bands.project_spectral(snap.theta, b)?).l1()))
            .collect();
        for (series, n) in self.band_l1.iter_mut().zip(norms) {
            series.push(n?);
        }
        let grad: f64 = snap
            .theta
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let nyq = (0..grid.dim()).any(|a| grid.is_nyquist(i, a));
                if nyq {
                    0.0
                } else {
                    grid.mag2()[i] * c.norm_sqr()
                }
            })
            .sum();
        self.times.push(snap.time);
        self.grad_l2.push(grad.sqrt());
        Ok(())
    }
}

/// One band of the theorem check and the variance spectrum.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumRow {
    pub band: i32,
    /// Representative wave number `2^{ℓ-1/2}`.
    pub k: f64,
    /// `⟨⟨|θ_ℓ|⟩⟩_φ`
    pub lhs: f64,
    pub lhs_average: WeightedAverage,
    /// `κ^{-1} 2^{-(s+2)ℓ} G_s ⟨⟨⟨|∇θ|²⟩^{1/2}⟩⟩_φ`
    pub rhs_stir: f64,
    /// `κ^{-1} 2^{-3ℓ} λ ⟨⟨⟨|∇θ|²⟩^{1/2}⟩⟩_φ`
    pub rhs_weight: f64,
    /// `lhs / (rhs_stir + rhs_weight)`; `None` when the right side vanishes.
    pub ratio: Option<f64>,
    /// Nonzero left side against a vanishing right side.
    pub flagged: bool,
    /// `E_φ^LP(k) = lhs² / k`
    pub e_lp: f64,
    /// `E_φ^LP(k) k / (χ_φ τ)`
    pub compensated: Option<f64>,
    pub central: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub kappa: f64,
    pub s: f64,
    pub g_s: f64,
    pub g1: f64,
    pub lambda: f64,
    pub k_b: Option<f64>,
    pub tau: Option<f64>,
    /// `κ⟨|∇θ|²⟩`-based `χ_φ`, in the stabilized units of the horizon.
    pub chi_phi: f64,
    /// `⟨⟨⟨|∇θ|²⟩^{1/2}⟩⟩_φ`
    pub grad_average: WeightedAverage,
    /// Weight rate exceeds `κk_B²`.
    pub weight_warning: bool,
    pub max_central_ratio: Option<f64>,
    pub rows: Vec<SpectrumRow>,
}

const FLAG_TOL: f64 = 1e-12;

/// Physical parameters of a run entering the theorem check.
#[derive(Clone, Copy, Debug)]
pub struct RunParameters {
    pub kappa: f64,
    pub s: f64,
    pub g_s: f64,
    /// `⟨|∇u|²⟩^{1/2}`; sets `k_B` and `τ` (zero for a flow at rest).
    pub g1: f64,
    pub weight: TimeWeight,
}

/// `E_φ^LP(k) = avg²/k` at `k = 2^{ℓ-1/2}` for each `(ℓ, ⟨⟨|θ_ℓ|⟩⟩_φ)`.
pub fn lp_spectrum(averages: &[(i32, f64)], bands: &BandSet) -> Result<Vec<(i32, f64, f64)>> {
    averages
        .iter()
        .map(|&(band, avg)| {
            bands.multiplier(band)?;
            let k = representative_k(band);
            Ok((band, k, avg * avg / k))
        })
        .collect()
}

pub fn representative_k(band: i32) -> f64 {
    2f64.powf(band as f64 - 0.5)
}

/// Per-band verification of
/// `⟨⟨|θ_ℓ|⟩⟩_φ <= C κ^{-1}(2^{-(s+2)ℓ}G_s + 2^{-3ℓ}λ)⟨⟨⟨|∇θ|²⟩^{1/2}⟩⟩_φ`,
/// with both sides taken at the horizon in stabilized units.
pub fn theorem_check(probe: &BandProbe, params: RunParameters) -> Result<SpectrumReport> {
    let RunParameters { kappa, s, g_s, g1, weight } = params;
    if !(kappa > 0.0) {
        return Err(param("kappa", "must be positive"));
    }
    if probe.times.is_empty() {
        return Err(Error::Series("no checkpoints recorded".into()));
    }
    let lambda = weight.rate;
    let grad_average = weighted_average(&probe.times, &probe.grad_l2, weight)?;
    let w = grad_average.stabilized;
    let chi: Vec<f64> = probe.grad_l2.iter().map(|g| kappa * g * g).collect();
    let (chi_phi_value, _) = chi_phi(&probe.times, &chi, weight)?;
    let (k_b, tau) = if g1 > 0.0 {
        (Some(batchelor_wavenumber(g1, kappa)?), Some(stirring_time(g1)?))
    } else {
        (None, None)
    };
    let weight_warning = k_b.is_some_and(|kb| lambda > kappa * kb * kb * (1.0 + 1e-12));
    let central = probe.band_set().central_bands();
    let averages = probe
        .band_l1
        .iter()
        .map(|series| weighted_average(&probe.times, series, weight))
        .collect::<Result<Vec<_>>>()?;
    // left sides at roundoff level do not count against a vanishing right side
    let floor = FLAG_TOL * averages.iter().map(|a| a.stabilized).fold(0.0, f64::max);
    let mut rows = Vec::with_capacity(probe.bands().len());
    for (&band, lhs_average) in probe.bands().iter().zip(averages) {
        let lhs = lhs_average.stabilized;
        let l = band as f64;
        let rhs_stir = 2f64.powf(-(s + 2.0) * l) * g_s * w / kappa;
        let rhs_weight = 2f64.powf(-3.0 * l) * lambda * w / kappa;
        let rhs = rhs_stir + rhs_weight;
        let (ratio, flagged) = if rhs > 0.0 {
            (Some(lhs / rhs), false)
        } else {
            (None, lhs > floor)
        };
        let k = representative_k(band);
        let e_lp = lhs * lhs / k;
        let compensated = match tau {
            Some(tau) if chi_phi_value > 0.0 => Some(e_lp * k / (chi_phi_value * tau)),
            _ => None,
        };
        rows.push(SpectrumRow {
            band,
            k,
            lhs,
            lhs_average,
            rhs_stir,
            rhs_weight,
            ratio,
            flagged,
            e_lp,
            compensated,
            central: central.contains(&band),
        });
    }
    let max_central_ratio = rows.iter().filter(|r| r.central).filter_map(|r| r.ratio).reduce(f64::max);
    Ok(SpectrumReport {
        kappa,
        s,
        g_s,
        g1,
        lambda,
        k_b,
        tau,
        chi_phi: chi_phi_value,
        grad_average,
        weight_warning,
        max_central_ratio,
        rows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PlateauReport {
    pub beta: f64,
    pub window: (f64, f64),
    pub bands: Vec<i32>,
    pub values: Vec<f64>,
    pub max: f64,
}

/// Compensated spectrum on bands whose annulus `(2^{ℓ-1}, 2^{ℓ+1})` meets
/// `[βk_B, k_B/β]`.
pub fn plateau_check(report: &SpectrumReport, beta: f64) -> Result<PlateauReport> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(param("beta", format!("{beta} outside (0, 1)")));
    }
    let k_b = report.k_b.ok_or_else(|| Error::Degenerate("no Batchelor wave number (G₁ = 0)".into()))?;
    let window = (beta * k_b, k_b / beta);
    let mut bands = Vec::new();
    let mut values = Vec::new();
    for row in &report.rows {
        let (lo, hi) = (2f64.powi(row.band - 1), 2f64.powi(row.band + 1));
        if lo < window.1 && hi > window.0 {
            bands.push(row.band);
            values.push(row.compensated.unwrap_or(0.0));
        }
    }
    if bands.is_empty() {
        return Err(Error::Degenerate(format!("window [{}, {}] meets no band", window.0, window.1)));
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    Ok(PlateauReport { beta, window, bands, values, max })
}

/// CSV `l,k,lhs,rhs_stir,rhs_weight,ratio,E_lp,compensated`; unavailable
/// entries are blank.
pub fn write_spectrum_csv(out: &mut impl Write, report: &SpectrumReport) -> Result<()> {
    writeln!(out, "l,k,lhs,rhs_stir,rhs_weight,ratio,E_lp,compensated")?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
    for r in &report.rows {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{}",
            r.band,
            r.k,
            r.lhs,
            r.rhs_stir,
            r.rhs_weight,
            opt(r.ratio),
            r.e_lp,
            opt(r.compensated)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{evolve, make_flow, FlowSpec, SimConfig};
    use crate::lp::{build_dyadic_family, DyadicProfile};
    use crate::spectral::{FourierGrid, ScalarField};
    use std::f64::consts::PI;

    fn run(theta: &ScalarField, bands: &BandSet) -> BandProbe {
        let flow = make_flow(&FlowSpec::zero(), bands.grid()).unwrap();
        let mut probe = BandProbe::new(bands);
        let mut cfg = SimConfig::new(0.01, 0.01, 1.0);
        cfg.checkpoint_every = 5;
        evolve(theta, &flow, &cfg, &mut [&mut probe]).unwrap();
        probe
    }

    fn bands() -> BandSet {
        let g = FourierGrid::new(2.0 * PI, 64, 2).unwrap();
        build_dyadic_family(&g, DyadicProfile::default()).unwrap()
    }

    #[test]
    fn lp_spectrum_formula() {
        let b = bands();
        let e = lp_spectrum(&[(3, 1.0), (2, 0.0)], &b).unwrap();
        assert!((e[0].2 - 2f64.powf(-2.5)).abs() < 1e-15);
        assert_eq!(e[1].2, 0.0);
        assert!(lp_spectrum(&[(40, 1.0)], &b).is_err());
    }

    #[test]
    fn zero_tracer_gives_zero_entries() {
        let b = bands();
        let probe = run(&ScalarField::zeros(b.grid()), &b);
        let params = RunParameters { kappa: 0.01, s: 1.0, g_s: 1.0, g1: 1.0, weight: TimeWeight::new(0.01, 0.0).unwrap() };
        let report = theorem_check(&probe, params).unwrap();
        assert!(report.rows.iter().all(|r| r.lhs == 0.0 && r.e_lp == 0.0 && !r.flagged));
        assert_eq!(report.chi_phi, 0.0);
    }

    #[test]
    fn single_mode_touches_one_band_and_flags_zero_rhs() {
        let b = bands();
        let theta = ScalarField::from_fn(b.grid(), |x| (4.0 * x[0]).sin());
        let probe = run(&theta, &b);
        let params = RunParameters { kappa: 0.01, s: 1.0, g_s: 0.0, g1: 0.0, weight: TimeWeight::constant() };
        let report = theorem_check(&probe, params).unwrap();
        for r in &report.rows {
            assert_eq!(r.lhs > 1e-12, r.band == 2, "band {}", r.band);
            assert_eq!(r.flagged, r.band == 2);
        }
    }

    #[test]
    fn homogeneous_in_theta() {
        let b = bands();
        let theta = ScalarField::from_fn(b.grid(), |x| (3.0 * x[0] + x[1]).sin() + 0.3 * (9.0 * x[1]).cos());
        let params =
            RunParameters { kappa: 0.01, s: 1.0, g_s: 0.0, g1: 0.0, weight: TimeWeight::new(0.05, 0.0).unwrap() };
        let a = theorem_check(&run(&theta, &b), params).unwrap();
        let c = theorem_check(&run(&theta.scaled(7.0), &b), params).unwrap();
        let top = a.rows.iter().map(|r| r.lhs).fold(0.0, f64::max);
        for (x, y) in a.rows.iter().zip(&c.rows).filter(|(x, _)| x.lhs > 1e-10 * top) {
            match (x.ratio, y.ratio) {
                (Some(p), Some(q)) => assert!((p - q).abs() <= 1e-12 * p.max(1e-300)),
                (None, None) => {}
                _ => panic!("ratio availability differs"),
            }
        }
    }

    #[test]
    fn plateau_window_selection() {
        let b = bands();
        let theta = ScalarField::from_fn(b.grid(), |x| (5.0 * x[0]).sin());
        // κ = 0.01, G₁ = 0.64 gives k_B = 8
        let params = RunParameters { kappa: 0.01, s: 1.0, g_s: 0.64, g1: 0.64, weight: TimeWeight::constant() };
        let report = theorem_check(&run(&theta, &b), params).unwrap();
        assert!((report.k_b.unwrap() - 8.0).abs() < 1e-12);
        let p = plateau_check(&report, 0.5).unwrap();
        assert_eq!(p.bands, vec![2, 3, 4]);
        assert!(p.max.is_finite());
        assert!(plateau_check(&report, 1.0).is_err());
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &report).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), report.rows.len() + 1);
    }
}

use serde::Serialize;

use super::engine::CommutatorEngine;
use crate::error::{Error, Result};
use crate::flow::{Observer, Snapshot};
use crate::lp::{build_ball_cover, BallCover, BandSet};
use crate::spectral::gradient;

/// Per-checkpoint norms for one refined projection `θ_{ℓ,j}`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct LocalizationSeries {
    pub band: i32,
    pub ball: usize,
    pub times: Vec<f64>,
    /// `⟨|θ_{ℓ,j}|⟩`
    pub theta_l1: Vec<f64>,
    /// `⟨|[u·, φ_{ℓ,j}∗]∇θ|⟩`
    pub commutator_l1: Vec<f64>,
    /// `⟨|∇θ|²⟩^{1/2}`
    pub grad_l2: Vec<f64>,
    /// Flow pieces entering and leaving each checkpoint; empty for flows
    /// known to be steady.
    pub pieces: Vec<(u64, u64)>,
}

/// Observer recording [`LocalizationSeries`] for a set of `(ℓ, j)` pairs.
pub struct LocalizationProbe {
    covers: Vec<BallCover>,
    /// `(cover index, ball)`
    selection: Vec<(usize, usize)>,
    series: Vec<LocalizationSeries>,
}

/// Evenly spaced picks from the active balls of a cover.
fn spread(cover: &BallCover, count: Option<usize>) -> Vec<usize> {
    let active = cover.active_balls();
    match count {
        Some(k) if k < active.len() => (0..k).map(|i| active[i * active.len() / k]).collect(),
        _ => active,
    }
}

impl LocalizationProbe {
    /// Probe on `bands` with a cover of radius fraction `sigma` per band;
    /// `balls_per_band` limits each band to evenly spaced active balls.
    pub fn new(bands: &BandSet, band_list: &[i32], sigma: f64, balls_per_band: Option<usize>) -> Result<Self> {
        let mut probe = Self { covers: Vec::new(), selection: Vec::new(), series: Vec::new() };
        for &band in band_list {
            let cover = build_ball_cover(bands, band, sigma)?;
            let balls = spread(&cover, balls_per_band);
            probe.push(cover, &balls)?;
        }
        Ok(probe)
    }

    /// Probe on explicitly chosen balls of one cover.
    pub fn with_balls(cover: BallCover, balls: &[usize]) -> Result<Self> {
        let mut probe = Self { covers: Vec::new(), selection: Vec::new(), series: Vec::new() };
        probe.push(cover, balls)?;
        Ok(probe)
    }

    fn push(&mut self, cover: BallCover, balls: &[usize]) -> Result<()> {
        let ci = self.covers.len();
        for &j in balls {
            cover.weights(j)?;
            self.selection.push((ci, j));
            self.series.push(LocalizationSeries { band: cover.band(), ball: j, ..Default::default() });
        }
        self.covers.push(cover);
        Ok(())
    }

    pub fn series(&self) -> &[LocalizationSeries] {
        &self.series
    }

    pub fn into_series(self) -> Vec<LocalizationSeries> {
        self.series
    }
}

impl Observer for LocalizationProbe {
    fn observe(&mut self, snap: &Snapshot<'_>) -> Result<()> {
        let engine = CommutatorEngine::new(snap.velocity, snap.theta)?;
        let grad = gradient(snap.theta).iter().map(|g| g.energy()).sum::<f64>().sqrt();
        let norms: Vec<Result<(f64, f64)>> = {
            use rayon::prelude::*;
            self.selection.par_iter().map(|&(ci, j)| engine.localized_norms(&self.covers[ci], j)).collect()
        };
        for (series, norm) in self.series.iter_mut().zip(norms) {
            let (a, c) = norm?;
            series.times.push(snap.time);
            series.theta_l1.push(a);
            series.commutator_l1.push(c);
            series.grad_l2.push(grad);
            series.pieces.push(snap.pieces);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    /// `d/dt⟨|θ_{ℓ,j}|⟩ + 4^ℓκ/C ⟨|θ_{ℓ,j}|⟩ <= ⟨|[u·,φ_{ℓ,j}∗]∇θ|⟩`
    ScaleEnergy,
    /// `d/dt⟨|θ_{ℓ,j}|⟩ + 4^ℓκ/C ⟨|θ_{ℓ,j}|⟩ <= C 2^{-sℓ} G_s ⟨|∇θ|²⟩^{1/2}`
    Localized,
}

/// Empirical constant for one `(ℓ, j)` series.
#[derive(Clone, Debug, Serialize)]
pub struct CommutatorReport {
    pub inequality: Inequality,
    pub band: i32,
    pub ball: usize,
    pub constant: f64,
    pub checkpoint_count: usize,
    /// Interior checkpoints where no finite constant satisfies the inequality.
    pub violation_count: usize,
    /// Interior checkpoints skipped because `⟨|θ_{ℓ,j}|⟩` is at roundoff level
    /// there or at a neighbour.
    pub unresolved_count: usize,
    /// Interior checkpoints skipped because the difference stencil spans a
    /// change of flow piece, where the derivative does not exist.
    pub switch_count: usize,
    /// Fraction of scored checkpoints with `RHS - d/dt⟨|θ_{ℓ,j}|⟩ > 0`.
    pub positive_fraction: f64,
    pub times: Vec<f64>,
    /// `d/dt⟨|θ_{ℓ,j}|⟩` by centred differences.
    pub derivative: Vec<f64>,
    /// `4^ℓκ⟨|θ_{ℓ,j}|⟩`
    pub dissipation: Vec<f64>,
    pub rhs: Vec<f64>,
}

/// `⟨|θ_{ℓ,j}|⟩` below this multiple of `2^{-ℓ}⟨|∇θ|²⟩^{1/2}` carries no signal.
const RESOLUTION_FLOOR: f64 = 1e-12;

/// Interior centred differences `(i, d/dt a_i)` at resolved checkpoints whose
/// stencil sees a single flow piece, with the counts of checkpoints skipped as
/// unresolved and as spanning a switch.
fn centred(series: &LocalizationSeries) -> Result<(Vec<(usize, f64)>, usize, usize)> {
    let n = series.times.len();
    if n < 3 {
        return Err(Error::Series(format!("{n} checkpoints, need at least 3")));
    }
    if series.theta_l1.iter().all(|&a| a == 0.0) {
        return Err(Error::Degenerate(format!("θ_{{{},{}}} vanishes over the window", series.band, series.ball)));
    }
    let t = &series.times;
    let a = &series.theta_l1;
    let scale = 2f64.powi(-series.band);
    let resolved = |i: usize| a[i] > RESOLUTION_FLOOR * scale * series.grad_l2.get(i).copied().unwrap_or(0.0);
    let smooth = |i: usize| match (series.pieces.get(i - 1), series.pieces.get(i + 1)) {
        (Some(lo), Some(hi)) => lo.1 == hi.0,
        _ => true,
    };
    let mut switches = 0;
    let mut unresolved = 0;
    let mut kept = Vec::with_capacity(n - 2);
    for i in 1..n - 1 {
        if !smooth(i) {
            switches += 1;
        } else if !(resolved(i - 1) && resolved(i) && resolved(i + 1)) {
            unresolved += 1;
        } else {
            kept.push((i, (a[i + 1] - a[i - 1]) / (t[i + 1] - t[i - 1])));
        }
    }
    if kept.is_empty() {
        return Err(Error::Degenerate(format!(
            "θ_{{{},{}}} stays at roundoff level over the window",
            series.band, series.ball
        )));
    }
    Ok((kept, unresolved, switches))
}

/// Relative guard for `RHS - d/dt⟨|θ_{ℓ,j}|⟩` being treated as positive.
const SIGN_GUARD: f64 = 1e-12;

/// Smallest `C` with `d/dt⟨|θ_{ℓ,j}|⟩ + 4^ℓκ⟨|θ_{ℓ,j}|⟩/C <= ⟨|commutator|⟩` at
/// every interior checkpoint. Checkpoints where the right side minus the
/// derivative is not positive count as violations and are guarded by `ε`.
pub fn lemma1_check(series: &LocalizationSeries, kappa: f64) -> Result<CommutatorReport> {
    let (diffs, skipped, switches) = centred(series)?;
    let scale = 4f64.powi(series.band) * kappa;
    let mut report = empty_report(Inequality::ScaleEnergy, series);
    report.unresolved_count = skipped;
    report.switch_count = switches;
    let mut positive = 0;
    for &(i, d) in &diffs {
        let diss = scale * series.theta_l1[i];
        let rhs = series.commutator_l1[i];
        let slack = rhs - d;
        let eps = SIGN_GUARD * diss.max(rhs).max(d.abs()).max(f64::MIN_POSITIVE);
        if slack > eps {
            positive += 1;
        } else if diss > 0.0 {
            report.violation_count += 1;
        }
        report.constant = report.constant.max(diss / slack.max(eps));
        push_row(&mut report, series.times[i], d, diss, rhs);
    }
    report.positive_fraction = positive as f64 / diffs.len() as f64;
    Ok(report)
}

fn empty_report(inequality: Inequality, series: &LocalizationSeries) -> CommutatorReport {
    CommutatorReport {
        inequality,
        band: series.band,
        ball: series.ball,
        constant: 0.0,
        checkpoint_count: series.times.len(),
        violation_count: 0,
        unresolved_count: 0,
        switch_count: 0,
        positive_fraction: 0.0,
        times: Vec::new(),
        derivative: Vec::new(),
        dissipation: Vec::new(),
        rhs: Vec::new(),
    }
}

fn push_row(report: &mut CommutatorReport, t: f64, d: f64, diss: f64, rhs: f64) {
    report.times.push(t);
    report.derivative.push(d);
    report.dissipation.push(diss);
    report.rhs.push(rhs);
}

/// Scan range for the localized-inequality constant.
pub const CONSTANT_SCAN: (f64, f64) = (1e-8, 1e12);

/// `d + a/C <= C b` at one checkpoint.
fn feasible(c: f64, d: f64, a: f64, b: f64) -> bool {
    d + a / c <= c * b
}

/// Smallest `C` in the scan range with `d_i + a_i/C <= C b_i` for all rows:
/// a logarithmic sweep locates the first feasible grid value, bisection then
/// refines it. `None` when no scanned value is feasible.
pub fn scan_constant(rows: &[(f64, f64, f64)]) -> Option<f64> {
    let all = |c: f64| rows.iter().all(|&(d, a, b)| feasible(c, d, a, b));
    let (lo, hi) = CONSTANT_SCAN;
    let decades = (hi / lo).log10();
    let per_decade = 20.0;
    let steps = (decades * per_decade) as usize;
    let grid = |k: usize| lo * 10f64.powf(k as f64 / per_decade);
    if all(lo) {
        return Some(lo);
    }
    let first = (1..=steps).find(|&k| all(grid(k)))?;
    let (mut a, mut b) = (grid(first - 1), grid(first));
    for _ in 0..200 {
        let mid = (a * b).sqrt();
        if all(mid) {
            b = mid;
        } else {
            a = mid;
        }
        if b / a - 1.0 < 1e-14 {
            break;
        }
    }
    Some(b)
}

/// Smallest `C` with
/// `d/dt⟨|θ_{ℓ,j}|⟩ + 4^ℓκ⟨|θ_{ℓ,j}|⟩/C <= C 2^{-sℓ}G_s⟨|∇θ|²⟩^{1/2}` at every
/// interior checkpoint; infinite when no scanned value works.
pub fn prop1_check(series: &LocalizationSeries, kappa: f64, s: f64, g_s: f64) -> Result<CommutatorReport> {
    let (diffs, skipped, switches) = centred(series)?;
    let scale = 4f64.powi(series.band) * kappa;
    let factor = 2f64.powf(-s * series.band as f64) * g_s;
    let mut report = empty_report(Inequality::Localized, series);
    report.unresolved_count = skipped;
    report.switch_count = switches;
    let mut rows = Vec::with_capacity(diffs.len());
    let mut positive = 0;
    for &(i, d) in &diffs {
        let diss = scale * series.theta_l1[i];
        let rhs = factor * series.grad_l2[i];
        rows.push((d, diss, rhs));
        // one-point feasibility: some finite C works unless b = 0 and d >= 0
        if rhs > 0.0 || d < 0.0 {
            positive += 1;
        } else if diss > 0.0 || d > 0.0 {
            report.violation_count += 1;
        }
        push_row(&mut report, series.times[i], d, diss, rhs);
    }
    report.positive_fraction = positive as f64 / diffs.len() as f64;
    report.constant = scan_constant(&rows).unwrap_or(f64::INFINITY);
    Ok(report)
}

/// Run-level constant: the largest per-series value.
pub fn uniform_constant(reports: &[CommutatorReport]) -> f64 {
    reports.iter().map(|r| r.constant).fold(0.0, f64::max)
}

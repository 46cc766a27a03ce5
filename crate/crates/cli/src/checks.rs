//! The verification suite behind `verify` and `sweep`.

use anyhow::Result;
use lpmix::commutator::{lemma1_check, lemma2_check, prop1_check, uniform_constant, CommutatorReport};
use lpmix::flow::{variance_balance_check, Trajectory};
use lpmix::lp::{
    build_ball_cover, decayed_bands, dissipation_lower_bound_check, kernel_moment, random_ball_field, bernstein_check,
    BallCover, BandSet,
};
use lpmix::spectra::{plateau_check, theorem_check, PlateauReport, RunParameters, SpectrumReport, TimeWeight};
use lpmix::spectral::random_field;
use lpmix::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Check;
use crate::run::{execute, Setup};

/// Largest relative variance-balance residual accepted away from flow switches.
pub const BALANCE_TOL: f64 = 1e-3;
/// Tolerance on the partition of unity and on band reconstruction.
pub const EXACT_TOL: f64 = 1e-12;
const RECONSTRUCTION_FIELDS: u64 = 8;

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub data: Value,
}

impl CheckOutcome {
    fn new(check: Check, passed: bool, detail: impl Into<String>, data: Value) -> Self {
        Self { name: check.name(), passed, detail: detail.into(), data }
    }
}

/// Results of a verification run, with the spectrum report when computed.
pub struct Verification {
    pub outcomes: Vec<CheckOutcome>,
    pub spectrum: Option<SpectrumReport>,
    pub c11: Option<f64>,
    pub c14: Option<f64>,
    pub plateau: Option<f64>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect()
    }

    pub fn max_ratio(&self) -> Option<f64> {
        self.spectrum.as_ref().and_then(|r| r.max_central_ratio)
    }

    pub fn central_ratios(&self) -> Vec<(i32, f64)> {
        self.spectrum
            .iter()
            .flat_map(|r| &r.rows)
            .filter(|r| r.central)
            .filter_map(|r| r.ratio.map(|x| (r.band, x)))
            .collect()
    }
}

fn finite(v: f64) -> bool {
    v.is_finite()
}

fn conservation(setup: &Setup, traj: &Trajectory) -> CheckOutcome {
    let scale = setup.theta0.minus_mean().max_abs().max(f64::MIN_POSITIVE);
    let mean = traj.mean.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
    let increases = traj
        .variance
        .windows(2)
        .filter(|w| w[1] > w[0] * (1.0 + 1e-12) + f64::MIN_POSITIVE)
        .count();
    let (residual, switches) = match variance_balance_check(traj) {
        Ok(rows) => {
            let mut worst = 0.0f64;
            let mut switches = 0;
            for (i, &(_, r)) in rows.iter().enumerate() {
                if setup.same_piece(traj.times[i], traj.times[i + 2]) {
                    worst = worst.max(r);
                } else {
                    switches += 1;
                }
            }
            (Some(worst), switches)
        }
        Err(_) => (None, 0),
    };
    let passed = mean <= EXACT_TOL && increases == 0 && residual.is_none_or(|r| r <= BALANCE_TOL);
    let detail = format!(
        "max |mean| {mean:.2e}, {increases} variance increases, balance residual {} ({switches} switch stencils skipped)",
        residual.map_or("n/a".into(), |r| format!("{r:.2e}"))
    );
    CheckOutcome::new(
        Check::Conservation,
        passed,
        detail,
        json!({
            "max_relative_mean": mean,
            "variance_increases": increases,
            "max_balance_residual": residual,
            "balance_tolerance": BALANCE_TOL,
            "switch_stencils": switches,
            "checkpoints": traj.len(),
        }),
    )
}

fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(0.0, f64::max);
    hi / lo - 1.0
}

fn moments(setup: &Setup, bands: &BandSet) -> Result<CheckOutcome> {
    let grid = &setup.grid;
    let partition = bands.partition_defect(true);
    let mut recon = 0.0f64;
    for k in 0..RECONSTRUCTION_FIELDS {
        let theta = random_field(grid, setup.cfg.seed.wrapping_add(1000 + k), None, -1.0);
        let mut sum = vec![0.0; grid.len()];
        for band in bands.bands() {
            let p = bands.project(&theta, band)?;
            sum.iter_mut().zip(p.values()).for_each(|(s, v)| *s += v);
        }
        let err = sum.iter().zip(theta.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        recon = recon.max(err / theta.max_abs());
    }
    let decayed = decayed_bands(bands);
    let mut table = Vec::new();
    let mut scaled = [Vec::new(), Vec::new()];
    for &l in &decayed {
        let w = bands.multiplier(l)?;
        let m0 = kernel_moment(grid, w, 0.0)?;
        let m1 = kernel_moment(grid, w, 1.0)? * 2f64.powi(l);
        scaled[0].push(m0);
        scaled[1].push(m1);
        table.push(json!({ "band": l, "moment0": m0, "moment1_scaled": m1 }));
    }
    let spreads: Vec<Option<f64>> = scaled.iter().map(|v| (v.len() >= 2).then(|| spread(v))).collect();
    let constants_finite = scaled.iter().flatten().all(|&v| finite(v));
    let passed = partition <= EXACT_TOL && recon <= EXACT_TOL && constants_finite;
    Ok(CheckOutcome::new(
        Check::Moments,
        passed,
        format!("partition defect {partition:.2e}, reconstruction error {recon:.2e}, decayed bands {decayed:?}"),
        json!({
            "partition_defect": partition,
            "reconstruction_error": recon,
            "tolerance": EXACT_TOL,
            "kernel_moments": table,
            "spread_moment0": spreads[0],
            "spread_moment1_scaled": spreads[1],
        }),
    ))
}

/// Evenly spaced active balls, at most `count`.
fn pick_balls(cover: &BallCover, count: Option<usize>) -> Vec<usize> {
    let active = cover.active_balls();
    match count {
        Some(k) if k < active.len() => (0..k).map(|i| active[i * active.len() / k]).collect(),
        _ => active,
    }
}

fn bernstein(setup: &Setup, bands: &BandSet, traj: &Trajectory) -> Result<CheckOutcome> {
    let theta = traj.last.inverse()?;
    let mut rows = Vec::new();
    let mut degenerate = 0;
    let mut all_finite = true;
    for band in setup.probe_bands(bands)? {
        let cover = build_ball_cover(bands, band, setup.cfg.sigma)?;
        let mut r18 = Vec::new();
        let mut r19 = Vec::new();
        for j in pick_balls(&cover, setup.cfg.balls_per_band) {
            match bernstein_check(&theta, &cover, j) {
                Ok((a, b)) => {
                    all_finite &= finite(a) && finite(b);
                    r18.push(a);
                    r19.push(b);
                }
                Err(Error::Degenerate(_)) => degenerate += 1,
                Err(e) => return Err(e.into()),
            }
        }
        let range = |v: &[f64]| {
            (!v.is_empty()).then(|| (v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(0.0, f64::max)))
        };
        rows.push(json!({ "band": band, "value_to_gradient": range(&r18), "gradient_fraction": range(&r19) }));
    }
    Ok(CheckOutcome::new(
        Check::Bernstein,
        all_finite,
        format!("{} bands, {degenerate} balls with vanishing gradient skipped", rows.len()),
        json!({ "bands": rows, "degenerate": degenerate }),
    ))
}

fn dissipation_lb(setup: &Setup, bands: &BandSet) -> Result<CheckOutcome> {
    let tested: Vec<i32> = setup
        .probe_bands(bands)?
        .into_iter()
        .filter(|&l| setup.cfg.sigma * 2f64.powi(l) >= 1.0)
        .collect();
    let mut rows = Vec::new();
    let mut all_positive = true;
    for &band in &tested {
        let cover = build_ball_cover(bands, band, setup.cfg.sigma)?;
        let mut lo = f64::INFINITY;
        for (i, j) in pick_balls(&cover, setup.cfg.balls_per_band).into_iter().enumerate() {
            let field = random_ball_field(&cover, j, setup.cfg.seed.wrapping_add(500 + i as u64))?;
            let local = cover.refined_project(&field, j)?;
            let ratio = dissipation_lower_bound_check(&local, band)?;
            all_positive &= ratio > 0.0 && finite(ratio);
            lo = lo.min(ratio);
        }
        rows.push(json!({ "band": band, "min_ratio": lo }));
    }
    let passed = all_positive && !tested.is_empty();
    let detail = if tested.is_empty() {
        "no probed band has balls of at least one lattice unit".to_string()
    } else {
        format!("bands {tested:?}, all ratios positive: {all_positive}")
    };
    Ok(CheckOutcome::new(Check::DissipationLb, passed, detail, json!({ "bands": rows })))
}

fn summarize(check: Check, reports: &[CommutatorReport], silent: usize) -> (CheckOutcome, Option<f64>) {
    if reports.is_empty() {
        let outcome = CheckOutcome::new(
            check,
            false,
            format!("no resolved localization series ({silent} silent)"),
            json!({ "silent": silent }),
        );
        return (outcome, None);
    }
    let constant = uniform_constant(reports);
    let mut per_band: Vec<(i32, f64)> = Vec::new();
    for r in reports {
        match per_band.iter_mut().find(|(b, _)| *b == r.band) {
            Some(entry) => entry.1 = entry.1.max(r.constant),
            None => per_band.push((r.band, r.constant)),
        }
    }
    let violations: usize = reports.iter().map(|r| r.violation_count).sum();
    let switches: usize = reports.iter().map(|r| r.switch_count).sum();
    let unresolved: usize = reports.iter().map(|r| r.unresolved_count).sum();
    let rows: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "band": r.band,
                "ball": r.ball,
                "constant": r.constant,
                "violations": r.violation_count,
                "positive_fraction": r.positive_fraction,
            })
        })
        .collect();
    let outcome = CheckOutcome::new(
        check,
        finite(constant),
        format!("constant {constant:.4}, {} series, {silent} silent, {violations} sign violations", reports.len()),
        json!({
            "constant": constant,
            "per_band": per_band.iter().map(|(b, c)| json!({ "band": b, "constant": c })).collect::<Vec<_>>(),
            "series": rows,
            "silent": silent,
            "violations": violations,
            "switch_checkpoints": switches,
            "unresolved_checkpoints": unresolved,
        }),
    );
    (outcome, Some(constant))
}

fn lemma2(setup: &Setup, bands: &BandSet, traj: &Trajectory) -> Result<CheckOutcome> {
    let q = traj.last.inverse()?;
    let v = setup.flow.at(setup.cfg.horizon)?.real_components().swap_remove(0);
    let mut rows = Vec::new();
    let mut passed = true;
    let mut degenerate = 0;
    for band in setup.probe_bands(bands)? {
        match lemma2_check(&v, &q, bands, band, setup.cfg.s) {
            Ok(r) => {
                let within = r.measured <= r.split_bound * (1.0 + 1e-9);
                passed &= finite(r.ratio) && within;
                rows.push(json!({
                    "band": band,
                    "ratio": r.ratio,
                    "measured": r.measured,
                    "bound": r.bound,
                    "split_bound": r.split_bound,
                    "within_split_bound": within,
                }));
            }
            Err(Error::Degenerate(_)) => degenerate += 1,
            Err(e) => return Err(e.into()),
        }
    }
    let worst = rows.iter().filter_map(|r| r["ratio"].as_f64()).fold(0.0, f64::max);
    Ok(CheckOutcome::new(
        Check::Lemma2,
        passed,
        format!("max ratio {worst:.4} over {} bands, {degenerate} degenerate", rows.len()),
        json!({ "s": setup.cfg.s, "bands": rows, "degenerate": degenerate }),
    ))
}

pub fn spectrum_report(setup: &Setup, probe: &lpmix::spectra::BandProbe) -> Result<SpectrumReport> {
    let r = &setup.resolved;
    let weight = TimeWeight::new(r.lambda, 0.0)?;
    let params = RunParameters { kappa: setup.cfg.kappa, s: setup.cfg.s, g_s: setup.cfg.g_s, g1: r.g1, weight };
    Ok(theorem_check(probe, params)?)
}

fn theorem(report: &SpectrumReport) -> CheckOutcome {
    let central: Vec<_> = report.rows.iter().filter(|r| r.central).collect();
    let bad: Vec<i32> = central
        .iter()
        .filter(|r| r.flagged || !r.ratio.is_some_and(finite))
        .map(|r| r.band)
        .collect();
    let passed = bad.is_empty() && !central.is_empty();
    let detail = match report.max_central_ratio {
        Some(m) if passed => format!("max central ratio {m:.4} over {} bands", central.len()),
        _ => format!("central bands without a finite ratio: {bad:?}"),
    };
    CheckOutcome::new(
        Check::Theorem,
        passed,
        detail,
        json!({ "max_central_ratio": report.max_central_ratio, "weight_warning": report.weight_warning, "report": report }),
    )
}

fn plateau(report: &SpectrumReport, beta: f64) -> (CheckOutcome, Option<PlateauReport>) {
    match plateau_check(report, beta) {
        Ok(p) => {
            let passed = p.values.iter().all(|v| finite(*v) && *v > 0.0);
            let detail = format!("window [{:.2}, {:.2}], bands {:?}, constant {:.4}", p.window.0, p.window.1, p.bands, p.max);
            (CheckOutcome::new(Check::Plateau, passed, detail, json!(p)), Some(p))
        }
        Err(e) => (CheckOutcome::new(Check::Plateau, false, e.to_string(), Value::Null), None),
    }
}

/// Runs the configured checks, sharing one integration between them.
pub fn verify(setup: &Setup) -> Result<Verification> {
    let want = |c: Check| setup.cfg.checks.contains(&c);
    let needs_bands = Check::ALL.iter().any(|&c| c != Check::Conservation && want(c));
    let bands = if needs_bands { Some(setup.bands()?) } else { None };
    let spectral = want(Check::Theorem) || want(Check::Plateau);
    let local = want(Check::Lemma1) || want(Check::Prop1);
    let final_state = want(Check::Bernstein) || want(Check::Lemma2);
    let stride_one = setup.sim.checkpoint_every == 1;
    let main = if spectral || local || final_state || (want(Check::Conservation) && stride_one) {
        Some(execute(setup, bands.as_ref(), spectral, local)?)
    } else {
        None
    };
    let mut out = Verification { outcomes: Vec::new(), spectrum: None, c11: None, c14: None, plateau: None };
    let bands_ref = || bands.as_ref().expect("bands built for band checks");
    for check in Check::ALL.into_iter().filter(|&c| want(c)) {
        let outcome = match check {
            Check::Conservation => match &main {
                Some(run) if stride_one => conservation(setup, &run.traj),
                _ => {
                    let mut sim = setup.sim.clone();
                    sim.checkpoint_every = 1;
                    conservation(setup, &setup.evolve(&sim, &mut [])?)
                }
            },
            Check::Moments => moments(setup, bands_ref())?,
            Check::Bernstein => bernstein(setup, bands_ref(), &main.as_ref().expect("main run").traj)?,
            Check::DissipationLb => dissipation_lb(setup, bands_ref())?,
            Check::Lemma1 | Check::Prop1 => {
                let series = main.as_ref().and_then(|r| r.series.as_ref()).expect("localization probe");
                let kappa = setup.cfg.kappa;
                let live: Vec<_> = series.iter().filter(|s| lemma1_check(s, kappa).is_ok()).collect();
                let silent = series.len() - live.len();
                let reports = live
                    .iter()
                    .map(|s| match check {
                        Check::Lemma1 => lemma1_check(s, kappa),
                        _ => prop1_check(s, kappa, setup.cfg.s, setup.cfg.g_s),
                    })
                    .collect::<lpmix::Result<Vec<_>>>()?;
                let (outcome, constant) = summarize(check, &reports, silent);
                if check == Check::Lemma1 {
                    out.c11 = constant;
                } else {
                    out.c14 = constant;
                }
                outcome
            }
            Check::Lemma2 => lemma2(setup, bands_ref(), &main.as_ref().expect("main run").traj)?,
            Check::Theorem | Check::Plateau => {
                if out.spectrum.is_none() {
                    let probe = main.as_ref().and_then(|r| r.band_probe.as_ref()).expect("band probe");
                    out.spectrum = Some(spectrum_report(setup, probe)?);
                }
                let report = out.spectrum.as_ref().expect("just computed");
                if check == Check::Theorem {
                    theorem(report)
                } else {
                    let (outcome, p) = plateau(report, setup.cfg.beta);
                    out.plateau = p.map(|p| p.max);
                    outcome
                }
            }
        };
        log::debug!("check {}: {} ({})", outcome.name, if outcome.passed { "pass" } else { "FAIL" }, outcome.detail);
        out.outcomes.push(outcome);
    }
    Ok(out)
}

/// Plateau table for the `spectrum` command.
pub fn plateau_for(report: &SpectrumReport, beta: f64) -> Option<PlateauReport> {
    plateau(report, beta).1
}

//! The four subcommands and the files they write.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lpmix::flow::{write_diagnostics, write_snapshot};
use lpmix::spectra::{write_spectrum_csv, SpectrumReport};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::checks::{plateau_for, spectrum_report, verify, Verification};
use crate::config::{ConfigError, RunConfig};
use crate::run::{execute, kappa_interval, Setup};

/// Environment variable overriding the output root.
pub const OUT_ENV: &str = "LPMIX_OUT_DIR";
const DEFAULT_OUT: &str = "lpmix-out";

pub struct Options {
    pub out: Option<PathBuf>,
    pub quiet: bool,
}

/// How a command finished, when it did not hit an error.
#[derive(Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Names of the failed checks or runs.
    Failed(Vec<String>),
}

/// Output root: `--out`, then the environment, then `out_dir`, then a default.
pub fn output_root(opts: &Options, cfg: &RunConfig) -> PathBuf {
    if let Some(p) = &opts.out {
        return p.clone();
    }
    if let Some(p) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    PathBuf::from(cfg.out_dir.as_deref().unwrap_or(DEFAULT_OUT))
}

/// `<command>-<first 12 hex digits of the config hash>`.
pub fn run_dir_name(command: &str, cfg: &RunConfig) -> String {
    format!("{command}-{}", &cfg.hash()[..12])
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

fn sci_opt(v: Option<f64>) -> String {
    v.map(sci).unwrap_or_default()
}

fn write_manifest(dir: &Path, command: &str, setup: &Setup, extra: Value) -> Result<()> {
    let manifest = json!({
        "software": "lpmix",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config_hash": setup.cfg.hash(),
        "seed": setup.cfg.seed,
        "config": setup.cfg,
        "resolved": setup.resolved,
        "summary": extra,
    });
    write_json(&dir.join("manifest.json"), &manifest)
}

fn say(opts: &Options, line: impl AsRef<str>) {
    if !opts.quiet {
        println!("{}", line.as_ref());
    }
}

pub fn simulate(cfg: &RunConfig, opts: &Options) -> Result<Status> {
    let setup = Setup::new(cfg)?;
    let dir = output_root(opts, cfg).join(run_dir_name("simulate", cfg));
    create_dir(&dir)?;
    log::info!("simulate: {} steps of {:e} on N = {}", setup.resolved.steps, setup.resolved.dt, cfg.grid.n);
    let traj = setup.evolve(&setup.sim, &mut [])?;
    let mut w = create(&dir.join("diagnostics.csv"))?;
    write_diagnostics(&mut w, &traj)?;
    w.flush()?;
    let mut w = create(&dir.join("initial.bin"))?;
    write_snapshot(&mut w, &traj.initial.inverse()?, 0.0)?;
    w.flush()?;
    let mut w = create(&dir.join("final.bin"))?;
    let t_end = traj.times.last().copied().unwrap_or(0.0);
    write_snapshot(&mut w, &traj.last.inverse()?, t_end)?;
    w.flush()?;
    let last = traj.len() - 1;
    write_manifest(
        &dir,
        "simulate",
        &setup,
        json!({ "checkpoints": traj.len(), "final_variance": traj.variance[last], "final_time": t_end }),
    )?;
    say(opts, format!("variance {:.6e} -> {:.6e} over {} checkpoints", traj.variance[0], traj.variance[last], traj.len()));
    say(opts, format!("output: {}", dir.display()));
    Ok(Status::Ok)
}

/// Files of a verification run; identical whether written by `verify` or
/// as one point of a sweep.
fn write_verification(dir: &Path, setup: &Setup, v: &Verification) -> Result<()> {
    let checks = dir.join("checks");
    create_dir(&checks)?;
    for o in &v.outcomes {
        write_json(&checks.join(format!("{}.json", o.name)), o)?;
    }
    if let Some(report) = &v.spectrum {
        let mut w = create(&dir.join("theorem.csv"))?;
        write_spectrum_csv(&mut w, report)?;
        w.flush()?;
    }
    let summary: Vec<Value> =
        v.outcomes.iter().map(|o| json!({ "name": o.name, "passed": o.passed, "detail": o.detail })).collect();
    let verdict = json!({ "passed": v.passed(), "failed": v.failed(), "checks": summary });
    write_json(&dir.join("verify.json"), &verdict)?;
    write_manifest(dir, "verify", setup, verdict)
}

fn verify_into(dir: &Path, cfg: &RunConfig) -> Result<Verification> {
    let setup = Setup::new(cfg)?;
    create_dir(dir)?;
    let v = verify(&setup)?;
    write_verification(dir, &setup, &v)?;
    Ok(v)
}

pub fn verify_cmd(cfg: &RunConfig, opts: &Options) -> Result<Status> {
    let dir = output_root(opts, cfg).join(run_dir_name("verify", cfg));
    let v = verify_into(&dir, cfg)?;
    for o in &v.outcomes {
        say(opts, format!("check {} [{}] {}", o.name, if o.passed { "PASS" } else { "FAIL" }, o.detail));
    }
    say(opts, format!("output: {}", dir.display()));
    Ok(if v.passed() { Status::Ok } else { Status::Failed(v.failed().iter().map(|s| s.to_string()).collect()) })
}

fn write_plateau_csv(path: &Path, report: &SpectrumReport, beta: f64) -> Result<Option<lpmix::spectra::PlateauReport>> {
    let plateau = plateau_for(report, beta);
    let mut w = create(path)?;
    writeln!(w, "l,k,compensated")?;
    if let Some(p) = &plateau {
        for (band, value) in p.bands.iter().zip(&p.values) {
            writeln!(w, "{band},{},{}", sci(lpmix::spectra::representative_k(*band)), sci(*value))?;
        }
    }
    w.flush()?;
    Ok(plateau)
}

pub fn spectrum(cfg: &RunConfig, opts: &Options) -> Result<Status> {
    let setup = Setup::new(cfg)?;
    let bands = setup.bands()?;
    if let Some(k_b) = setup.resolved.k_b {
        let lo = 2f64.powi(bands.min_band() + 1);
        let hi = setup.grid.dealias_cutoff();
        if !(lo..=hi).contains(&k_b) {
            let (k_lo, k_hi) = kappa_interval(setup.resolved.g1, lo, hi);
            return Err(ConfigError(format!(
                "`kappa`: Batchelor wave number {k_b:.4} outside the resolvable range [{lo}, {hi:.4}]; \
                 admissible kappa interval [{k_lo:.6e}, {k_hi:.6e}]"
            ))
            .into());
        }
    }
    let dir = output_root(opts, cfg).join(run_dir_name("spectrum", cfg));
    create_dir(&dir)?;
    let run = execute(&setup, Some(&bands), true, false)?;
    let report = spectrum_report(&setup, run.band_probe.as_ref().expect("band probe attached"))?;
    let mut w = create(&dir.join("spectrum.csv"))?;
    write_spectrum_csv(&mut w, &report)?;
    w.flush()?;
    let plateau = write_plateau_csv(&dir.join("plateau.csv"), &report, cfg.beta)?;
    write_json(&dir.join("spectrum.json"), &json!({ "report": report, "plateau": plateau }))?;
    let summary = json!({
        "k_b": report.k_b,
        "chi_phi": report.chi_phi,
        "max_central_ratio": report.max_central_ratio,
        "weight_warning": report.weight_warning,
        "plateau_constant": plateau.as_ref().map(|p| p.max),
    });
    write_manifest(&dir, "spectrum", &setup, summary)?;
    if report.weight_warning {
        log::warn!("weight rate {} exceeds kappa k_B^2", report.lambda);
    }
    say(opts, "l,k,lhs,ratio,compensated");
    for r in &report.rows {
        say(opts, format!("{},{:.4},{:.6e},{},{}", r.band, r.k, r.lhs, sci_opt(r.ratio), sci_opt(r.compensated)));
    }
    if let Some(p) = &plateau {
        say(opts, format!("plateau window [{:.3}, {:.3}] bands {:?} constant {:.6}", p.window.0, p.window.1, p.bands, p.max));
    }
    say(opts, format!("output: {}", dir.display()));
    Ok(Status::Ok)
}

/// One row of `sweep.csv`.
#[derive(Serialize)]
struct SweepRow {
    index: usize,
    flow: String,
    kappa: String,
    s: String,
    n: usize,
    seed: u64,
    hash: String,
    status: &'static str,
    failed: String,
    c11: String,
    c14: String,
    max_ratio: String,
    plateau: String,
}

/// Constants of one sweep point, `None` where unavailable.
#[derive(Clone, Debug, Default)]
struct Constants {
    c11: Option<f64>,
    c14: Option<f64>,
    max_ratio: Option<f64>,
    plateau: Option<f64>,
    /// Theorem ratio per central band.
    ratios: Vec<(i32, f64)>,
}

impl Constants {
    fn values(&self) -> [(&'static str, Option<f64>); 4] {
        [("c11", self.c11), ("c14", self.c14), ("max_ratio", self.max_ratio), ("plateau", self.plateau)]
    }
}

fn flow_name(cfg: &RunConfig) -> String {
    serde_json::to_value(&cfg.flow)
        .ok()
        .and_then(|v| v.get("kind").and_then(Value::as_str).map(str::to_string))
        .unwrap_or_default()
}

fn stats(values: &[f64]) -> Value {
    if values.is_empty() {
        return Value::Null;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    let median = if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) };
    json!({ "min": v[0], "median": median, "max": v[v.len() - 1], "count": v.len() })
}

/// Factor within which constants at `N` and `2N` must agree.
pub const STABILITY_FACTOR: f64 = 2.0;

/// Largest theorem ratio of each side over the central bands both share.
fn shared_ratio(a: &Constants, b: &Constants) -> (Option<f64>, Option<f64>) {
    let shared = |x: &Constants, y: &Constants| {
        x.ratios
            .iter()
            .filter(|(band, _)| y.ratios.iter().any(|(o, _)| o == band))
            .map(|&(_, r)| r)
            .reduce(f64::max)
    };
    (shared(a, b), shared(b, a))
}

fn agreement(a: &Constants, b: &Constants) -> (bool, Vec<Value>) {
    let mut ok = true;
    let mut rows = Vec::new();
    let (ra, rb) = shared_ratio(a, b);
    let mut xs = a.values();
    let mut ys = b.values();
    xs[2].1 = ra;
    ys[2].1 = rb;
    for ((name, x), (_, y)) in xs.into_iter().zip(ys) {
        if let (Some(x), Some(y)) = (x, y) {
            let factor = if x > 0.0 && y > 0.0 { x.max(y) / x.min(y) } else if x == y { 1.0 } else { f64::INFINITY };
            ok &= factor <= STABILITY_FACTOR;
            rows.push(json!({ "constant": name, "coarse": x, "fine": y, "factor": factor }));
        }
    }
    (ok, rows)
}

pub fn sweep(cfg: &RunConfig, opts: &Options) -> Result<Status> {
    let dir = output_root(opts, cfg).join(run_dir_name("sweep", cfg));
    let runs_dir = dir.join("runs");
    create_dir(&runs_dir)?;
    let points = cfg.expand();
    log::info!("sweep: {} runs", points.len());
    let results: Vec<(RunConfig, Result<Verification>)> = points
        .into_par_iter()
        .map(|p| {
            let sub = runs_dir.join(run_dir_name("verify", &p));
            let r = verify_into(&sub, &p);
            if let Err(e) = &r {
                log::warn!("sweep point {} failed: {e:#}", &p.hash()[..12]);
            }
            (p, r)
        })
        .collect();
    let mut csv = csv::Writer::from_path(dir.join("sweep.csv")).context("creating sweep.csv")?;
    let mut constants = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (index, (p, r)) in results.iter().enumerate() {
        let hash = p.hash()[..12].to_string();
        let (status, failed, c) = match r {
            Ok(v) => {
                let c = Constants {
                    c11: v.c11,
                    c14: v.c14,
                    max_ratio: v.max_ratio(),
                    plateau: v.plateau,
                    ratios: v.central_ratios(),
                };
                if v.passed() {
                    ("pass", String::new(), c)
                } else {
                    ("fail", v.failed().join(";"), c)
                }
            }
            Err(e) => ("error", format!("{e:#}"), Constants::default()),
        };
        if status != "pass" {
            failures.push(json!({ "index": index, "hash": hash, "status": status, "reason": failed }));
        }
        csv.serialize(SweepRow {
            index,
            flow: flow_name(p),
            kappa: sci(p.kappa),
            s: sci(p.s),
            n: p.grid.n,
            seed: p.seed,
            hash,
            status,
            failed,
            c11: sci_opt(c.c11),
            c14: sci_opt(c.c14),
            max_ratio: sci_opt(c.max_ratio),
            plateau: sci_opt(c.plateau),
        })?;
        constants.push(c);
    }
    csv.flush()?;
    let mut pairs = Vec::new();
    let mut stable = true;
    for (i, (a, _)) in results.iter().enumerate() {
        for (j, (b, _)) in results.iter().enumerate() {
            let same = a.flow == b.flow && a.kappa == b.kappa && a.s == b.s && a.seed == b.seed;
            if same && b.grid.n == 2 * a.grid.n {
                let (ok, rows) = agreement(&constants[i], &constants[j]);
                stable &= ok;
                pairs.push(json!({ "coarse": i, "fine": j, "agree": ok, "constants": rows }));
            }
        }
    }
    let collect = |f: fn(&Constants) -> Option<f64>| constants.iter().filter_map(f).collect::<Vec<_>>();
    let summary = json!({
        "runs": results.len(),
        "failures": failures,
        "constants": {
            "c11": stats(&collect(|c| c.c11)),
            "c14": stats(&collect(|c| c.c14)),
            "max_ratio": stats(&collect(|c| c.max_ratio)),
            "plateau": stats(&collect(|c| c.plateau)),
        },
        "n_doubling": pairs,
        "stable": if pairs.is_empty() { Value::Null } else { Value::Bool(stable) },
    });
    write_json(&dir.join("summary.json"), &summary)?;
    let manifest = json!({
        "software": "lpmix",
        "version": env!("CARGO_PKG_VERSION"),
        "command": "sweep",
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "config": cfg,
        "runs": results.iter().map(|(p, _)| p.hash()).collect::<Vec<_>>(),
    });
    write_json(&dir.join("manifest.json"), &manifest)?;
    say(opts, format!("{} runs, {} not passing", results.len(), failures.len()));
    for (name, _) in Constants::default().values() {
        say(opts, format!("{name}: {}", summary["constants"][name]));
    }
    if !pairs.is_empty() {
        say(opts, format!("N-doubling stable: {stable}"));
    }
    say(opts, format!("output: {}", dir.display()));
    Ok(if failures.is_empty() {
        Status::Ok
    } else {
        Status::Failed(failures.iter().map(|f| format!("run {}", f["hash"].as_str().unwrap_or(""))).collect())
    })
}

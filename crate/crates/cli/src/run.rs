//! Turning a configuration into grids, flows and integrator settings, and
//! running the integrator with the requested probes.

use anyhow::Result;
use lpmix::commutator::{LocalizationProbe, LocalizationSeries};
use lpmix::flow::{evolve, make_flow, Flow, FlowKind, FlowSpec, Observer, SimConfig, Trajectory};
use lpmix::lp::{build_dyadic_family, BandSet, DyadicProfile};
use lpmix::spectra::BandProbe;
use lpmix::spectral::{random_field, FourierGrid, ScalarField};
use serde::Serialize;

use crate::config::{ConfigError, InitialConfig, Param, RunConfig};

/// Smallest number of steps chosen by the automatic time step.
pub const MIN_AUTO_STEPS: usize = 100;
/// Automatic steps per stirring time `1/G₁`.
pub const STEPS_PER_STIRRING_TIME: f64 = 400.0;

/// Values derived at startup, echoed into every manifest.
#[derive(Clone, Debug, Serialize)]
pub struct Resolved {
    pub dt: f64,
    pub steps: usize,
    pub lambda: f64,
    /// `⟨|∇u|²⟩^{1/2}` of the flow at `t = 0`.
    pub g1: f64,
    pub k_b: Option<f64>,
    pub max_speed: f64,
    pub flow_seed: u64,
    pub initial_seed: u64,
}

pub struct Setup {
    pub cfg: RunConfig,
    pub grid: FourierGrid,
    pub flow: Flow,
    pub theta0: ScalarField,
    pub sim: SimConfig,
    pub resolved: Resolved,
}

fn config_err(field: &str, e: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("`{field}`: {e}"))
}

fn initial_field(cfg: &RunConfig, grid: &FourierGrid, seed: u64) -> ScalarField {
    let k0 = grid.fundamental();
    match &cfg.initial {
        InitialConfig::Random { k_min, k_max, slope } => random_field(grid, seed, Some((k_min * k0, k_max * k0)), *slope),
        InitialConfig::SingleMode { mode, amplitude } => {
            let m: Vec<f64> = mode.iter().map(|&c| c as f64 * k0).collect();
            ScalarField::from_fn(grid, |x| amplitude * m.iter().zip(x).map(|(k, x)| k * x).sum::<f64>().cos())
        }
        InitialConfig::Zero => ScalarField::zeros(grid),
    }
}

impl Setup {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = FourierGrid::new(cfg.grid.length, cfg.grid.n, cfg.grid.dim).map_err(|e| config_err("grid", e))?;
        let spec = FlowSpec::new(cfg.flow.clone(), cfg.s, cfg.g_s, cfg.seed).map_err(|e| config_err("flow", e))?;
        let flow = make_flow(&spec, &grid).map_err(|e| config_err("flow", e))?;
        let g1 = flow.at(0.0)?.fractional_norm(1.0)?;
        let k_b = (g1 > 0.0).then(|| (g1 / cfg.kappa).sqrt());
        let lambda = match cfg.lambda {
            Param::Auto => g1,
            Param::Value(v) => v,
        };
        let max_speed = flow.max_speed();
        let cfl_dt = cfg.cfl * grid.spacing() / max_speed;
        let dt = match cfg.dt {
            Param::Value(dt) => {
                if max_speed > 0.0 && dt > cfl_dt {
                    return Err(config_err("dt", format!("{dt} exceeds the CFL limit {cfl_dt:e}")).into());
                }
                dt
            }
            Param::Auto => {
                let mut steps = MIN_AUTO_STEPS;
                if max_speed > 0.0 {
                    steps = steps.max((cfg.horizon / cfl_dt).ceil() as usize);
                }
                if g1 > 0.0 {
                    steps = steps.max((cfg.horizon * g1 * STEPS_PER_STIRRING_TIME).ceil() as usize);
                }
                cfg.horizon / steps as f64
            }
        };
        let mut sim = SimConfig::new(cfg.kappa, dt, cfg.horizon);
        sim.cfl = cfg.cfl;
        sim.dealias = cfg.dealias;
        sim.checkpoint_every = cfg.checkpoint_every;
        sim.validate().map_err(|e| config_err("dt", e))?;
        if k_b.is_some_and(|k| k > grid.dealias_cutoff()) {
            log::warn!("Batchelor wave number {:.3} beyond the dealiasing cutoff {:.3}", k_b.unwrap(), grid.dealias_cutoff());
        }
        let initial_seed = cfg.seed.wrapping_add(1);
        let theta0 = initial_field(cfg, &grid, initial_seed);
        let resolved = Resolved { dt, steps: sim.steps(), lambda, g1, k_b, max_speed, flow_seed: cfg.seed, initial_seed };
        Ok(Self { cfg: cfg.clone(), grid, flow, theta0, sim, resolved })
    }

    pub fn bands(&self) -> Result<BandSet> {
        build_dyadic_family(&self.grid, DyadicProfile::default()).map_err(|e| config_err("grid.n", e).into())
    }

    /// Bands probed by the ball-level checks: `probe_bands`, or the central
    /// bands of the grid.
    pub fn probe_bands(&self, bands: &BandSet) -> Result<Vec<i32>> {
        match &self.cfg.probe_bands {
            Some(list) => {
                for &b in list {
                    if !(bands.min_band()..=bands.resolved_max()).contains(&b) {
                        return Err(config_err(
                            "probe_bands",
                            format!("band {b} outside resolved range {}..={}", bands.min_band(), bands.resolved_max()),
                        )
                        .into());
                    }
                }
                Ok(list.clone())
            }
            None => Ok(bands.central_bands()),
        }
    }

    /// Whether checkpoints `t_a < t_b` sit on the same constant-in-time piece
    /// of the flow, judged by the steps leaving `t_a` and reaching `t_b`.
    pub fn same_piece(&self, t_a: f64, t_b: f64) -> bool {
        let h = self.sim.dt / 2.0;
        matches!(self.cfg.flow, FlowKind::Zero | FlowKind::SteadyShear { .. } | FlowKind::RandomStream { .. })
            || self.flow.piece_index(t_a + h) == self.flow.piece_index(t_b - h)
    }

    pub fn evolve(&self, sim: &SimConfig, observers: &mut [&mut dyn Observer]) -> Result<Trajectory> {
        Ok(evolve(&self.theta0, &self.flow, sim, observers)?)
    }
}

/// A run with the optional band and ball probes attached.
pub struct Run {
    pub traj: Trajectory,
    pub band_probe: Option<BandProbe>,
    pub series: Option<Vec<LocalizationSeries>>,
}

pub fn execute(setup: &Setup, bands: Option<&BandSet>, band_probe: bool, local: bool) -> Result<Run> {
    let mut probe = match (band_probe, bands) {
        (true, Some(b)) => Some(BandProbe::new(b)),
        _ => None,
    };
    let mut loc = match (local, bands) {
        (true, Some(b)) => {
            let list = setup.probe_bands(b)?;
            Some(LocalizationProbe::new(b, &list, setup.cfg.sigma, setup.cfg.balls_per_band)?)
        }
        _ => None,
    };
    let mut observers: Vec<&mut dyn Observer> = Vec::new();
    if let Some(p) = probe.as_mut() {
        observers.push(p);
    }
    if let Some(l) = loc.as_mut() {
        observers.push(l);
    }
    let traj = setup.evolve(&setup.sim, &mut observers)?;
    Ok(Run { traj, band_probe: probe, series: loc.map(LocalizationProbe::into_series) })
}

/// Admissible diffusivities placing `k_B` inside `[lo, hi]`.
pub fn kappa_interval(g1: f64, lo: f64, hi: f64) -> (f64, f64) {
    (g1 / (hi * hi), g1 / (lo * lo))
}

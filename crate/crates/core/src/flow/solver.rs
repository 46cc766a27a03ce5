use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kinds::Flow;
use crate::error::{param, Error, Result};
use crate::spectral::{FourierGrid, ScalarField, SpectralField, VelocityField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub kappa: f64,
    pub dt: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub dealias: bool,
    /// Steps between checkpoints.
    pub checkpoint_every: usize,
}

impl SimConfig {
    pub fn new(kappa: f64, dt: f64, t_end: f64) -> Self {
        Self { kappa, dt, t_end, cfl: 0.5, dealias: true, checkpoint_every: 1 }
    }

    fn validate_step(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(param("kappa", format!("{} must be nonnegative", self.kappa)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(param("dt", format!("{} must be positive", self.dt)));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(param("cfl", format!("{} outside (0, 1)", self.cfl)));
        }
        Ok(())
    }

    /// Full check for production runs: `κ > 0` and `T` a whole number of steps.
    pub fn validate(&self) -> Result<()> {
        self.validate_step()?;
        if self.kappa <= 0.0 {
            return Err(param("kappa", "diffusivity must be positive"));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(param("t_end", format!("{} must be nonnegative", self.t_end)));
        }
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(param("dt", format!("horizon {} is not a multiple of {}", self.t_end, self.dt)));
        }
        if self.checkpoint_every == 0 {
            return Err(param("checkpoint_every", "must be at least 1"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

struct PieceCache {
    piece: u64,
    velocity: VelocityField,
    real: Vec<Vec<f64>>,
    max_speed: f64,
}

/// Integrating-factor midpoint integrator for `∂_tθ + u·∇θ = κΔθ`.
///
/// With `E_h = e^{-κ|m|²Δt/2}` and `N(θ) = -D[u·∇θ]` the step reads
/// `a = E_h(θ + Δt/2·N(θ))`, `θ ← E_h²θ + Δt·E_h N(a)`; diffusion is exact.
/// The velocity for a step is the flow piece containing its midpoint.
pub struct Solver<'a> {
    flow: &'a Flow,
    cfg: SimConfig,
    grid: FourierGrid,
    t0: f64,
    steps: usize,
    theta: Vec<Complex64>,
    e_half: Vec<f64>,
    e_full: Vec<f64>,
    mask: Vec<f64>,
    /// `m_a` with the Nyquist plane of axis `a` removed.
    ik: Vec<Vec<f64>>,
    cache: Option<PieceCache>,
    buf: Vec<Complex64>,
}

impl<'a> Solver<'a> {
    /// Solver starting from `theta` at time `t0`; the mean is kept as given.
    pub fn new(flow: &'a Flow, theta: &SpectralField, t0: f64, cfg: &SimConfig) -> Result<Self> {
        cfg.validate_step()?;
        let grid = flow.grid().clone();
        if theta.grid() != &grid {
            return Err(Error::GridMismatch);
        }
        let mask: Vec<f64> =
            grid.dealias_mask().iter().map(|&keep| if keep || !cfg.dealias { 1.0 } else { 0.0 }).collect();
        let e_half: Vec<f64> = grid.mag2().iter().map(|&m2| (-cfg.kappa * m2 * cfg.dt / 2.0).exp()).collect();
        let e_full = e_half.iter().map(|e| e * e).collect();
        let ik = (0..grid.dim())
            .map(|a| {
                (0..grid.len())
                    .map(|i| if grid.is_nyquist(i, a) { 0.0 } else { grid.wavevector(i)[a] })
                    .collect()
            })
            .collect();
        let theta = theta.coeffs().iter().zip(&mask).map(|(c, m)| c * m).collect();
        Ok(Self {
            flow,
            cfg: cfg.clone(),
            t0,
            steps: 0,
            theta,
            e_half,
            e_full,
            mask,
            ik,
            cache: None,
            buf: vec![Complex64::new(0.0, 0.0); grid.len()],
            grid,
        })
    }

    pub fn time(&self) -> f64 {
        self.t0 + self.steps as f64 * self.cfg.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn theta(&self) -> SpectralField {
        SpectralField::new(&self.grid, self.theta.clone()).expect("sized to grid")
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.theta
    }

    /// Velocity of the piece used for the step starting at `t`.
    pub fn velocity_at(&mut self, t: f64) -> Result<&VelocityField> {
        self.load_piece(self.flow.piece_index(t + self.cfg.dt / 2.0))?;
        Ok(&self.cache.as_ref().expect("loaded").velocity)
    }

    fn load_piece(&mut self, piece: u64) -> Result<()> {
        if self.cache.as_ref().is_some_and(|c| c.piece == piece) {
            return Ok(());
        }
        let velocity = self.flow.piece(piece)?;
        let mut real = Vec::with_capacity(self.grid.dim());
        for comp in velocity.components() {
            let mut data: Vec<Complex64> = comp.coeffs().iter().zip(&self.mask).map(|(c, m)| c * m).collect();
            self.grid.inverse_in_place(&mut data);
            real.push(data.into_iter().map(|c| c.re).collect::<Vec<f64>>());
        }
        let max_speed = (0..self.grid.len())
            .map(|i| real.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        self.cache = Some(PieceCache { piece, velocity, real, max_speed });
        Ok(())
    }

    /// `-D[u·∇θ]` in spectral space, written into `out`.
    fn advection(&mut self, theta: &[Complex64], out: &mut [Complex64]) {
        let cache = self.cache.as_ref().expect("piece loaded");
        let dim = self.grid.dim();
        let len = self.grid.len();
        let mut product = vec![0.0f64; len];
        // two real derivatives per complex transform
        let mut axis = 0;
        while axis < dim {
            let pair = axis + 1 < dim;
            let (ka, mask) = (&self.ik[axis], &self.mask);
            let kb = if pair { Some(&self.ik[axis + 1]) } else { None };
            self.buf.par_iter_mut().enumerate().for_each(|(i, b)| {
                let t = theta[i] * mask[i];
                let da = Complex64::new(-t.im, t.re) * ka[i];
                *b = match kb {
                    Some(kb) => da + Complex64::new(-t.re, -t.im) * kb[i],
                    None => da,
                };
            });
            self.grid.inverse_in_place(&mut self.buf);
            let ua = &cache.real[axis];
            let ub = if pair { Some(&cache.real[axis + 1]) } else { None };
            product.par_iter_mut().enumerate().for_each(|(i, p)| {
                let g = self.buf[i];
                *p += ua[i] * g.re + ub.map_or(0.0, |ub| ub[i] * g.im);
            });
            axis += if pair { 2 } else { 1 };
        }
        out.par_iter_mut().zip(product.par_iter()).for_each(|(o, &p)| *o = Complex64::new(p, 0.0));
        self.grid.forward_in_place(out);
        out.par_iter_mut().zip(self.mask.par_iter()).for_each(|(o, &m)| *o *= -m);
        // u·∇θ = ∇·(uθ) has zero mean
        out[0] = Complex64::new(0.0, 0.0);
    }

    /// Advance by one step of `cfg.dt`.
    pub fn step(&mut self) -> Result<()> {
        let t = self.time();
        let dt = self.cfg.dt;
        self.load_piece(self.flow.piece_index(t + dt / 2.0))?;
        let speed = self.cache.as_ref().expect("loaded").max_speed;
        if speed > 0.0 {
            let max_dt = self.cfg.cfl * self.grid.spacing() / speed;
            if dt > max_dt {
                return Err(Error::Cfl { dt, max_dt });
            }
        }
        let len = self.grid.len();
        let theta = std::mem::take(&mut self.theta);
        if speed == 0.0 {
            self.theta = theta.iter().zip(&self.e_full).map(|(c, e)| c * e).collect();
        } else {
            let mut n1 = vec![Complex64::new(0.0, 0.0); len];
            self.advection(&theta, &mut n1);
            let mid: Vec<Complex64> = (0..len).map(|i| (theta[i] + n1[i] * (dt / 2.0)) * self.e_half[i]).collect();
            let mut n2 = n1;
            self.advection(&mid, &mut n2);
            self.theta = (0..len).map(|i| theta[i] * self.e_full[i] + n2[i] * (dt * self.e_half[i])).collect();
        }
        self.steps += 1;
        Ok(())
    }
}

/// One step of the integrator from time `t`; permits `κ = 0` for diagnostics.
pub fn step(theta: &SpectralField, flow: &Flow, t: f64, cfg: &SimConfig) -> Result<SpectralField> {
    let mut solver = Solver::new(flow, theta, t, cfg)?;
    solver.step()?;
    Ok(solver.theta())
}

/// Checkpoint state handed to observers.
pub struct Snapshot<'s> {
    pub step: usize,
    pub time: f64,
    pub theta: &'s SpectralField,
    pub velocity: &'s VelocityField,
    pub kappa: f64,
    /// Flow pieces of the step that reached this checkpoint and of the step
    /// leaving it (equal at the initial checkpoint).
    pub pieces: (u64, u64),
}

pub trait Observer {
    fn observe(&mut self, snap: &Snapshot<'_>) -> Result<()>;
}

/// Diagnostics sampled at checkpoints.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub kappa: f64,
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    /// `⟨θ²⟩`
    pub variance: Vec<f64>,
    /// `⟨|∇θ|²⟩`
    pub grad_sq: Vec<f64>,
    pub initial: SpectralField,
    pub last: SpectralField,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `χ = κ⟨|∇θ|²⟩`.
    pub fn dissipation(&self) -> Vec<f64> {
        self.grad_sq.iter().map(|g| self.kappa * g).collect()
    }
}

/// Sequential sums, so diagnostics do not depend on the thread count.
fn moments(coeffs: &[Complex64], ik: &[Vec<f64>]) -> (f64, f64, f64) {
    let (var, grad) = coeffs.iter().enumerate().fold((0.0, 0.0), |acc, (i, c)| {
        let e = c.norm_sqr();
        (acc.0 + e, acc.1 + e * ik.iter().map(|k| k[i] * k[i]).sum::<f64>())
    });
    (coeffs[0].re, var, grad)
}

/// Integrate from a mean-zero version of `theta0` up to `cfg.t_end`.
pub fn evolve(
    theta0: &ScalarField,
    flow: &Flow,
    cfg: &SimConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    cfg.validate()?;
    let initial = theta0.minus_mean().forward();
    let mut solver = Solver::new(flow, &initial, 0.0, cfg)?;
    let initial = solver.theta();
    let steps = cfg.steps();
    let mut traj = Trajectory {
        kappa: cfg.kappa,
        times: Vec::new(),
        mean: Vec::new(),
        variance: Vec::new(),
        grad_sq: Vec::new(),
        initial: initial.clone(),
        last: initial,
    };
    for n in 0..=steps {
        if n > 0 {
            solver.step()?;
        }
        if n % cfg.checkpoint_every == 0 || n == steps {
            let time = solver.time();
            let (mean, var, grad) = moments(&solver.theta, &solver.ik);
            if !(var.is_finite() && grad.is_finite()) {
                return Err(Error::NonFinite(time));
            }
            traj.times.push(time);
            traj.mean.push(mean);
            traj.variance.push(var);
            traj.grad_sq.push(grad);
            if !observers.is_empty() {
                let theta = solver.theta();
                let velocity = solver.velocity_at(time)?.clone();
                let after = flow.piece_index(time + cfg.dt / 2.0);
                let before = if n == 0 { after } else { flow.piece_index(time - cfg.dt / 2.0) };
                let snap = Snapshot {
                    step: n,
                    time,
                    theta: &theta,
                    velocity: &velocity,
                    kappa: cfg.kappa,
                    pieces: (before, after),
                };
                for obs in observers.iter_mut() {
                    obs.observe(&snap)?;
                }
            }
        }
    }
    traj.last = solver.theta();
    Ok(traj)
}

/// `Fθ(t, m) = e^{-κ|m|²t} Fθ₀(m)`.
pub fn diffusion_exact(theta0: &ScalarField, kappa: f64, t: f64) -> Result<ScalarField> {
    if !(t >= 0.0) {
        return Err(param("t", format!("{t} must be nonnegative")));
    }
    let spec = theta0.forward();
    let decay: Vec<f64> = theta0.grid().mag2().iter().map(|&m2| (-kappa * m2 * t).exp()).collect();
    let out = spec.apply_real(&decay);
    Ok(crate::spectral::real_synthesis(&out))
}

/// `|d/dt⟨θ²⟩ + 2κ⟨|∇θ|²⟩| / (2κ⟨|∇θ|²⟩)` at interior checkpoints, with the
/// derivative from centred differences. Returns `(time, residual)` pairs.
pub fn variance_balance_check(traj: &Trajectory) -> Result<Vec<(f64, f64)>> {
    if traj.len() < 3 {
        return Err(Error::Series(format!("{} checkpoints, need at least 3", traj.len())));
    }
    let mut out = Vec::with_capacity(traj.len() - 2);
    for i in 1..traj.len() - 1 {
        let dvar = (traj.variance[i + 1] - traj.variance[i - 1]) / (traj.times[i + 1] - traj.times[i - 1]);
        let sink = 2.0 * traj.kappa * traj.grad_sq[i];
        let r = if sink == 0.0 {
            if dvar == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (dvar + sink).abs() / sink
        };
        out.push((traj.times[i], r));
    }
    Ok(out)
}

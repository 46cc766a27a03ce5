use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::spectral::{derivative, random_spectrum, Budget, FourierGrid, ScalarField, SpectralField, VelocityField};

/// Stirring-flow families. Wave numbers are given in lattice units
/// (multiples of `2π/L`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FlowKind {
    Zero,
    /// `u = A sin(k x₂) e₁` with `k = mode·2π/L`.
    SteadyShear { mode: u32 },
    /// Sinusoidal shears that change direction every `half_period`. Piece `q`
    /// is `u_a = A sin(k x_b + p_q)` with `a = q mod d`, `b = (q+1) mod d`,
    /// and `p_q` drawn per piece when `random_phase` is set.
    AlternatingSine { mode: u32, half_period: f64, random_phase: bool },
    /// Steady random field from a stream function (d = 2) or vector
    /// potential (d = 3) with amplitude `|m|^slope` on `k_min <= |m| <= k_max`.
    RandomStream { slope: f64, k_min: f64, k_max: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    #[serde(flatten)]
    pub kind: FlowKind,
    pub budget: Budget,
    #[serde(default)]
    pub seed: u64,
}

impl FlowSpec {
    pub fn new(kind: FlowKind, s: f64, g: f64, seed: u64) -> Result<Self> {
        Ok(Self { kind, budget: Budget::new(s, g)?, seed })
    }

    pub fn zero() -> Self {
        Self { kind: FlowKind::Zero, budget: Budget { s: 0.0, g: 0.0 }, seed: 0 }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FlowKind::Zero => "zero",
            FlowKind::SteadyShear { .. } => "steady_shear",
            FlowKind::AlternatingSine { .. } => "alternating_sine",
            FlowKind::RandomStream { .. } => "random_stream",
        }
    }
}

/// Time-indexed divergence-free velocity field with a fixed budget.
#[derive(Clone, Debug)]
pub struct Flow {
    grid: FourierGrid,
    spec: FlowSpec,
    /// Shear amplitude for the sinusoidal kinds.
    amplitude: f64,
    steady: Option<VelocityField>,
}

fn shear(grid: &FourierGrid, along: usize, across: usize, k: f64, amp: f64, phase: f64) -> Result<VelocityField> {
    let mut comps = Vec::with_capacity(grid.dim());
    for a in 0..grid.dim() {
        let f = if a == along {
            ScalarField::from_fn(grid, |x| amp * (k * x[across] + phase).sin())
        } else {
            ScalarField::zeros(grid)
        };
        comps.push(f.forward());
    }
    VelocityField::new(comps)
}

fn random_stream(grid: &FourierGrid, seed: u64, slope: f64, k_min: f64, k_max: f64) -> Result<VelocityField> {
    let k0 = grid.fundamental();
    let band = Some((k_min * k0, k_max * k0));
    if !(k_min > 0.0 && k_max >= k_min) {
        return Err(param("k_min", format!("invalid mode range [{k_min}, {k_max}]")));
    }
    let inside = grid.mag2().iter().skip(1).any(|&m2| {
        let k = m2.sqrt();
        k >= k_min * k0 && k <= k_max * k0
    });
    if !inside {
        return Err(param("k_max", format!("empty mode range [{k_min}, {k_max}]")));
    }
    // |u| ~ |m||ψ|, so the potential carries one extra inverse power
    let comps = if grid.dim() == 2 {
        let psi = random_spectrum(grid, seed, band, slope - 1.0);
        vec![derivative(&psi, 1), derivative(&psi, 0).scaled(-1.0)]
    } else {
        let a: Vec<SpectralField> =
            (0..3).map(|c| random_spectrum(grid, seed.wrapping_add(c as u64), band, slope - 1.0)).collect();
        vec![
            derivative(&a[2], 1).add(&derivative(&a[1], 2).scaled(-1.0))?,
            derivative(&a[0], 2).add(&derivative(&a[2], 0).scaled(-1.0))?,
            derivative(&a[1], 0).add(&derivative(&a[0], 1).scaled(-1.0))?,
        ]
    };
    VelocityField::new(comps)
}

pub fn make_flow(spec: &FlowSpec, grid: &FourierGrid) -> Result<Flow> {
    let Budget { s, g } = Budget::new(spec.budget.s, spec.budget.g)?;
    let k0 = grid.fundamental();
    let (amplitude, steady) = match &spec.kind {
        FlowKind::Zero => {
            if g != 0.0 {
                return Err(param("g_s", "zero flow requires a zero budget"));
            }
            (0.0, Some(VelocityField::zero(grid)))
        }
        FlowKind::SteadyShear { mode } | FlowKind::AlternatingSine { mode, .. } => {
            if *mode == 0 || *mode as usize >= grid.n() / 2 {
                return Err(param("mode", format!("shear mode {mode} not resolvable")));
            }
            if let FlowKind::AlternatingSine { half_period, .. } = spec.kind {
                if !(half_period.is_finite() && half_period > 0.0) {
                    return Err(param("half_period", format!("{half_period} must be positive")));
                }
            }
            let k = *mode as f64 * k0;
            // ⟨|∇^s u|²⟩^{1/2} = A k^s / √2 for a single sinusoidal shear
            let amp = if s == 0.0 { g * 2f64.sqrt() } else { g * 2f64.sqrt() / k.powf(s) };
            let steady = match spec.kind {
                FlowKind::SteadyShear { .. } => Some(shear(grid, 0, 1, k, amp, 0.0)?.normalized(s, g)?),
                _ => None,
            };
            (amp, steady)
        }
        FlowKind::RandomStream { slope, k_min, k_max } => {
            let u = random_stream(grid, spec.seed, *slope, *k_min, *k_max)?;
            (0.0, Some(u.normalized(s, g)?))
        }
    };
    Ok(Flow { grid: grid.clone(), spec: spec.clone(), amplitude, steady })
}

impl Flow {
    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn spec(&self) -> &FlowSpec {
        &self.spec
    }

    pub fn is_steady(&self) -> bool {
        self.steady.is_some()
    }

    /// Index of the constant-in-time piece containing `t`; 0 for steady flows.
    pub fn piece_index(&self, t: f64) -> u64 {
        match self.spec.kind {
            FlowKind::AlternatingSine { half_period, .. } => (t / half_period).floor().max(0.0) as u64,
            _ => 0,
        }
    }

    fn piece_phase(&self, piece: u64) -> f64 {
        match self.spec.kind {
            FlowKind::AlternatingSine { random_phase: true, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
                rng.set_stream(piece);
                rng.random_range(0.0..2.0 * PI)
            }
            _ => 0.0,
        }
    }

    /// Velocity on the piece with the given index.
    pub fn piece(&self, piece: u64) -> Result<VelocityField> {
        if let Some(u) = &self.steady {
            return Ok(u.clone());
        }
        let FlowKind::AlternatingSine { mode, .. } = self.spec.kind else {
            return Err(Error::Degenerate("unsteady flow without pieces".into()));
        };
        let d = self.grid.dim() as u64;
        let along = (piece % d) as usize;
        let across = ((piece + 1) % d) as usize;
        let k = mode as f64 * self.grid.fundamental();
        let mut u = shear(&self.grid, along, across, k, self.amplitude, self.piece_phase(piece))?;
        u = u.normalized(self.spec.budget.s, self.spec.budget.g)?;
        Ok(u)
    }

    pub fn at(&self, t: f64) -> Result<VelocityField> {
        self.piece(self.piece_index(t))
    }

    /// `sup_t max_x |u|`; exact for the sinusoidal kinds.
    pub fn max_speed(&self) -> f64 {
        match &self.steady {
            Some(u) => u.max_speed(),
            None => self.amplitude,
        }
    }
}

/// Lattice check `max_m |m·û(m)|` without relative scaling.
pub fn max_divergence(u: &VelocityField) -> f64 {
    let g = u.grid();
    (0..g.len())
        .map(|idx| {
            let m = g.wavevector(idx);
            u.components()
                .iter()
                .enumerate()
                .map(|(k, c)| c.coeffs()[idx] * m[k])
                .sum::<Complex64>()
                .norm()
        })
        .fold(0.0, f64::max)
}

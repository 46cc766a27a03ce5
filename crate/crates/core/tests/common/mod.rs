//! Independent reference computations for integration tests. Nothing here
//! calls the library's transforms or multiplier machinery.

#![allow(dead_code)]

use std::f64::consts::PI;

use lpmix::spectral::FourierGrid;
use num_complex::Complex64;

/// Lattice coordinates and positions of every grid point, in flat order.
pub struct Lattice {
    pub dim: usize,
    pub n: usize,
    pub k0: f64,
    pub modes: Vec<[i64; 3]>,
    pub points: Vec<[f64; 3]>,
}

impl Lattice {
    pub fn of(grid: &FourierGrid) -> Self {
        let modes = (0..grid.len()).map(|i| grid.lattice_index(i)).collect();
        let points = (0..grid.len()).map(|i| grid.position(i)).collect();
        Self { dim: grid.dim(), n: grid.n(), k0: 2.0 * PI / grid.length(), modes, points }
    }

    fn phase(&self, m: &[i64; 3], x: &[f64; 3]) -> f64 {
        (0..self.dim).map(|a| m[a] as f64 * self.k0 * x[a]).sum()
    }

    /// Spatial-average Fourier coefficients by direct summation.
    pub fn dft(&self, values: &[f64]) -> Vec<Complex64> {
        let n = values.len() as f64;
        self.modes
            .iter()
            .map(|m| {
                self.points
                    .iter()
                    .zip(values)
                    .map(|(x, &v)| Complex64::from_polar(v, -self.phase(m, x)))
                    .sum::<Complex64>()
                    / n
            })
            .collect()
    }

    /// `Σ_m c(m) e^{i m·x}` at every grid point, over the listed modes.
    pub fn synthesize(&self, terms: &[([i64; 3], Complex64)]) -> Vec<Complex64> {
        self.points
            .iter()
            .map(|x| terms.iter().map(|(m, c)| c * Complex64::from_polar(1.0, self.phase(m, x))).sum())
            .collect()
    }

    pub fn index_of(&self, m: &[i64; 3]) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if (0..self.dim).any(|a| m[a] < -half || m[a] >= half) {
            return None;
        }
        let mut idx = 0usize;
        for a in 0..self.dim {
            idx = idx * self.n + m[a].rem_euclid(self.n as i64) as usize;
        }
        Some(idx)
    }

    /// Radial 2/3 truncation `|m| <= N/3` in lattice units.
    pub fn truncated(&self, m: &[i64; 3]) -> bool {
        let s: i64 = (0..self.dim).map(|a| m[a] * m[a]).sum();
        (s as f64) <= (self.n as f64 / 3.0).powi(2)
    }
}

/// Brute-force `[u·, w]∇θ = u·∇(wθ) - w(u·∇θ)` with every factor and the
/// result truncated to the 2/3 ball, by explicit lattice convolution.
/// Returns grid values.
pub fn brute_commutator(lat: &Lattice, u: &[Vec<f64>], theta: &[f64], w: impl Fn(&[i64; 3]) -> f64) -> Vec<Complex64> {
    let uh: Vec<Vec<Complex64>> = u.iter().map(|c| lat.dft(c)).collect();
    let th = lat.dft(theta);
    let kept: Vec<usize> = (0..lat.modes.len()).filter(|&i| lat.truncated(&lat.modes[i])).collect();
    let mut terms = Vec::new();
    for &mi in &kept {
        let m = lat.modes[mi];
        let mut filtered = Complex64::new(0.0, 0.0);
        let mut plain = Complex64::new(0.0, 0.0);
        for &qi in &kept {
            let q = lat.modes[qi];
            let p = [m[0] - q[0], m[1] - q[1], m[2] - q[2]];
            if !lat.truncated(&p) {
                continue;
            }
            let Some(pi) = lat.index_of(&p) else { continue };
            let mut s = Complex64::new(0.0, 0.0);
            for a in 0..lat.dim {
                s += uh[a][pi] * Complex64::new(0.0, q[a] as f64 * lat.k0) * th[qi];
            }
            filtered += s * w(&q);
            plain += s;
        }
        terms.push((m, filtered - plain * w(&m)));
    }
    lat.synthesize(&terms)
}

/// Grid mean of `|sin(m·x)|`.
pub fn mean_abs_sin(lat: &Lattice, m: [i64; 3]) -> f64 {
    lat.points.iter().map(|x| lat.phase(&m, x).sin().abs()).sum::<f64>() / lat.points.len() as f64
}

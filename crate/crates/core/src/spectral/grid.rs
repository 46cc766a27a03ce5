use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Periodic box `[0, L]^d` sampled with `N` points per axis.
///
/// Samples are stored row-major with axis 0 slowest. Wave numbers live on the
/// lattice `(2π/L) Z^d`; index `i` on an axis maps to the signed integer
/// `i` for `i < N/2` and `i - N` otherwise (so the Nyquist index is `-N/2`).
#[derive(Clone)]
pub struct FourierGrid {
    inner: Arc<GridData>,
}

struct GridData {
    length: f64,
    n: usize,
    dim: usize,
    len: usize,
    signed: Vec<i64>,
    mag2: Vec<f64>,
    dealiased: Vec<bool>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for FourierGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierGrid")
            .field("length", &self.length())
            .field("n", &self.n())
            .field("dim", &self.dim())
            .finish()
    }
}

impl PartialEq for FourierGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.length() == other.length() && self.n() == other.n() && self.dim() == other.dim())
    }
}

impl FourierGrid {
    pub fn new(length: f64, n: usize, dim: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidLength(length));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGridSize(n));
        }
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidDimension(dim));
        }
        let len = n.pow(dim as u32);
        let signed: Vec<i64> = (0..n)
            .map(|i| if i < n / 2 { i as i64 } else { i as i64 - n as i64 })
            .collect();
        let k0 = 2.0 * PI / length;
        // |n| <= N/3 in index units is the radial 2/3 rule.
        let cut2 = (n as f64 / 3.0).powi(2);
        let mut mag2 = vec![0.0; len];
        let mut dealiased = vec![false; len];
        for idx in 0..len {
            let mut s = 0i64;
            let mut rem = idx;
            for _ in 0..dim {
                let c = signed[rem % n];
                rem /= n;
                s += c * c;
            }
            mag2[idx] = k0 * k0 * s as f64;
            dealiased[idx] = (s as f64) <= cut2;
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridData {
                length,
                n,
                dim,
                len,
                signed,
                mag2,
                dealiased,
                forward,
                inverse,
            }),
        })
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Number of lattice points, `N^d`.
    pub fn len(&self) -> usize {
        self.inner.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.length() / self.n() as f64
    }

    /// Smallest nonzero wave-number magnitude, `2π/L`.
    pub fn fundamental(&self) -> f64 {
        2.0 * PI / self.length()
    }

    /// Largest resolvable magnitude per axis, `πN/L`.
    pub fn axis_max(&self) -> f64 {
        PI * self.n() as f64 / self.length()
    }

    /// Radius of the dealiased ball, `(2/3)·πN/L`.
    pub fn dealias_cutoff(&self) -> f64 {
        2.0 / 3.0 * self.axis_max()
    }

    /// Signed integer lattice coordinates of a flat index.
    pub fn lattice_index(&self, idx: usize) -> [i64; 3] {
        let n = self.n();
        let mut out = [0i64; 3];
        let mut rem = idx;
        for axis in (0..self.dim()).rev() {
            out[axis] = self.inner.signed[rem % n];
            rem /= n;
        }
        out
    }

    /// Flat index of a signed lattice coordinate (wrapped modulo `N`).
    pub fn flat_index(&self, lattice: &[i64]) -> usize {
        let n = self.n() as i64;
        lattice[..self.dim()]
            .iter()
            .fold(0usize, |acc, &c| acc * n as usize + c.rem_euclid(n) as usize)
    }

    /// Whether a signed coordinate is representable without wrapping.
    pub fn contains_lattice(&self, lattice: &[i64]) -> bool {
        let half = (self.n() / 2) as i64;
        lattice[..self.dim()].iter().all(|&c| c >= -half && c < half)
    }

    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let k0 = self.fundamental();
        let l = self.lattice_index(idx);
        [k0 * l[0] as f64, k0 * l[1] as f64, k0 * l[2] as f64]
    }

    /// `|m|²` for every lattice point.
    pub fn mag2(&self) -> &[f64] {
        &self.inner.mag2
    }

    pub fn magnitude(&self, idx: usize) -> f64 {
        self.inner.mag2[idx].sqrt()
    }

    /// Mask of lattice points inside the dealiased ball.
    pub fn dealias_mask(&self) -> &[bool] {
        &self.inner.dealiased
    }

    /// True when the lattice coordinate on `axis` sits at the Nyquist index.
    pub fn is_nyquist(&self, idx: usize, axis: usize) -> bool {
        self.lattice_index(idx)[axis] == -((self.n() / 2) as i64)
    }

    /// Physical position of a sample.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let n = self.n();
        let h = self.spacing();
        let mut out = [0.0; 3];
        let mut rem = idx;
        for axis in (0..self.dim()).rev() {
            out[axis] = (rem % n) as f64 * h;
            rem /= n;
        }
        out
    }

    /// Minimal-image displacement of a sample from the origin.
    pub fn minimal_image(&self, idx: usize) -> [f64; 3] {
        let h = self.spacing();
        let l = self.lattice_index(idx);
        [l[0] as f64 * h, l[1] as f64 * h, l[2] as f64 * h]
    }

    /// Normalized forward transform: `c(m) = mean_x f(x) e^{-i m·x}`.
    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len());
        self.transform(data, &self.inner.forward);
        let scale = 1.0 / self.len() as f64;
        data.par_iter_mut().for_each(|c| *c *= scale);
    }

    /// Synthesis: `f(x) = Σ_m c(m) e^{i m·x}`.
    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len());
        self.transform(data, &self.inner.inverse);
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n();
        let dim = self.dim();
        // Last axis is contiguous.
        data.par_chunks_mut(n).for_each(|line| fft.process(line));
        let mut buf = vec![Complex64::new(0.0, 0.0); data.len()];
        for axis in 0..dim - 1 {
            let stride = n.pow((dim - 1 - axis) as u32);
            let block = n * stride;
            // gather: buf[(outer*stride + inner)*n + i] = data[outer*block + i*stride + inner]
            buf.par_chunks_mut(n).enumerate().for_each(|(line, dst)| {
                let outer = line / stride;
                let inner = line % stride;
                let base = outer * block + inner;
                for (i, d) in dst.iter_mut().enumerate() {
                    *d = data[base + i * stride];
                }
            });
            buf.par_chunks_mut(n).for_each(|line| fft.process(line));
            let src = &buf;
            data.par_chunks_mut(block).enumerate().for_each(|(outer, chunk)| {
                for i in 0..n {
                    for inner in 0..stride {
                        chunk[i * stride + inner] = src[(outer * stride + inner) * n + i];
                    }
                }
            });
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Affine weight `φ(t) = λt + φ₀` with `‖dφ/dt‖_∞ = λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeWeight {
    pub rate: f64,
    pub offset: f64,
}

impl TimeWeight {
    pub fn new(rate: f64, offset: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(param("lambda", format!("weight rate {rate} must be finite and nonnegative")));
        }
        if !offset.is_finite() {
            return Err(param("phi0", "weight offset must be finite"));
        }
        Ok(Self { rate, offset })
    }

    pub fn constant() -> Self {
        Self { rate: 0.0, offset: 0.0 }
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.rate * t + self.offset
    }
}

/// Streaming trapezoidal accumulator for `(1/T)∫₀ᵀ f(t) e^{φ(t)} dt`.
///
/// Internally `S(t) = ∫₀ᵗ f e^{φ(τ)-φ(t)} dτ` is carried, so nothing overflows
/// for long horizons; the raw value is `S(T) e^{φ(T)} / T`.
#[derive(Clone, Debug)]
pub struct WeightedAverager {
    weight: TimeWeight,
    last: Option<(f64, f64)>,
    start: f64,
    acc: f64,
    times: Vec<f64>,
    /// Running stabilized average `S(t)/(t - t₀)` at each sample.
    running: Vec<f64>,
}

/// Result of a weighted long-time average.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightedAverage {
    /// `(1/T)∫₀ᵀ f e^{φ(t)-φ(T)} dt`
    pub stabilized: f64,
    /// `(1/T)∫₀ᵀ f e^{φ(t)} dt`, when representable.
    pub raw: Option<f64>,
    /// Largest running average over the final quarter of the horizon, in
    /// the stabilized units of the horizon.
    pub limsup: f64,
    /// Relative change of the raw running average between `T/2` and `T`.
    pub drift: f64,
    pub horizon: f64,
    /// `φ(T)`
    pub phi_end: f64,
}

impl WeightedAverager {
    pub fn new(weight: TimeWeight) -> Self {
        Self { weight, last: None, start: 0.0, acc: 0.0, times: Vec::new(), running: Vec::new() }
    }

    pub fn push(&mut self, t: f64, f: f64) -> Result<()> {
        if !(t.is_finite() && f.is_finite()) {
            return Err(Error::Series(format!("non-finite sample ({t}, {f})")));
        }
        match self.last {
            None => {
                self.start = t;
                self.running.push(f);
            }
            Some((t0, f0)) => {
                if t <= t0 {
                    return Err(Error::Series(format!("times not increasing: {t} after {t0}")));
                }
                let decay = (-(self.weight.phi(t) - self.weight.phi(t0))).exp();
                self.acc = self.acc * decay + 0.5 * (t - t0) * (f0 * decay + f);
                self.running.push(self.acc / (t - self.start));
            }
        }
        self.times.push(t);
        self.last = Some((t, f));
        Ok(())
    }

    pub fn finish(&self) -> Result<WeightedAverage> {
        let Some((t_end, f_end)) = self.last else {
            return Err(Error::Series("empty series".into()));
        };
        let horizon = t_end - self.start;
        let phi_end = self.weight.phi(t_end);
        let stabilized = if horizon > 0.0 { self.acc / horizon } else { f_end };
        let raw = {
            let r = stabilized * phi_end.exp();
            (phi_end < 700.0 && r.is_finite()).then_some(r)
        };
        // running averages rescaled to the horizon: I(t) e^{φ(t)-φ(T)}
        let rescale = |i: usize| self.running[i] * (self.weight.phi(self.times[i]) - phi_end).exp();
        let quarter = self.start + 0.75 * horizon;
        let limsup = (0..self.times.len()).filter(|&i| self.times[i] >= quarter).map(rescale).fold(f64::MIN, f64::max);
        let half = self.start + 0.5 * horizon;
        let mid = (0..self.times.len()).find(|&i| self.times[i] >= half).unwrap_or(0);
        let first = rescale(mid);
        let drift = if stabilized == 0.0 {
            if first == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (stabilized - first).abs() / stabilized.abs()
        };
        Ok(WeightedAverage { stabilized, raw, limsup, drift, horizon, phi_end })
    }
}

/// Weighted long-time average of a sampled series.
pub fn weighted_average(times: &[f64], values: &[f64], weight: TimeWeight) -> Result<WeightedAverage> {
    if times.len() != values.len() {
        return Err(Error::Series(format!("{} times for {} values", times.len(), values.len())));
    }
    let mut acc = WeightedAverager::new(weight);
    for (&t, &f) in times.iter().zip(values) {
        acc.push(t, f)?;
    }
    acc.finish()
}

//! Run configuration: TOML grammar, validation and canonical hashing.

use std::fmt;
use std::path::Path;

use lpmix::flow::FlowKind;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};

/// Rejected configuration; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(field: &str, reason: impl fmt::Display) -> ConfigError {
    ConfigError(format!("`{field}`: {reason}"))
}

/// A number, or `"auto"` for a value derived at startup.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Param {
    #[default]
    Auto,
    Value(f64),
}

impl Serialize for Param {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Param::Auto => s.serialize_str("auto"),
            Param::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Param {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct ParamVisitor;

        impl Visitor<'_> for ParamVisitor {
            type Value = Param;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or \"auto\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Param, E> {
                Ok(Param::Value(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Param, E> {
                Ok(Param::Value(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Param, E> {
                Ok(Param::Value(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Param, E> {
                if v == "auto" {
                    Ok(Param::Auto)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }

        d.deserialize_any(ParamVisitor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Conservation,
    Moments,
    Bernstein,
    DissipationLb,
    Lemma1,
    Prop1,
    Lemma2,
    Theorem,
    Plateau,
}

impl Check {
    pub const ALL: [Check; 9] = [
        Check::Conservation,
        Check::Moments,
        Check::Bernstein,
        Check::DissipationLb,
        Check::Lemma1,
        Check::Prop1,
        Check::Lemma2,
        Check::Theorem,
        Check::Plateau,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Conservation => "conservation",
            Check::Moments => "moments",
            Check::Bernstein => "bernstein",
            Check::DissipationLb => "dissipation_lb",
            Check::Lemma1 => "lemma1",
            Check::Prop1 => "prop1",
            Check::Lemma2 => "lemma2",
            Check::Theorem => "theorem",
            Check::Plateau => "plateau",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_length")]
    pub length: f64,
    pub n: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
}

fn default_length() -> f64 {
    2.0 * std::f64::consts::PI
}

fn default_dim() -> usize {
    2
}

/// Initial tracer. Wave numbers in lattice units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// Random phases, amplitude `|m|^slope` on `k_min <= |m| <= k_max`.
    Random { k_min: f64, k_max: f64, slope: f64 },
    /// `amplitude·cos(m·x)` for one lattice vector `m`.
    SingleMode { mode: Vec<i64>, amplitude: f64 },
    Zero,
}

/// Parameter lists for `sweep`; an omitted list keeps the base value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kappa: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub s: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flows: Vec<FlowKind>,
}

/// Scalar keys precede tables so the serialized form is valid TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kappa: f64,
    pub s: f64,
    pub g_s: f64,
    #[serde(default)]
    pub lambda: Param,
    pub horizon: f64,
    #[serde(default)]
    pub dt: Param,
    #[serde(default = "one")]
    pub checkpoint_every: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub dealias: bool,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_balls", skip_serializing_if = "Option::is_none")]
    pub balls_per_band: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_bands: Option<Vec<i32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(default = "all_checks")]
    pub checks: Vec<Check>,
    pub grid: GridConfig,
    pub flow: FlowKind,
    pub initial: InitialConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn default_sigma() -> f64 {
    lpmix::lp::DEFAULT_SIGMA
}

fn default_beta() -> f64 {
    0.5
}

fn default_cfl() -> f64 {
    0.5
}

fn default_balls() -> Option<usize> {
    Some(8)
}

fn all_checks() -> Vec<Check> {
    Check::ALL.to_vec()
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("{v} must be positive and finite")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Ok(Self::parse(&text)?)
    }

    /// Canonical text; equal configurations serialize identically.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// Hex SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("kappa", self.kappa)?;
        if !(0.0..=1.0).contains(&self.s) {
            return Err(invalid("s", format!("{} outside [0, 1]", self.s)));
        }
        if !(self.g_s.is_finite() && self.g_s >= 0.0) {
            return Err(invalid("g_s", format!("{} must be nonnegative", self.g_s)));
        }
        match (&self.flow, self.g_s > 0.0) {
            (FlowKind::Zero, true) => return Err(invalid("g_s", "must be 0 for a zero flow")),
            (FlowKind::Zero, false) => {}
            (_, false) => return Err(invalid("g_s", "must be positive for a stirring flow")),
            _ => {}
        }
        if let Param::Value(l) = self.lambda {
            if !(l.is_finite() && l >= 0.0) {
                return Err(invalid("lambda", format!("{l} must be nonnegative")));
            }
        }
        positive("horizon", self.horizon)?;
        if let Param::Value(dt) = self.dt {
            positive("dt", dt)?;
            let steps = (self.horizon / dt).round();
            if steps < 1.0 || (steps * dt - self.horizon).abs() > 1e-9 * self.horizon {
                return Err(invalid("dt", format!("horizon {} is not a whole number of steps {dt}", self.horizon)));
            }
        }
        if self.checkpoint_every == 0 {
            return Err(invalid("checkpoint_every", "must be at least 1"));
        }
        if !(self.sigma > 0.0 && self.sigma <= 0.5) {
            return Err(invalid("sigma", format!("{} outside (0, 1/2]", self.sigma)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(invalid("beta", format!("{} outside (0, 1)", self.beta)));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(invalid("cfl", format!("{} outside (0, 1)", self.cfl)));
        }
        if self.balls_per_band == Some(0) {
            return Err(invalid("balls_per_band", "must be at least 1"));
        }
        if self.probe_bands.as_ref().is_some_and(Vec::is_empty) {
            return Err(invalid("probe_bands", "must not be empty"));
        }
        positive("grid.length", self.grid.length)?;
        if self.grid.n < 8 || !self.grid.n.is_power_of_two() {
            return Err(invalid("grid.n", format!("{} must be a power of two and at least 8", self.grid.n)));
        }
        if !(2..=3).contains(&self.grid.dim) {
            return Err(invalid("grid.dim", format!("{} must be 2 or 3", self.grid.dim)));
        }
        match &self.initial {
            InitialConfig::Random { k_min, k_max, slope } => {
                if !(*k_min >= 0.0 && k_max >= k_min && k_max.is_finite()) {
                    return Err(invalid("initial.k_max", format!("empty range [{k_min}, {k_max}]")));
                }
                if !slope.is_finite() {
                    return Err(invalid("initial.slope", "must be finite"));
                }
            }
            InitialConfig::SingleMode { mode, amplitude } => {
                if mode.len() != self.grid.dim {
                    return Err(invalid("initial.mode", format!("needs {} components", self.grid.dim)));
                }
                let half = (self.grid.n / 2) as i64;
                if mode.iter().all(|&c| c == 0) || mode.iter().any(|&c| c.abs() >= half) {
                    return Err(invalid("initial.mode", format!("{mode:?} not a resolvable nonzero mode")));
                }
                if !amplitude.is_finite() {
                    return Err(invalid("initial.amplitude", "must be finite"));
                }
            }
            InitialConfig::Zero => {}
        }
        if let Some(sweep) = &self.sweep {
            for (i, &k) in sweep.kappa.iter().enumerate() {
                positive(&format!("sweep.kappa[{i}]"), k)?;
            }
            for (i, &s) in sweep.s.iter().enumerate() {
                if !(0.0..=1.0).contains(&s) {
                    return Err(invalid(&format!("sweep.s[{i}]"), format!("{s} outside [0, 1]")));
                }
            }
            for (i, &n) in sweep.n.iter().enumerate() {
                if n < 8 || !n.is_power_of_two() {
                    return Err(invalid(&format!("sweep.n[{i}]"), format!("{n} must be a power of two and at least 8")));
                }
            }
            for (i, flow) in sweep.flows.iter().enumerate() {
                if matches!(flow, FlowKind::Zero) != (self.g_s == 0.0) {
                    return Err(invalid(&format!("sweep.flows[{i}]"), "zero flow and g_s = 0 must go together"));
                }
            }
        }
        Ok(())
    }

    /// The single runs of a sweep, in the order flows × κ × s × N × seed.
    pub fn expand(&self) -> Vec<RunConfig> {
        let sweep = self.sweep.clone().unwrap_or_default();
        let or = |v: &Vec<f64>, base: f64| if v.is_empty() { vec![base] } else { v.clone() };
        let flows = if sweep.flows.is_empty() { vec![self.flow.clone()] } else { sweep.flows.clone() };
        let ns = if sweep.n.is_empty() { vec![self.grid.n] } else { sweep.n.clone() };
        let seeds = if sweep.seeds.is_empty() { vec![self.seed] } else { sweep.seeds.clone() };
        let mut out = Vec::new();
        for flow in &flows {
            for &kappa in &or(&sweep.kappa, self.kappa) {
                for &s in &or(&sweep.s, self.s) {
                    for &n in &ns {
                        for &seed in &seeds {
                            let mut run = self.clone();
                            run.sweep = None;
                            run.flow = flow.clone();
                            run.kappa = kappa;
                            run.s = s;
                            run.grid.n = n;
                            run.seed = seed;
                            out.push(run);
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
kappa = 0.01
s = 1.0
g_s = 1.0
horizon = 1.0

[grid]
n = 32

[flow]
kind = "steady_shear"
mode = 1

[initial]
kind = "random"
k_min = 1.0
k_max = 6.0
slope = -1.0
"#;

    #[test]
    fn defaults_and_roundtrip() {
        let cfg = RunConfig::parse(BASE).unwrap();
        assert_eq!(cfg.lambda, Param::Auto);
        assert_eq!(cfg.checks.len(), Check::ALL.len());
        assert_eq!(cfg.grid.dim, 2);
        let back = RunConfig::parse(&cfg.canonical()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn param_forms() {
        let text = BASE.replace("horizon = 1.0", "horizon = 1.0\nlambda = 2\ndt = \"auto\"");
        let cfg = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg.lambda, Param::Value(2.0));
        assert_eq!(cfg.dt, Param::Auto);
        let bad = BASE.replace("horizon = 1.0", "horizon = 1.0\nlambda = \"fast\"");
        assert!(RunConfig::parse(&bad).is_err());
    }

    #[test]
    fn field_named_in_errors() {
        let missing = BASE.replace("kappa = 0.01\n", "");
        assert!(RunConfig::parse(&missing).unwrap_err().0.contains("kappa"));
        let typo = BASE.replace("kappa = 0.01", "kappa = 0.01\nkapa = 1.0");
        assert!(RunConfig::parse(&typo).unwrap_err().0.contains("kapa"));
        let bad_n = BASE.replace("n = 32", "n = 48");
        assert!(RunConfig::parse(&bad_n).unwrap_err().0.contains("grid.n"));
        let negative = BASE.replace("kappa = 0.01", "kappa = -1.0");
        assert!(RunConfig::parse(&negative).unwrap_err().0.contains("kappa"));
        let zero = BASE.replace("\"steady_shear\"\nmode = 1", "\"zero\"");
        assert!(RunConfig::parse(&zero).unwrap_err().0.contains("g_s"));
    }

    #[test]
    fn sweep_expansion_counts() {
        let text = format!("{BASE}\n[sweep]\nkappa = [0.01, 0.001]\nseeds = [0, 1]\n");
        let cfg = RunConfig::parse(&text).unwrap();
        let runs = cfg.expand();
        assert_eq!(runs.len(), 4);
        assert!(runs.iter().all(|r| r.sweep.is_none()));
        assert_eq!(runs[1].seed, 1);
        assert_eq!(runs[2].kappa, 0.001);
        let back = RunConfig::parse(&cfg.canonical()).unwrap();
        assert_eq!(back, cfg);
    }
}

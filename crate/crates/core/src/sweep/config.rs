//! Sweep configuration: flat `key = value` text, presets and layering.
//!
//! Precedence, highest first: command-line overrides, config file, preset,
//! built-in defaults.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::channel::{BathSpec, ChannelOptions};
use crate::cycle::{CycleError, CycleSpec};
use crate::measurement::MeasurementBasis;
use crate::qubit::Hamiltonian;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {value:?} ({reason})")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("unknown preset `{0}` (expected fig2a or fig2b)")]
    UnknownPreset(String),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

/// Keys accepted in config files and `--set`.
pub const CONFIG_KEYS: &[&str] = &[
    "omega",
    "theta",
    "phi",
    "tau_c",
    "tau_h",
    "gamma_c",
    "gamma_h",
    "T_c",
    "T_h",
    "include_unitary",
    "axis",
    "start",
    "stop",
    "n_points",
    "spacing",
    "out",
    "oracle_checks",
    "seed",
    "mc_samples",
    "jobs",
    "preset",
];

/// Keys written into manifests for information only; ignored on read.
pub const INFORMATIONAL_KEYS: &[&str] = &["code_version", "wall_time_s", "rows"];

/// Ordered `key = value` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues(BTreeMap<String, String>);

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut out = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: raw.to_string(),
                });
            }
            out.insert(k, v);
        }
        Ok(out)
    }

    /// Parses a single `key=value` override.
    pub fn parse_assignment(s: &str) -> Result<(String, String), ConfigError> {
        let (k, v) = s.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            text: s.to_string(),
        })?;
        Ok((k.trim().to_string(), v.trim().to_string()))
    }

    pub fn insert(&mut self, key: &str, value: &str) {
        self.0.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Later layers win.
    pub fn merged(layers: &[&KeyValues]) -> Self {
        let mut out = Self::new();
        for layer in layers {
            for (k, v) in layer.iter() {
                out.insert(k, v);
            }
        }
        out
    }
}

/// Parses a real number, also accepting multiples of π such as `pi`,
/// `0.98*pi`, `pi/4` or `3*pi/2`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if let Ok(x) = t.parse::<f64>() {
        return Ok(x);
    }
    let lower = t.to_ascii_lowercase();
    if !lower.contains("pi") {
        return Err("not a number".into());
    }
    let (num, den) = match lower.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (lower.as_str(), None),
    };
    let coef = num
        .strip_suffix("pi")
        .ok_or("expected <c>*pi[/<d>]")?
        .trim()
        .trim_end_matches('*')
        .trim();
    let coef = if coef.is_empty() {
        1.0
    } else {
        coef.parse::<f64>().map_err(|_| "bad coefficient of pi")?
    };
    let den = match den {
        Some(d) => d.parse::<f64>().map_err(|_| "bad divisor of pi")?,
        None => 1.0,
    };
    Ok(coef * PI / den)
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}

/// Formats a float with 17 significant digits; round-trips exactly.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "undefined".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Theta,
    Phi,
    TauC,
    TauH,
    GammaC,
    GammaH,
    Omega,
    TC,
    TH,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 9] = [
        SweepAxis::Theta,
        SweepAxis::Phi,
        SweepAxis::TauC,
        SweepAxis::TauH,
        SweepAxis::GammaC,
        SweepAxis::GammaH,
        SweepAxis::Omega,
        SweepAxis::TC,
        SweepAxis::TH,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Theta => "theta",
            SweepAxis::Phi => "phi",
            SweepAxis::TauC => "tau_c",
            SweepAxis::TauH => "tau_h",
            SweepAxis::GammaC => "gamma_c",
            SweepAxis::GammaH => "gamma_h",
            SweepAxis::Omega => "omega",
            SweepAxis::TC => "T_c",
            SweepAxis::TH => "T_h",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| {
                format!(
                    "unknown axis (expected one of {})",
                    Self::ALL.map(|a| a.name()).join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

impl Spacing {
    pub fn name(&self) -> &'static str {
        match self {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        }
    }
}

impl FromStr for Spacing {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "linear" | "lin" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            _ => Err("expected linear or log".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub n_points: usize,
    pub spacing: Spacing,
}

impl Grid {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &str, reason: &str| {
            Err(ConfigError::Invalid {
                field: field.into(),
                reason: reason.into(),
            })
        };
        if self.n_points < 2 {
            return bad("n_points", "need at least 2 points");
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return bad("start", "grid bounds must be finite");
        }
        if !(self.start < self.stop) {
            return bad("stop", "stop must exceed start");
        }
        if self.spacing == Spacing::Log && !(self.start > 0.0) {
            return bad("start", "log spacing needs start > 0");
        }
        Ok(())
    }

    /// Grid values in ascending order; endpoints are exact.
    pub fn points(&self) -> Vec<f64> {
        let last = (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| {
                if i == 0 {
                    return self.start;
                }
                if i == self.n_points - 1 {
                    return self.stop;
                }
                let f = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start + (self.stop - self.start) * f,
                    Spacing::Log => {
                        (self.start.ln() + (self.stop.ln() - self.start.ln()) * f).exp()
                    }
                }
            })
            .collect()
    }
}

/// Raw physical parameters of the refrigerator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseParams {
    pub omega: f64,
    pub theta: f64,
    pub phi: f64,
    pub tau_c: f64,
    pub tau_h: f64,
    pub gamma_c: f64,
    pub gamma_h: f64,
    pub t_c: f64,
    pub t_h: f64,
    pub include_unitary: bool,
}

impl Default for BaseParams {
    /// Parameters of the reference figures: `ω = 0.5`, `T_h = 0.2`,
    /// `T_c = 0.1`, `γ_h = γ_c = 0.01`, `τ_h = 1`, `φ = π/4`.
    fn default() -> Self {
        Self {
            omega: 0.5,
            theta: 0.98 * PI,
            phi: PI / 4.0,
            tau_c: 0.5,
            tau_h: 1.0,
            gamma_c: 0.01,
            gamma_h: 0.01,
            t_c: 0.1,
            t_h: 0.2,
            include_unitary: true,
        }
    }
}

impl BaseParams {
    pub fn with_axis(mut self, axis: SweepAxis, value: f64) -> Self {
        match axis {
            SweepAxis::Theta => self.theta = value,
            SweepAxis::Phi => self.phi = value,
            SweepAxis::TauC => self.tau_c = value,
            SweepAxis::TauH => self.tau_h = value,
            SweepAxis::GammaC => self.gamma_c = value,
            SweepAxis::GammaH => self.gamma_h = value,
            SweepAxis::Omega => self.omega = value,
            SweepAxis::TC => self.t_c = value,
            SweepAxis::TH => self.t_h = value,
        }
        self
    }

    pub fn to_spec(&self) -> Result<CycleSpec, CycleError> {
        let h = Hamiltonian::new(self.omega)?;
        let basis = MeasurementBasis::new(self.theta, self.phi)?;
        let cold = BathSpec::new(self.t_c, self.gamma_c, self.tau_c)?;
        let hot = BathSpec::new(self.t_h, self.gamma_h, self.tau_h)?;
        CycleSpec::new(
            h,
            basis,
            cold,
            hot,
            ChannelOptions::with_unitary(self.include_unitary),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig2a,
    Fig2b,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
        }
    }

    /// Key-value layer of the preset.
    pub fn layer(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        match self {
            Preset::Fig2a => {
                kv.insert("axis", "theta");
                kv.insert("start", "0");
                kv.insert("stop", "pi");
                kv.insert("n_points", "400");
                kv.insert("spacing", "linear");
                kv.insert("tau_c", "0.5");
            }
            Preset::Fig2b => {
                kv.insert("axis", "tau_c");
                kv.insert("start", "0.01");
                kv.insert("stop", "20");
                kv.insert("n_points", "400");
                kv.insert("spacing", "log");
                kv.insert("theta", "0.98*pi");
            }
        }
        kv
    }
}

impl FromStr for Preset {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s.trim() {
            "fig2a" => Ok(Preset::Fig2a),
            "fig2b" => Ok(Preset::Fig2b),
            other => Err(ConfigError::UnknownPreset(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: BaseParams,
    pub axis: SweepAxis,
    pub grid: Grid,
    pub output_path: Option<PathBuf>,
    /// Cross-check every point against the ODE, Kraus and Monte-Carlo
    /// references; disagreements are flagged in the row status.
    pub oracle_checks: bool,
    pub seed: u64,
    pub mc_samples: usize,
    /// Worker threads; `None` uses the available parallelism.
    pub jobs: Option<usize>,
    pub preset: Option<Preset>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            base: BaseParams::default(),
            axis: SweepAxis::Theta,
            grid: Grid {
                start: 0.0,
                stop: PI,
                n_points: 400,
                spacing: Spacing::Linear,
            },
            output_path: None,
            oracle_checks: false,
            seed: 0,
            mc_samples: 200_000,
            jobs: None,
            preset: None,
        }
    }
}

impl SweepConfig {
    pub fn preset(preset: Preset) -> Self {
        Self::from_layers(Some(preset), &KeyValues::new(), &KeyValues::new())
            .expect("presets are valid")
    }

    /// Builds a config from its layers. `preset` given explicitly wins over a
    /// `preset` key in the file layer.
    pub fn from_layers(
        preset: Option<Preset>,
        file: &KeyValues,
        cli: &KeyValues,
    ) -> Result<Self, ConfigError> {
        let preset = match preset {
            Some(p) => Some(p),
            None => match cli.get("preset").or_else(|| file.get("preset")) {
                Some(name) => Some(name.parse()?),
                None => None,
            },
        };
        let preset_layer = preset.map(|p| p.layer()).unwrap_or_default();
        let merged = KeyValues::merged(&[&preset_layer, file, cli]);
        let mut cfg = Self {
            preset,
            ..Self::default()
        };
        for (k, v) in merged.iter() {
            cfg.apply(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |reason: String| ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            reason,
        };
        let real = || parse_real(value).map_err(bad);
        let b = &mut self.base;
        match key {
            "omega" => b.omega = real()?,
            "theta" => b.theta = real()?,
            "phi" => b.phi = real()?,
            "tau_c" => b.tau_c = real()?,
            "tau_h" => b.tau_h = real()?,
            "gamma_c" => b.gamma_c = real()?,
            "gamma_h" => b.gamma_h = real()?,
            "T_c" => b.t_c = real()?,
            "T_h" => b.t_h = real()?,
            "include_unitary" => b.include_unitary = parse_bool(value).map_err(bad)?,
            "axis" => self.axis = value.parse().map_err(bad)?,
            "start" => self.grid.start = real()?,
            "stop" => self.grid.stop = real()?,
            "n_points" => {
                self.grid.n_points = value.trim().parse().map_err(|e| bad(format!("{e}")))?
            }
            "spacing" => self.grid.spacing = value.parse().map_err(bad)?,
            "out" => self.output_path = Some(PathBuf::from(value)),
            "oracle_checks" => self.oracle_checks = parse_bool(value).map_err(bad)?,
            "seed" => self.seed = value.trim().parse().map_err(|e| bad(format!("{e}")))?,
            "mc_samples" => {
                self.mc_samples = value.trim().parse().map_err(|e| bad(format!("{e}")))?
            }
            "jobs" => {
                let n: usize = value.trim().parse().map_err(|e| bad(format!("{e}")))?;
                if n == 0 {
                    return Err(bad("need at least one worker".into()));
                }
                self.jobs = Some(n);
            }
            "preset" => {}
            k if INFORMATIONAL_KEYS.contains(&k) => {}
            k => return Err(ConfigError::UnknownKey(k.to_string())),
        }
        Ok(())
    }

    /// Checks the grid and that every grid point yields a well-formed spec
    /// at the endpoints.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.grid.validate()?;
        if self.mc_samples == 0 {
            return Err(ConfigError::Invalid {
                field: "mc_samples".into(),
                reason: "need at least one sample".into(),
            });
        }
        // The base point itself (with the axis at the grid start) must be a
        // valid spec; other points are checked per row.
        self.base
            .with_axis(self.axis, self.grid.start)
            .to_spec()
            .map_err(|e| ConfigError::Invalid {
                field: self.axis.name().into(),
                reason: e.to_string(),
            })?;
        Ok(())
    }

    /// Every effective setting as key-value text, in the config format.
    pub fn to_key_values(&self) -> KeyValues {
        let b = &self.base;
        let mut kv = KeyValues::new();
        for (k, v) in [
            ("omega", b.omega),
            ("theta", b.theta),
            ("phi", b.phi),
            ("tau_c", b.tau_c),
            ("tau_h", b.tau_h),
            ("gamma_c", b.gamma_c),
            ("gamma_h", b.gamma_h),
            ("T_c", b.t_c),
            ("T_h", b.t_h),
            ("start", self.grid.start),
            ("stop", self.grid.stop),
        ] {
            kv.insert(k, &format_real(v));
        }
        kv.insert("include_unitary", &b.include_unitary.to_string());
        kv.insert("axis", self.axis.name());
        kv.insert("n_points", &self.grid.n_points.to_string());
        kv.insert("spacing", self.grid.spacing.name());
        kv.insert("oracle_checks", &self.oracle_checks.to_string());
        kv.insert("seed", &self.seed.to_string());
        kv.insert("mc_samples", &self.mc_samples.to_string());
        if let Some(p) = self.preset {
            kv.insert("preset", p.name());
        }
        kv
    }
}

/// Renders key-value pairs one per line.
pub fn render_key_values(kv: &KeyValues) -> String {
    let mut s = String::new();
    for (k, v) in kv.iter() {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(v);
        s.push('\n');
    }
    s
}

//! Run configuration: flat `key = value` text or the equivalent JSON object.
//!
//! ```text
//! # l = 0.7 with 10 dB squeezing
//! n_photons = 1e16
//! squeeze_db = 10
//! loss_a = 0.7
//! ```
//!
//! JSON objects are flattened into the same keys, nested objects joining
//! with `.` and arrays with `,`, so `{"series": {"vbs": {"r1": "opt"}}}` is
//! `series.vbs.r1 = opt`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::interferometer::{db_to_xi, InterferometerConfig};
use crate::sweep::{Axis, Output, R1Choice, Reference, Series, SweepSpec};

const PRESETS: &[(&str, &str)] = &[
    ("r1_scan", include_str!("../presets/r1_scan.conf")),
    ("r1_signal_noise", include_str!("../presets/r1_signal_noise.conf")),
    ("optimal_r1_vs_loss", include_str!("../presets/optimal_r1_vs_loss.conf")),
    ("loss_signal_noise", include_str!("../presets/loss_signal_noise.conf")),
    ("loss_scan", include_str!("../presets/loss_scan.conf")),
    ("squeezing_scan", include_str!("../presets/squeezing_scan.conf")),
    ("gain_vs_loss", include_str!("../presets/gain_vs_loss.conf")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(name, _)| *name)
}

pub fn preset_text(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| Error::config(format!("unknown preset '{name}' (available: {})", preset_names().collect::<Vec<_>>().join(", "))))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub base: InterferometerConfig,
    /// Present when the configuration names a sweep axis.
    pub sweep: Option<SweepSpec>,
}

/// Flat key map; later sources override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    /// Parses key-value text, or JSON when the first non-blank character is `{`.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::parse_json(text)
        } else {
            Self::parse_key_value(text)
        }
    }

    pub fn parse_key_value(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected 'key = value', got '{line}'", number + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(Error::config(format!("line {}: empty key or value", number + 1)));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::config(format!("line {}: duplicate key '{key}'", number + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::config(format!("invalid JSON: {e}")))?;
        let serde_json::Value::Object(object) = value else {
            return Err(Error::config("JSON config must be an object"));
        };
        let mut entries = BTreeMap::new();
        for (key, value) in object {
            flatten(&key, &value, &mut entries)?;
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.entries.extend(other.entries);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn insert(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn build(&self) -> Result<RunConfig> {
        let series_names = match self.get("series") {
            Some(list) => split_list(list),
            None => Vec::new(),
        };
        for key in self.entries.keys() {
            if BASE_KEYS.contains(&key.as_str()) || SWEEP_KEYS.contains(&key.as_str()) {
                continue;
            }
            match key.strip_prefix("series.").and_then(|rest| rest.split_once('.')) {
                Some((name, field)) if SERIES_KEYS.contains(&field) => {
                    if !series_names.iter().any(|s| s == name) {
                        return Err(Error::config(format!("'{key}' refers to undeclared series '{name}'")));
                    }
                }
                _ => return Err(Error::config(format!("unknown key '{key}'"))),
            }
        }

        let base = self.base()?;
        let sweep = match self.get("axis") {
            Some(axis) => Some(self.sweep(base, axis, &series_names)?),
            None => {
                if let Some(key) = SWEEP_KEYS.iter().find(|k| self.get(k).is_some()) {
                    return Err(Error::config(format!("'{key}' needs an 'axis'")));
                }
                None
            }
        };
        Ok(RunConfig { base, sweep })
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(|v| parse_number(key, v)).transpose()
    }

    fn base(&self) -> Result<InterferometerConfig> {
        let mut cfg = InterferometerConfig::default();
        let set = |key: &str, target: &mut f64| -> Result<()> {
            if let Some(v) = self.number(key)? {
                *target = v;
            }
            Ok(())
        };
        set("n_photons", &mut cfg.n_photons)?;
        set("r1", &mut cfg.r1)?;
        set("r2", &mut cfg.r2)?;
        set("loss_a", &mut cfg.loss_a)?;
        set("loss_b", &mut cfg.loss_b)?;
        set("phi_a", &mut cfg.phi_a)?;
        set("phi_b", &mut cfg.phi_b)?;
        set("delta_phi", &mut cfg.delta_phi)?;
        cfg.theta = self.number("theta")?;
        cfg.squeeze_xi = match (self.number("squeeze_xi")?, self.number("squeeze_db")?) {
            (Some(_), Some(_)) => return Err(Error::config("give either squeeze_xi or squeeze_db, not both")),
            (Some(xi), None) => xi,
            (None, Some(db)) => db_to_xi(db),
            (None, None) => 0.0,
        };
        Ok(cfg)
    }

    fn sweep(&self, base: InterferometerConfig, axis: &str, series_names: &[String]) -> Result<SweepSpec> {
        let axis = Axis::parse(axis)?;
        let require = |key: &str| -> Result<f64> {
            self.number(key)?.ok_or_else(|| Error::config(format!("sweep needs '{key}'")))
        };
        let (start, stop) = (require("start")?, require("stop")?);
        let points = match self.get("points") {
            Some(v) => v.parse::<usize>().map_err(|_| Error::config(format!("points: expected an integer, got '{v}'")))?,
            None => return Err(Error::config("sweep needs 'points'")),
        };
        let outputs = match self.get("outputs") {
            Some(list) => split_list(list).iter().map(|s| Output::parse(s)).collect::<Result<Vec<_>>>()?,
            None => vec![Output::ClosedForm, Output::Sql],
        };
        let reference = match self.get("reference") {
            Some(r) => Reference::parse(r)?,
            None => Reference::Mzi5050,
        };
        let mut series = Vec::new();
        for name in series_names {
            if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(Error::config(format!("invalid series name '{name}'")));
            }
            if series.iter().any(|s: &Series| &s.name == name) {
                return Err(Error::config(format!("duplicate series '{name}'")));
            }
            let field = |f: &str| format!("series.{name}.{f}");
            let r1 = match self.get(&field("r1")) {
                None => None,
                Some("opt") => Some(R1Choice::Optimal),
                Some(v) => Some(R1Choice::Fixed(parse_number(&field("r1"), v)?)),
            };
            let squeeze_xi = match (self.number(&field("squeeze_xi"))?, self.number(&field("squeeze_db"))?) {
                (Some(_), Some(_)) => {
                    return Err(Error::config(format!("series '{name}': give either squeeze_xi or squeeze_db")))
                }
                (Some(xi), None) => Some(xi),
                (None, Some(db)) => Some(db_to_xi(db)),
                (None, None) => None,
            };
            series.push(Series {
                name: name.clone(),
                squeeze_xi,
                r1,
                loss_a: self.number(&field("loss_a"))?,
                loss_b: self.number(&field("loss_b"))?,
            });
        }
        if series.is_empty() {
            series.push(Series::named("base"));
        }
        let spec = SweepSpec { base, axis, start, stop, points, outputs, reference, series };
        spec.validate()?;
        Ok(spec)
    }
}

const BASE_KEYS: &[&str] =
    &["n_photons", "squeeze_xi", "squeeze_db", "theta", "r1", "r2", "loss_a", "loss_b", "phi_a", "phi_b", "delta_phi"];
const SWEEP_KEYS: &[&str] = &["axis", "start", "stop", "points", "outputs", "reference", "series"];
const SERIES_KEYS: &[&str] = &["squeeze_xi", "squeeze_db", "r1", "loss_a", "loss_b"];

/// Reads the preset (if any) and then the file (if any), the file's keys
/// taking precedence.
pub fn load(path: Option<&Path>, preset: Option<&str>) -> Result<RunConfig> {
    let mut map = ConfigMap::default();
    if let Some(name) = preset {
        map = map.merge(ConfigMap::parse(preset_text(name)?)?);
    }
    if let Some(path) = path {
        map = map.merge(ConfigMap::load(path)?);
    }
    map.build()
}

fn flatten(prefix: &str, value: &serde_json::Value, out: &mut BTreeMap<String, String>) -> Result<()> {
    use serde_json::Value;
    let scalar = |v: &Value| -> Result<String> {
        match v {
            Value::Number(n) => Ok(n.to_string()),
            Value::String(s) => Ok(s.clone()),
            Value::Bool(b) => Ok(b.to_string()),
            _ => Err(Error::config(format!("'{prefix}': unsupported value {v}"))),
        }
    };
    match value {
        Value::Object(object) => {
            for (key, inner) in object {
                flatten(&format!("{prefix}.{key}"), inner, out)?;
            }
        }
        Value::Array(items) => {
            let parts = items.iter().map(scalar).collect::<Result<Vec<_>>>()?;
            out.insert(prefix.to_string(), parts.join(","));
        }
        other => {
            out.insert(prefix.to_string(), scalar(other)?);
        }
    }
    Ok(())
}

fn split_list(list: &str) -> Vec<String> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn parse_number(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value.parse().map_err(|_| Error::config(format!("{key}: expected a number, got '{value}'")))?;
    if !v.is_finite() {
        return Err(Error::config(format!("{key}: value must be finite, got '{value}'")));
    }
    Ok(v)
}

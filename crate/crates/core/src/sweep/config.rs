//! Run configuration: `key = value` lines or one JSON document.
//!
//! Recognized keys: `theta`, `mu`, `b_field`, `omega` | `eta`, `steps`,
//! `n_periods`, `hbar`, `sweep.eta_min`, `sweep.eta_max`, `sweep.points`,
//! `sweep.log`, `output.path`, `output.format`, `tol.*` (including
//! `tol.verify`). Nested JSON objects are flattened with `.` separators.
//! Numbers may be written with `pi` (`pi/3`, `2pi/3`, `2*pi/3`).

use std::f64::consts::{FRAC_PI_3, PI};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin_model::ModelParams;
use crate::tolerances::Tolerances;

pub const MIN_STEPS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!(
                "output.format must be csv or json, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

/// Rotation rate, given directly or through `η = ω / (2 mu B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Drive {
    Omega(f64),
    Eta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub eta_min: f64,
    pub eta_max: f64,
    pub points: usize,
    pub log: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::Config(format!(
                "sweep.points must be at least 2, got {}",
                self.points
            )));
        }
        if !(self.eta_min.is_finite() && self.eta_max.is_finite()) || self.eta_min <= 0.0 {
            return Err(Error::Config(
                "sweep.eta_min and sweep.eta_max must be positive and finite".into(),
            ));
        }
        if self.eta_min >= self.eta_max {
            return Err(Error::Config(format!(
                "sweep.eta_min ({}) must be below sweep.eta_max ({})",
                self.eta_min, self.eta_max
            )));
        }
        Ok(())
    }

    /// Ascending η values with both endpoints hit exactly.
    pub fn etas(&self) -> Vec<f64> {
        let last = self.points - 1;
        (0..self.points)
            .map(|i| {
                if i == 0 {
                    self.eta_min
                } else if i == last {
                    self.eta_max
                } else {
                    let s = i as f64 / last as f64;
                    if self.log {
                        (self.eta_min.ln() + s * (self.eta_max.ln() - self.eta_min.ln())).exp()
                    } else {
                        self.eta_min + s * (self.eta_max - self.eta_min)
                    }
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub theta: f64,
    pub mu: f64,
    pub b_field: f64,
    pub drive: Option<Drive>,
    /// Grid steps per field period.
    pub steps: usize,
    pub n_periods: usize,
    pub hbar: f64,
    pub sweep: Option<SweepSpec>,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub tol: Tolerances,
    /// `tol.verify`: replaces every threshold of the verification suite.
    pub verify_threshold: Option<f64>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            theta: FRAC_PI_3,
            mu: 1.0,
            b_field: 1.0,
            drive: None,
            steps: 4096,
            n_periods: 1,
            hbar: 1.0,
            sweep: None,
            output_path: None,
            output_format: OutputFormat::Csv,
            tol: Tolerances::default(),
            verify_threshold: None,
            seed: 0,
        }
    }
}

#[derive(Default)]
struct PartialSweep {
    eta_min: Option<f64>,
    eta_max: Option<f64>,
    points: Option<usize>,
    log: Option<bool>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    fn from_pairs(pairs: Vec<(String, String)>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut omega = None;
        let mut eta = None;
        let mut sweep = PartialSweep::default();
        for (key, value) in pairs {
            let v = value.as_str();
            match key.as_str() {
                "theta" => cfg.theta = parse_number(&key, v)?,
                "mu" => cfg.mu = parse_number(&key, v)?,
                "b_field" => cfg.b_field = parse_number(&key, v)?,
                "hbar" => cfg.hbar = parse_number(&key, v)?,
                "omega" => omega = Some(parse_number(&key, v)?),
                "eta" => eta = Some(parse_number(&key, v)?),
                "steps" => cfg.steps = parse_count(&key, v)?,
                "n_periods" => cfg.n_periods = parse_count(&key, v)?,
                "sweep.eta_min" => sweep.eta_min = Some(parse_number(&key, v)?),
                "sweep.eta_max" => sweep.eta_max = Some(parse_number(&key, v)?),
                "sweep.points" => sweep.points = Some(parse_count(&key, v)?),
                "sweep.log" => sweep.log = Some(parse_bool(&key, v)?),
                "output.path" => cfg.output_path = Some(PathBuf::from(v)),
                "output.format" => cfg.output_format = v.parse()?,
                "tol.verify" => {
                    let x = parse_number(&key, v)?;
                    if x < 0.0 {
                        return Err(Error::Config("tol.verify must be non-negative".into()));
                    }
                    cfg.verify_threshold = Some(x);
                }
                k if k.starts_with("tol.") => cfg.tol.set(&k[4..], parse_number(k, v)?)?,
                other => return Err(Error::Config(format!("unknown key {other:?}"))),
            }
        }
        cfg.drive = match (omega, eta) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give exactly one of omega or eta".into()))
            }
            (Some(w), None) => Some(Drive::Omega(w)),
            (None, Some(e)) => Some(Drive::Eta(e)),
            (None, None) => None,
        };
        let any_sweep = sweep.eta_min.is_some()
            || sweep.eta_max.is_some()
            || sweep.points.is_some()
            || sweep.log.is_some();
        if any_sweep {
            let spec = SweepSpec {
                eta_min: sweep
                    .eta_min
                    .ok_or_else(|| Error::Config("sweep.eta_min is required".into()))?,
                eta_max: sweep
                    .eta_max
                    .ok_or_else(|| Error::Config("sweep.eta_max is required".into()))?,
                points: sweep
                    .points
                    .ok_or_else(|| Error::Config("sweep.points is required".into()))?,
                log: sweep.log.unwrap_or(true),
            };
            cfg.sweep = Some(spec);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < MIN_STEPS {
            return Err(Error::Config(format!(
                "steps must be at least {MIN_STEPS}, got {}",
                self.steps
            )));
        }
        if self.n_periods == 0 {
            return Err(Error::Config("n_periods must be at least 1".into()));
        }
        if let Some(spec) = &self.sweep {
            spec.validate()?;
        }
        if let Some(d) = self.drive {
            let x = match d {
                Drive::Omega(x) | Drive::Eta(x) => x,
            };
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::Config(
                    "omega/eta must be positive and finite".into(),
                ));
            }
        }
        // parameter ranges other than the drive
        ModelParams::new(self.mu, self.b_field, 1.0, self.theta, self.hbar)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Model parameters for a single run; requires `omega` or `eta`.
    pub fn model_params(&self) -> Result<ModelParams> {
        match self.drive {
            Some(Drive::Omega(w)) => {
                ModelParams::new(self.mu, self.b_field, w, self.theta, self.hbar)
            }
            Some(Drive::Eta(e)) => self.params_at_eta(e),
            None => Err(Error::Config("one of omega or eta is required".into())),
        }
    }

    pub fn params_at_eta(&self, eta: f64) -> Result<ModelParams> {
        ModelParams::from_eta(self.theta, eta, self.mu, self.b_field, self.hbar)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        self.sweep.ok_or_else(|| {
            Error::Config("sweep.eta_min, sweep.eta_max and sweep.points are required".into())
        })
    }
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let pairs = if text.trim_start().starts_with('{') {
            let doc: serde_json::Value = serde_json::from_str(text)
                .map_err(|e| Error::Config(format!("invalid JSON config: {e}")))?;
            let mut pairs = Vec::new();
            flatten_json("", &doc, &mut pairs)?;
            pairs
        } else {
            parse_key_values(text)?
        };
        Self::from_pairs(pairs)
    }
}

fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let v = v.trim().trim_matches('"');
        pairs.push((k.trim().to_string(), v.to_string()));
    }
    Ok(pairs)
}

fn flatten_json(
    prefix: &str,
    value: &serde_json::Value,
    out: &mut Vec<(String, String)>,
) -> Result<()> {
    use serde_json::Value;
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_json(&key, v, out)?;
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Number(n) => out.push((prefix.to_string(), n.to_string())),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
        Value::Null => {}
        Value::Array(_) => {
            return Err(Error::Config(format!(
                "arrays are not supported (key {prefix:?})"
            )))
        }
    }
    Ok(())
}

/// Parses a real number, allowing multiples and fractions of `pi`.
pub fn parse_number(key: &str, s: &str) -> Result<f64> {
    let bad = || Error::Config(format!("{key}: cannot parse {s:?} as a number"));
    let t = s.trim().to_ascii_lowercase().replace(' ', "");
    let value = if let Some(pos) = t.find("pi") {
        let coeff = t[..pos].trim_end_matches('*');
        let rest = &t[pos + 2..];
        let c = if coeff.is_empty() {
            1.0
        } else if coeff == "-" {
            -1.0
        } else {
            coeff.parse::<f64>().map_err(|_| bad())?
        };
        let d = if rest.is_empty() {
            1.0
        } else {
            rest.strip_prefix('/')
                .ok_or_else(bad)?
                .parse::<f64>()
                .map_err(|_| bad())?
        };
        c * PI / d
    } else {
        t.parse::<f64>().map_err(|_| bad())?
    };
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(value)
}

fn parse_count(key: &str, s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got {s:?}")))
}

fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected true or false, got {s:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_config() {
        let cfg: RunConfig = "
            # sweep across the crossover
            theta = pi/3
            eta = 0.5
            steps = 2048
            sweep.eta_min = 1e-3
            sweep.eta_max = 1e3
            sweep.points = 5
            sweep.log = true
            output.format = json
            tol.cyclic = 1e-7
            tol.verify = 1e-20
        "
        .parse()
        .unwrap();
        assert!((cfg.theta - FRAC_PI_3).abs() < 1e-15);
        assert_eq!(cfg.drive, Some(Drive::Eta(0.5)));
        assert_eq!(cfg.steps, 2048);
        assert_eq!(cfg.output_format, OutputFormat::Json);
        assert_eq!(cfg.tol.cyclic, 1e-7);
        assert_eq!(cfg.verify_threshold, Some(1e-20));
        let etas = cfg.sweep.unwrap().etas();
        assert_eq!(etas.len(), 5);
        assert_eq!(etas[0], 1e-3);
        assert_eq!(etas[4], 1e3);
        assert!((etas[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_config_flattens_nested_keys() {
        let cfg: RunConfig = r#"{"theta": "pi/2", "omega": 2.0, "sweep": {"eta_min": 0.1, "eta_max": 10, "points": 3, "log": false},
                                "output": {"path": "out.csv"}}"#
            .parse()
            .unwrap();
        assert!((cfg.theta - PI / 2.0).abs() < 1e-15);
        assert_eq!(cfg.drive, Some(Drive::Omega(2.0)));
        assert_eq!(cfg.sweep.unwrap().etas(), vec![0.1, 5.05, 10.0]);
        assert_eq!(cfg.output_path, Some(PathBuf::from("out.csv")));
    }

    #[test]
    fn both_omega_and_eta_rejected() {
        let err = "omega = 1\neta = 1".parse::<RunConfig>().unwrap_err();
        assert!(err.is_usage());
    }

    #[test]
    fn invariants_are_enforced() {
        assert!("steps = 8".parse::<RunConfig>().is_err());
        assert!("sweep.eta_min = 1\nsweep.eta_max = 1\nsweep.points = 4"
            .parse::<RunConfig>()
            .is_err());
        assert!("sweep.eta_min = 1\nsweep.eta_max = 2\nsweep.points = 1"
            .parse::<RunConfig>()
            .is_err());
        assert!("sweep.eta_min = 1\nsweep.points = 4"
            .parse::<RunConfig>()
            .is_err());
        assert!("theta = 4".parse::<RunConfig>().is_err());
        assert!("colour = blue".parse::<RunConfig>().is_err());
        assert!("tol.bogus = 1".parse::<RunConfig>().is_err());
        assert!("eta = -1".parse::<RunConfig>().is_err());
    }

    #[test]
    fn pi_expressions() {
        for (s, v) in [
            ("pi", PI),
            ("pi/3", PI / 3.0),
            ("2pi/3", 2.0 * PI / 3.0),
            ("2*pi/3", 2.0 * PI / 3.0),
            ("0.25", 0.25),
        ] {
            assert!((parse_number("x", s).unwrap() - v).abs() < 1e-15, "{s}");
        }
        assert!(parse_number("x", "pie").is_err());
        assert!(parse_number("x", "nan").is_err());
    }

    #[test]
    fn model_params_from_eta() {
        let cfg: RunConfig = "eta = 2\nmu = 0.5\nb_field = 3".parse().unwrap();
        let p = cfg.model_params().unwrap();
        assert!((p.omega - 6.0).abs() < 1e-15);
        assert!(RunConfig::default().model_params().is_err());
    }
}

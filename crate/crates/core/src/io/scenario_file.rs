//! TOML scenario files.
//!
//! ```toml
//! schema_version = 1
//! name = "fig2a"
//! method = "exact"
//!
//! [domains]
//! n1 = 10
//! n2 = 10
//! config = "antiparallel"   # parallel | antiparallel | custom (then m1, m2)
//!
//! [reservoir]
//! temperature_mk = 0.0
//! gamma_hz = 0.01
//! spin_frequency_hz = 1e10
//!
//! [sampling]
//! t_max_s = 3000.0
//! sample_count = 3001
//! ```
//!
//! `[tolerances]` (`rtol`, `atol`) and `[steady]` (`steady_eps`,
//! `steady_window`) are optional, as is each key in them. Unknown keys are
//! rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{Scenario, DEFAULT_GAMMA, DEFAULT_SPIN_FREQUENCY};
use crate::ode::Tolerances;
use crate::series::{Method, SteadyCriterion};
use crate::spin::{HalfInt, InitialConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfigKind {
    Parallel,
    Antiparallel,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainsSection {
    pub n1: u32,
    pub n2: u32,
    pub config: ConfigKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirSection {
    pub temperature_mk: f64,
    #[serde(default = "default_gamma")]
    pub gamma_hz: f64,
    #[serde(default = "default_spin_frequency")]
    pub spin_frequency_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub t_max_s: f64,
    pub sample_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TolerancesSection {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for TolerancesSection {
    fn default() -> Self {
        let t = Tolerances::default();
        TolerancesSection { rtol: t.rtol, atol: t.atol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteadySection {
    pub steady_eps: f64,
    pub steady_window: usize,
}

impl Default for SteadySection {
    fn default() -> Self {
        let s = SteadyCriterion::default();
        SteadySection { steady_eps: s.eps, steady_window: s.window }
    }
}

/// On-disk form of a [`Scenario`], one field per key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    pub method: Method,
    pub domains: DomainsSection,
    pub reservoir: ReservoirSection,
    pub sampling: SamplingSection,
    #[serde(default)]
    pub tolerances: TolerancesSection,
    #[serde(default)]
    pub steady: SteadySection,
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

fn default_spin_frequency() -> f64 {
    DEFAULT_SPIN_FREQUENCY
}

/// Section of every key an override may name without a section prefix.
const KEY_SECTIONS: &[(&str, Option<&str>)] = &[
    ("schema_version", None),
    ("name", None),
    ("method", None),
    ("n1", Some("domains")),
    ("n2", Some("domains")),
    ("config", Some("domains")),
    ("m1", Some("domains")),
    ("m2", Some("domains")),
    ("temperature_mk", Some("reservoir")),
    ("gamma_hz", Some("reservoir")),
    ("spin_frequency_hz", Some("reservoir")),
    ("t_max_s", Some("sampling")),
    ("sample_count", Some("sampling")),
    ("rtol", Some("tolerances")),
    ("atol", Some("tolerances")),
    ("steady_eps", Some("steady")),
    ("steady_window", Some("steady")),
];

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_overrides(text, &[])
    }

    /// Parses `text` after applying `key=value` overrides. Keys are either
    /// bare (`temperature_mk`) or section-qualified (`reservoir.temperature_mk`);
    /// values use TOML syntax, with bare words read as strings.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| Error::Parse(format!("scenario file: {e}")))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let version = doc.get("schema_version").and_then(|v| v.as_integer());
        if version != Some(SCHEMA_VERSION as i64) {
            return Err(Error::validation(
                "schema_version",
                format!(
                    "expected {SCHEMA_VERSION}, got {}",
                    doc.get("schema_version").map_or("nothing".into(), |v| v.to_string())
                ),
            ));
        }
        // re-parse as text so errors quote the offending line
        let text = toml::to_string(&doc).map_err(|e| Error::Parse(e.to_string()))?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("scenario file: {e}")))
    }

    pub fn read(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_with_overrides(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario files always serialize")
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        let d = &self.domains;
        let config = match d.config {
            ConfigKind::Parallel | ConfigKind::Antiparallel if d.m1.is_some() || d.m2.is_some() => {
                return Err(Error::validation("m1", "m1/m2 are only allowed with config = \"custom\""));
            }
            ConfigKind::Parallel => InitialConfig::Parallel,
            ConfigKind::Antiparallel => InitialConfig::Antiparallel,
            ConfigKind::Custom => {
                let m = |key: &str, v: Option<f64>| -> Result<HalfInt> {
                    let v = v.ok_or_else(|| Error::validation(key, "required with config = \"custom\""))?;
                    HalfInt::from_f64(v).map_err(|e| Error::validation(key, e.to_string()))
                };
                InitialConfig::Custom { m1: m("m1", d.m1)?, m2: m("m2", d.m2)? }
            }
        };
        let sc = Scenario {
            name: self.name.clone(),
            n1: d.n1,
            n2: d.n2,
            config,
            temperature_k: self.reservoir.temperature_mk / 1e3,
            gamma: self.reservoir.gamma_hz,
            spin_frequency: self.reservoir.spin_frequency_hz,
            method: self.method,
            t_max_s: self.sampling.t_max_s,
            sample_count: self.sampling.sample_count,
            tol: Tolerances { rtol: self.tolerances.rtol, atol: self.tolerances.atol },
            steady: SteadyCriterion { eps: self.steady.steady_eps, window: self.steady.steady_window },
        };
        Ok(sc)
    }

    pub fn from_scenario(sc: &Scenario) -> Self {
        let (config, m1, m2) = match sc.config {
            InitialConfig::Parallel => (ConfigKind::Parallel, None, None),
            InitialConfig::Antiparallel => (ConfigKind::Antiparallel, None, None),
            InitialConfig::Custom { m1, m2 } => (ConfigKind::Custom, Some(m1.value()), Some(m2.value())),
        };
        ScenarioFile {
            schema_version: SCHEMA_VERSION,
            name: sc.name.clone(),
            method: sc.method,
            domains: DomainsSection { n1: sc.n1, n2: sc.n2, config, m1, m2 },
            reservoir: ReservoirSection {
                temperature_mk: sc.temperature_k * 1e3,
                gamma_hz: sc.gamma,
                spin_frequency_hz: sc.spin_frequency,
            },
            sampling: SamplingSection { t_max_s: sc.t_max_s, sample_count: sc.sample_count },
            tolerances: TolerancesSection { rtol: sc.tol.rtol, atol: sc.tol.atol },
            steady: SteadySection { steady_eps: sc.steady.eps, steady_window: sc.steady.window },
        }
    }
}

/// Reads a scenario file, applies overrides and validates the result.
pub fn load_scenario(path: &Path, overrides: &[String]) -> Result<Scenario> {
    let sc = ScenarioFile::read(path, overrides)?.to_scenario()?;
    sc.validate()?;
    Ok(sc)
}

fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) =
        spec.split_once('=').ok_or_else(|| Error::validation(spec, "override must look like key=value"))?;
    let (key, raw) = (key.trim(), raw.trim());
    let (section, name) = match key.split_once('.') {
        Some((s, n)) => (Some(s), n),
        None => {
            let section = KEY_SECTIONS
                .iter()
                .find(|(k, _)| *k == key)
                .map(|&(_, s)| s)
                .ok_or_else(|| Error::validation(key, "unknown scenario key"))?;
            (section, key)
        }
    };
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let target = match section {
        None => doc,
        Some(s) => doc
            .entry(s)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::validation(s, "is not a section"))?,
    };
    target.insert(name.to_string(), value);
    Ok(())
}

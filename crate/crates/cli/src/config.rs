//! Instance configuration files.
//!
//! ```json
//! {
//!   "port": 9002,
//!   "protocol": "tdma",
//!   "topology": "star",
//!   "seed": 1,
//!   "pace": 1.0,
//!   "mean_interval": 0.5,
//!   "label": "DSME",
//!   "overrides": { "queue_capacity": 8, "range_m": 30.0, "airtime_ms": 4.0 }
//! }
//! ```
//!
//! Only `port` and `protocol` are required. `topology` is a builtin preset
//! name or a path to a preset file, relative to the config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use simlive_core::des::SimTime;
use simlive_core::netsim::{
    BuildError, MacVariant, PowerTable, PresetLibrary, SimParams, Simulation, Topology,
    TopologyError,
};

pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Syntax {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("topology {path}: {source}")]
    Topology {
        path: PathBuf,
        source: TopologyError,
    },
    #[error(transparent)]
    Build(#[from] BuildError),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub queue_capacity: Option<usize>,
    pub range_m: Option<f64>,
    pub airtime_ms: Option<f64>,
    pub slot_ms: Option<f64>,
    pub power: Option<PowerTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    #[serde(default = "default_host")]
    pub host: String,
    pub port: u16,
    pub protocol: MacVariant,
    #[serde(default = "default_topology")]
    pub topology: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_pace")]
    pub pace: f64,
    #[serde(default = "default_mean_interval")]
    pub mean_interval: f64,
    /// Defaults to the protocol name.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub overrides: Overrides,
}

fn default_host() -> String {
    "127.0.0.1".into()
}

fn default_topology() -> String {
    "grid".into()
}

fn default_pace() -> f64 {
    1.0
}

fn default_mean_interval() -> f64 {
    0.5
}

/// Command-line values that win over the file.
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub port: Option<u16>,
    pub seed: Option<u64>,
    pub pace: Option<f64>,
    pub protocol: Option<MacVariant>,
    pub label: Option<String>,
}

fn millis(name: &str, ms: f64) -> Result<SimTime, ConfigError> {
    if ms > 0.0 && ms.is_finite() {
        Ok(SimTime::from_secs_f64(ms / 1000.0))
    } else {
        Err(ConfigError::Invalid(format!("{name} must be positive")))
    }
}

impl InstanceConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
            path: path.to_owned(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn apply(&mut self, flags: &FlagOverrides) {
        if let Some(p) = flags.port {
            self.port = p;
        }
        if let Some(s) = flags.seed {
            self.seed = s;
        }
        if let Some(p) = flags.pace {
            self.pace = p;
        }
        if let Some(m) = flags.protocol {
            self.protocol = m;
        }
        if let Some(l) = &flags.label {
            self.label = Some(l.clone());
        }
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.protocol.label().to_owned())
    }

    pub fn params(&self) -> Result<SimParams, ConfigError> {
        let mut p = SimParams {
            mean_interval: self.mean_interval,
            ..SimParams::default()
        };
        let o = &self.overrides;
        if let Some(q) = o.queue_capacity {
            p.queue_capacity = q;
        }
        if let Some(r) = o.range_m {
            p.range_m = r;
        }
        if let Some(a) = o.airtime_ms {
            p.airtime = millis("airtime_ms", a)?;
        }
        if let Some(s) = o.slot_ms {
            p.slot = millis("slot_ms", s)?;
        }
        if let Some(pw) = o.power {
            p.power = pw;
        }
        Ok(p)
    }

    /// Resolves `topology` against the builtin presets, then as a file.
    /// A file preset joins the library so it can be selected again later.
    pub fn resolve_topology(&self, base: &Path) -> Result<(Topology, PresetLibrary), ConfigError> {
        let mut lib = PresetLibrary::builtin();
        if let Some(t) = lib.get(&self.topology) {
            return Ok((t.clone(), lib));
        }
        let path = base.join(&self.topology);
        let text = fs::read_to_string(&path).map_err(|source| ConfigError::Io {
            path: path.clone(),
            source,
        })?;
        let topo = Topology::from_json(&text)
            .map_err(|source| ConfigError::Topology { path, source })?;
        lib.insert(topo.clone());
        Ok((topo, lib))
    }

    /// Checks everything that does not need the filesystem.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.pace > 0.0 && self.pace.is_finite()) {
            return Err(ConfigError::Invalid("pace must be > 0".into()));
        }
        if self.host.is_empty() {
            return Err(ConfigError::Invalid("host must not be empty".into()));
        }
        self.params()?
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Validates and builds the simulation; `base` anchors relative preset paths.
    pub fn build(&self, base: &Path) -> Result<Simulation, ConfigError> {
        self.validate()?;
        let (topology, presets) = self.resolve_topology(base)?;
        Ok(Simulation::build(topology, self.protocol, self.params()?, self.seed)?.with_presets(presets))
    }
}

//! JSON network files: `buses`, `lines` and optional run `defaults`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use vsmtune_core::{Bounds, DisturbanceKind, NetworkSpec};

use crate::CliError;

/// The three-area, twelve-bus case shipped with the tool.
pub const TWELVE_BUS_JSON: &str = include_str!("../data/twelve_bus.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSpec {
    /// Bus id (not reduced index).
    pub node: u32,
    pub kind: DisturbanceKind,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Defaults {
    /// Reference generator bus id; first generator when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ref_bus: Option<u32>,
    pub beta: f64,
    pub bounds: Bounds,
    /// Disturbance used by `simulate`, `compare` and `sweep-beta`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<DisturbanceSpec>,
    pub horizon: f64,
    pub dt: f64,
}

impl Default for Defaults {
    fn default() -> Self {
        Self {
            ref_bus: None,
            beta: 0.0,
            bounds: Bounds {
                m_lb: 0.0,
                m_ub: 1.0,
                d_lb: 0.0,
                d_ub: 1.0,
            },
            disturbance: None,
            horizon: vsmtune_core::simulator::DEFAULT_HORIZON,
            dt: vsmtune_core::simulator::DEFAULT_DT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    #[serde(flatten)]
    pub spec: NetworkSpec,
    #[serde(default)]
    pub defaults: Defaults,
}

impl NetworkFile {
    /// Parses and validates a network document.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: NetworkFile = serde_json::from_str(text)
            .map_err(|e| CliError::Input(format!("invalid network file: {e}")))?;
        file.spec.validate()?;
        file.defaults.bounds.validate()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// The given file, or the bundled twelve-bus case when `path` is `None`.
    pub fn load_or_bundled(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            Some(p) => Self::load(p),
            None => Self::bundled(),
        }
    }

    pub fn bundled() -> Result<Self, CliError> {
        Self::parse(TWELVE_BUS_JSON)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network file serializes")
    }
}

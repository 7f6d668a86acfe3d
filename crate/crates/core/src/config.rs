//! Job configuration: one JSON document covering the whole pipeline.
//! Every field has a default, so an empty object (or no config at all) is
//! valid; unknown keys are rejected at any nesting level.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braille::UnknownCharPolicy;
use crate::decoder::DecodeOptions;
use crate::gcode::EmitOptions;
use crate::layout::{CellGeometry, PageSpec};
use crate::sender::SenderConfig;
use crate::sim::MachineConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config invalid: {0}")]
    Invalid(String),
}

/// Text translation knobs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BrailleOptions {
    pub unknown_chars: UnknownCharPolicy,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobConfig {
    pub braille: BrailleOptions,
    pub page: PageSpec,
    pub geometry: CellGeometry,
    pub machine: MachineConfig,
    pub emit: EmitOptions,
    pub decode: DecodeOptions,
    pub sender: SenderConfig,
}

impl JobConfig {
    pub fn from_json_str(s: &str) -> Result<JobConfig, ConfigError> {
        let cfg: JobConfig =
            serde_json::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_string_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: String| ConfigError::Invalid(e);
        self.geometry
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        self.page
            .validate(&self.geometry)
            .map_err(|e| invalid(e.to_string()))?;
        self.machine
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        self.emit.validate().map_err(|e| invalid(e.to_string()))?;
        self.decode.validate().map_err(|e| invalid(e.to_string()))?;
        self.sender.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(())
    }
}

//! Flat, strictly validated experiment configuration.
//!
//! Configs are TOML documents with a fixed, flat key set: unknown keys are
//! rejected naming the offender, `schema_version`, `reservoir`, `task` and
//! `seeds` are required, everything else has documented defaults. The resolved
//! configuration (defaults filled in, overrides applied) is written next to
//! every artifact as `manifest.toml`, which is itself a valid config — re-running
//! a subcommand on a manifest reproduces the run exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use photonrc::delay::{DelayParams, MaskKind};
use photonrc::esn::{Activation, EsnParams};
use photonrc::tasks::{TaskKind, TaskSpec};

use crate::CliError;

/// Config schema understood by this binary.
pub const SCHEMA_VERSION: u32 = 1;

/// Every key a config may contain, in documentation order.
pub const KNOWN_KEYS: &[&str] = &[
    "schema_version",
    "tool_version",
    "reservoir",
    "task",
    "seeds",
    "out_dir",
    "length",
    "train_frac",
    "test_frac",
    "washout",
    "ridge_lambda",
    "fit_bias",
    "esn_nodes",
    "esn_spectral_radius",
    "esn_input_scaling",
    "esn_bias_scale",
    "esn_activation",
    "delay_nodes",
    "delay_theta",
    "delay_response_ratio",
    "delay_feedback_gain",
    "delay_input_gain",
    "delay_phase",
    "delay_desync",
    "delay_oversample",
    "delay_regime",
    "mask_kind",
    "mc_max_lag",
    "mg_horizon",
    "cascade_nodes",
    "cascade_coupling_scale",
    "tolerance_sigmas",
    "tolerance_seeds",
    "dump_kind",
];

fn d_tool_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}
fn d_length() -> usize {
    1000
}
fn d_train_frac() -> f64 {
    0.7
}
fn d_test_frac() -> f64 {
    0.3
}
fn d_washout() -> usize {
    100
}
fn d_ridge_lambda() -> f64 {
    1e-6
}
fn d_true() -> bool {
    true
}
fn d_esn_nodes() -> usize {
    100
}
fn d_esn_spectral_radius() -> f64 {
    0.9
}
fn d_half() -> f64 {
    0.5
}
fn d_esn_bias_scale() -> f64 {
    0.2
}
fn d_esn_activation() -> String {
    "tanh".into()
}
fn d_delay_nodes() -> usize {
    400
}
fn d_one() -> f64 {
    1.0
}
fn d_delay_response_ratio() -> f64 {
    0.2
}
fn d_delay_feedback_gain() -> f64 {
    0.9
}
fn d_delay_phase() -> f64 {
    std::f64::consts::FRAC_PI_4
}
fn d_delay_desync() -> usize {
    1
}
fn d_delay_oversample() -> usize {
    20
}
fn d_delay_regime() -> String {
    "dde".into()
}
fn d_mask_kind() -> String {
    "uniform".into()
}
fn d_mc_max_lag() -> usize {
    40
}
fn d_mg_horizon() -> usize {
    1
}
fn d_cascade_nodes() -> Vec<usize> {
    vec![60, 60]
}
fn d_tolerance_sigmas() -> Vec<f64> {
    vec![0.0, 0.1, 0.3]
}
fn d_tolerance_seeds() -> usize {
    20
}
fn d_dump_kind() -> String {
    "states".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    #[serde(default = "d_tool_version")]
    pub tool_version: String,
    /// Reservoir family: "esn" | "delay" | "cascade".
    pub reservoir: String,
    /// Task: "narma10" | "mackey_glass" | "memory_capacity".
    pub task: String,
    /// One experiment cell per seed; metrics get one row per seed.
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub out_dir: Option<String>,

    #[serde(default = "d_length")]
    pub length: usize,
    #[serde(default = "d_train_frac")]
    pub train_frac: f64,
    #[serde(default = "d_test_frac")]
    pub test_frac: f64,
    #[serde(default = "d_washout")]
    pub washout: usize,
    #[serde(default = "d_ridge_lambda")]
    pub ridge_lambda: f64,
    #[serde(default = "d_true")]
    pub fit_bias: bool,

    #[serde(default = "d_esn_nodes")]
    pub esn_nodes: usize,
    #[serde(default = "d_esn_spectral_radius")]
    pub esn_spectral_radius: f64,
    #[serde(default = "d_half")]
    pub esn_input_scaling: f64,
    #[serde(default = "d_esn_bias_scale")]
    pub esn_bias_scale: f64,
    #[serde(default = "d_esn_activation")]
    pub esn_activation: String,

    #[serde(default = "d_delay_nodes")]
    pub delay_nodes: usize,
    #[serde(default = "d_one")]
    pub delay_theta: f64,
    /// Node response time as a fraction of theta (0.2 = transient regime,
    /// 0.01 = settled regime).
    #[serde(default = "d_delay_response_ratio")]
    pub delay_response_ratio: f64,
    #[serde(default = "d_delay_feedback_gain")]
    pub delay_feedback_gain: f64,
    #[serde(default = "d_half")]
    pub delay_input_gain: f64,
    #[serde(default = "d_delay_phase")]
    pub delay_phase: f64,
    #[serde(default = "d_delay_desync")]
    pub delay_desync: usize,
    #[serde(default = "d_delay_oversample")]
    pub delay_oversample: usize,
    /// "dde" integrates the delay equation; "map" runs the settled-regime map.
    #[serde(default = "d_delay_regime")]
    pub delay_regime: String,
    #[serde(default = "d_mask_kind")]
    pub mask_kind: String,

    #[serde(default = "d_mc_max_lag")]
    pub mc_max_lag: usize,
    #[serde(default = "d_mg_horizon")]
    pub mg_horizon: usize,

    /// ESN layer sizes of the cascade, first layer first.
    #[serde(default = "d_cascade_nodes")]
    pub cascade_nodes: Vec<usize>,
    #[serde(default = "d_half")]
    pub cascade_coupling_scale: f64,

    #[serde(default = "d_tolerance_sigmas")]
    pub tolerance_sigmas: Vec<f64>,
    #[serde(default = "d_tolerance_seeds")]
    pub tolerance_seeds: usize,

    /// dump-states output: "states" | "trajectory" (trajectory: delay DDE only).
    #[serde(default = "d_dump_kind")]
    pub dump_kind: String,
}

impl Config {
    pub fn activation(&self) -> Result<Activation, CliError> {
        match self.esn_activation.as_str() {
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            "sin2" => Ok(Activation::SinSq),
            other => Err(CliError::Config(format!(
                "esn_activation must be tanh|identity|sin2, got '{other}'"
            ))),
        }
    }

    pub fn mask_kind(&self) -> Result<MaskKind, CliError> {
        match self.mask_kind.as_str() {
            "binary" => Ok(MaskKind::Binary),
            "uniform" => Ok(MaskKind::Uniform),
            other => Err(CliError::Config(format!(
                "mask_kind must be binary|uniform, got '{other}'"
            ))),
        }
    }

    pub fn esn_params(&self, n_nodes: usize, input_dim: usize) -> Result<EsnParams, CliError> {
        Ok(EsnParams {
            n_nodes,
            spectral_radius_target: self.esn_spectral_radius,
            input_scaling: self.esn_input_scaling,
            bias_scale: self.esn_bias_scale,
            input_dim,
            activation: self.activation()?,
        })
    }

    pub fn delay_params(&self) -> DelayParams {
        DelayParams {
            response_time: self.delay_response_ratio * self.delay_theta,
            feedback_gain: self.delay_feedback_gain,
            input_gain: self.delay_input_gain,
            phase_offset: self.delay_phase,
            n_virtual: self.delay_nodes,
            node_separation: self.delay_theta,
            desync_shift: self.delay_desync,
        }
    }

    pub fn task_spec(&self) -> Result<TaskSpec, CliError> {
        let kind = match self.task.as_str() {
            "narma10" => TaskKind::Narma10,
            "mackey_glass" => TaskKind::MackeyGlass { horizon: self.mg_horizon },
            "memory_capacity" => TaskKind::MemoryCapacity { max_lag: self.mc_max_lag },
            other => {
                return Err(CliError::Config(format!(
                    "task must be narma10|mackey_glass|memory_capacity, got '{other}'"
                )));
            }
        };
        Ok(TaskSpec {
            kind,
            length: self.length,
            train_frac: self.train_frac,
            test_frac: self.test_frac,
        })
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        match self.reservoir.as_str() {
            "esn" | "delay" | "cascade" => {}
            other => {
                return Err(CliError::Config(format!(
                    "reservoir must be esn|delay|cascade, got '{other}'"
                )));
            }
        }
        match self.delay_regime.as_str() {
            "dde" | "map" => {}
            other => {
                return Err(CliError::Config(format!(
                    "delay_regime must be dde|map, got '{other}'"
                )));
            }
        }
        match self.dump_kind.as_str() {
            "states" | "trajectory" => {}
            other => {
                return Err(CliError::Config(format!(
                    "dump_kind must be states|trajectory, got '{other}'"
                )));
            }
        }
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds must not be empty".into()));
        }
        if self.cascade_nodes.is_empty() {
            return Err(CliError::Config("cascade_nodes must not be empty".into()));
        }
        self.task_spec()?;
        self.activation()?;
        self.mask_kind()?;
        Ok(())
    }
}

fn parse_override(kv: &str) -> Result<(String, toml::Value), CliError> {
    let (key, raw) = kv
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{kv}' is not KEY=VALUE")))?;
    let key = key.trim().to_string();
    let raw = raw.trim();
    // Parse the value as TOML; fall back to a bare string.
    let parsed: Result<toml::Table, _> = format!("v = {raw}").parse();
    let value = match parsed {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    Ok((key, value))
}

/// Load, override and validate a config file.
pub fn load_config(
    path: &Path,
    seed_override: Option<u64>,
    sets: &[String],
) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Config(format!("config is not valid TOML: {e}")))?;

    for kv in sets {
        let (key, value) = parse_override(kv)?;
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("unknown config key '{key}'")));
        }
        table.insert(key, value);
    }
    if let Some(seed) = seed_override {
        table.insert("seeds".into(), toml::Value::Array(vec![toml::Value::try_from(seed).unwrap()]));
    }

    for key in table.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("unknown config key '{key}'")));
        }
    }

    let mut config: Config = table
        .try_into()
        .map_err(|e| CliError::Config(format!("config does not match the schema: {e}")))?;
    config.tool_version = d_tool_version();
    config.validate()?;
    Ok(config)
}

/// Serialize the resolved config; written as `manifest.toml` next to results.
pub fn manifest_toml(config: &Config) -> Result<String, CliError> {
    toml::to_string(config).map_err(|e| CliError::Other(format!("manifest serialization: {e}")))
}

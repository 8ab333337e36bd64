//! Scenario configuration. Stored as TOML; every key is optional and falls
//! back to the reference parameter set. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::PathLossParams;
use crate::coordinator::ConvergenceCriterion;
use crate::error::{Error, Result};
use crate::learning::LearningParams;
use crate::reward::{QosThresholds, RewardConfig};
use crate::topology::{LayoutParams, RingRadii, Topology};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerConfig {
    pub p_min_dbm: f64,
    pub p_max_dbm: f64,
    pub n_power: usize,
    /// Optional consistency check on the level spacing, dB.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_db: Option<f64>,
    /// Fixed macro transmit power.
    pub p_bs_dbm: f64,
    pub noise_dbm: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            p_min_dbm: -20.0,
            p_max_dbm: 25.0,
            n_power: 31,
            step_db: Some(1.5),
            p_bs_dbm: 43.0,
            noise_dbm: -104.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseConfig {
    /// FBSs that learn independently before cooperative admission starts.
    pub seed_agents: usize,
    /// Largest density in the sweep.
    pub m_max: usize,
    /// Average same-state active rows after every iteration.
    pub share_rows: bool,
    /// Initialize a newly admitted agent from same-state peers.
    pub warm_start: bool,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        PhaseConfig {
            seed_agents: 4,
            m_max: 15,
            share_rows: true,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// Largest number of joint actions the exhaustive search may enumerate.
    pub enumeration_cap: u64,
    /// Number of femtocells the oracle solves for; defaults to `m_max`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            enumeration_cap: 10_000_000,
            m: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Keep every n-th iteration record in the trace (0 keeps none).
    pub trace_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            trace_stride: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub power: PowerConfig,
    pub rings: RingRadii,
    /// Vicinity threshold for the proximity factor, meters.
    pub d_th: f64,
    pub pathloss: PathLossParams,
    pub qos: QosThresholds,
    pub learning: LearningParams,
    pub reward: RewardConfig,
    pub phases: PhaseConfig,
    pub convergence: ConvergenceCriterion,
    pub layout: LayoutParams,
    /// Explicit node positions; replaces the generated layout when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology: Option<Topology>,
    pub oracle: OracleConfig,
    pub output: OutputConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            power: PowerConfig::default(),
            rings: RingRadii::default(),
            d_th: 25.0,
            pathloss: PathLossParams::default(),
            qos: QosThresholds::default(),
            learning: LearningParams::default(),
            reward: RewardConfig::default(),
            phases: PhaseConfig::default(),
            convergence: ConvergenceCriterion::default(),
            layout: LayoutParams::default(),
            topology: None,
            oracle: OracleConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::parse(text, Path::new("<inline>"))
    }

    fn parse(text: &str, path: &Path) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::ConfigParse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// SHA-256 of the canonical TOML form of the effective configuration.
    /// The output directory does not affect results and is left out.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output.dir = PathBuf::new();
        hex::encode(Sha256::digest(canonical.to_toml_string().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.power;
        if !(p.p_min_dbm.is_finite() && p.p_max_dbm.is_finite() && p.p_min_dbm < p.p_max_dbm) {
            return Err(Error::config("power.p_min_dbm", "must be finite and below p_max_dbm"));
        }
        if p.n_power < 2 {
            return Err(Error::config("power.n_power", "must be at least 2"));
        }
        if let Some(step) = p.step_db {
            let actual = (p.p_max_dbm - p.p_min_dbm) / (p.n_power - 1) as f64;
            if (actual - step).abs() > 1e-9 {
                return Err(Error::config(
                    "power.step_db",
                    format!(
                        "n_power = {} between {} and {} dBm gives a {actual} dB step, not {step}",
                        p.n_power, p.p_min_dbm, p.p_max_dbm
                    ),
                ));
            }
        }
        if !p.p_bs_dbm.is_finite() {
            return Err(Error::config("power.p_bs_dbm", "must be finite"));
        }
        if !p.noise_dbm.is_finite() {
            return Err(Error::config("power.noise_dbm", "must be finite"));
        }
        self.rings.validate().map_err(|e| match e {
            Error::Config { key, message } => Error::Config {
                key: format!("rings.{key}"),
                message,
            },
            other => other,
        })?;
        if !(self.d_th.is_finite() && self.d_th > 0.0) {
            return Err(Error::config("d_th", "must be positive"));
        }
        let pl = &self.pathloss;
        if !(pl.d0 > 0.0) {
            return Err(Error::config("pathloss.d0", "must be positive"));
        }
        if !(pl.frequency_ghz > 0.0) {
            return Err(Error::config("pathloss.frequency_ghz", "must be positive"));
        }
        if !(pl.pl0.is_finite() && pl.exponent.is_finite()) {
            return Err(Error::config("pathloss.pl0", "must be finite"));
        }
        self.qos.validate()?;
        self.learning.validate()?;
        self.reward.build()?;
        if self.phases.seed_agents == 0 {
            return Err(Error::config("phases.seed_agents", "must be at least 1"));
        }
        if self.phases.m_max == 0 {
            return Err(Error::config("phases.m_max", "must be at least 1"));
        }
        self.convergence.validate()?;
        self.layout.validate()?;
        if let Some(t) = &self.topology {
            t.validate(self.layout.fue_radius)
                .map_err(|e| Error::config("topology", e.to_string()))?;
            if t.len() < self.phases.m_max {
                return Err(Error::config(
                    "topology",
                    format!("{} femtocells given but phases.m_max = {}", t.len(), self.phases.m_max),
                ));
            }
        }
        if self.oracle.enumeration_cap == 0 {
            return Err(Error::config("oracle.enumeration_cap", "must be positive"));
        }
        if self.oracle.m == Some(0) {
            return Err(Error::config("oracle.m", "must be at least 1"));
        }
        Ok(())
    }
}

/// Reads and validates a scenario file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    ScenarioConfig::parse(&text, path)
}

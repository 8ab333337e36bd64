//! Per-agent reward. The built-in function trades the agent's own capacity
//! against the macro user's, penalizes deviation of both from their QoS
//! targets, and weights by proximity to the macro user.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::Beta;

/// Minimum capacities (b/s/Hz) for the macro user and each femto user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QosThresholds {
    pub q_mue: f64,
    /// Threshold for every FUE, unless overridden per index in `q_fue`.
    pub q_fue_default: f64,
    /// Per-FUE thresholds; indices past the end use `q_fue_default`.
    pub q_fue: Vec<f64>,
}

impl Default for QosThresholds {
    fn default() -> Self {
        QosThresholds {
            q_mue: 1.0,
            q_fue_default: 1.0,
            q_fue: Vec::new(),
        }
    }
}

impl QosThresholds {
    pub fn uniform(q: f64) -> Self {
        QosThresholds {
            q_mue: q,
            q_fue_default: q,
            q_fue: Vec::new(),
        }
    }

    /// Threshold of femtocell `i` (by FBS id).
    pub fn fue(&self, i: usize) -> f64 {
        self.q_fue.get(i).copied().unwrap_or(self.q_fue_default)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be positive, got {v}")))
            }
        };
        positive("qos.q_mue", self.q_mue)?;
        positive("qos.q_fue_default", self.q_fue_default)?;
        for (i, &q) in self.q_fue.iter().enumerate() {
            positive(&format!("qos.q_fue[{i}]"), q)?;
        }
        Ok(())
    }
}

/// Everything the reward of one agent depends on in one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardInputs {
    pub c_fue: f64,
    pub c_mue: f64,
    pub beta: Beta,
    pub q_fue: f64,
    pub q_mue: f64,
}

pub trait RewardFunction: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn reward(&self, inputs: &RewardInputs) -> f64;
}

/// `β C_FUE C_MUE^k − (C_MUE − q_MUE)² / β − (C_FUE − q_i)²`, with `k = 2`
/// unless overridden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposedReward {
    pub mue_exponent: i32,
}

impl Default for ProposedReward {
    fn default() -> Self {
        ProposedReward { mue_exponent: 2 }
    }
}

impl RewardFunction for ProposedReward {
    fn name(&self) -> &str {
        "proposed"
    }

    fn reward(&self, r: &RewardInputs) -> f64 {
        let b = r.beta.value();
        b * r.c_fue * r.c_mue.powi(self.mue_exponent)
            - (r.c_mue - r.q_mue).powi(2) / b
            - (r.c_fue - r.q_fue).powi(2)
    }
}

pub fn reward_proposed(inputs: &RewardInputs) -> f64 {
    ProposedReward::default().reward(inputs)
}

/// Reward selection as written in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    pub name: String,
    pub mue_exponent: i32,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            name: "proposed".into(),
            mue_exponent: 2,
        }
    }
}

impl RewardConfig {
    pub fn build(&self) -> Result<Arc<dyn RewardFunction>> {
        match self.name.as_str() {
            "proposed" => Ok(Arc::new(ProposedReward {
                mue_exponent: self.mue_exponent,
            })),
            other => Err(Error::config(
                "reward.name",
                format!("unknown reward `{other}` (available: proposed)"),
            )),
        }
    }
}

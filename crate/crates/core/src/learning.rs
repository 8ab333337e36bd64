//! Tabular Q-learning: power-level actions, the ε-greedy policy and the
//! one-step update.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::dbm_to_mw;
use crate::error::{Error, Result};

/// Uniformly spaced transmit power levels, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    levels_dbm: Vec<f64>,
    levels_mw: Vec<f64>,
}

impl ActionSet {
    pub fn len(&self) -> usize {
        self.levels_dbm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels_dbm.is_empty()
    }

    pub fn dbm(&self, action: usize) -> f64 {
        self.levels_dbm[action]
    }

    pub fn mw(&self, action: usize) -> f64 {
        self.levels_mw[action]
    }

    pub fn levels_dbm(&self) -> &[f64] {
        &self.levels_dbm
    }

    pub fn step_db(&self) -> f64 {
        self.levels_dbm[1] - self.levels_dbm[0]
    }

    pub fn p_max_dbm(&self) -> f64 {
        *self.levels_dbm.last().expect("at least two levels")
    }
}

/// `n` levels from `p_min` to `p_max` dBm inclusive.
pub fn make_action_set(p_min: f64, p_max: f64, n: usize) -> Result<ActionSet> {
    if n < 2 {
        return Err(Error::domain(format!("action set needs at least 2 levels, got {n}")));
    }
    if !(p_min.is_finite() && p_max.is_finite() && p_min < p_max) {
        return Err(Error::domain(format!(
            "action set needs finite p_min < p_max (got {p_min}, {p_max})"
        )));
    }
    let step = (p_max - p_min) / (n - 1) as f64;
    let levels_dbm: Vec<f64> = (0..n)
        .map(|k| if k == n - 1 { p_max } else { p_min + k as f64 * step })
        .collect();
    let levels_mw = levels_dbm.iter().map(|&p| dbm_to_mw(p)).collect();
    Ok(ActionSet {
        levels_dbm,
        levels_mw,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearningParams {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    /// Fraction of each run during which exploration is enabled.
    pub explore_fraction: f64,
    pub max_iterations: usize,
}

impl Default for LearningParams {
    fn default() -> Self {
        LearningParams {
            alpha: 0.5,
            gamma: 0.9,
            epsilon: 0.1,
            explore_fraction: 0.8,
            max_iterations: 50_000,
        }
    }
}

impl LearningParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |key: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be in [0, 1], got {v}")))
            }
        };
        unit("learning.alpha", self.alpha)?;
        unit("learning.gamma", self.gamma)?;
        unit("learning.epsilon", self.epsilon)?;
        unit("learning.explore_fraction", self.explore_fraction)?;
        if self.max_iterations == 0 {
            return Err(Error::config("learning.max_iterations", "must be at least 1"));
        }
        Ok(())
    }

    /// Number of leading iterations that explore.
    pub fn explore_iterations(&self) -> usize {
        (self.explore_fraction * self.max_iterations as f64).ceil() as usize
    }
}

/// Exploration probability for a given iteration: constant during the
/// exploration window, zero afterwards.
pub fn epsilon_at(iteration: usize, params: &LearningParams) -> f64 {
    if (iteration as f64) < params.explore_fraction * params.max_iterations as f64 {
        params.epsilon
    } else {
        0.0
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn greedy(qrow: &[f64]) -> usize {
    let mut best = 0;
    for (k, &q) in qrow.iter().enumerate().skip(1) {
        if q > qrow[best] {
            best = k;
        }
    }
    best
}

/// ε-greedy choice. Always consumes one draw for the coin so the stream
/// position does not depend on `eps`.
pub fn select_action<R: Rng + ?Sized>(qrow: &[f64], eps: f64, rng: &mut R) -> usize {
    debug_assert!(!qrow.is_empty());
    let coin: f64 = rng.gen();
    if coin < eps {
        rng.gen_range(0..qrow.len())
    } else {
        greedy(qrow)
    }
}

/// Per-agent Q-values, one row per location state and one column per power level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    states: usize,
    actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(states: usize, actions: usize) -> Self {
        QTable {
            states,
            actions,
            values: vec![0.0; states * actions],
        }
    }

    /// Rebuilds a table from its state-major flat form.
    pub fn from_flat(states: usize, actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != states * actions {
            return Err(Error::domain(format!(
                "flat Q-table has {} values, expected {states} x {actions}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("Q-table contains non-finite values"));
        }
        Ok(QTable {
            states,
            actions,
            values,
        })
    }

    /// State-major flat view.
    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.actions..(state + 1) * self.actions]
    }

    pub fn row_mut(&mut self, state: usize) -> &mut [f64] {
        &mut self.values[state * self.actions..(state + 1) * self.actions]
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.actions + action]
    }

    fn check(&self, state: usize, action: usize) -> Result<()> {
        if state >= self.states {
            return Err(Error::OutOfRange {
                index: state,
                len: self.states,
            });
        }
        if action >= self.actions {
            return Err(Error::OutOfRange {
                index: action,
                len: self.actions,
            });
        }
        Ok(())
    }

    /// Plain-text checkpoint: a `states actions` header line followed by one
    /// whitespace-separated row per state.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.states, self.actions);
        for s in 0..self.states {
            let row: Vec<String> = self.row(s).iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let mut dim = || -> Result<usize> {
            tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::domain("Q-table header must be `states actions`"))
        };
        let (states, actions) = (dim()?, dim()?);
        let values = tokens
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::domain(format!("bad Q-value `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        QTable::from_flat(states, actions, values)
    }
}

/// One-step Q-learning update of `(state, action)`; returns the change
/// applied to that entry.
pub fn q_update(
    table: &mut QTable,
    state: usize,
    action: usize,
    reward: f64,
    next_state: usize,
    params: &LearningParams,
) -> Result<f64> {
    table.check(state, action)?;
    table.check(next_state, 0)?;
    let lookahead = table
        .row(next_state)
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let old = table.get(state, action);
    let new = (1.0 - params.alpha) * old + params.alpha * (reward + params.gamma * lookahead);
    table.values[state * table.actions + action] = new;
    Ok(new - old)
}

/// Independent exploration stream for one agent.
pub fn agent_rng(master_seed: u64, agent_id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(agent_id as u64 + 1);
    rng
}

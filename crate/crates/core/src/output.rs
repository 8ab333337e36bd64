//! CSV artifacts of a run.
//!
//! Files written by [`write_run`]:
//!
//! * `density_MM.csv` per density step: `iteration, agent_id, action_dbm,
//!   c_mue, c_fue_i, reward, max_q_delta, policy_changes`, one row per agent per kept iteration.
//! * `summary.csv`: `m, c_mue_final, min_fue_capacity, sum_capacity, jain,
//!   iterations_to_converge, converged, qos_satisfied`.
//! * `plot_mue_capacity.csv`, `plot_fue_capacity.csv`, `plot_sum_capacity.csv`,
//!   `plot_convergence.csv`, `plot_fairness.csv`: one series each, keyed by `m`.
//! * `effective_config.toml` and `manifest.toml`.
//!
//! [`write_oracle`] writes `oracle.csv` (one row per femtocell) and
//! `oracle_summary.csv`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::coordinator::{DensitySummary, RunTrace};
use crate::error::Result;
use crate::oracle::{optimality_gap, OracleResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub iteration: usize,
    pub agent_id: usize,
    pub action_dbm: f64,
    pub c_mue: f64,
    pub c_fue_i: f64,
    pub reward: f64,
    pub max_q_delta: f64,
    pub policy_changes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub m: usize,
    pub c_mue_final: f64,
    pub min_fue_capacity: f64,
    pub sum_capacity: f64,
    pub jain: f64,
    /// Iteration at which the detector fired, or the iterations run if it never did.
    pub iterations_to_converge: usize,
    pub converged: bool,
    pub qos_satisfied: bool,
}

impl From<&DensitySummary> for SummaryRow {
    fn from(s: &DensitySummary) -> Self {
        SummaryRow {
            m: s.m,
            c_mue_final: s.c_mue,
            min_fue_capacity: s.min_fue_capacity,
            sum_capacity: s.sum_capacity,
            jain: s.jain,
            iterations_to_converge: s.iterations_to_converge.unwrap_or(s.iterations_run),
            converged: s.iterations_to_converge.is_some(),
            qos_satisfied: s.qos_satisfied,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FueCapacityRow {
    m: usize,
    agent_id: usize,
    c_fue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub agent_id: usize,
    pub action_index: usize,
    pub action_dbm: f64,
    pub c_fue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummaryRow {
    pub m: usize,
    pub n_power: usize,
    pub evaluated: u64,
    pub feasible: bool,
    pub best_objective: f64,
    pub c_mue: f64,
    pub learned_sum: Option<f64>,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub config_hash: String,
    pub version: String,
    pub densities: usize,
}

impl Manifest {
    pub fn new(config: &ScenarioConfig, densities: usize) -> Self {
        Manifest {
            seed: config.seed,
            config_hash: config.hash(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            densities,
        }
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

pub fn iteration_rows(trace: &RunTrace, density: usize) -> Vec<IterationRow> {
    let mut rows = Vec::new();
    for rec in &trace.densities[density].records {
        for (k, &id) in rec.agent_ids.iter().enumerate() {
            rows.push(IterationRow {
                iteration: rec.iteration,
                agent_id: id,
                action_dbm: rec.powers_dbm[k],
                c_mue: rec.c_mue,
                c_fue_i: rec.c_fue[k],
                reward: rec.rewards[k],
                max_q_delta: rec.max_q_delta,
                policy_changes: rec.policy_changes,
            });
        }
    }
    rows
}

/// Writes every artifact of a run under `dir`; returns the files written.
pub fn write_run(trace: &RunTrace, config: &ScenarioConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };

    for (k, d) in trace.densities.iter().enumerate() {
        write_rows(&emit(&format!("density_{:02}.csv", d.summary.m)), iteration_rows(trace, k))?;
    }
    let summaries: Vec<&DensitySummary> = trace.summaries().collect();
    write_rows(&emit("summary.csv"), summaries.iter().map(|s| SummaryRow::from(*s)))?;

    #[derive(Serialize)]
    struct Point {
        m: usize,
        value: f64,
    }
    let series = |f: fn(&DensitySummary) -> f64| {
        summaries
            .iter()
            .map(move |s| Point {
                m: s.m,
                value: f(s),
            })
            .collect::<Vec<_>>()
    };
    write_rows(&emit("plot_mue_capacity.csv"), series(|s| s.c_mue))?;
    write_rows(&emit("plot_sum_capacity.csv"), series(|s| s.sum_capacity))?;
    write_rows(&emit("plot_fairness.csv"), series(|s| s.jain))?;
    write_rows(
        &emit("plot_convergence.csv"),
        series(|s| s.iterations_to_converge.unwrap_or(s.iterations_run) as f64),
    )?;
    write_rows(
        &emit("plot_fue_capacity.csv"),
        summaries.iter().flat_map(|s| {
            s.agent_ids.iter().zip(&s.c_fue).map(|(&id, &c)| FueCapacityRow {
                m: s.m,
                agent_id: id,
                c_fue: c,
            })
        }),
    )?;

    fs::write(emit("effective_config.toml"), config.to_toml_string())?;
    let manifest = Manifest::new(config, trace.densities.len());
    fs::write(
        emit("manifest.toml"),
        toml::to_string(&manifest).expect("manifest serializes"),
    )?;
    Ok(written)
}

/// Learned sum capacity at density `m` from a previous run in `dir`, if that
/// run used the same effective configuration.
pub fn learned_sum_for(dir: &Path, config: &ScenarioConfig, m: usize) -> Option<f64> {
    let manifest: Manifest = toml::from_str(&fs::read_to_string(dir.join("manifest.toml")).ok()?).ok()?;
    if manifest.config_hash != config.hash() {
        return None;
    }
    let rows: Vec<SummaryRow> = read_rows(&dir.join("summary.csv")).ok()?;
    rows.iter().find(|r| r.m == m).map(|r| r.sum_capacity)
}

pub fn write_oracle(
    result: &OracleResult,
    agent_ids: &[usize],
    levels_dbm: &[f64],
    learned_sum: Option<f64>,
    dir: &Path,
) -> Result<OracleSummaryRow> {
    fs::create_dir_all(dir)?;
    write_rows(
        &dir.join("oracle.csv"),
        agent_ids.iter().enumerate().map(|(k, &id)| OracleRow {
            agent_id: id,
            action_index: result.best_action.0[k],
            action_dbm: levels_dbm[result.best_action.0[k]],
            c_fue: result.c_fue[k],
        }),
    )?;
    let summary = OracleSummaryRow {
        m: agent_ids.len(),
        n_power: levels_dbm.len(),
        evaluated: result.evaluated,
        feasible: result.feasible,
        best_objective: result.best_objective,
        c_mue: result.c_mue,
        learned_sum,
        gap: learned_sum.map(|l| optimality_gap(result.best_objective, l)),
    };
    write_rows(&dir.join("oracle_summary.csv"), [&summary])?;
    Ok(summary)
}

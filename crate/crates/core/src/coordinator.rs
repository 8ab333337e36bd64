//! Multi-agent orchestration.
//!
//! A run sweeps the number of active femtocells. The first `seed_agents`
//! densities are learned independently from zero tables; afterwards agents
//! are admitted one at a time in a seeded random order, each newcomer
//! borrowing the mean active row of its same-state peers, and same-state
//! agents average their active rows after every iteration.
//!
//! Every iteration is synchronous: all agents pick a power, the channel is
//! evaluated once for the joint action, then each agent updates its own
//! table from its own reward.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{self, build_gain_matrix, dbm_to_mw, GainMatrix, LinkCapacities, NoisePower};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::learning::{
    agent_rng, epsilon_at, greedy, make_action_set, q_update, select_action, ActionSet,
    LearningParams, QTable,
};
use crate::reward::{QosThresholds, RewardFunction, RewardInputs};
use crate::topology::{self, agent_state, generate_layout, AgentState, Beta, RingRadii, Topology};

/// Per-iteration quantity watched by the convergence detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceSignal {
    /// Largest absolute change of any Q-entry, sharing included.
    QDelta,
    /// Number of agents whose greedy power level changed.
    GreedyPolicy,
}

/// Stop once the watched signal has stayed below `tolerance` for `window`
/// consecutive iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceCriterion {
    pub window: usize,
    pub tolerance: f64,
    pub signal: ConvergenceSignal,
}

impl Default for ConvergenceCriterion {
    fn default() -> Self {
        ConvergenceCriterion {
            window: 500,
            tolerance: 1e-3,
            signal: ConvergenceSignal::QDelta,
        }
    }
}

impl ConvergenceCriterion {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::config("convergence.window", "must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::config("convergence.tolerance", "must be positive"));
        }
        Ok(())
    }
}

/// True iff the last `window` deltas exist and are all below `tolerance`.
pub fn detect_convergence(deltas: &[f64], criterion: &ConvergenceCriterion) -> bool {
    deltas.len() >= criterion.window
        && deltas[deltas.len() - criterion.window..]
            .iter()
            .all(|d| d.abs() < criterion.tolerance)
}

/// Streaming form of [`detect_convergence`].
#[derive(Debug, Clone)]
pub struct ConvergenceMonitor {
    criterion: ConvergenceCriterion,
    quiet: usize,
}

impl ConvergenceMonitor {
    pub fn new(criterion: ConvergenceCriterion) -> Self {
        ConvergenceMonitor { criterion, quiet: 0 }
    }

    /// Feeds one iteration's max Q-delta; returns whether the run has converged.
    pub fn push(&mut self, delta: f64) -> bool {
        if delta.abs() < self.criterion.tolerance {
            self.quiet += 1;
        } else {
            self.quiet = 0;
        }
        self.quiet >= self.criterion.window
    }
}

/// Channel and QoS data for one set of active femtocells, indexed by
/// position in the active list.
#[derive(Debug, Clone)]
pub struct Environment {
    pub gains: GainMatrix,
    pub p_bs_mw: f64,
    pub noise: NoisePower,
    pub q_mue: f64,
    pub q_fue: Vec<f64>,
}

impl Environment {
    pub fn femtocells(&self) -> usize {
        self.gains.femtocells()
    }

    pub fn evaluate(&self, powers_mw: &[f64]) -> LinkCapacities {
        channel::evaluate(self.p_bs_mw, powers_mw, &self.gains, self.noise)
    }
}

/// One learning femtocell.
#[derive(Debug, Clone)]
pub struct Agent {
    /// FBS index in the scenario topology.
    pub id: usize,
    pub state: AgentState,
    /// Q-table row of `state`.
    pub row: usize,
    pub beta: Beta,
    pub table: QTable,
    rng: ChaCha8Rng,
}

impl Agent {
    pub fn active_row(&self) -> &[f64] {
        self.table.row(self.row)
    }

    pub fn greedy_action(&self) -> usize {
        greedy(self.active_row())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseKind {
    Individual,
    Cooperative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub kind: PhaseKind,
    pub active_agents: Vec<usize>,
}

/// What happened in one synchronous iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub agent_ids: Vec<usize>,
    pub actions: Vec<usize>,
    pub powers_dbm: Vec<f64>,
    pub c_mue: f64,
    pub c_fue: Vec<f64>,
    pub rewards: Vec<f64>,
    /// Largest absolute change of any Q-entry during the iteration,
    /// including row sharing.
    pub max_q_delta: f64,
    /// Agents whose greedy action differs from the previous iteration's.
    pub policy_changes: usize,
}

/// Outcome of one density step, evaluated at the agents' greedy actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySummary {
    pub m: usize,
    pub phase: PhaseKind,
    pub agent_ids: Vec<usize>,
    pub powers_dbm: Vec<f64>,
    pub c_mue: f64,
    pub c_fue: Vec<f64>,
    pub min_fue_capacity: f64,
    pub sum_capacity: f64,
    pub jain: f64,
    /// Iterations run before the detector fired; `None` if it never did.
    pub iterations_to_converge: Option<usize>,
    pub iterations_run: usize,
    pub qos_satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityTrace {
    pub phase: Phase,
    pub records: Vec<IterationRecord>,
    pub summary: DensitySummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub seed: u64,
    /// Admission order of all femtocells (seed agents first).
    pub admission_order: Vec<usize>,
    pub densities: Vec<DensityTrace>,
}

impl RunTrace {
    pub fn summaries(&self) -> impl Iterator<Item = &DensitySummary> {
        self.densities.iter().map(|d| &d.summary)
    }
}

/// Per-user constraint satisfaction for one joint action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub mue_qos: bool,
    pub fue_qos: Vec<bool>,
    pub power: Vec<bool>,
}

impl ConstraintReport {
    pub fn all_satisfied(&self) -> bool {
        self.mue_qos && self.fue_qos.iter().all(|&b| b) && self.power.iter().all(|&b| b)
    }

    pub fn qos_satisfied(&self) -> bool {
        self.mue_qos && self.fue_qos.iter().all(|&b| b)
    }
}

pub fn check_constraints(
    record: &IterationRecord,
    thresholds: &QosThresholds,
    p_max_dbm: f64,
) -> ConstraintReport {
    ConstraintReport {
        mue_qos: record.c_mue >= thresholds.q_mue,
        fue_qos: record
            .agent_ids
            .iter()
            .zip(&record.c_fue)
            .map(|(&id, &c)| c >= thresholds.fue(id))
            .collect(),
        power: record.powers_dbm.iter().map(|&p| p <= p_max_dbm).collect(),
    }
}

/// Jain's index `(Σx)² / (n Σx²)`.
pub fn jain_index(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::domain("Jain index of an empty set"));
    }
    let sum: f64 = values.iter().sum();
    let sum_sq: f64 = values.iter().map(|x| x * x).sum();
    if sum_sq == 0.0 {
        return Err(Error::domain("Jain index undefined when all values are zero"));
    }
    Ok(sum * sum / (values.len() as f64 * sum_sq))
}

/// Runs one synchronous iteration: action selection, channel evaluation,
/// rewards and Q-updates. Row sharing is left to the caller.
pub fn step(
    agents: &mut [Agent],
    env: &Environment,
    actions: &ActionSet,
    reward: &dyn RewardFunction,
    params: &LearningParams,
    iteration: usize,
) -> Result<IterationRecord> {
    debug_assert_eq!(agents.len(), env.femtocells());
    let eps = epsilon_at(iteration, params);
    let chosen: Vec<usize> = agents
        .iter_mut()
        .map(|a| select_action(a.table.row(a.row), eps, &mut a.rng))
        .collect();
    let powers_mw: Vec<f64> = chosen.iter().map(|&k| actions.mw(k)).collect();
    let caps = env.evaluate(&powers_mw);

    let mut rewards = Vec::with_capacity(agents.len());
    let mut max_q_delta = 0.0f64;
    for (i, agent) in agents.iter_mut().enumerate() {
        let r = reward.reward(&RewardInputs {
            c_fue: caps.c_fue[i],
            c_mue: caps.c_mue,
            beta: agent.beta,
            q_fue: env.q_fue[i],
            q_mue: env.q_mue,
        });
        let delta = q_update(&mut agent.table, agent.row, chosen[i], r, agent.row, params)?;
        max_q_delta = max_q_delta.max(delta.abs());
        rewards.push(r);
    }

    Ok(IterationRecord {
        iteration,
        agent_ids: agents.iter().map(|a| a.id).collect(),
        powers_dbm: chosen.iter().map(|&k| actions.dbm(k)).collect(),
        actions: chosen,
        c_mue: caps.c_mue,
        c_fue: caps.c_fue,
        rewards,
        max_q_delta,
        policy_changes: 0,
    })
}

/// Replaces the active row of every agent that shares its state with at
/// least one other agent by the group mean. Returns the largest entry change.
pub fn share_rows(agents: &mut [Agent]) -> f64 {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, a) in agents.iter().enumerate() {
        groups.entry(a.row).or_default().push(k);
    }
    let mut max_change = 0.0f64;
    for (row, members) in groups {
        if members.len() < 2 {
            continue;
        }
        let first = agents[members[0]].table.row(row);
        if members[1..]
            .iter()
            .all(|&k| agents[k].table.row(row) == first)
        {
            continue;
        }
        let mean = mean_row(members.iter().map(|&k| agents[k].table.row(row)));
        for &k in &members {
            let dst = agents[k].table.row_mut(row);
            for (d, m) in dst.iter_mut().zip(&mean) {
                max_change = max_change.max((*d - m).abs());
                *d = *m;
            }
        }
    }
    max_change
}

fn mean_row<'a>(rows: impl Iterator<Item = &'a [f64]>) -> Vec<f64> {
    let mut sum: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for r in rows {
        if sum.is_empty() {
            sum = r.to_vec();
        } else {
            for (s, v) in sum.iter_mut().zip(r) {
                *s += v;
            }
        }
        n += 1;
    }
    sum.iter_mut().for_each(|s| *s /= n as f64);
    sum
}

/// Static, fully resolved scenario: placements, action set, reward.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub topology: Topology,
    pub actions: ActionSet,
    pub reward: Arc<dyn RewardFunction>,
    noise: NoisePower,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let topology = match &config.topology {
            Some(t) => t.subset(&(0..config.phases.m_max).collect::<Vec<_>>()),
            None => generate_layout(config.phases.m_max, &config.layout, config.seed)?,
        };
        Self::with_topology(config, topology)
    }

    /// Uses `topology` as-is, ignoring the layout generator.
    pub fn with_topology(config: ScenarioConfig, topology: Topology) -> Result<Self> {
        config.validate()?;
        topology.validate(config.layout.fue_radius)?;
        let p = &config.power;
        let actions = make_action_set(p.p_min_dbm, p.p_max_dbm, p.n_power)?;
        let reward = config.reward.build()?;
        let noise = NoisePower::from_dbm(p.noise_dbm)?;
        Ok(Scenario {
            config,
            topology,
            actions,
            reward,
            noise,
        })
    }

    pub fn radii(&self) -> &RingRadii {
        &self.config.rings
    }

    pub fn params(&self) -> &LearningParams {
        &self.config.learning
    }

    /// Fresh zero-initialized agent for FBS `id`.
    pub fn agent(&self, id: usize) -> Result<Agent> {
        let fbs = *self.topology.fbs.get(id).ok_or(Error::OutOfRange {
            index: id,
            len: self.topology.len(),
        })?;
        let radii = self.radii();
        let state = agent_state(fbs, self.topology.mbs, self.topology.mue, radii)?;
        Ok(Agent {
            id,
            state,
            row: state.index(radii),
            beta: topology::beta(fbs, self.topology.mue, self.config.d_th)?,
            table: QTable::zeros(radii.state_count(), self.actions.len()),
            rng: agent_rng(self.config.seed, id),
        })
    }

    pub fn environment(&self, ids: &[usize]) -> Result<Environment> {
        let sub = self.topology.subset(ids);
        Ok(Environment {
            gains: build_gain_matrix(&sub, &self.config.pathloss)?,
            p_bs_mw: dbm_to_mw(self.config.power.p_bs_dbm),
            noise: self.noise,
            q_mue: self.config.qos.q_mue,
            q_fue: ids.iter().map(|&i| self.config.qos.fue(i)).collect(),
        })
    }

    /// Seed agents first, the rest in a seeded random order.
    pub fn admission_order(&self) -> Vec<usize> {
        let m = self.topology.len();
        let seeds = self.config.phases.seed_agents.min(m);
        let mut order: Vec<usize> = (0..m).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(0);
        order[seeds..].shuffle(&mut rng);
        order
    }

    /// Greedy joint action of `agents` and the resulting summary.
    pub fn summarize(
        &self,
        agents: &[Agent],
        env: &Environment,
        phase: PhaseKind,
        iterations_to_converge: Option<usize>,
        iterations_run: usize,
    ) -> Result<DensitySummary> {
        let actions: Vec<usize> = agents.iter().map(Agent::greedy_action).collect();
        let powers_mw: Vec<f64> = actions.iter().map(|&k| self.actions.mw(k)).collect();
        let caps = env.evaluate(&powers_mw);
        let qos_satisfied = caps.c_mue >= env.q_mue
            && caps.c_fue.iter().zip(&env.q_fue).all(|(c, q)| c >= q);
        let jain = jain_index(&caps.c_fue).unwrap_or(0.0);
        Ok(DensitySummary {
            m: agents.len(),
            phase,
            agent_ids: agents.iter().map(|a| a.id).collect(),
            powers_dbm: actions.iter().map(|&k| self.actions.dbm(k)).collect(),
            min_fue_capacity: caps.c_fue.iter().copied().fold(f64::INFINITY, f64::min),
            sum_capacity: caps.sum_fue(),
            c_mue: caps.c_mue,
            c_fue: caps.c_fue,
            jain,
            iterations_to_converge,
            iterations_run,
            qos_satisfied,
        })
    }

    /// Runs the active agents until convergence or the iteration budget.
    pub fn train(
        &self,
        agents: &mut [Agent],
        phase: PhaseKind,
        share: bool,
    ) -> Result<DensityTrace> {
        let ids: Vec<usize> = agents.iter().map(|a| a.id).collect();
        let env = self.environment(&ids)?;
        let params = self.params();
        let stride = self.config.output.trace_stride;
        let mut monitor = ConvergenceMonitor::new(self.config.convergence);
        let mut records = Vec::new();
        let mut converged = None;
        let mut ran = 0;
        let mut before: Vec<f64> = Vec::new();
        let mut policy: Vec<usize> = agents.iter().map(Agent::greedy_action).collect();

        for t in 0..params.max_iterations {
            if share {
                before.clear();
                for a in agents.iter() {
                    before.extend_from_slice(a.active_row());
                }
            }
            let mut record = step(agents, &env, &self.actions, &*self.reward, params, t)?;
            if share {
                share_rows(agents);
                let n = self.actions.len();
                let delta = agents
                    .iter()
                    .enumerate()
                    .flat_map(|(k, a)| {
                        a.active_row()
                            .iter()
                            .zip(&before[k * n..(k + 1) * n])
                            .map(|(x, y)| (x - y).abs())
                    })
                    .fold(0.0f64, f64::max);
                record.max_q_delta = delta;
            }
            for (p, a) in policy.iter_mut().zip(agents.iter()) {
                let g = a.greedy_action();
                if g != *p {
                    record.policy_changes += 1;
                    *p = g;
                }
            }
            ran = t + 1;
            let signal = match self.config.convergence.signal {
                ConvergenceSignal::QDelta => record.max_q_delta,
                ConvergenceSignal::GreedyPolicy => record.policy_changes as f64,
            };
            let done = monitor.push(signal);
            if stride > 0 && (t % stride == 0 || done || ran == params.max_iterations) {
                records.push(record);
            }
            if done {
                converged = Some(ran);
                break;
            }
        }

        let summary = self.summarize(agents, &env, phase, converged, ran)?;
        Ok(DensityTrace {
            phase: Phase {
                kind: phase,
                active_agents: ids,
            },
            records,
            summary,
        })
    }

    /// Independent learning of the first `count` admitted agents from zero
    /// tables, without any sharing.
    pub fn run_individual_phase(&self, count: usize) -> Result<(Vec<Agent>, DensityTrace)> {
        if count == 0 {
            return Err(Error::domain("individual phase needs at least one agent"));
        }
        let order = self.admission_order();
        let mut agents = order[..count.min(order.len())]
            .iter()
            .map(|&id| self.agent(id))
            .collect::<Result<Vec<_>>>()?;
        let trace = self.train(&mut agents, PhaseKind::Individual, false)?;
        Ok((agents, trace))
    }

    /// New agent for FBS `id` whose active row is the mean of the active rows
    /// of same-state `peers`, or zeros if none share its state.
    pub fn admit(&self, peers: &[Agent], id: usize) -> Result<Agent> {
        let mut newcomer = self.agent(id)?;
        let rows: Vec<&[f64]> = peers
            .iter()
            .filter(|a| a.row == newcomer.row)
            .map(Agent::active_row)
            .collect();
        if !rows.is_empty() {
            let init = mean_row(rows.into_iter());
            newcomer.table.row_mut(newcomer.row).copy_from_slice(&init);
        }
        Ok(newcomer)
    }

    /// Admits the remaining agents one by one, training after each admission.
    pub fn run_cooperative_phase(&self, mut agents: Vec<Agent>) -> Result<Vec<DensityTrace>> {
        let order = self.admission_order();
        let phases = &self.config.phases;
        let mut traces = Vec::new();
        for &id in order.iter().skip(agents.len()) {
            let newcomer = if phases.warm_start {
                self.admit(&agents, id)?
            } else {
                self.agent(id)?
            };
            agents.push(newcomer);
            traces.push(self.train(&mut agents, PhaseKind::Cooperative, phases.share_rows)?);
        }
        Ok(traces)
    }

    /// Full density sweep, `M = 1..=m_max`.
    pub fn run(&self) -> Result<RunTrace> {
        let seeds = self.config.phases.seed_agents.min(self.topology.len());
        let mut densities = Vec::new();
        let mut trained = Vec::new();
        for k in 1..=seeds {
            let (agents, trace) = self.run_individual_phase(k)?;
            densities.push(trace);
            trained = agents;
        }
        densities.extend(self.run_cooperative_phase(trained)?);
        Ok(RunTrace {
            seed: self.config.seed,
            admission_order: self.admission_order(),
            densities,
        })
    }
}

/// Convenience wrapper: resolve the scenario and run the full sweep.
pub fn run_experiment(config: &ScenarioConfig) -> Result<RunTrace> {
    Scenario::new(config.clone())?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sinr_fue, sinr_mue};
    use crate::topology::Position;
    use proptest::prelude::*;

    fn small_config(m_max: usize) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.phases.m_max = m_max;
        cfg.phases.seed_agents = 2.min(m_max);
        cfg.learning.max_iterations = 3000;
        cfg.output.trace_stride = 1;
        cfg
    }

    fn agent_with_row(id: usize, row: usize, values: &[f64]) -> Agent {
        let mut table = QTable::zeros(4, values.len());
        table.row_mut(row).copy_from_slice(values);
        Agent {
            id,
            state: AgentState { d_mbs: 0, d_mue: row },
            row,
            beta: Beta::new(1.0).unwrap(),
            table,
            rng: agent_rng(0, id),
        }
    }

    #[test]
    fn jain_values() {
        assert_eq!(jain_index(&[2.5, 2.5, 2.5]).unwrap(), 1.0);
        assert_eq!(jain_index(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 0.25);
        assert!((jain_index(&[1.0, 2.0, 3.0]).unwrap() - 6.0 / 7.0).abs() < 1e-12);
        assert!(jain_index(&[0.0, 0.0]).is_err());
        assert!(jain_index(&[]).is_err());
    }

    #[test]
    fn sharing_averages_same_state_rows() {
        let mut agents = vec![
            agent_with_row(0, 1, &[0.0, 2.0]),
            agent_with_row(1, 1, &[2.0, 0.0]),
            agent_with_row(2, 3, &[5.0, 7.0]),
        ];
        share_rows(&mut agents);
        assert_eq!(agents[0].active_row(), &[1.0, 1.0]);
        assert_eq!(agents[1].active_row(), &[1.0, 1.0]);
        assert_eq!(agents[2].active_row(), &[5.0, 7.0]);
        let snapshot: Vec<QTable> = agents.iter().map(|a| a.table.clone()).collect();
        assert_eq!(share_rows(&mut agents), 0.0);
        assert_eq!(snapshot, agents.iter().map(|a| a.table.clone()).collect::<Vec<_>>());
    }

    #[test]
    fn distinct_states_untouched() {
        let mut agents = vec![
            agent_with_row(0, 0, &[1.0, 2.0]),
            agent_with_row(1, 1, &[3.0, 4.0]),
            agent_with_row(2, 2, &[5.0, 6.0]),
        ];
        let before: Vec<QTable> = agents.iter().map(|a| a.table.clone()).collect();
        assert_eq!(share_rows(&mut agents), 0.0);
        assert_eq!(before, agents.iter().map(|a| a.table.clone()).collect::<Vec<_>>());
    }

    #[test]
    fn convergence_detector() {
        let c = ConvergenceCriterion {
            window: 3,
            tolerance: 1e-3,
            ..Default::default()
        };
        assert!(detect_convergence(&[0.0, 0.0, 0.0], &c));
        assert!(!detect_convergence(&[0.0, 0.0], &c));
        assert!(!detect_convergence(&[0.0, 0.0, 1e-3], &c));
        assert!(detect_convergence(&[5.0, 0.0, 0.0, 0.0], &c));
    }

    #[test]
    fn frozen_learning_converges_after_one_window() {
        for signal in [ConvergenceSignal::QDelta, ConvergenceSignal::GreedyPolicy] {
            let mut cfg = small_config(3);
            cfg.learning.alpha = 0.0;
            cfg.convergence.signal = signal;
            let s = Scenario::new(cfg).unwrap();
            let trace = s.run().unwrap();
            for d in &trace.densities {
                assert_eq!(d.summary.iterations_to_converge, Some(500));
            }
        }
    }

    #[test]
    fn first_step_single_agent() {
        let mut cfg = small_config(1);
        cfg.layout.mue_offset = Position::new(17.5, 17.5);
        cfg.learning.epsilon = 0.0;
        let s = Scenario::new(cfg).unwrap();
        let mut agents = vec![s.agent(0).unwrap()];
        let env = s.environment(&[0]).unwrap();
        let rec = step(&mut agents, &env, &s.actions, &*s.reward, s.params(), 0).unwrap();
        assert_eq!(rec.actions, vec![0]);
        assert_eq!(rec.powers_dbm, vec![-20.0]);
        assert!(rec.rewards[0].is_finite());
        assert_ne!(agents[0].table.get(agents[0].row, 0), 0.0);
    }

    #[test]
    fn one_update_per_agent_per_step() {
        let s = Scenario::new(small_config(5)).unwrap();
        let ids: Vec<usize> = (0..5).collect();
        let mut agents: Vec<Agent> = ids.iter().map(|&i| s.agent(i).unwrap()).collect();
        // nonzero start so every update visibly changes its entry
        for a in &mut agents {
            let row = a.row;
            a.table.row_mut(row).iter_mut().for_each(|q| *q = 1e3);
        }
        let before: Vec<QTable> = agents.iter().map(|a| a.table.clone()).collect();
        let env = s.environment(&ids).unwrap();
        step(&mut agents, &env, &s.actions, &*s.reward, s.params(), 0).unwrap();
        let changed: usize = agents
            .iter()
            .zip(&before)
            .map(|(a, b)| {
                a.table
                    .as_flat()
                    .iter()
                    .zip(b.as_flat())
                    .filter(|(x, y)| x != y)
                    .count()
            })
            .sum();
        assert_eq!(changed, 5);
    }

    #[test]
    fn recorded_capacities_recompute() {
        let s = Scenario::new(small_config(4)).unwrap();
        let trace = s.run().unwrap();
        let noise = NoisePower::from_dbm(s.config.power.noise_dbm).unwrap();
        let p_bs = dbm_to_mw(s.config.power.p_bs_dbm);
        for d in &trace.densities {
            let env = s.environment(&d.phase.active_agents).unwrap();
            for r in &d.records {
                let p: Vec<f64> = r.powers_dbm.iter().map(|&x| dbm_to_mw(x)).collect();
                let c_mue = (1.0 + sinr_mue(p_bs, &p, &env.gains, noise)).log2();
                assert!((c_mue - r.c_mue).abs() <= 1e-12 * c_mue.abs().max(1.0));
                for i in 0..p.len() {
                    let c = (1.0 + sinr_fue(i, p_bs, &p, &env.gains, noise).unwrap()).log2();
                    assert!((c - r.c_fue[i]).abs() <= 1e-12 * c.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn sweep_bookkeeping() {
        let s = Scenario::new(small_config(5)).unwrap();
        let trace = s.run().unwrap();
        let ms: Vec<usize> = trace.summaries().map(|d| d.m).collect();
        assert_eq!(ms, vec![1, 2, 3, 4, 5]);
        assert_eq!(trace.densities[0].phase.kind, PhaseKind::Individual);
        assert_eq!(trace.densities[1].phase.kind, PhaseKind::Individual);
        assert_eq!(trace.densities[2].phase.kind, PhaseKind::Cooperative);
        let mut order = trace.admission_order.clone();
        assert_eq!(&order[..2], &[0, 1]);
        order.sort();
        assert_eq!(order, vec![0, 1, 2, 3, 4]);
        for d in &trace.densities {
            assert!(d.records.len() <= s.params().max_iterations);
            assert!((0.0..=1.0).contains(&d.summary.jain));
        }
    }

    #[test]
    fn rerun_is_bit_identical() {
        let cfg = small_config(4);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn newcomer_initialization() {
        let s = Scenario::new(small_config(5)).unwrap();
        let agents: Vec<Agent> = (0..5).map(|i| s.agent(i).unwrap()).collect();
        let target = &agents[4];
        let mut peers: Vec<Agent> = agents[..4].to_vec();
        for (k, p) in peers.iter_mut().enumerate() {
            let row = p.row;
            p.table.row_mut(row).iter_mut().for_each(|q| *q = k as f64 + 1.0);
        }
        let same: Vec<&Agent> = peers.iter().filter(|p| p.row == target.row).collect();
        let admitted = s.admit(&peers, 4).unwrap();
        if same.is_empty() {
            assert!(admitted.active_row().iter().all(|&q| q == 0.0));
        } else {
            let mean = same.iter().map(|p| p.active_row()[0]).sum::<f64>() / same.len() as f64;
            assert!(admitted.active_row().iter().all(|&q| q == mean));
        }

        // exactly one same-state peer: copied verbatim
        let lone = peers.iter().find(|p| p.row == target.row).cloned();
        if let Some(peer) = lone {
            let admitted = s.admit(std::slice::from_ref(&peer), 4).unwrap();
            assert_eq!(admitted.active_row(), peer.active_row());
        }
        // no peers at all: zeros
        let admitted = s.admit(&[], 4).unwrap();
        assert!(admitted.table.as_flat().iter().all(|&q| q == 0.0));
    }

    #[test]
    fn constraint_report() {
        let rec = IterationRecord {
            iteration: 0,
            agent_ids: vec![0, 1],
            actions: vec![0, 1],
            powers_dbm: vec![-20.0, 25.0],
            c_mue: 1.0,
            c_fue: vec![1.2, 0.99],
            rewards: vec![0.0, 0.0],
            max_q_delta: 0.0,
            policy_changes: 0,
        };
        let report = check_constraints(&rec, &QosThresholds::uniform(1.0), 25.0);
        assert!(report.mue_qos);
        assert_eq!(report.fue_qos, vec![true, false]);
        assert_eq!(report.power, vec![true, true]);
        assert!(!report.all_satisfied());
    }

    proptest! {
        #[test]
        fn sharing_preserves_group_mean(
            rows in proptest::collection::vec(proptest::collection::vec(-100.0f64..100.0, 4), 2..6),
            states in proptest::collection::vec(0usize..3, 6),
        ) {
            let mut agents: Vec<Agent> = rows.iter().enumerate()
                .map(|(k, r)| agent_with_row(k, states[k], r)).collect();
            let before: Vec<QTable> = agents.iter().map(|a| a.table.clone()).collect();
            let means_before: BTreeMap<usize, Vec<f64>> = (0..3).filter_map(|s| {
                let rs: Vec<&[f64]> = agents.iter().filter(|a| a.row == s).map(|a| a.active_row()).collect();
                (!rs.is_empty()).then(|| (s, mean_row(rs.into_iter())))
            }).collect();
            share_rows(&mut agents);
            for (s, m) in &means_before {
                let rs: Vec<&[f64]> = agents.iter().filter(|a| a.row == *s).map(|a| a.active_row()).collect();
                let after = mean_row(rs.into_iter());
                for (x, y) in after.iter().zip(m) {
                    prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
                }
            }
            // only active rows may change
            for (a, b) in agents.iter().zip(&before) {
                for r in 0..4 {
                    if r != a.row {
                        prop_assert_eq!(a.table.row(r), b.row(r));
                    }
                }
            }
        }

        #[test]
        fn monitor_matches_detector(deltas in proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..2e-3], 1..60)) {
            let c = ConvergenceCriterion { window: 5, tolerance: 1e-3, ..Default::default() };
            let mut m = ConvergenceMonitor::new(c);
            for k in 0..deltas.len() {
                let fired = m.push(deltas[k]);
                prop_assert_eq!(fired, detect_convergence(&deltas[..=k], &c));
            }
        }
    }
}

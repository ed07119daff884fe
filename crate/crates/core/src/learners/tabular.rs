use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::discretize::StateKey;
use crate::error::{Error, Result};
use crate::percept::JointAction;

pub const N_ACTIONS: usize = JointAction::COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub s: StateKey,
    pub a: usize,
    pub r: f64,
    pub s_next: StateKey,
    /// No bootstrap from `s_next`.
    pub done: bool,
}

/// Bounded FIFO of transitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, items: VecDeque::with_capacity(capacity.min(1 << 16)) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Append, evicting the oldest entry when full.
    pub fn push(&mut self, t: Transition) {
        if self.capacity == 0 {
            return;
        }
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Uniform draws with replacement.
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<Transition> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| self.items[rng.random_range(0..self.items.len())]).collect()
    }
}

/// Tabular learner hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QParams {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    /// Multiplied into epsilon at the end of each episode.
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    /// Updates between target-table refreshes.
    pub target_period: u64,
    pub buffer_capacity: usize,
    /// Replayed transitions per environment step.
    pub replay_batch: usize,
}

impl Default for QParams {
    fn default() -> Self {
        Self {
            alpha: 3e-4,
            gamma: 0.98,
            epsilon: 1.0,
            epsilon_decay: 0.99,
            epsilon_min: 0.05,
            target_period: 100,
            buffer_capacity: 100_000,
            replay_batch: 0,
        }
    }
}

impl QParams {
    /// Same schedule with a step size that moves a table within minutes.
    pub fn fast() -> Self {
        Self { alpha: 0.1, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config("alpha must lie in (0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config("gamma must lie in [0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) || !(0.0..=1.0).contains(&self.epsilon_min) {
            return Err(Error::Config("epsilon and epsilon_min must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon_decay) {
            return Err(Error::Config("epsilon_decay must lie in [0, 1]".into()));
        }
        if self.target_period == 0 {
            return Err(Error::Config("target_period must be positive".into()));
        }
        Ok(())
    }
}

/// Action-value table over (state key, action). Unseen entries read as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularQ {
    pub params: QParams,
    pub epsilon: f64,
    table: HashMap<StateKey, [f64; N_ACTIONS]>,
    target: HashMap<StateKey, [f64; N_ACTIONS]>,
    updates: u64,
    pub buffer: ReplayBuffer,
}

impl TabularQ {
    pub fn new(params: QParams) -> Self {
        Self {
            epsilon: params.epsilon,
            buffer: ReplayBuffer::new(params.buffer_capacity),
            params,
            table: HashMap::new(),
            target: HashMap::new(),
            updates: 0,
        }
    }

    pub fn q(&self, s: StateKey, a: usize) -> f64 {
        self.table.get(&s).map_or(0.0, |row| row[a])
    }

    pub fn row(&self, s: StateKey) -> [f64; N_ACTIONS] {
        self.table.get(&s).copied().unwrap_or([0.0; N_ACTIONS])
    }

    pub fn set(&mut self, s: StateKey, a: usize, value: f64) {
        self.table.entry(s).or_insert([0.0; N_ACTIONS])[a] = value;
    }

    pub fn target_max(&self, s: StateKey) -> f64 {
        self.target.get(&s).map_or(0.0, |row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Lowest-index argmax of the online row.
    pub fn greedy(&self, s: StateKey) -> usize {
        argmax(&self.row(s))
    }

    pub fn end_episode(&mut self) {
        self.epsilon = (self.epsilon * self.params.epsilon_decay).max(self.params.epsilon_min);
    }

    pub(crate) fn add(&mut self, s: StateKey, a: usize, delta: f64) {
        self.table.entry(s).or_insert([0.0; N_ACTIONS])[a] += delta;
    }

    pub(crate) fn count_update(&mut self) {
        self.updates += 1;
        if self.updates.is_multiple_of(self.params.target_period) {
            self.target.clone_from(&self.table);
        }
    }

    pub fn sync_target(&mut self) {
        self.target.clone_from(&self.table);
    }

    /// Sorted `key action value` lines, one per stored entry.
    pub fn write_table<W: Write>(&self, mut w: W) -> Result<()> {
        let mut keys: Vec<_> = self.table.keys().copied().collect();
        keys.sort_unstable();
        writeln!(w, "# key action value")?;
        for k in keys {
            for (a, q) in self.table[&k].iter().enumerate() {
                writeln!(w, "{k} {a} {q:e}")?;
            }
        }
        Ok(())
    }

    /// Inverse of [`write_table`](Self::write_table). The target table starts as a copy.
    pub fn read_table<R: BufRead>(r: R, params: QParams) -> Result<Self> {
        let mut q = Self::new(params);
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Config(format!("table line {}: expected `key action value`", i + 1));
            let mut parts = line.split_whitespace();
            let k: StateKey = parts.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
            let a: usize = parts.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
            let v: f64 = parts.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
            if a >= N_ACTIONS || parts.next().is_some() {
                return Err(bad());
            }
            q.set(k, a, v);
        }
        q.sync_target();
        Ok(q)
    }
}

pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// One Q-learning step toward `r + gamma * max_a' Q_target(s', a')`.
/// Returns the TD error.
pub fn iql_update(q: &mut TabularQ, t: &Transition) -> f64 {
    let bootstrap = if t.done { 0.0 } else { q.params.gamma * q.target_max(t.s_next) };
    let delta = t.r + bootstrap - q.q(t.s, t.a);
    q.add(t.s, t.a, q.params.alpha * delta);
    q.count_update();
    delta
}

/// Epsilon-greedy with lowest-index tie-break.
pub fn select_action<R: Rng>(q: &TabularQ, s: StateKey, rng: &mut R) -> usize {
    if q.epsilon > 0.0 && rng.random::<f64>() < q.epsilon {
        rng.random_range(0..N_ACTIONS)
    } else {
        q.greedy(s)
    }
}

/// Additive mixing of per-agent values.
pub fn vdn_target(per_agent_q: &[f64]) -> f64 {
    per_agent_q.iter().sum()
}

/// Joint update of several agents sharing one table and one team reward.
/// The joint TD error is applied unchanged to each agent's entry.
pub fn vdn_update(q: &mut TabularQ, agents: &[(StateKey, usize, StateKey, bool)], team_reward: f64) -> f64 {
    if agents.is_empty() {
        return 0.0;
    }
    let current: Vec<f64> = agents.iter().map(|&(s, a, _, _)| q.q(s, a)).collect();
    let next: Vec<f64> =
        agents.iter().map(|&(_, _, s2, done)| if done { 0.0 } else { q.target_max(s2) }).collect();
    let delta = team_reward + q.params.gamma * vdn_target(&next) - vdn_target(&current);
    for &(s, a, _, _) in agents {
        q.add(s, a, q.params.alpha * delta);
    }
    q.count_update();
    delta
}

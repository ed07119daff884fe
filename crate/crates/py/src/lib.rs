//! Python bindings. Structured results cross the boundary as JSON and are
//! decoded with the standard `json` module.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use mixflow::harness::{equivalence_reports, train_cell, ExperimentConfig};
use mixflow::lab::{FiniteMdp, ValueBundle};
use mixflow::percept::JointAction;
use mixflow::rewards::{self, PositionRewardForm, PotentialFieldParams, RewardEngine, RewardSettings};
use mixflow::world::{self as world, IdlePolicy, Policy, RoadConfig, UniformRandomPolicy, VehicleId};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn road_from(config: Option<&str>) -> PyResult<RoadConfig> {
    let cfg: RoadConfig = match config {
        Some(text) => serde_json::from_str(text).map_err(err)?,
        None => RoadConfig::default(),
    };
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// Simulation environment with a reward engine attached.
#[pyclass(module = "mixflow")]
struct Env {
    inner: world::Env,
    rewards: RewardEngine,
}

#[pymethods]
impl Env {
    /// `config` is a JSON road config; `rewards` a JSON reward settings document.
    #[new]
    #[pyo3(signature = (config=None, seed=0, rewards=None))]
    fn new(config: Option<&str>, seed: u64, rewards: Option<&str>) -> PyResult<Self> {
        let settings: RewardSettings = match rewards {
            Some(text) => serde_json::from_str(text).map_err(err)?,
            None => RewardSettings::default(),
        };
        settings.validate().map_err(err)?;
        let inner = world::Env::new(road_from(config)?, seed).map_err(err)?;
        Ok(Self { inner, rewards: RewardEngine::new(settings) })
    }

    #[getter]
    fn tick(&self) -> u64 {
        self.inner.tick()
    }

    fn is_done(&self) -> bool {
        self.inner.is_done()
    }

    /// Ids of the CAVs that act this tick.
    fn agents(&self) -> Vec<u64> {
        self.inner.agents().into_iter().map(|id| id.0).collect()
    }

    /// Flat observation vector of one agent.
    fn observe(&self, agent: u64) -> PyResult<Vec<f64>> {
        Ok(self.inner.observe(VehicleId(agent)).map_err(err)?.to_vec())
    }

    /// Advance one tick. `actions` maps agent id to an action index in 0..9;
    /// missing agents idle. Returns the tick events and rewards as a dict.
    #[pyo3(signature = (actions=None))]
    fn step<'py>(&mut self, py: Python<'py>, actions: Option<BTreeMap<u64, usize>>) -> PyResult<Bound<'py, PyAny>> {
        let mut commands = BTreeMap::new();
        for (id, a) in actions.unwrap_or_default() {
            let action = JointAction::from_index(a).ok_or_else(|| err(format!("action {a} out of range")))?;
            commands.insert(VehicleId(id), action);
        }
        let events = self.inner.step(&commands).map_err(err)?;
        let r = self.rewards.evaluate(self.inner.state(), &events, self.inner.config());
        let summary = serde_json::json!({
            "tick": events.tick,
            "spawned": events.spawned,
            "lane_changes": events.lane_changes,
            "collisions": events.collisions,
            "exits": events.exits,
            "newly_satisfied": events.newly_satisfied,
            "rewards": r,
        });
        to_py(py, &summary)
    }

    /// Alive vehicles as a list of dicts.
    fn vehicles<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let rows: Vec<_> = self
            .inner
            .state()
            .alive()
            .map(|v| serde_json::json!({"id": v.id, "kind": v.kind, "lane": v.lane, "p_lon": v.p_lon, "v": v.v, "goal": v.goal}))
            .collect();
        to_py(py, &rows)
    }
}

/// Roll out one episode with a built-in policy ("random" or "idle"); returns JSONL.
#[pyfunction]
#[pyo3(signature = (config=None, seed=0, policy="random"))]
fn run_episode(config: Option<&str>, seed: u64, policy: &str) -> PyResult<String> {
    let cfg = road_from(config)?;
    let mut p: Box<dyn Policy> = match policy {
        "random" => Box::new(UniformRandomPolicy::new(seed)),
        "idle" => Box::new(IdlePolicy),
        other => return Err(err(format!("unknown policy {other:?}"))),
    };
    let trace = world::run_episode(&cfg, p.as_mut(), seed).map_err(err)?;
    trace.to_jsonl().map_err(err)
}

#[pyfunction]
fn potential(x: f64, y: f64, sigma: f64, zeta: f64, l: f64, y_tar: f64) -> f64 {
    rewards::potential(x, y, &PotentialFieldParams { sigma, zeta, l, y_tar })
}

/// `(df/dx, df/dy)`; `df/dy` is None on the target lane.
#[pyfunction]
fn potential_gradient(x: f64, y: f64, sigma: f64, zeta: f64, l: f64, y_tar: f64) -> (f64, Option<f64>) {
    let g = rewards::potential_gradient(x, y, &PotentialFieldParams { sigma, zeta, l, y_tar });
    (g.dx, g.dy)
}

/// Position reward; `vy` is +1 for a move left, `form` is "discrete" or "analytic".
#[pyfunction]
#[pyo3(signature = (vx, vy, x, y, sigma, zeta, l, y_tar, form="discrete"))]
#[allow(clippy::too_many_arguments)]
fn position_reward(vx: f64, vy: i8, x: f64, y: f64, sigma: f64, zeta: f64, l: f64, y_tar: f64, form: &str) -> PyResult<f64> {
    let form = match form {
        "discrete" => PositionRewardForm::Discrete,
        "analytic" => PositionRewardForm::Analytic,
        other => return Err(err(format!("unknown form {other:?}"))),
    };
    if !(-1..=1).contains(&vy) {
        return Err(err("vy must be -1, 0 or 1"));
    }
    Ok(rewards::position_reward(form, vx, vy, x, y, &PotentialFieldParams { sigma, zeta, l, y_tar }))
}

/// Value families of a finite MDP. `p` is `[s][a][s']`, `r` and `policy` are `[s][a]`.
#[pyfunction]
fn mdp_values<'py>(
    py: Python<'py>,
    p: Vec<Vec<Vec<f64>>>,
    r: Vec<Vec<f64>>,
    policy: Vec<Vec<f64>>,
    gamma: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let n = p.len();
    let m = p.first().map_or(0, Vec::len);
    let mdp = FiniteMdp::new(
        n,
        m,
        p.into_iter().flatten().flatten().collect(),
        r.into_iter().flatten().collect(),
        policy.into_iter().flatten().collect(),
    )
    .map_err(err)?;
    let b = ValueBundle::compute(&mdp, gamma).map_err(err)?;
    to_py(
        py,
        &serde_json::json!({
            "gamma": b.gamma,
            "average_reward": b.r_pi,
            "stationary": b.mu.as_slice(),
            "discounted": b.h_gamma.as_slice(),
            "differential": b.h_tilde.as_slice(),
            "centered_discounted": b.h_tilde_gamma.as_slice(),
            "decomposition_error": b.decomposition_error(),
        }),
    )
}

/// Train one cell from a JSON experiment config; returns the curve and final metrics.
#[pyfunction]
#[pyo3(signature = (config, seed=None))]
fn train<'py>(py: Python<'py>, config: &str, seed: Option<u64>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = ExperimentConfig::from_json(config).map_err(err)?;
    let seed = seed.unwrap_or(cfg.seeds[0]);
    let out = py.detach(|| train_cell(&cfg, seed)).map_err(err)?;
    to_py(py, &serde_json::json!({ "seed": out.seed, "curve": out.curve, "final": out.final_metrics, "table_size": out.q.len() }))
}

/// The reference equivalence chains.
#[pyfunction]
#[pyo3(signature = (n_steps=1_000_000, seed=0))]
fn equivalence<'py>(py: Python<'py>, n_steps: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let reports = py.detach(|| equivalence_reports(n_steps, seed)).map_err(err)?;
    let map: BTreeMap<&str, _> = reports.into_iter().collect();
    to_py(py, &map)
}

#[pymodule(name = "mixflow")]
fn mixflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Env>()?;
    m.add_function(wrap_pyfunction!(run_episode, m)?)?;
    m.add_function(wrap_pyfunction!(potential, m)?)?;
    m.add_function(wrap_pyfunction!(potential_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(position_reward, m)?)?;
    m.add_function(wrap_pyfunction!(mdp_values, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(equivalence, m)?)?;
    m.add("N_ACTIONS", JointAction::COUNT)?;
    Ok(())
}

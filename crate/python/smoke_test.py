"""Smoke test for the Python bindings.

Install first with `pip install --no-build-isolation ./crates/py`.
"""

import json
import math

import mixflow


def main():
    env = mixflow.Env(json.dumps({"arrival_rate": 1200.0, "penetration": 1.0}), seed=3)
    steps = 0
    while not env.is_done():
        actions = {a: 4 for a in env.agents()}
        for a in actions:
            assert len(env.observe(a)) == len(env.observe(next(iter(actions))))
        out = env.step(actions)
        assert set(out["rewards"]) >= {"general", "centered", "differentiated", "signal"}
        steps += 1
    assert steps == 180, steps

    trace = mixflow.run_episode(seed=5)
    assert len(trace.splitlines()) == 181
    assert trace == mixflow.run_episode(seed=5)

    assert mixflow.potential(250.0, 2.0, 100.0, 1.0, 250.0, 2.0) == 1.0
    peak = mixflow.potential(150.0, 2.0, 100.0, 1.0, 250.0, 2.0)
    assert abs(peak - math.exp(-0.5)) < 1e-12
    assert mixflow.potential_gradient(10.0, 2.0, 100.0, 1.0, 250.0, 2.0)[1] is None
    assert mixflow.position_reward(0.0, 1, 10.0, 3.0, 100.0, 1.0, 250.0, 2.0) > 0.0

    p = [[[0.0, 1.0]], [[1.0, 0.0]]]
    vals = mixflow.mdp_values(p, [[1.0], [3.0]], [[1.0], [1.0]], 0.9)
    assert abs(vals["average_reward"] - 2.0) < 1e-12
    assert vals["decomposition_error"] < 1e-10

    cfg = {
        "version": 1,
        "road": {"road_length": 100.0, "n_lanes": 3, "episode_duration": 3.0, "arrival_rate": 900.0},
        "n_episodes": 3,
        "eval_episodes": 1,
    }
    result = mixflow.train(json.dumps(cfg), seed=1)
    assert len(result["curve"]) == 3
    assert 0.0 <= result["final"]["succ_rate"] <= 1.0

    eq = mixflow.equivalence(n_steps=20000, seed=1)
    assert eq["frozen"]["difference"] == 0.0

    print("python smoke test: ok")


if __name__ == "__main__":
    main()

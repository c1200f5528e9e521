"""Regenerate tests/fixtures/cartpole_trace.json from gymnasium's CartPole-v1.

Only this script needs gymnasium (``pip install -e .[reference]``). The actions
come from a fixed PD-style rule evaluated on the reference state, so the trace
stays upright for the full 500 steps and is replayed verbatim in the tests.
"""

import argparse
import json
from pathlib import Path

import gymnasium as gym
import numpy as np


def scripted_action(state, t):
    x, x_dot, theta, theta_dot = state
    push = theta + 0.5 * theta_dot + 0.05 * x + 0.1 * x_dot
    # an occasional wrong push exercises both branches away from equilibrium
    if t % 17 == 5:
        return int(push <= 0)
    return int(push > 0)


def rollout(policy, initial, steps):
    env = gym.make("CartPole-v1").unwrapped
    env.reset(seed=0)
    env.state = np.array(initial, dtype=np.float64)
    actions, states, terminated = [], [], []
    for t in range(steps):
        a = policy(env.state, t)
        _, reward, term, _, _ = env.step(a)
        assert reward == 1.0
        actions.append(a)
        states.append([float(v) for v in env.state])
        terminated.append(bool(term))
        if term:
            break
    return {"initial_state": [float(v) for v in initial], "actions": actions,
            "states": states, "terminated": terminated}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=Path(__file__).resolve().parents[1] / "tests/fixtures/cartpole_trace.json")
    ap.add_argument("--steps", type=int, default=500)
    args = ap.parse_args()

    traces = {
        "balanced": rollout(scripted_action, [0.01, -0.02, 0.03, 0.04], args.steps),
        "falling": rollout(lambda s, t: 1, [0.0, 0.0, 0.0, 0.0], args.steps),
    }
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w") as fh:
        json.dump({"source": f"gymnasium {gym.__version__} CartPoleEnv (euler integrator)",
                   "traces": traces}, fh, indent=1)
    for name, tr in traces.items():
        print(f"{name}: {len(tr['actions'])} steps, terminated={any(tr['terminated'])}")


if __name__ == "__main__":
    main()

"""CartPole-v1 dynamics, matching the public reference environment step for step."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GRAVITY = 9.8
MASS_CART = 1.0
MASS_POLE = 0.1
TOTAL_MASS = MASS_CART + MASS_POLE
HALF_LENGTH = 0.5
POLEMASS_LENGTH = MASS_POLE * HALF_LENGTH
FORCE_MAG = 10.0
TAU = 0.02
X_THRESHOLD = 2.4
THETA_THRESHOLD = 12 * 2 * math.pi / 360
MAX_STEPS = 500
RESET_BOUND = 0.05


class EpisodeOverError(RuntimeError):
    pass


@dataclass(frozen=True)
class CartPoleState:
    x: float
    x_dot: float
    theta: float
    theta_dot: float
    steps_elapsed: int = 0
    done: bool = False

    def observation(self) -> np.ndarray:
        return np.array((self.x, self.x_dot, self.theta, self.theta_dot), dtype=np.float64)


def reset(rng) -> tuple[CartPoleState, np.ndarray]:
    x, x_dot, theta, theta_dot = rng.uniform(low=-RESET_BOUND, high=RESET_BOUND, size=(4,))
    state = CartPoleState(float(x), float(x_dot), float(theta), float(theta_dot))
    return state, state.observation()


def step(state: CartPoleState, action: int):
    """Advance one explicit-Euler tick.

    Returns ``(next_state, observation, reward, terminated, truncated)``.
    """
    if state.done:
        raise EpisodeOverError("step() called on a finished episode; reset first")
    if action not in (0, 1):
        raise ValueError(f"action must be 0 or 1, got {action!r}")
    x, x_dot, theta, theta_dot = state.x, state.x_dot, state.theta, state.theta_dot
    force = FORCE_MAG if action == 1 else -FORCE_MAG
    # numpy scalar trig so results agree bitwise with the reference
    costheta = float(np.cos(theta))
    sintheta = float(np.sin(theta))
    temp = (force + POLEMASS_LENGTH * (theta_dot * theta_dot) * sintheta) / TOTAL_MASS
    thetaacc = (GRAVITY * sintheta - costheta * temp) / (
        HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * (costheta * costheta) / TOTAL_MASS)
    )
    xacc = temp - POLEMASS_LENGTH * thetaacc * costheta / TOTAL_MASS

    x = x + TAU * x_dot
    x_dot = x_dot + TAU * xacc
    theta = theta + TAU * theta_dot
    theta_dot = theta_dot + TAU * thetaacc

    terminated = bool(x < -X_THRESHOLD or x > X_THRESHOLD
                      or theta < -THETA_THRESHOLD or theta > THETA_THRESHOLD)
    steps = state.steps_elapsed + 1
    truncated = not terminated and steps >= MAX_STEPS
    nxt = CartPoleState(x, x_dot, theta, theta_dot, steps, terminated or truncated)
    return nxt, nxt.observation(), 1.0, terminated, truncated


class CartPoleEnv:
    """Stateful wrapper with the usual ``reset``/``step`` calling convention."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.state: CartPoleState | None = None

    def reset(self) -> np.ndarray:
        self.state, obs = reset(self.rng)
        return obs

    def step(self, action: int):
        if self.state is None:
            raise EpisodeOverError("call reset() before step()")
        self.state, obs, reward, terminated, truncated = step(self.state, int(action))
        return obs, reward, terminated, truncated

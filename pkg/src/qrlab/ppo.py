"""Clipped-surrogate PPO with GAE on a single CartPole environment."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .agents import Agent, AgentKind, Categorical, adam_step, global_norm
from .cartpole import CartPoleEnv


class NonFiniteLossError(FloatingPointError):
    pass


@dataclass(frozen=True)
class PPOConfig:
    total_steps: int = 100_000
    rollout_length: int = 128
    num_epochs: int = 4
    num_minibatches: int = 4
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_coef: float = 0.2
    clip_value_loss: bool = True
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    learning_rate: float = 2.5e-4
    anneal_lr: bool = True
    max_grad_norm: float = 0.5
    adam_eps: float = 1e-5
    norm_adv: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.rollout_length % self.num_minibatches:
            raise ValueError("rollout_length must be divisible by num_minibatches")
        for name in ("gamma", "gae_lambda", "clip_coef", "value_coef", "entropy_coef",
                     "learning_rate", "max_grad_norm", "adam_eps"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if min(self.total_steps, self.rollout_length, self.num_epochs, self.num_minibatches) < 1:
            raise ValueError("step and batch counts must be positive")

    @property
    def num_updates(self) -> int:
        return self.total_steps // self.rollout_length

    @property
    def minibatch_size(self) -> int:
        return self.rollout_length // self.num_minibatches


@dataclass
class RolloutBuffer:
    capacity: int
    obs: np.ndarray = field(init=False)
    actions: np.ndarray = field(init=False)
    log_probs: np.ndarray = field(init=False)
    rewards: np.ndarray = field(init=False)
    dones: np.ndarray = field(init=False)
    values: np.ndarray = field(init=False)
    bootstrap_value: float = 0.0
    size: int = 0
    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None

    def __post_init__(self):
        n = self.capacity
        self.obs = np.zeros((n, 4))
        self.actions = np.zeros(n, dtype=np.int64)
        self.log_probs = np.zeros(n)
        self.rewards = np.zeros(n)
        self.dones = np.zeros(n)
        self.values = np.zeros(n)

    def clear(self) -> None:
        self.size = 0
        self.advantages = self.returns = None

    def add(self, obs, action, log_prob, reward, done, value) -> None:
        if self.size >= self.capacity:
            raise IndexError("rollout buffer full")
        i = self.size
        self.obs[i] = obs
        self.actions[i] = action
        self.log_probs[i] = log_prob
        self.rewards[i] = reward
        self.dones[i] = done
        self.values[i] = value
        self.size += 1


@dataclass
class Cursor:
    """Where an ongoing collection left off between rollouts."""

    obs: np.ndarray | None = None
    episode_return: float = 0.0
    global_step: int = 0


@dataclass
class LearningCurve:
    seed: int
    steps: list[int] = field(default_factory=list)
    returns: list[float] = field(default_factory=list)
    aborted: bool = False
    message: str = ""
    wall_time: float = 0.0
    agent: Agent | None = field(default=None, repr=False, compare=False)


def collect_rollout(env, agent: Agent, buffer: RolloutBuffer, rng: np.random.Generator,
                    cursor: Cursor | None = None, episodes: list | None = None) -> Cursor:
    """Fill ``buffer`` with on-policy transitions, resetting ``env`` on episode ends.

    Completed episodes are appended to ``episodes`` as ``(global_step, return)``.
    """
    if cursor is None:
        cursor = Cursor()
    if cursor.obs is None:
        cursor.obs = env.reset()
    buffer.clear()
    obs = cursor.obs
    for _ in range(buffer.capacity):
        logits, _ = agent.actor_forward(obs)
        value, _ = agent.critic_forward(obs)
        dist = Categorical(logits)
        action = int(dist.sample(rng))
        nxt, reward, terminated, truncated = env.step(action)
        done = terminated or truncated
        buffer.add(obs, action, dist.log_prob(action), reward, float(done), value)
        cursor.global_step += 1
        cursor.episode_return += reward
        if done:
            if episodes is not None:
                episodes.append((cursor.global_step, cursor.episode_return))
            cursor.episode_return = 0.0
            nxt = env.reset()
        obs = nxt
    cursor.obs = obs
    buffer.bootstrap_value = float(agent.critic_forward(obs)[0])
    return cursor


def compute_gae(rewards, values, dones, bootstrap_value: float, gamma: float, lam: float):
    """Return ``(advantages, returns)``; ``dones[t]`` marks an episode ending at ``t``."""
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    n = rewards.shape[0]
    adv = np.zeros(n)
    last = 0.0
    for t in reversed(range(n)):
        next_value = bootstrap_value if t == n - 1 else values[t + 1]
        nonterminal = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * nonterminal - values[t]
        last = delta + gamma * lam * nonterminal * last
        adv[t] = last
    return adv, adv + values


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    if adv.shape[0] < 2:
        return adv - adv.mean()
    return (adv - adv.mean()) / (adv.std(ddof=1) + 1e-8)


def minibatch_loss(agent: Agent, buffer: RolloutBuffer, idx: np.ndarray, config: PPOConfig,
                   need_grad: bool = True):
    """PPO loss on ``idx`` and (optionally) its gradient over every parameter."""
    n = idx.shape[0]
    obs = buffer.obs[idx]
    actions = buffer.actions[idx]
    adv = buffer.advantages[idx]
    if config.norm_adv:
        adv = normalize_advantages(adv)
    ret = buffer.returns[idx]
    old_values = buffer.values[idx]

    logits, a_cache = agent.actor_forward(obs)
    dist = Categorical(logits)
    new_logp = dist.log_prob(actions)
    entropy = dist.entropy()
    log_ratio = new_logp - buffer.log_probs[idx]
    ratio = np.exp(log_ratio)
    eps = config.clip_coef
    pg1 = -adv * ratio
    pg2 = -adv * np.clip(ratio, 1 - eps, 1 + eps)
    pg_loss = np.maximum(pg1, pg2).mean()

    values, c_cache = agent.critic_forward(obs)
    v_unclipped = (values - ret) ** 2
    if config.clip_value_loss:
        delta = np.clip(values - old_values, -eps, eps)
        v_clipped = (old_values + delta - ret) ** 2
        v_loss = 0.5 * np.maximum(v_unclipped, v_clipped).mean()
    else:
        v_loss = 0.5 * v_unclipped.mean()
    ent = entropy.mean()
    loss = pg_loss - config.entropy_coef * ent + config.value_coef * v_loss

    stats = {
        "loss": float(loss),
        "pg_loss": float(pg_loss),
        "v_loss": float(v_loss),
        "entropy": float(ent),
        "approx_kl": float(((ratio - 1) - log_ratio).mean()),
        "clipfrac": float((np.abs(ratio - 1.0) > eps).mean()),
    }
    if not np.all(np.isfinite([loss, pg_loss, v_loss, ent])):
        raise NonFiniteLossError(f"non-finite PPO loss: {stats}")
    if not need_grad:
        return stats, None

    onehot = np.zeros_like(logits)
    onehot[np.arange(n), actions] = 1.0
    d_logp = np.where(pg1 >= pg2, -adv * ratio, 0.0) / n
    d_logits = d_logp[:, None] * (onehot - dist.probs)
    d_logits += (config.entropy_coef / n) * dist.probs * (dist.log_probs + entropy[:, None])

    if config.clip_value_loss:
        in_range = np.abs(values - old_values) < eps
        d_clipped = np.where(in_range, old_values + delta - ret, 0.0)
        d_values = np.where(v_unclipped >= v_clipped, values - ret, d_clipped) / n
    else:
        d_values = (values - ret) / n
    d_values *= config.value_coef

    grads = agent.backward(a_cache, d_logits)
    for k, g in agent.backward(c_cache, d_values).items():
        grads[k] += g
    return stats, grads


def ppo_update(agent: Agent, buffer: RolloutBuffer, config: PPOConfig,
               rng: np.random.Generator, lr: float | None = None) -> dict[str, float]:
    """Run ``num_epochs`` passes of shuffled minibatch Adam steps; returns last-minibatch stats."""
    if buffer.advantages is None:
        raise ValueError("compute advantages before updating")
    lr = config.learning_rate if lr is None else lr
    mb = buffer.size // config.num_minibatches
    stats: dict[str, float] = {}
    for _ in range(config.num_epochs):
        order = rng.permutation(buffer.size)
        for start in range(0, buffer.size, mb):
            stats, grads = minibatch_loss(agent, buffer, order[start:start + mb], config)
            norm = global_norm(grads)
            stats["grad_norm"] = norm
            if config.max_grad_norm > 0 and norm > config.max_grad_norm:
                scale = config.max_grad_norm / (norm + 1e-6)
                for g in grads.values():
                    g *= scale
            adam_step(agent.store, grads, lr, eps=config.adam_eps)
    return stats


def make_rngs(seed: int) -> dict[str, np.random.Generator]:
    streams = np.random.SeedSequence(seed).spawn(4)
    return {name: np.random.default_rng(s)
            for name, s in zip(("init", "env", "action", "shuffle"), streams)}


def train(agent_kind: AgentKind, config: PPOConfig, env=None, callback=None) -> LearningCurve:
    """One seeded training run. ``callback(update, stats)`` fires after every update."""
    t0 = time.perf_counter()
    rngs = make_rngs(config.seed)
    agent = Agent(agent_kind, rngs["init"])
    env = CartPoleEnv(rngs["env"]) if env is None else env
    buffer = RolloutBuffer(config.rollout_length)
    curve = LearningCurve(config.seed)
    episodes: list[tuple[int, float]] = []
    cursor = Cursor()
    n_updates = config.num_updates
    try:
        for update in range(1, n_updates + 1):
            lr = config.learning_rate
            if config.anneal_lr:
                lr *= 1.0 - (update - 1.0) / n_updates
            cursor = collect_rollout(env, agent, buffer, rngs["action"], cursor, episodes)
            buffer.advantages, buffer.returns = compute_gae(
                buffer.rewards, buffer.values, buffer.dones, buffer.bootstrap_value,
                config.gamma, config.gae_lambda)
            stats = ppo_update(agent, buffer, config, rngs["shuffle"], lr)
            if callback is not None:
                callback(update, stats)
    except NonFiniteLossError as exc:
        curve.aborted = True
        curve.message = f"aborted at step {cursor.global_step}: {exc}"
    curve.steps = [s for s, _ in episodes]
    curve.returns = [r for _, r in episodes]
    curve.wall_time = time.perf_counter() - t0
    curve.agent = agent
    return curve

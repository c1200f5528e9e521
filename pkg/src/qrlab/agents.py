"""Actor/critic heads on top of a PQC (or a classical stand-in) and their gradients.

Every agent has two independent towers, ``actor`` and ``critic``, that share
nothing but their architecture. Forward passes return a cache that the
matching ``backward`` call consumes; gradients come back as a dict keyed like
``ParamStore.params``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .statevector import ConfigError, adjoint_batch, run_batch
from .templates import CircuitSpec, Family, TemplateConfig, build_template, normalize_observation

ALLOWED_REUSE = (1, 4, 8, 16, 32)
HEADS = ("actor", "critic")
OUT_DIM = {"actor": 2, "critic": 1}
OUT_GAIN = {"actor": 0.01, "critic": 1.0}


def _check_reuse(r: int) -> None:
    if r not in ALLOWED_REUSE:
        raise ConfigError(f"reuse factor must be one of {ALLOWED_REUSE}, got {r}")


@dataclass(frozen=True)
class HybridPQC:
    template: TemplateConfig
    reuse: int = 1

    def __post_init__(self):
        _check_reuse(self.reuse)
        if self.template.num_features != 4:
            raise ConfigError("CartPole agents need a 4-feature template")


@dataclass(frozen=True)
class ClassicalORControl:
    reuse: int = 1
    # truncate the normalized observation to this many features before replication
    reduce_to: int | None = None

    def __post_init__(self):
        _check_reuse(self.reuse)
        if self.reduce_to is not None and not 1 <= self.reduce_to <= 4:
            raise ConfigError(f"reduce_to must be in [1, 4], got {self.reduce_to}")


@dataclass(frozen=True)
class ClassicalMLP:
    hidden: tuple[int, ...] = (64, 64)

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(self.hidden))
        if not self.hidden or min(self.hidden) < 1:
            raise ConfigError(f"MLP needs nonempty positive hidden sizes, got {self.hidden}")


AgentKind = HybridPQC | ClassicalORControl | ClassicalMLP


def output_reuse(v: np.ndarray, reuse: int) -> np.ndarray:
    """Concatenate ``reuse`` copies of ``v`` along the last axis."""
    if reuse < 1:
        raise ConfigError(f"reuse factor must be >= 1, got {reuse}")
    v = np.asarray(v)
    return np.tile(v, (1,) * (v.ndim - 1) + (reuse,))


def orthogonal(shape: tuple[int, int], gain: float, rng: np.random.Generator) -> np.ndarray:
    rows, cols = shape
    a = rng.standard_normal((rows, cols) if rows >= cols else (cols, rows))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return gain * q


@dataclass
class ParamStore:
    params: dict[str, np.ndarray]
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    def __post_init__(self):
        for k, p in self.params.items():
            self.m.setdefault(k, np.zeros_like(p))
            self.v.setdefault(k, np.zeros_like(p))

    def zeros(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(p) for k, p in self.params.items()}

    def copy(self) -> "ParamStore":
        cp = lambda d: {k: x.copy() for k, x in d.items()}  # noqa: E731
        return ParamStore(cp(self.params), cp(self.m), cp(self.v), self.step)

    def num_params(self) -> int:
        return sum(p.size for p in self.params.values())


def adam_step(store: ParamStore, grads: dict[str, np.ndarray], lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-5) -> ParamStore:
    """Bias-corrected Adam, applied in place; returns ``store`` for chaining."""
    store.step += 1
    t = store.step
    c1 = 1 - beta1**t
    c2 = 1 - beta2**t
    for k, g in grads.items():
        if g.shape != store.params[k].shape:
            raise ValueError(f"gradient for {k} has shape {g.shape}, expected {store.params[k].shape}")
        m = store.m[k]
        v = store.v[k]
        m *= beta1
        m += (1 - beta1) * g
        v *= beta2
        v += (1 - beta2) * g * g
        store.params[k] -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return store


def global_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


class Categorical:
    """Softmax distribution over the last axis of ``logits``."""

    def __init__(self, logits):
        logits = np.asarray(logits, dtype=np.float64)
        if not np.all(np.isfinite(logits)):
            raise ValueError("non-finite logits")
        z = logits - logits.max(axis=-1, keepdims=True)
        self.log_probs = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
        self.probs = np.exp(self.log_probs)

    def sample(self, rng: np.random.Generator):
        cdf = np.cumsum(self.probs, axis=-1)
        u = rng.random(cdf.shape[:-1])[..., None]
        return np.minimum((u >= cdf).sum(axis=-1), cdf.shape[-1] - 1)

    def log_prob(self, action):
        action = np.asarray(action)
        return np.take_along_axis(self.log_probs, action[..., None], axis=-1)[..., 0]

    def entropy(self):
        return -(self.probs * self.log_probs).sum(axis=-1)


@dataclass
class Cache:
    head: str
    single: bool
    inputs: np.ndarray | None = None
    states: np.ndarray | None = None
    readout: np.ndarray | None = None
    activations: list[np.ndarray] = field(default_factory=list)


class Agent:
    """Parameters plus forward/backward maths for one :data:`AgentKind`."""

    def __init__(self, kind: AgentKind, rng: np.random.Generator | None = None,
                 store: ParamStore | None = None):
        self.kind = kind
        self.circuit: CircuitSpec | None = None
        if isinstance(kind, HybridPQC):
            self.circuit = build_template(kind.template)
        if store is None:
            store = ParamStore(self._init_params(rng if rng is not None else np.random.default_rng()))
        self.store = store

    @property
    def params(self) -> dict[str, np.ndarray]:
        return self.store.params

    @property
    def readout_dim(self) -> int:
        k = self.kind
        if isinstance(k, HybridPQC):
            return k.template.num_qubits
        if isinstance(k, ClassicalORControl):
            return k.reduce_to or 4
        return k.hidden[-1]

    def _init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        k = self.kind
        p: dict[str, np.ndarray] = {}
        for head in HEADS:
            if isinstance(k, ClassicalMLP):
                sizes = (4, *k.hidden)
                for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
                    p[f"{head}.W{i}"] = orthogonal((b, a), np.sqrt(2.0), rng)
                    p[f"{head}.b{i}"] = np.zeros(b)
                d_in = k.hidden[-1]
            else:
                if isinstance(k, HybridPQC):
                    p[f"{head}.quantum"] = rng.uniform(-np.pi, np.pi, self.circuit.num_trainable)
                d_in = self.readout_dim * k.reuse
            p[f"{head}.W"] = orthogonal((OUT_DIM[head], d_in), OUT_GAIN[head], rng)
            p[f"{head}.b"] = np.zeros(OUT_DIM[head])
        return p

    # -- forward ------------------------------------------------------------

    def _forward(self, head: str, obs) -> tuple[np.ndarray, Cache]:
        obs = np.asarray(obs, dtype=np.float64)
        single = obs.ndim == 1
        obs = np.atleast_2d(obs)
        cache = Cache(head, single)
        p = self.params
        k = self.kind
        if isinstance(k, ClassicalMLP):
            h = obs
            for i in range(len(k.hidden)):
                h = np.tanh(h @ p[f"{head}.W{i}"].T + p[f"{head}.b{i}"])
                cache.activations.append(h)
            cache.inputs = obs
            x = h
        else:
            feats = normalize_observation(Family.UQC_B if isinstance(k, ClassicalORControl)
                                          else k.template.family, obs)
            if isinstance(k, HybridPQC):
                readout, states = run_batch(self.circuit, feats, p[f"{head}.quantum"])
                cache.states = states
            else:
                readout = feats[:, : self.readout_dim]
            cache.inputs = feats
            cache.readout = readout
            x = output_reuse(readout, k.reuse)
        out = x @ p[f"{head}.W"].T + p[f"{head}.b"]
        cache.activations.append(x)
        if single:
            out = out[0]
        return out, cache

    def actor_forward(self, obs) -> tuple[np.ndarray, Cache]:
        return self._forward("actor", obs)

    def critic_forward(self, obs) -> tuple[np.ndarray, Cache]:
        value, cache = self._forward("critic", obs)
        return value[..., 0], cache

    # -- backward -----------------------------------------------------------

    def backward(self, cache: Cache, grad_out) -> dict[str, np.ndarray]:
        """Pull ``grad_out`` (d logits, or d value) back onto every parameter."""
        head = cache.head
        g = np.asarray(grad_out, dtype=np.float64)
        rows = cache.activations[-1].shape[0]
        g = g.reshape(rows, OUT_DIM[head])
        p = self.params
        grads = self.store.zeros()
        x = cache.activations[-1]
        grads[f"{head}.W"] = g.T @ x
        grads[f"{head}.b"] = g.sum(axis=0)
        dx = g @ p[f"{head}.W"]
        k = self.kind
        if isinstance(k, ClassicalMLP):
            for i in reversed(range(len(k.hidden))):
                h = cache.activations[i]
                dz = dx * (1.0 - h * h)
                prev = cache.activations[i - 1] if i > 0 else cache.inputs
                grads[f"{head}.W{i}"] = dz.T @ prev
                grads[f"{head}.b{i}"] = dz.sum(axis=0)
                dx = dz @ p[f"{head}.W{i}"]
        elif isinstance(k, HybridPQC):
            q = self.readout_dim
            d_readout = dx.reshape(rows, k.reuse, q).sum(axis=1)
            grads[f"{head}.quantum"] = adjoint_batch(self.circuit, cache.inputs, p[f"{head}.quantum"],
                                                     cache.states, d_readout)
        return grads

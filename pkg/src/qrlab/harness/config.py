"""Declarative experiment files.

An experiment file is YAML::

    name: fig4a_hybrid_or
    agent: {kind: hybrid, family: uqc_b, num_qubits: 4, dr_layers: 1,
            entangled: false, reuse: 4}
    grid: {reuse: [4, 8, 16, 32]}     # optional; cartesian product over keys
    ppo: {total_steps: 100000}        # optional PPOConfig overrides
    seeds: [0, 1, 2]                  # optional, default 0..9
    approximated: false               # grid values inferred rather than stated

Each point of ``grid`` overrides the matching ``agent`` key and becomes one
variant, trained once per seed.
"""

from __future__ import annotations

import dataclasses
import hashlib
import itertools
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..agents import AgentKind, ClassicalMLP, ClassicalORControl, HybridPQC
from ..ppo import PPOConfig
from ..templates import TemplateConfig
from ..statevector import ConfigError

SAFE_NAME = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")
FACTOR_LABELS = {"reuse": "R", "dr_layers": "L", "num_qubits": "Q", "entangled": "ent",
                 "family": "", "hidden": "H", "reduce_to": "D"}
AGENT_KEYS = {
    "hybrid": {"family", "num_qubits", "dr_layers", "entangled", "reuse"},
    "or_control": {"reuse", "reduce_to"},
    "mlp": {"hidden"},
}


def agent_from_dict(spec: dict) -> AgentKind:
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in AGENT_KEYS:
        raise ConfigError(f"agent.kind must be one of {sorted(AGENT_KEYS)}, got {kind!r}")
    unknown = set(spec) - AGENT_KEYS[kind]
    if unknown:
        raise ConfigError(f"unknown {kind} agent keys: {sorted(unknown)}")
    if kind == "hybrid":
        reuse = spec.pop("reuse", 1)
        return HybridPQC(TemplateConfig(**spec), reuse)
    if kind == "or_control":
        return ClassicalORControl(**spec)
    return ClassicalMLP(**spec)


def factor_label(key: str, value) -> str:
    if key == "entangled":
        return "ent" if value else "noent"
    return f"{FACTOR_LABELS.get(key, key)}{value}"


@dataclass(frozen=True)
class Variant:
    name: str
    agent: dict
    factors: dict

    @property
    def kind(self) -> AgentKind:
        return agent_from_dict(self.agent)

    @property
    def label(self) -> str:
        if not self.factors:
            return self.name
        return ", ".join(f"{FACTOR_LABELS.get(k, k) or k}={v}" for k, v in self.factors.items())


@dataclass
class ExperimentConfig:
    name: str
    agent: dict
    grid: dict = field(default_factory=dict)
    ppo: dict = field(default_factory=dict)
    seeds: tuple[int, ...] = tuple(range(10))
    output_dir: str = "results"
    approximated: bool = False
    description: str = ""

    def __post_init__(self):
        if not SAFE_NAME.match(self.name):
            raise ConfigError(f"experiment name {self.name!r} is not filesystem-safe")
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"seeds must be nonempty and distinct, got {self.seeds}")
        bad = set(self.ppo) - {f.name for f in dataclasses.fields(PPOConfig)} | ({"seed"} & set(self.ppo))
        if bad:
            raise ConfigError(f"invalid ppo overrides: {sorted(bad)}")
        for key, values in self.grid.items():
            if not isinstance(values, list) or not values:
                raise ConfigError(f"grid.{key} must be a nonempty list")
        for v in self.variants():
            v.kind  # validate eagerly
        self.ppo_config(0)

    def variants(self) -> list[Variant]:
        keys = list(self.grid)
        out = []
        for combo in itertools.product(*(self.grid[k] for k in keys)):
            factors = dict(zip(keys, combo))
            agent = {**self.agent, **factors}
            name = "_".join(factor_label(k, v) for k, v in factors.items()) or "base"
            out.append(Variant(name, agent, factors))
        return out

    def ppo_config(self, seed: int) -> PPOConfig:
        return PPOConfig(**self.ppo, seed=seed)

    @property
    def total_steps(self) -> int:
        return self.ppo_config(0).num_updates * self.ppo_config(0).rollout_length

    def to_dict(self) -> dict:
        return {"name": self.name, "description": self.description, "agent": self.agent,
                "grid": self.grid, "ppo": self.ppo, "seeds": list(self.seeds),
                "output_dir": self.output_dir, "approximated": self.approximated}

    def variant_hash(self, variant: Variant) -> str:
        ppo = dataclasses.asdict(self.ppo_config(0))
        ppo.pop("seed")
        blob = json.dumps({"agent": variant.agent, "ppo": ppo}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def config_hash(self) -> str:
        blob = json.dumps({k: v for k, v in self.to_dict().items() if k != "output_dir"},
                          sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    data.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    return ExperimentConfig(**data)

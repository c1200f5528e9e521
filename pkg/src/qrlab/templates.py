"""Circuit families for CartPole agents and the shared observation scaling.

Template A (``SKOLIK_A``) uploads one feature per qubit through ``RX`` and
follows it with trainable ``RY RZ`` plus an optional CZ ring. Template B
(``UQC_B``) packs features three at a time into ``RZ RY RZ`` embeddings, each
immediately followed by a trainable ``RZ RY RZ``, with an optional CNOT ring.
Both repeat their layer ``dr_layers`` times, re-uploading the data each time.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .statevector import (
    ConfigError,
    Fixed,
    Gate,
    GateOp,
    Input,
    Program,
    Trainable,
    compile_program,
)

CART_X_LIMIT = 2.4
POLE_ANGLE_LIMIT = 12 * 2 * math.pi / 360


class Family(str, enum.Enum):
    SKOLIK_A = "skolik_a"
    UQC_B = "uqc_b"


@dataclass(frozen=True)
class TemplateConfig:
    family: Family
    num_qubits: int = 4
    dr_layers: int = 1
    entangled: bool = True
    num_features: int = 4

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.num_qubits < 1 or self.dr_layers < 1 or self.num_features < 1:
            raise ConfigError(f"qubits, layers and features must be >= 1: {self}")
        if self.family is Family.SKOLIK_A and self.num_qubits % self.num_features:
            raise ConfigError(
                f"skolik_a needs num_qubits to be a multiple of num_features, got "
                f"Q={self.num_qubits}, features={self.num_features}")


@dataclass(frozen=True)
class CircuitSpec:
    num_qubits: int
    gates: tuple[GateOp, ...]
    num_trainable: int
    num_input_slots: int
    program: Program = field(repr=False, compare=False)


def ring_edges(num_qubits: int) -> list[tuple[int, int]]:
    """Nearest-neighbour ring; collapses to one edge for two qubits, none for one."""
    if num_qubits == 1:
        return []
    if num_qubits == 2:
        return [(0, 1)]
    return [(q, (q + 1) % num_qubits) for q in range(num_qubits)]


def num_chunks(num_features: int) -> int:
    return -(-num_features // 3)


def build_template(config: TemplateConfig) -> CircuitSpec:
    Q, F = config.num_qubits, config.num_features
    gates: list[GateOp] = []
    counter = itertools.count()

    def trainable(kind, q):
        gates.append(GateOp(kind, (q,), Trainable(next(counter))))

    for _ in range(config.dr_layers):
        if config.family is Family.SKOLIK_A:
            for q in range(Q):
                gates.append(GateOp(Gate.RX, (q,), Input(q % F)))
            for q in range(Q):
                trainable(Gate.RY, q)
                trainable(Gate.RZ, q)
            if config.entangled:
                gates += [GateOp(Gate.CZ, e) for e in ring_edges(Q)]
        else:
            for q in range(Q):
                for c in range(num_chunks(F)):
                    for kind, j in zip((Gate.RZ, Gate.RY, Gate.RZ), range(3 * c, 3 * c + 3)):
                        slot = Input(j) if j < F else Fixed(0.0)
                        gates.append(GateOp(kind, (q,), slot))
                    for kind in (Gate.RZ, Gate.RY, Gate.RZ):
                        trainable(kind, q)
            if config.entangled:
                gates += [GateOp(Gate.CNOT, e) for e in ring_edges(Q)]

    program = compile_program(Q, gates)
    return CircuitSpec(Q, tuple(gates), program.num_trainable, F, program)


def normalize_observation(family: Family | str, raw_obs) -> np.ndarray:
    """Map CartPole observations to rotation angles in ``[-pi, pi]``.

    Position and pole angle are divided by their termination limits, clipped to
    ``[-1, 1]`` and scaled by pi; the two velocities go through ``arctan``. The
    same rule is used for both families. Accepts a ``(4,)`` or ``(B, 4)`` array.
    """
    Family(family)
    obs = np.asarray(raw_obs, dtype=np.float64)
    if obs.shape[-1] != 4:
        raise ValueError(f"expected CartPole 4-vectors, got shape {obs.shape}")
    if not np.all(np.isfinite(obs)):
        raise ValueError("observation contains non-finite values")
    out = np.empty_like(obs)
    out[..., 0] = np.pi * np.clip(obs[..., 0] / CART_X_LIMIT, -1.0, 1.0)
    out[..., 1] = np.arctan(obs[..., 1])
    out[..., 2] = np.pi * np.clip(obs[..., 2] / POLE_ANGLE_LIMIT, -1.0, 1.0)
    out[..., 3] = np.arctan(obs[..., 3])
    return out

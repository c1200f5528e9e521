"""Exact statevector simulation with Pauli-Z readout and adjoint gradients.

Wire ``k`` of a ``Q``-qubit register maps to bit ``Q - 1 - k`` of the basis
index, so wire 0 is the most significant (leftmost) factor of a Kronecker
product. Rotations follow ``R_P(theta) = exp(-i theta P / 2)``.

The heavy lifting happens in numba kernels that walk strided amplitude pairs
in place; no gate is ever expanded to a dense matrix here.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numba import njit

MAX_QUBITS = 10


class ConfigError(ValueError):
    """Raised for invalid circuit, template or agent configuration."""


class Gate(enum.IntEnum):
    RX = 0
    RY = 1
    RZ = 2
    CZ = 3
    CNOT = 4


ROTATIONS = (Gate.RX, Gate.RY, Gate.RZ)

# binding kinds as stored in the compiled program arrays
_NONE, _INPUT, _TRAINABLE, _FIXED = 0, 1, 2, 3


class Input(NamedTuple):
    index: int


class Trainable(NamedTuple):
    index: int


class Fixed(NamedTuple):
    value: float


Binding = Input | Trainable | Fixed


@dataclass(frozen=True)
class GateOp:
    kind: Gate
    wires: tuple[int, ...]
    binding: Binding | None = None

    def __post_init__(self):
        if self.kind in ROTATIONS:
            if len(self.wires) != 1 or self.binding is None:
                raise ConfigError(f"{self.kind.name} needs one wire and a binding")
        else:
            if len(self.wires) != 2 or self.wires[0] == self.wires[1]:
                raise ConfigError(f"{self.kind.name} needs two distinct wires")
            if self.binding is not None:
                raise ConfigError(f"{self.kind.name} takes no angle")
        if any(w < 0 for w in self.wires):
            raise ConfigError(f"negative wire in {self}")


@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise ConfigError("amplitude count must be 2**num_qubits")

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


def _check_qubits(num_qubits: int) -> None:
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise ConfigError(f"num_qubits must be in [1, {MAX_QUBITS}], got {num_qubits}")


def zero_state(num_qubits: int) -> StateVector:
    _check_qubits(num_qubits)
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True)
def _rot(psi, nq, kind, wire, theta):
    stride = 1 << (nq - 1 - wire)
    dim = psi.shape[0]
    c = np.cos(0.5 * theta)
    s = np.sin(0.5 * theta)
    if kind == 0:
        ms = -1j * s
        for base in range(0, dim, 2 * stride):
            for i0 in range(base, base + stride):
                i1 = i0 + stride
                a = psi[i0]
                b = psi[i1]
                psi[i0] = c * a + ms * b
                psi[i1] = ms * a + c * b
    elif kind == 1:
        for base in range(0, dim, 2 * stride):
            for i0 in range(base, base + stride):
                i1 = i0 + stride
                a = psi[i0]
                b = psi[i1]
                psi[i0] = c * a - s * b
                psi[i1] = s * a + c * b
    else:
        p0 = c - 1j * s
        p1 = c + 1j * s
        for base in range(0, dim, 2 * stride):
            for i0 in range(base, base + stride):
                psi[i0] *= p0
                psi[i0 + stride] *= p1


@njit(cache=True)
def _two(psi, nq, kind, w0, w1):
    m0 = 1 << (nq - 1 - w0)
    m1 = 1 << (nq - 1 - w1)
    dim = psi.shape[0]
    if kind == 3:
        both = m0 | m1
        for i in range(dim):
            if i & both == both:
                psi[i] = -psi[i]
    else:
        # control w0, target w1
        for i in range(dim):
            if (i & m0) and not (i & m1):
                j = i | m1
                t = psi[i]
                psi[i] = psi[j]
                psi[j] = t


@njit(cache=True)
def _apply(psi, nq, kind, w0, w1, theta):
    if kind <= 2:
        _rot(psi, nq, kind, w0, theta)
    else:
        _two(psi, nq, kind, w0, w1)


@njit(cache=True)
def _angle(bkind, bidx, fixed, g, x, params):
    if bkind == 1:
        return x[bidx[g]]
    if bkind == 2:
        return params[bidx[g]]
    return fixed[g]


@njit(cache=True)
def _forward_batch(kinds, w0, w1, bkind, bidx, fixed, nq, inputs, params):
    batch = inputs.shape[0]
    dim = 1 << nq
    states = np.zeros((batch, dim), dtype=np.complex128)
    for b in range(batch):
        psi = states[b]
        psi[0] = 1.0
        x = inputs[b]
        for g in range(kinds.shape[0]):
            th = 0.0
            if kinds[g] <= 2:
                th = _angle(bkind[g], bidx, fixed, g, x, params)
            _apply(psi, nq, kinds[g], w0[g], w1[g], th)
    return states


@njit(cache=True)
def _z_expectations(states, nq):
    batch, dim = states.shape
    out = np.zeros((batch, nq))
    for b in range(batch):
        for i in range(dim):
            p = states[b, i].real ** 2 + states[b, i].imag ** 2
            for k in range(nq):
                if (i >> (nq - 1 - k)) & 1:
                    out[b, k] -= p
                else:
                    out[b, k] += p
    return out


@njit(cache=True)
def _generator_overlap_im(lam, psi, nq, kind, wire):
    # Im <lam| P |psi> for P in {X, Y, Z} acting on `wire`
    stride = 1 << (nq - 1 - wire)
    dim = psi.shape[0]
    acc = 0.0 + 0.0j
    for base in range(0, dim, 2 * stride):
        for i0 in range(base, base + stride):
            i1 = i0 + stride
            l0 = np.conj(lam[i0])
            l1 = np.conj(lam[i1])
            if kind == 0:
                acc += l0 * psi[i1] + l1 * psi[i0]
            elif kind == 1:
                acc += -1j * l0 * psi[i1] + 1j * l1 * psi[i0]
            else:
                acc += l0 * psi[i0] - l1 * psi[i1]
    return acc.imag


@njit(cache=True)
def _adjoint_batch(kinds, w0, w1, bkind, bidx, fixed, nq, inputs, params,
                   final_states, cotangent, n_params):
    batch, dim = final_states.shape
    grad = np.zeros(n_params)
    for b in range(batch):
        psi = final_states[b].copy()
        lam = np.empty(dim, dtype=np.complex128)
        for i in range(dim):
            w = 0.0
            for k in range(nq):
                if (i >> (nq - 1 - k)) & 1:
                    w -= cotangent[b, k]
                else:
                    w += cotangent[b, k]
            lam[i] = w * psi[i]
        x = inputs[b]
        for g in range(kinds.shape[0] - 1, -1, -1):
            kd = kinds[g]
            th = 0.0
            if kd <= 2:
                th = _angle(bkind[g], bidx, fixed, g, x, params)
                if bkind[g] == 2:
                    grad[bidx[g]] += _generator_overlap_im(lam, psi, nq, kd, w0[g])
            _apply(psi, nq, kd, w0[g], w1[g], -th)
            _apply(lam, nq, kd, w0[g], w1[g], -th)
    return grad


# ---------------------------------------------------------------------------
# python surface


def _gate_arrays(gate: GateOp):
    w1 = gate.wires[1] if len(gate.wires) == 2 else 0
    return int(gate.kind), gate.wires[0], w1


def apply_gate(state: StateVector, gate: GateOp, angle: float = 0.0) -> StateVector:
    """Return ``gate(angle) |state>``; the input state is left untouched."""
    if max(gate.wires) >= state.num_qubits:
        raise ConfigError(f"wire {max(gate.wires)} out of range for {state.num_qubits} qubits")
    out = state.copy()
    kind, w0, w1 = _gate_arrays(gate)
    _apply(out.amplitudes, state.num_qubits, kind, w0, w1, float(angle))
    return out


def z_expectations(state: StateVector) -> np.ndarray:
    return _z_expectations(state.amplitudes[None, :], state.num_qubits)[0]


class Program(NamedTuple):
    """A circuit lowered to flat arrays for the kernels."""

    num_qubits: int
    kinds: np.ndarray
    w0: np.ndarray
    w1: np.ndarray
    bkind: np.ndarray
    bidx: np.ndarray
    fixed: np.ndarray
    num_inputs: int
    num_trainable: int


def compile_program(num_qubits: int, gates: Sequence[GateOp]) -> Program:
    """Lower a gate list to kernel arrays, validating wires and slot indices."""
    _check_qubits(num_qubits)
    n = len(gates)
    kinds = np.zeros(n, dtype=np.int64)
    w0 = np.zeros(n, dtype=np.int64)
    w1 = np.zeros(n, dtype=np.int64)
    bkind = np.zeros(n, dtype=np.int64)
    bidx = np.zeros(n, dtype=np.int64)
    fixed = np.zeros(n)
    n_in = n_tr = 0
    for g, gate in enumerate(gates):
        if max(gate.wires) >= num_qubits:
            raise ConfigError(f"gate {g} touches wire {max(gate.wires)} >= {num_qubits}")
        kinds[g], w0[g], w1[g] = _gate_arrays(gate)
        b = gate.binding
        if isinstance(b, Input):
            bkind[g], bidx[g] = _INPUT, b.index
            n_in = max(n_in, b.index + 1)
        elif isinstance(b, Trainable):
            bkind[g], bidx[g] = _TRAINABLE, b.index
            n_tr = max(n_tr, b.index + 1)
        elif isinstance(b, Fixed):
            bkind[g], fixed[g] = _FIXED, b.value
    return Program(num_qubits, kinds, w0, w1, bkind, bidx, fixed, n_in, n_tr)


def _as_program(circuit) -> Program:
    if isinstance(circuit, Program):
        return circuit
    return circuit.program


def _check_bindings(prog: Program, inputs: np.ndarray, params: np.ndarray) -> None:
    if inputs.shape[-1] < prog.num_inputs:
        raise ConfigError(f"circuit reads input {prog.num_inputs - 1}, got {inputs.shape[-1]} features")
    if params.shape[0] < prog.num_trainable:
        raise ConfigError(f"circuit reads parameter {prog.num_trainable - 1}, got {params.shape[0]}")


def run_batch(circuit, inputs, params):
    """Simulate one circuit for every row of ``inputs``.

    Returns ``(expectations, states)`` of shapes ``(B, Q)`` and ``(B, 2**Q)``.
    """
    prog = _as_program(circuit)
    inputs = np.ascontiguousarray(np.atleast_2d(np.asarray(inputs, dtype=np.float64)))
    params = np.ascontiguousarray(np.asarray(params, dtype=np.float64).ravel())
    _check_bindings(prog, inputs, params)
    states = _forward_batch(prog.kinds, prog.w0, prog.w1, prog.bkind, prog.bidx,
                            prog.fixed, prog.num_qubits, inputs, params)
    return _z_expectations(states, prog.num_qubits), states


def run_circuit(circuit, inputs, params) -> tuple[np.ndarray, StateVector]:
    prog = _as_program(circuit)
    ez, states = run_batch(prog, np.asarray(inputs, dtype=np.float64).reshape(1, -1), params)
    return ez[0], StateVector(prog.num_qubits, states[0])


def adjoint_batch(circuit, inputs, params, final_states, cotangent) -> np.ndarray:
    """Gradient of ``sum_b sum_k cotangent[b, k] <Z_k>_b`` w.r.t. the shared angles.

    ``final_states`` must come from :func:`run_batch` on the same arguments; the
    sweep walks the program backwards from there, so no second forward pass runs.
    """
    prog = _as_program(circuit)
    inputs = np.ascontiguousarray(np.atleast_2d(np.asarray(inputs, dtype=np.float64)))
    params = np.ascontiguousarray(np.asarray(params, dtype=np.float64).ravel())
    cotangent = np.ascontiguousarray(np.atleast_2d(np.asarray(cotangent, dtype=np.float64)))
    _check_bindings(prog, inputs, params)
    if cotangent.shape != (inputs.shape[0], prog.num_qubits):
        raise ConfigError(f"cotangent shape {cotangent.shape} != {(inputs.shape[0], prog.num_qubits)}")
    if prog.num_trainable == 0:
        return np.zeros(0)
    return _adjoint_batch(prog.kinds, prog.w0, prog.w1, prog.bkind, prog.bidx, prog.fixed,
                          prog.num_qubits, inputs, params,
                          np.ascontiguousarray(final_states), cotangent, prog.num_trainable)


def adjoint_vjp(circuit, inputs, params, cotangent) -> np.ndarray:
    prog = _as_program(circuit)
    inputs = np.asarray(inputs, dtype=np.float64).reshape(1, -1)
    _, states = run_batch(prog, inputs, params)
    return adjoint_batch(prog, inputs, params, states, np.asarray(cotangent, dtype=np.float64).reshape(1, -1))

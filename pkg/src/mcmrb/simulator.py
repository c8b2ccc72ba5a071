"""Dense density-matrix simulation of one control/ancilla pair.

Two-qubit operators act on ancilla (x) control: basis index ``2*a + c``,
so the ancilla is the outer (most significant) factor. Single-qubit
operators are embedded into this ordering by :func:`embed`.

Two execution paths exist. :func:`run_circuit` walks a :class:`Circuit`
op by op on a density matrix. :func:`run_batch` evolves many sequences at
once as vectorised 16-component Liouville vectors and is what the suite
orchestrator uses; the two are cross-checked in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .clifford import CliffordElement

CONTROL = "control"
ANCILLA = "ancilla"
QUBITS = (CONTROL, ANCILLA)

GROUND = "ground"
EXCITED = "excited"

_I2 = np.eye(2, dtype=complex)
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)


class CircuitError(ValueError):
    """Raised for structurally invalid circuits or operator shapes."""


def is_unitary(u: np.ndarray, atol: float = 1e-12) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.allclose(u.conj().T @ u, np.eye(len(u)), atol=atol, rtol=0)


def embed(op: np.ndarray, target: str) -> np.ndarray:
    """Lift a 2x2 operator on ``target`` to the 4x4 ancilla (x) control space."""
    op = np.asarray(op, dtype=complex)
    if op.shape != (2, 2):
        raise CircuitError(f"expected a 2x2 operator, got shape {op.shape}")
    if target == CONTROL:
        return np.kron(_I2, op)
    if target == ANCILLA:
        return np.kron(op, _I2)
    raise CircuitError(f"unknown qubit {target!r}")


def _as_full(op: np.ndarray, target: str | None, dim: int) -> np.ndarray:
    op = np.asarray(op, dtype=complex)
    if target is None or op.shape[0] == dim:
        if op.shape != (dim, dim):
            raise CircuitError(f"operator shape {op.shape} does not match state dimension {dim}")
        return op
    if dim != 4:
        raise CircuitError("single-qubit targets only make sense on a two-qubit state")
    return embed(op, target)


class KrausChannel:
    """A CPTP map given by Kraus operators, validated on construction."""

    def __init__(self, operators: Sequence[np.ndarray], atol: float = 1e-10):
        ops = [np.asarray(k, dtype=complex) for k in operators]
        if not ops:
            raise ValueError("a Kraus channel needs at least one operator")
        dim = ops[0].shape[0]
        if any(k.shape != (dim, dim) for k in ops) or dim not in (2, 4):
            raise ValueError("Kraus operators must all be 2x2 or all be 4x4")
        completeness = sum(k.conj().T @ k for k in ops)
        if not np.allclose(completeness, np.eye(dim), atol=atol, rtol=0):
            raise ValueError("Kraus operators are not trace preserving")
        for k in ops:
            k.setflags(write=False)
        self.operators = tuple(ops)
        self.dim = dim

    @classmethod
    def identity(cls, dim: int = 2) -> "KrausChannel":
        return cls([np.eye(dim)])

    @classmethod
    def from_unitary(cls, u: np.ndarray) -> "KrausChannel":
        if not is_unitary(u):
            raise ValueError("matrix is not unitary")
        return cls([u])

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.operators)

    def embed(self, target: str) -> "KrausChannel":
        if self.dim != 2:
            raise CircuitError("only single-qubit channels can be embedded")
        return KrausChannel([embed(k, target) for k in self.operators])

    def tensor(self, other: "KrausChannel") -> "KrausChannel":
        """``self`` on the outer factor, ``other`` on the inner one."""
        return KrausChannel([np.kron(a, b) for a in self.operators for b in other.operators])

    def then(self, other: "KrausChannel") -> "KrausChannel":
        """Channel applying ``self`` first, then ``other``."""
        if other.dim != self.dim:
            raise CircuitError("cannot compose channels of different dimension")
        return KrausChannel([b @ a for a in self.operators for b in other.operators])

    def superoperator(self) -> np.ndarray:
        """Liouville matrix acting on row-major vectorised density matrices."""
        return sum(np.kron(k, k.conj()) for k in self.operators)

    def is_identity(self, atol: float = 1e-12) -> bool:
        return np.allclose(self.superoperator(), np.eye(self.dim**2), atol=atol, rtol=0)

    def __repr__(self):
        return f"KrausChannel(dim={self.dim}, n_ops={len(self.operators)})"


MEASURE_ANCILLA = KrausChannel([embed(P0, ANCILLA), embed(P1, ANCILLA)])


def check_density_matrix(rho: np.ndarray, atol: float = 1e-9) -> None:
    """Raise if ``rho`` is not Hermitian, unit trace and positive semidefinite."""
    if not np.allclose(rho, rho.conj().T, atol=1e-10, rtol=0):
        raise AssertionError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1) > 1e-10:
        raise AssertionError(f"density matrix trace is {tr}")
    lowest = np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0]
    if lowest < -atol:
        raise AssertionError(f"density matrix has negative eigenvalue {lowest}")


def basis_state(control: str = GROUND, ancilla: str = GROUND) -> np.ndarray:
    a = 1 if ancilla == EXCITED else 0
    c = 1 if control == EXCITED else 0
    rho = np.zeros((4, 4), dtype=complex)
    rho[2 * a + c, 2 * a + c] = 1.0
    return rho


def apply_unitary(rho: np.ndarray, u: np.ndarray, target: str | None = None) -> np.ndarray:
    u = _as_full(u, target, rho.shape[0])
    return u @ rho @ u.conj().T


def apply_kraus(rho: np.ndarray, channel: KrausChannel, target: str | None = None) -> np.ndarray:
    if channel.dim != rho.shape[0]:
        if target is None:
            raise CircuitError("channel dimension does not match the state")
        channel = channel.embed(target)
    return channel(rho)


def mid_measure_ancilla(rho: np.ndarray) -> np.ndarray:
    """Outcome-discarded Z measurement of the ancilla (complete dephasing)."""
    if rho.shape != (4, 4):
        raise CircuitError("mid-circuit measurement needs the two-qubit state")
    return MEASURE_ANCILLA(rho)


def ground_state_probability(rho: np.ndarray, qubit: str) -> float:
    d = np.real(np.diag(rho))
    if rho.shape == (2, 2):
        return float(np.clip(d[0], 0.0, 1.0))
    if qubit == CONTROL:
        p = d[0] + d[2]
    elif qubit == ANCILLA:
        p = d[0] + d[1]
    else:
        raise CircuitError(f"unknown qubit {qubit!r}")
    return float(np.clip(p, 0.0, 1.0))


def sample_shots(p: float, shots: int, rng: np.random.Generator | None = None) -> float:
    """Binomial estimate of ``p`` from ``shots`` samples; ``shots=0`` is exact."""
    if shots < 0:
        raise ValueError("shots must be non-negative")
    if shots == 0:
        return float(p)
    if rng is None:
        raise ValueError("a random generator is required when shots > 0")
    return rng.binomial(shots, min(max(p, 0.0), 1.0)) / shots


# --- circuits -------------------------------------------------------------


@dataclass(frozen=True)
class ControlGate:
    clifford: CliffordElement
    duration: float


@dataclass(frozen=True)
class AncillaMidMeasure:
    duration: float


@dataclass(frozen=True)
class ControlDelay:
    duration: float


@dataclass(frozen=True)
class AncillaDelay:
    duration: float


@dataclass(frozen=True)
class TerminalMeasureAll:
    pass


CircuitOp = Union[ControlGate, AncillaMidMeasure, ControlDelay, AncillaDelay, TerminalMeasureAll]


@dataclass
class Circuit:
    ops: list = field(default_factory=list)
    control_init: str = GROUND
    ancilla_init: str = GROUND

    def validate(self) -> None:
        if not self.ops or not isinstance(self.ops[-1], TerminalMeasureAll):
            raise CircuitError("circuit must end with a terminal measurement")
        if sum(isinstance(op, TerminalMeasureAll) for op in self.ops) != 1:
            raise CircuitError("circuit must contain exactly one terminal measurement")
        for op in self.ops[:-1]:
            if not isinstance(op, (ControlGate, AncillaMidMeasure, ControlDelay, AncillaDelay)):
                raise CircuitError(f"unknown circuit operation {op!r}")
            if not op.duration > 0:
                raise CircuitError(f"non-positive duration in {op!r}")
        for init in (self.control_init, self.ancilla_init):
            if init not in (GROUND, EXCITED):
                raise CircuitError(f"initial state must be ground or excited, got {init!r}")

    def count(self, kind: type) -> int:
        return sum(isinstance(op, kind) for op in self.ops)

    @property
    def duration(self) -> float:
        """Scheduled duration; paired control/ancilla delays run in parallel."""
        total = 0.0
        ops = self.ops
        i = 0
        while i < len(ops):
            op = ops[i]
            if isinstance(op, (ControlDelay, AncillaDelay)) and i + 1 < len(ops):
                nxt = ops[i + 1]
                if isinstance(nxt, (ControlDelay, AncillaDelay)) and type(nxt) is not type(op):
                    total += max(op.duration, nxt.duration)
                    i += 2
                    continue
            if not isinstance(op, TerminalMeasureAll):
                total += op.duration
            i += 1
        return total

    @property
    def cliffords(self) -> list[CliffordElement]:
        return [op.clifford for op in self.ops if isinstance(op, ControlGate)]


def initial_state(circuit: Circuit, noise=None) -> np.ndarray:
    rho = basis_state(circuit.control_init, circuit.ancilla_init)
    if noise is not None and getattr(noise, "prep_flip", 0.0) > 0:
        rho = noise.prep_channel()(rho)
    return rho


def run_circuit(circuit: Circuit, noise, debug: bool = False) -> np.ndarray:
    """Evolve the initial state through ``circuit`` under ``noise``.

    Returns the state just before the terminal measurement. With
    ``debug=True`` the density-matrix invariants are asserted after
    every operation.
    """
    circuit.validate()
    rho = initial_state(circuit, noise)
    gate_noise = noise.gate_channel().embed(CONTROL)
    for op in circuit.ops:
        if isinstance(op, ControlGate):
            rho = apply_unitary(rho, op.clifford.unitary, CONTROL)
            rho = gate_noise(rho)
        elif isinstance(op, AncillaMidMeasure):
            rho = noise.pre_measure(rho)
            rho = mid_measure_ancilla(rho)
            rho = noise.post_measure(rho)
        elif isinstance(op, ControlDelay):
            rho = apply_kraus(rho, noise.idle_channel(CONTROL, op.duration), CONTROL)
        elif isinstance(op, AncillaDelay):
            rho = apply_kraus(rho, noise.idle_channel(ANCILLA, op.duration), ANCILLA)
        else:
            break
        if debug:
            check_density_matrix(rho)
    return rho


# --- vectorised Liouville path ---------------------------------------------


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(-1)


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(v.shape[-1])))
    return v.reshape(v.shape[:-1] + (d, d))


def run_batch(initial: np.ndarray, steps: Sequence[np.ndarray]) -> np.ndarray:
    """Apply a sequence of superoperators to a batch of vectorised states.

    ``initial`` has shape ``(16,)`` or ``(S, 16)``. Each step is either a
    single ``(16, 16)`` superoperator shared by the batch or a
    ``(S, 16, 16)`` stack with one superoperator per batch member.
    """
    v = np.array(initial, dtype=complex)
    for s in steps:
        if s.ndim == 2:
            v = v @ s.T
        else:
            v = np.einsum("sij,sj->si", s, v)
    return v


def ground_state_probabilities(v: np.ndarray, qubit: str) -> np.ndarray:
    """Vectorised :func:`ground_state_probability` on Liouville vectors."""
    diag = np.real(v[..., [0, 5, 10, 15]])
    if qubit == CONTROL:
        p = diag[..., 0] + diag[..., 2]
    elif qubit == ANCILLA:
        p = diag[..., 0] + diag[..., 1]
    else:
        raise CircuitError(f"unknown qubit {qubit!r}")
    return np.clip(p, 0.0, 1.0)

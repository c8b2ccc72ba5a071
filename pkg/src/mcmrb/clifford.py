"""The 24-element single-qubit Clifford group.

Elements are indexed 0..23. Index 0 is the identity. Representatives are
found by a breadth-first search over words in the H and S generators, so
the index <-> matrix map is fixed by the search order and never depends on
run-time state. Composition and inversion go through lookup tables built
once at import time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

N_CLIFFORDS = 24

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.array([[1, 0], [0, 1j]], dtype=complex)


def same_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-10) -> bool:
    """True when two 2x2 unitaries differ only by a global phase."""
    return abs(abs(np.trace(a.conj().T @ b)) - 2.0) < atol


def _canonical(u: np.ndarray) -> np.ndarray:
    # Fix the global phase: first sizeable entry made real and positive.
    flat = u.ravel()
    k = int(np.argmax(np.abs(flat) > 1e-8))
    return u * (abs(flat[k]) / flat[k])


def _enumerate_group() -> list[np.ndarray]:
    elements = [np.eye(2, dtype=complex)]
    frontier = [elements[0]]
    while frontier:
        nxt = []
        for u in frontier:
            for g in (_H, _S):
                cand = _canonical(g @ u)
                if not any(same_up_to_phase(cand, e) for e in elements):
                    elements.append(cand)
                    nxt.append(cand)
        frontier = nxt
    if len(elements) != N_CLIFFORDS:
        raise RuntimeError(f"Clifford enumeration produced {len(elements)} elements")
    return elements


_UNITARIES = _enumerate_group()
for _u in _UNITARIES:
    _u.setflags(write=False)


def _lookup(u: np.ndarray) -> int:
    for i, e in enumerate(_UNITARIES):
        if same_up_to_phase(u, e):
            return i
    raise ValueError("matrix is not a single-qubit Clifford")


# COMPOSE[a, b] is the index of "a then b", i.e. U_b @ U_a.
COMPOSE = np.array(
    [[_lookup(_UNITARIES[b] @ _UNITARIES[a]) for b in range(N_CLIFFORDS)] for a in range(N_CLIFFORDS)],
    dtype=np.int64,
)
INVERSE = np.array([int(np.flatnonzero(COMPOSE[a] == 0)[0]) for a in range(N_CLIFFORDS)], dtype=np.int64)
COMPOSE.setflags(write=False)
INVERSE.setflags(write=False)


@dataclass(frozen=True)
class CliffordElement:
    """One element of the single-qubit Clifford group."""

    index: int

    def __post_init__(self):
        if not 0 <= self.index < N_CLIFFORDS:
            raise ValueError(f"Clifford index must be in [0, 24), got {self.index}")

    @property
    def unitary(self) -> np.ndarray:
        return _UNITARIES[self.index]

    @classmethod
    def from_unitary(cls, u: np.ndarray) -> "CliffordElement":
        return cls(_lookup(np.asarray(u, dtype=complex)))

    def __repr__(self):
        return f"CliffordElement({self.index})"


IDENTITY = CliffordElement(0)


def all_elements() -> list[CliffordElement]:
    return [CliffordElement(i) for i in range(N_CLIFFORDS)]


def compose(a: CliffordElement, b: CliffordElement) -> CliffordElement:
    """Element equal to applying ``a`` first and then ``b``."""
    return CliffordElement(int(COMPOSE[a.index, b.index]))


def inverse(a: CliffordElement) -> CliffordElement:
    return CliffordElement(int(INVERSE[a.index]))


def compose_sequence(seq: Iterable[CliffordElement]) -> CliffordElement:
    acc = 0
    for g in seq:
        acc = int(COMPOSE[acc, g.index])
    return CliffordElement(acc)


def inverse_of_sequence(seq: Sequence[CliffordElement]) -> CliffordElement:
    """The recovery element that undoes ``seq`` (applied in list order)."""
    return inverse(compose_sequence(seq))


def random_clifford(rng: np.random.Generator) -> CliffordElement:
    return CliffordElement(int(rng.integers(N_CLIFFORDS)))


def random_sequence(n: int, rng: np.random.Generator) -> list[CliffordElement]:
    return [CliffordElement(int(i)) for i in rng.integers(N_CLIFFORDS, size=n)]

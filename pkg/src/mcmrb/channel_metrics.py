"""Choi states, effective control channels, fidelities and Pauli transfer matrices.

Choi states use the unit-trace normalisation
``sigma = (1/d) sum_jk |j><k| (x) E(|j><k|)`` with the input copy as the
first tensor factor. Two-qubit operators follow the simulator ordering
(ancilla (x) control), and Pauli labels are written ancilla first.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass

import numpy as np

from .noise import I2, X, Y, Z
from .simulator import KrausChannel

PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def _as_channel(channel) -> KrausChannel:
    if isinstance(channel, KrausChannel):
        return channel
    return KrausChannel.from_unitary(np.asarray(channel, dtype=complex))


@dataclass
class ChoiState:
    dim: int
    matrix: np.ndarray

    def check(self, atol: float = 1e-9) -> None:
        m = self.matrix
        if not np.allclose(m, m.conj().T, atol=1e-10, rtol=0):
            raise AssertionError("Choi state is not Hermitian")
        if abs(np.trace(m) - 1) > 1e-10:
            raise AssertionError("Choi state does not have unit trace")
        if np.linalg.eigvalsh((m + m.conj().T) / 2)[0] < -atol:
            raise AssertionError("Choi state is not positive semidefinite")


@dataclass
class PauliTransferMatrix:
    n_qubits: int
    matrix: np.ndarray

    @property
    def labels(self) -> list[str]:
        return pauli_labels(self.n_qubits)

    def to_csv(self, path) -> None:
        write_matrix_csv(self.matrix, self.labels, path)


def write_matrix_csv(matrix: np.ndarray, labels, path) -> None:
    """Real matrix as CSV, row-major, with the basis labels as header and first column."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row"] + list(labels))
        for label, row in zip(labels, np.real(matrix)):
            w.writerow([label] + [repr(float(x)) for x in row])


def pauli_labels(n_qubits: int) -> list[str]:
    return ["".join(p) for p in itertools.product("IXYZ", repeat=n_qubits)]


def pauli_basis(n_qubits: int) -> list[np.ndarray]:
    out = []
    for label in pauli_labels(n_qubits):
        m = np.eye(1, dtype=complex)
        for ch in label:
            m = np.kron(m, PAULIS[ch])
        out.append(m)
    return out


def choi_of_channel(channel) -> ChoiState:
    ch = _as_channel(channel)
    d = ch.dim
    sigma = np.zeros((d * d, d * d), dtype=complex)
    for j in range(d):
        for k in range(d):
            e_jk = np.zeros((d, d), dtype=complex)
            e_jk[j, k] = 1.0
            sigma += np.kron(e_jk, ch(e_jk))
    return ChoiState(d, sigma / d)


def channel_from_choi(choi: ChoiState):
    """Return a function applying the channel encoded by ``choi``."""
    d = choi.dim
    t = choi.matrix.reshape(d, d, d, d)

    def apply(rho):
        # E(A) = d * Tr_in[(A^T (x) I) sigma] = d * sum_jk A_jk sigma[j a, k b]
        return d * np.einsum("jk,jakb->ab", rho, t)

    return apply


def effective_control_channel(choi2q: ChoiState, ancilla_input: str = "ground") -> ChoiState:
    """Single-qubit Choi state of the control channel induced by a two-qubit channel.

    The output ancilla is traced out. The input ancilla is either prepared
    in |0> (``"ground"``) or traced out with the rest of the Choi state
    (``"mixed"``, equivalent to feeding it the maximally mixed state).
    """
    if choi2q.dim != 4:
        raise ValueError("expected the Choi state of a two-qubit channel")
    # indices: (a_in, c_in, a_out, c_out) for rows, same for columns
    t = choi2q.matrix.reshape(2, 2, 2, 2, 2, 2, 2, 2)
    if ancilla_input == "ground":
        sub = 2 * np.einsum("ixbyjzbw->ixyjzw", t[0:1, :, :, :, 0:1])
        sub = sub.reshape(2, 2, 2, 2)
    elif ancilla_input == "mixed":
        sub = np.einsum("axbyazbw->xyzw", t)
    else:
        raise ValueError(f"ancilla_input must be 'ground' or 'mixed', got {ancilla_input!r}")
    return ChoiState(2, sub.reshape(4, 4))


def process_fidelity(choi: ChoiState) -> float:
    d = choi.dim
    phi = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    return float(np.real(phi.conj() @ choi.matrix @ phi))


def avg_gate_fidelity(choi: ChoiState) -> float:
    d = choi.dim
    return (d * process_fidelity(choi) + 1) / (d + 1)


def infidelity_stark(phi: float) -> float:
    return (1 - np.cos(2 * phi)) / 3


def infidelity_cross_measurement(p_m: float) -> float:
    return p_m / 3


def zphase_angle_from_infidelity(eps: float) -> float:
    """Angle theta of exp(-i theta Z) whose average gate infidelity is ``eps``."""
    if not 0 <= eps <= 2 / 3:
        raise ValueError("a Z-phase infidelity lies in [0, 2/3]")
    return 0.5 * float(np.arccos(1 - 3 * eps))


def ptm_of_channel(channel) -> PauliTransferMatrix:
    """R_ij = Tr[P_i E(P_j)] / d over the lexicographic Pauli basis."""
    ch = _as_channel(channel)
    n = int(round(np.log2(ch.dim)))
    basis = pauli_basis(n)
    images = [ch(p) for p in basis]
    r = np.array([[np.trace(pi @ img) for img in images] for pi in basis]) / ch.dim
    if np.max(np.abs(r.imag)) > 1e-10:
        raise AssertionError("PTM has a non-negligible imaginary part")
    return PauliTransferMatrix(n, r.real)


def ptm_from_choi(choi: ChoiState) -> PauliTransferMatrix:
    """PTM computed from the Choi state: R_ij = Tr[(P_j^T (x) P_i) sigma]."""
    n = int(round(np.log2(choi.dim)))
    basis = pauli_basis(n)
    r = np.array([[np.trace(np.kron(pj.T, pi) @ choi.matrix) for pj in basis] for pi in basis])
    return PauliTransferMatrix(n, r.real)


def threshold_ptm(ptm: PauliTransferMatrix, eps_irb: float, ideal: PauliTransferMatrix | None = None,
                  atol: float = 1e-12) -> PauliTransferMatrix:
    """Zero PTM entries smaller than sqrt(6 * eps_irb) in magnitude.

    Entries where ``ideal`` is non-zero are always kept. Entries equal to
    the threshold within ``atol`` count as reaching it and are kept.
    """
    if eps_irb < 0:
        raise ValueError("eps_irb must be non-negative")
    thr = np.sqrt(6 * eps_irb)
    m = ptm.matrix
    keep = np.abs(m) >= thr - atol
    if ideal is not None:
        keep |= np.abs(ideal.matrix) > atol
    return PauliTransferMatrix(ptm.n_qubits, np.where(keep, m, 0.0))


def measurement_zphase_channel(theta: float) -> KrausChannel:
    """Ideal ancilla measurement together with a Z-phase error on the control."""
    from .noise import stark_unitary
    from .simulator import MEASURE_ANCILLA

    u = KrausChannel.from_unitary(np.kron(I2, stark_unitary(theta)))
    return MEASURE_ANCILLA.then(u)


def collision_infidelity(delta: float, J: float, t_m: float, ancilla_input: str = "ground") -> float:
    from .noise import collision_unitary

    choi = effective_control_channel(choi_of_channel(collision_unitary(delta, J, t_m)), ancilla_input)
    return 1 - avg_gate_fidelity(choi)

"""Noise channels, error unitaries and per-scenario noise models.

Frequencies (``phi`` aside, which is a bare angle) are angular
frequencies in rad/us and times are in us, so ``nu * t_m`` is a phase in
radians. Conversion from kHz/MHz happens in :mod:`mcmrb.config`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .simulator import ANCILLA, CONTROL, P0, P1, KrausChannel, embed

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|, lowers |1> to |0>
SIGMA_PLUS = SIGMA_MINUS.conj().T

DEFAULT_GATE_ETA = 1e-3
DEFAULT_T1 = 345.0
DEFAULT_T2 = 280.0
DEFAULT_T_M = 0.71

SCENARIOS = ("none", "non_qnd", "stark", "cross_measurement", "collision", "zz_relaxation")


class NoiseParameterError(ValueError):
    pass


def _probability(value: float, name: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise NoiseParameterError(f"{name} must lie in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class DampingParams:
    T1: float
    T2: float
    duration: float

    def __post_init__(self):
        if not self.T1 > 0:
            raise NoiseParameterError(f"T1 must be positive, got {self.T1}")
        if not 0 < self.T2 <= 2 * self.T1:
            raise NoiseParameterError(f"T2 must satisfy 0 < T2 <= 2*T1, got T1={self.T1}, T2={self.T2}")
        if self.duration < 0:
            raise NoiseParameterError(f"duration must be non-negative, got {self.duration}")


def depolarizing(eta: float) -> KrausChannel:
    """Single-qubit depolarizing channel rho -> (1 - eta) rho + eta I/2."""
    eta = _probability(eta, "eta")
    return KrausChannel(
        [np.sqrt(1 - 3 * eta / 4) * I2, np.sqrt(eta / 4) * X, np.sqrt(eta / 4) * Y, np.sqrt(eta / 4) * Z]
    )


def amplitude_phase_damping(params: DampingParams) -> KrausChannel:
    """Relaxation towards |0> plus pure dephasing for ``params.duration``.

    Populations of |1> decay as exp(-t/T1), coherences as exp(-t/T2).
    """
    t = params.duration
    gamma = 1.0 - np.exp(-t / params.T1)
    # 1/T_phi = 1/T2 - 1/(2 T1); the pure-dephasing keep factor is exp(-2t/T_phi)
    inv_tphi = 1.0 / params.T2 - 1.0 / (2.0 * params.T1)
    lam = 1.0 - np.exp(-2.0 * t * inv_tphi)
    k0 = np.array([[1, 0], [0, np.sqrt((1 - gamma) * (1 - lam))]], dtype=complex)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    k2 = np.array([[0, 0], [0, np.sqrt((1 - gamma) * lam)]], dtype=complex)
    return KrausChannel([k0, k1, k2])


def stark_unitary(phi: float) -> np.ndarray:
    """Z-phase error exp(-i phi sigma_z)."""
    return np.diag([np.exp(-1j * phi), np.exp(1j * phi)])


def cross_measurement(p_m: float) -> KrausChannel:
    """Completely dephases the qubit with probability ``p_m``."""
    p_m = _probability(p_m, "p_m")
    return KrausChannel([np.sqrt(p_m) * P0, np.sqrt(p_m) * P1, np.sqrt(1 - p_m) * I2])


def hermitian_expm(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i h t) for Hermitian ``h`` via its eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def collision_hamiltonian(delta: float, J: float) -> np.ndarray:
    h = 0.5 * delta * embed(Z, ANCILLA)
    exchange = np.kron(SIGMA_MINUS, SIGMA_PLUS) + np.kron(SIGMA_PLUS, SIGMA_MINUS)
    return h + J * exchange


def collision_unitary(delta: float, J: float, t_m: float) -> np.ndarray:
    """Excitation exchange with a Stark-shifted ancilla detuned by ``delta``."""
    return hermitian_expm(collision_hamiltonian(delta, J), t_m)


def zz_hamiltonian(nu: float) -> np.ndarray:
    return nu * np.kron(P1, Z)


def zz_unitary(nu: float, t_m: float) -> np.ndarray:
    """Control Z rotation conditioned on an excited ancilla."""
    return hermitian_expm(zz_hamiltonian(nu), t_m)


@dataclass(frozen=True)
class NoiseModel:
    """Everything the simulator needs to know about errors.

    ``pre_measure`` and ``post_measure`` are two-qubit channels applied
    around every ancilla mid-circuit measurement. ``control_relaxation``
    and ``ancilla_relaxation`` are ``(T1, T2)`` pairs (or None) used to
    build the channel applied during explicit delays.
    """

    gate_depol_eta: float = DEFAULT_GATE_ETA
    pre_measure: KrausChannel = field(default_factory=lambda: KrausChannel.identity(4))
    post_measure: KrausChannel = field(default_factory=lambda: KrausChannel.identity(4))
    control_relaxation: tuple | None = None
    ancilla_relaxation: tuple | None = None
    prep_flip: float = 0.0
    label: str = "none"

    def __post_init__(self):
        _probability(self.gate_depol_eta, "gate_depol_eta")
        _probability(self.prep_flip, "prep_flip")
        for ch in (self.pre_measure, self.post_measure):
            if ch.dim != 4:
                raise NoiseParameterError("measurement channels must act on both qubits")

    def gate_channel(self) -> KrausChannel:
        return depolarizing(self.gate_depol_eta)

    def idle_channel(self, qubit: str, duration: float) -> KrausChannel:
        relax = self.control_relaxation if qubit == CONTROL else self.ancilla_relaxation
        if relax is None or duration == 0:
            return KrausChannel.identity(2)
        return amplitude_phase_damping(DampingParams(relax[0], relax[1], duration))

    def prep_channel(self) -> KrausChannel:
        flip = KrausChannel([np.sqrt(1 - self.prep_flip) * I2, np.sqrt(self.prep_flip) * X])
        return flip.tensor(flip)

    @cached_property
    def measurement_superoperator(self) -> np.ndarray:
        from .simulator import MEASURE_ANCILLA

        return (
            self.post_measure.superoperator()
            @ MEASURE_ANCILLA.superoperator()
            @ self.pre_measure.superoperator()
        )

    def delay_superoperator(self, duration: float) -> np.ndarray:
        c = self.idle_channel(CONTROL, duration)
        a = self.idle_channel(ANCILLA, duration)
        return a.tensor(c).superoperator()

    @cached_property
    def gate_superoperators(self) -> np.ndarray:
        """Stack of 24 superoperators: Clifford followed by gate depolarizing."""
        from .clifford import _UNITARIES

        noise = self.gate_channel().embed(CONTROL).superoperator()
        out = np.empty((len(_UNITARIES), 16, 16), dtype=complex)
        for i, u in enumerate(_UNITARIES):
            full = embed(u, CONTROL)
            out[i] = noise @ np.kron(full, full.conj())
        return out


def _require(params: dict, *names: str) -> None:
    missing = [n for n in names if n not in params]
    if missing:
        raise NoiseParameterError(f"missing parameter(s): {', '.join(missing)}")


def control_damping(params: dict) -> KrausChannel:
    dp = DampingParams(
        params.get("control_T1", DEFAULT_T1), params.get("control_T2", DEFAULT_T2), params.get("t_m", DEFAULT_T_M)
    )
    return amplitude_phase_damping(dp).embed(CONTROL)


def build_noise_model(scenario: str, params: dict | None = None) -> NoiseModel:
    """Assemble the pre/post measurement channels for a named scenario.

    Recognised keys in ``params``: ``gate_eta``, ``t_m``, ``control_T1``,
    ``control_T2``, ``prep_flip`` (all scenarios), ``eta`` (non_qnd),
    ``phi`` (stark), ``p_m`` (cross_measurement), ``J`` together with
    ``delta`` or ``delta_over_J`` (collision), ``nu``, ``ancilla_T1`` and
    optionally ``ancilla_T2`` (zz_relaxation; default T2 = T1/3).
    """
    params = dict(params or {})
    common = dict(
        gate_depol_eta=params.get("gate_eta", DEFAULT_GATE_ETA),
        prep_flip=params.get("prep_flip", 0.0),
        label=scenario,
    )
    if scenario == "none":
        return NoiseModel(**common)

    t_m = params.get("t_m", DEFAULT_T_M)
    relax_c = (params.get("control_T1", DEFAULT_T1), params.get("control_T2", DEFAULT_T2))
    damp_c = control_damping(params)

    if scenario == "non_qnd":
        _require(params, "eta")
        post = depolarizing(params["eta"]).embed(ANCILLA)
        return NoiseModel(pre_measure=damp_c, post_measure=post, control_relaxation=relax_c, **common)
    if scenario == "stark":
        _require(params, "phi")
        pre = KrausChannel.from_unitary(embed(stark_unitary(params["phi"]), CONTROL))
        return NoiseModel(pre_measure=pre, post_measure=damp_c, control_relaxation=relax_c, **common)
    if scenario == "cross_measurement":
        _require(params, "p_m")
        pre = cross_measurement(params["p_m"]).embed(CONTROL)
        return NoiseModel(pre_measure=pre, post_measure=damp_c, control_relaxation=relax_c, **common)
    if scenario == "collision":
        _require(params, "J")
        if "delta" not in params and "delta_over_J" not in params:
            raise NoiseParameterError("missing parameter(s): delta or delta_over_J")
        J = params["J"]
        delta = params["delta"] if "delta" in params else params["delta_over_J"] * J
        pre = KrausChannel.from_unitary(collision_unitary(delta, J, t_m))
        return NoiseModel(pre_measure=pre, post_measure=damp_c, control_relaxation=relax_c, **common)
    if scenario == "zz_relaxation":
        _require(params, "nu", "ancilla_T1")
        t1a = params["ancilla_T1"]
        t2a = params.get("ancilla_T2", t1a / 3.0)
        pre = KrausChannel.from_unitary(zz_unitary(params["nu"], t_m))
        damp_a = amplitude_phase_damping(DampingParams(t1a, t2a, t_m))
        damp_cc = amplitude_phase_damping(DampingParams(relax_c[0], relax_c[1], t_m))
        post = damp_a.tensor(damp_cc)
        return NoiseModel(
            pre_measure=pre, post_measure=post, control_relaxation=relax_c, ancilla_relaxation=(t1a, t2a), **common
        )
    raise NoiseParameterError(f"unknown scenario {scenario!r}; expected one of {', '.join(SCENARIOS)}")


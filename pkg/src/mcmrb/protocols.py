"""Circuit generators for the three suite protocols and the suite runner.

The mcm-rb and delay-rb circuits of one (length, sequence index) pair are
drawn from the same random stream, so they share their Clifford sequence
and can be compared as matched pairs.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import clifford
from .analysis import PROTOCOLS, QUBITS, DecayCurve, curve_from_samples, fit_exponential, suite_result_from_fits
from .noise import NoiseModel
from .simulator import (
    ANCILLA,
    CONTROL,
    EXCITED,
    GROUND,
    AncillaDelay,
    AncillaMidMeasure,
    Circuit,
    ControlDelay,
    ControlGate,
    TerminalMeasureAll,
    basis_state,
    ground_state_probabilities,
    run_batch,
    vec,
)

DEFAULT_LENGTHS = (1, 2, 4, 6, 8, 12, 16, 24, 32, 48, 64, 90, 110, 130, 150)
DEFAULT_T_G = 0.0355
DEFAULT_SEED = 20220510
MAX_LENGTH = 10_000

_PROTOCOL_CODE = {"mcm_rb": 1, "delay_rb": 2, "mcm_rep": 3}
_QUBIT_CODE = {CONTROL: 1, ANCILLA: 2}


@dataclass
class SuiteConfig:
    lengths: tuple = DEFAULT_LENGTHS
    num_sequences: int = 60
    shots: int = 0
    t_g: float = DEFAULT_T_G
    t_m: float = 0.71
    control_init: str = GROUND
    ancilla_init: str = GROUND
    seed: int = DEFAULT_SEED
    max_length: int = MAX_LENGTH
    twirl_exact: bool = False

    def __post_init__(self):
        self.lengths = tuple(int(n) for n in self.lengths)
        if not self.lengths:
            raise ValueError("at least one sequence length is required")
        if any(b <= a for a, b in zip(self.lengths, self.lengths[1:])):
            raise ValueError("sequence lengths must be strictly increasing")
        if self.lengths[0] < 0 or self.lengths[-1] > self.max_length:
            raise ValueError(f"sequence lengths must lie in [0, {self.max_length}]")
        if self.num_sequences < 1:
            raise ValueError("num_sequences must be at least 1")
        if self.shots < 0:
            raise ValueError("shots must be non-negative")
        if not (self.t_g > 0 and self.t_m > 0):
            raise ValueError("durations must be positive")
        for init in (self.control_init, self.ancilla_init):
            if init not in (GROUND, EXCITED):
                raise ValueError(f"initial state must be 'ground' or 'excited', got {init!r}")


def sequence_rng(seed: int, length: int, index: int) -> np.random.Generator:
    """Random stream for one (length, sequence) slot, independent of scheduling."""
    return np.random.default_rng(np.random.SeedSequence([seed, length, index]))


def shot_rng(seed: int, protocol: str, qubit: str, length: int, index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([seed, length, index, _PROTOCOL_CODE[protocol], _QUBIT_CODE[qubit]])
    )


def _rb_circuit(seq, interleave, t_g, control_init, ancilla_init) -> Circuit:
    ops = []
    for g in seq:
        ops.append(ControlGate(g, t_g))
        ops.extend(interleave)
    ops.append(ControlGate(clifford.inverse_of_sequence(seq), t_g))
    ops.append(TerminalMeasureAll())
    return Circuit(ops, control_init, ancilla_init)


def generate_mcm_rb(N: int, rng: np.random.Generator, t_g: float = DEFAULT_T_G, t_m: float = 0.71,
                    control_init: str = GROUND, ancilla_init: str = GROUND) -> Circuit:
    """N random control Cliffords each followed by an ancilla measurement, then the inverse."""
    seq = clifford.random_sequence(N, rng)
    return _rb_circuit(seq, [AncillaMidMeasure(t_m)], t_g, control_init, ancilla_init)


def generate_delay_rb(N: int, rng: np.random.Generator, t_g: float = DEFAULT_T_G, t_m: float = 0.71,
                      control_init: str = GROUND, ancilla_init: str = GROUND) -> Circuit:
    """As :func:`generate_mcm_rb` with each measurement replaced by a delay of equal length."""
    seq = clifford.random_sequence(N, rng)
    return _rb_circuit(seq, [ControlDelay(t_m), AncillaDelay(t_m)], t_g, control_init, ancilla_init)


def generate_mcm_rep(N: int, t_g: float = DEFAULT_T_G, t_m: float = 0.71,
                     control_init: str = GROUND, ancilla_init: str = GROUND) -> Circuit:
    ops = []
    for _ in range(N):
        ops.extend([AncillaMidMeasure(t_m), AncillaDelay(t_g), ControlDelay(t_g)])
    ops.append(TerminalMeasureAll())
    return Circuit(ops, control_init, ancilla_init)


@dataclass
class SuiteData:
    """Decay curves keyed by ``(protocol, qubit)``."""

    config: SuiteConfig
    curves: dict = field(default_factory=dict)

    def __getitem__(self, key) -> DecayCurve:
        return self.curves[key]

    def fit(self):
        return {key: fit_exponential(curve) for key, curve in self.curves.items()}

    def result(self):
        return suite_result_from_fits(self.fit(), exact=self.config.shots == 0)


def _sequences(config: SuiteConfig, length: int) -> np.ndarray:
    idx = np.empty((config.num_sequences, length + 1), dtype=np.int64)
    for s in range(config.num_sequences):
        seq = clifford.random_sequence(length, sequence_rng(config.seed, length, s))
        idx[s, :length] = [g.index for g in seq]
        idx[s, length] = clifford.inverse_of_sequence(seq).index
    return idx


def _initial_vector(config: SuiteConfig, noise: NoiseModel) -> np.ndarray:
    rho = basis_state(config.control_init, config.ancilla_init)
    if noise.prep_flip > 0:
        rho = noise.prep_channel()(rho)
    return vec(rho)


def _simulate_length(config: SuiteConfig, noise: NoiseModel, length: int) -> dict:
    """Exact ground-state probabilities of every circuit at one length."""
    idx = _sequences(config, length)
    gates = noise.gate_superoperators
    meas = noise.measurement_superoperator
    delay = noise.delay_superoperator(config.t_m)
    v0 = np.tile(_initial_vector(config, noise), (config.num_sequences, 1))

    out = {}
    for protocol, interleave in (("mcm_rb", meas), ("delay_rb", delay)):
        v = v0
        for i in range(length):
            v = run_batch(v, [gates[idx[:, i]], interleave])
        v = run_batch(v, [gates[idx[:, length]]])
        for q in QUBITS:
            out[(protocol, q)] = ground_state_probabilities(v, q)

    rep_step = noise.delay_superoperator(config.t_g) @ meas
    v = run_batch(v0[:1], [rep_step] * length)
    for q in QUBITS:
        out[("mcm_rep", q)] = ground_state_probabilities(v, q)
    return out


def _simulate_twirl_exact(config: SuiteConfig, noise: NoiseModel) -> list:
    """Exact average over all uniformly random Clifford sequences.

    The state is tracked jointly with the net Clifford applied so far (24
    branches of 16-component vectors), so the recovery gate of every
    sequence is accounted for without enumerating sequences.
    """
    gates = noise.gate_superoperators
    table = clifford.COMPOSE.ravel()
    recover = gates[clifford.INVERSE]
    v0 = _initial_vector(config, noise)
    rep_step = noise.delay_superoperator(config.t_g) @ noise.measurement_superoperator

    per_length = [dict() for _ in config.lengths]
    for protocol, interleave in (("mcm_rb", noise.measurement_superoperator),
                                 ("delay_rb", noise.delay_superoperator(config.t_m))):
        v = np.zeros((clifford.N_CLIFFORDS, 16), dtype=complex)
        v[0] = v0
        done = 0
        for out, n in zip(per_length, config.lengths):
            for _ in range(n - done):
                branches = np.einsum("cij,kj->kci", gates, v) @ interleave.T / clifford.N_CLIFFORDS
                v = np.zeros_like(v)
                np.add.at(v, table, branches.reshape(-1, 16))
            done = n
            final = np.einsum("kij,kj->i", recover, v)
            for q in QUBITS:
                out[(protocol, q)] = np.atleast_1d(ground_state_probabilities(final, q))
    for out, n in zip(per_length, config.lengths):
        v = run_batch(v0[None, :], [rep_step] * n)
        for q in QUBITS:
            out[("mcm_rep", q)] = ground_state_probabilities(v, q)
    return per_length


def run_suite(config: SuiteConfig, noise: NoiseModel, threads: int = 1) -> SuiteData:
    """Simulate all three protocols at every configured length.

    Results are a pure function of ``(config, noise)``; the thread count
    only changes scheduling. With ``config.twirl_exact`` each length holds
    a single value, the exact average over random sequences.
    """
    if config.twirl_exact:
        per_length = _simulate_twirl_exact(config, noise)
    elif threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_length = list(pool.map(lambda n: _simulate_length(config, noise, n), config.lengths))
    else:
        per_length = [_simulate_length(config, noise, n) for n in config.lengths]

    data = SuiteData(config)
    for protocol in PROTOCOLS:
        for q in QUBITS:
            samples = []
            for n, probs in zip(config.lengths, per_length):
                exact = probs[(protocol, q)]
                if config.shots > 0:
                    est = np.array([
                        shot_rng(config.seed, protocol, q, n, s).binomial(config.shots, p) / config.shots
                        for s, p in enumerate(exact)
                    ])
                else:
                    est = np.array(exact, dtype=float)
                samples.append(est)
            data.curves[(protocol, q)] = curve_from_samples(config.lengths, samples, config.shots)
    return data

"""Decay-curve fitting, error-per-operation estimates and signature classification."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.stats import f as f_dist

PROTOCOLS = ("mcm_rb", "delay_rb", "mcm_rep")
QUBITS = ("control", "ancilla")
SHORT = {"mcm_rb": "rb", "delay_rb": "del", "mcm_rep": "rep", "control": "c", "ancilla": "a"}


class FitInputError(ValueError):
    pass


class IRBError(ArithmeticError):
    pass


EXACT_SIGMA_FLOOR = 1e-12


@dataclass
class DecayCurve:
    """Ground-state probabilities of one qubit under one protocol.

    ``samples[i]`` holds the per-sequence probabilities at ``lengths[i]``.
    ``std_override`` replaces the sample standard deviation (used for the
    deterministic repeated-measurement protocol, whose spread is shot noise).
    """

    lengths: np.ndarray
    samples: list
    std_override: np.ndarray | None = None

    def __post_init__(self):
        self.lengths = np.asarray(self.lengths, dtype=int)
        self.samples = [np.asarray(s, dtype=float) for s in self.samples]
        if len(self.samples) != len(self.lengths):
            raise FitInputError("one sample list per length is required")
        if np.any(np.diff(self.lengths) <= 0):
            raise FitInputError("lengths must be strictly increasing")
        if any(s.size == 0 for s in self.samples):
            raise FitInputError("every length needs at least one sample")

    @property
    def mean(self) -> np.ndarray:
        return np.array([s.mean() for s in self.samples])

    @property
    def std(self) -> np.ndarray:
        if self.std_override is not None:
            return np.asarray(self.std_override, dtype=float)
        return np.array([s.std(ddof=1) if s.size > 1 else 0.0 for s in self.samples])


def curve_from_samples(lengths, samples, shots: int = 0) -> DecayCurve:
    """Build a curve, giving single-sample curves a shot-noise standard deviation.

    When every length holds exactly one value there is no spread across
    sequences to measure, so the std is the binomial error
    sqrt(p(1-p)/shots), or 0 in exact mode (``shots == 0``).
    """
    samples = [np.atleast_1d(np.asarray(s, dtype=float)) for s in samples]
    override = None
    if samples and all(s.size == 1 for s in samples):
        p = np.array([s[0] for s in samples])
        override = np.sqrt(p * (1 - p) / shots) if shots > 0 else np.zeros_like(p)
    return DecayCurve(lengths, samples, std_override=override)


@dataclass
class FitResult:
    A: float
    alpha: float
    B: float
    sigma_A: float
    sigma_alpha: float
    sigma_B: float
    residual_rms: float
    converged: bool
    degenerate: bool = False

    @property
    def epc(self) -> float:
        return epc_from_alpha(self.alpha)

    @property
    def sigma_epc(self) -> float:
        return self.sigma_alpha / 2

    def model(self, n) -> np.ndarray:
        return self.A * self.alpha ** np.asarray(n, dtype=float) + self.B


def _model(x, n):
    return x[0] * x[1] ** n + x[2]


def _jac(x, n):
    a, alpha, _ = x
    j = np.empty((n.size, 3))
    j[:, 0] = alpha**n
    with np.errstate(divide="ignore", invalid="ignore"):
        j[:, 1] = np.where(n > 0, a * n * alpha ** np.maximum(n - 1, 0), 0.0)
    j[:, 2] = 1.0
    return j


def _initial_guesses(n: np.ndarray, y: np.ndarray) -> list:
    tail = y[-max(1, len(y) // 5):].mean()
    guesses = []
    for b0 in (tail, 0.5, min(1.0, max(0.0, 2 * tail - y[0])) if len(y) > 1 else tail):
        b0 = float(np.clip(b0, 0.0, 1.0))
        a0 = float(y[0] - b0)
        resid = np.maximum(np.abs(y - b0), np.finfo(float).eps)
        slope = np.polyfit(n, np.log(resid), 1)[0] if len(n) > 1 else 0.0
        alpha0 = float(np.clip(np.exp(slope), 1e-6, 1 - 1e-12))
        if alpha0 < 1:
            a0 = float((y[0] - b0) / alpha0 ** n[0]) if alpha0 ** n[0] > 1e-12 else a0
        guesses.append([a0, alpha0, b0])
    for alpha0 in (0.9, 0.99, 0.999):
        guesses.append([float(y[0] - tail), alpha0, float(np.clip(tail, 0, 1))])
    return guesses


def decay_is_significant(y, sigma, chi2_exp: float, level: float) -> bool:
    """Nested-model F-test of the exponential against a constant.

    Args:
        y: per-length means.
        sigma: per-length weights' standard deviations.
        chi2_exp: weighted residual sum of squares of the exponential fit.
        level: significance level; the decay counts when p < level.
    """
    w = 1.0 / sigma**2
    const = np.sum(w * y) / np.sum(w)
    chi2_const = float(np.sum(w * (y - const) ** 2))
    gain = chi2_const - chi2_exp
    if gain <= 1e-24 * max(1.0, chi2_const):
        return False
    dof = len(y) - 3
    if chi2_exp <= 0 or dof <= 0:
        return True
    stat = (gain / 2) / (chi2_exp / dof)
    return bool(f_dist.sf(stat, 2, dof) < level)


def fit_exponential(curve: DecayCurve, weighted: bool = True, significance: float = 0.01) -> FitResult:
    """Fit ``A * alpha**N + B`` to the per-length means of ``curve``.

    Weights are 1/std**2 when every length has a positive standard
    deviation, otherwise unit weights. alpha and B are bounded to [0, 1].
    The best of several starting points wins; the fit never raises on
    poor convergence, it reports ``converged=False`` instead.

    A curve whose exponential fit is not significantly better than a
    constant (F-test at ``significance``) is reported as not decaying:
    A = 0, alpha = 1 and B the weighted mean. That closed-form constant
    fit always counts as converged.
    """
    n = curve.lengths.astype(float)
    if len(np.unique(n)) < 4:
        raise FitInputError("at least 4 distinct sequence lengths are needed to fit")
    y = curve.mean
    std = curve.std
    sigma = std if weighted and np.all(std > 1e-12) else np.ones_like(y)

    def resid(x):
        return (_model(x, n) - y) / sigma

    def jac(x):
        return _jac(x, n) / sigma[:, None]

    lower = [-np.inf, 0.0, 0.0]
    upper = [np.inf, 1.0, 1.0]
    best = None
    for x0 in _initial_guesses(n, y):
        x0 = np.clip(np.asarray(x0, dtype=float), [-1e6, 1e-9, 0.0], [1e6, 1.0 - 1e-12, 1.0])
        res = least_squares(
            resid, x0, jac=jac, bounds=(lower, upper), method="trf", x_scale="jac",
            ftol=1e-15, xtol=1e-15, gtol=1e-15, max_nfev=2000,
        )
        if best is None or res.cost < best.cost - 1e-18:
            best = res
    x = best.x
    dof = max(len(y) - 3, 1)
    jw = jac(x)
    s2 = 2 * best.cost / dof
    try:
        cov = np.linalg.pinv(jw.T @ jw) * s2
        errs = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        errs = np.full(3, np.inf)
    flat = abs(x[0]) < 1e-6 or not decay_is_significant(y, sigma, 2 * best.cost, significance)
    degenerate = flat or x[1] > 1 - 1e-9
    if flat:
        # No decay amplitude: alpha is unidentifiable, report "no decay".
        w = 1.0 / sigma**2
        x = np.array([0.0, 1.0, float(np.clip(np.sum(w * y) / np.sum(w), 0.0, 1.0))])
        errs = np.array([errs[0], 0.0, errs[2]])
    rms = float(np.sqrt(np.mean((_model(x, n) - y) ** 2)))
    return FitResult(
        A=float(x[0]), alpha=float(x[1]), B=float(x[2]),
        sigma_A=float(errs[0]), sigma_alpha=float(errs[1]), sigma_B=float(errs[2]),
        residual_rms=rms, converged=flat or bool(best.status > 0), degenerate=bool(degenerate),
    )


def epc_from_alpha(alpha: float) -> float:
    """Error per Clifford / per measurement from the decay parameter."""
    return (1.0 - alpha) / 2.0


def irb_estimate(alpha_rb: float, sigma_rb: float, alpha_del: float, sigma_del: float, tol: float = 1e-12):
    """Measurement-induced control error from the interleaved/reference decays.

    Returns ``(eps, sigma)`` with ``eps = (1 - alpha_rb/alpha_del)/2`` and a
    first-order propagated uncertainty.
    """
    if alpha_del <= tol:
        raise IRBError(f"reference decay alpha_del={alpha_del} is too small to resolve")
    ratio = alpha_rb / alpha_del
    eps = (1.0 - ratio) / 2.0
    sigma = 0.5 * math.hypot(sigma_rb / alpha_del, alpha_rb * sigma_del / alpha_del**2)
    return eps, sigma


# --- even-flip probability --------------------------------------------------


def pgs_brute_force(p: float, N: int) -> float:
    """Probability of an even number of flips in N independent flips of probability p.

    Direct sum over k of C(N, 2k) p^(2k) (1-p)^(N-2k), accumulated from the
    smallest terms upwards.
    """
    terms = [math.comb(N, 2 * k) * p ** (2 * k) * (1 - p) ** (N - 2 * k) for k in range(N // 2 + 1)]
    return math.fsum(sorted(terms))


def pgs_closed_form(p: float, N: int) -> float:
    """Closed form of :func:`pgs_brute_force`: (1 + (1 - 2p)^N) / 2."""
    return 0.5 * (1.0 + (1.0 - 2.0 * p) ** N)


def pgs_unweighted_sum(p: float, N: int) -> float:
    """Sum over k of p^(2k) (1-p)^(N-2k), without the pattern-count factor."""
    return math.fsum(p ** (2 * k) * (1 - p) ** (N - 2 * k) for k in range(N // 2 + 1))


def pgs_unweighted_closed_form(p: float, N: int) -> float:
    """Closed form of :func:`pgs_unweighted_sum`.

    ((1-p)^(N+2) - p^(N+2-w) (1-p)^w) / (1 - 2p) with w = N mod 2. The
    removable singularity at p = 1/2 is evaluated from the sum.
    """
    if abs(1 - 2 * p) < 1e-6:
        return pgs_unweighted_sum(p, N)
    w = N % 2
    q = 1.0 - p
    return (q ** (N + 2) - p ** (N + 2 - w) * q**w) / (1.0 - 2.0 * p)


# --- suite results and classification ---------------------------------------


class ErrorSignature(enum.Enum):
    NoMeasurementInducedError = "no measurement induced error"
    NonQndMeasurement = "non-QND measurement error"
    MeasurementInducedControlError = "measurement induced control error"
    MeasurementInducedTwoQubitError = "measurement induced 2-qubit error"
    RbCrossTalk = "RB cross-talk error"


@dataclass
class Estimate:
    value: float
    sigma: float


@dataclass
class SuiteResult:
    """Six EPC/EPM values keyed by (protocol, qubit) plus the IRB estimate."""

    eps: dict
    eps_irb: Estimate
    fit_quality: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)

    def __getitem__(self, key) -> Estimate:
        return self.eps[key]

    def to_dict(self) -> dict:
        return {
            "eps": {f"{p}/{q}": {"value": e.value, "sigma": e.sigma} for (p, q), e in self.eps.items()},
            "eps_irb": {"value": self.eps_irb.value, "sigma": self.eps_irb.sigma},
            "fit_quality": {f"{p}/{q}": v for (p, q), v in self.fit_quality.items()},
        }


def suite_result_from_fits(fits: dict, exact: bool = False) -> SuiteResult:
    """Turn per-curve fits into a :class:`SuiteResult`.

    Standard errors come from the residual-scaled fit covariance. In exact
    mode that can be zero for a perfect exponential, so it is floored at
    ``EXACT_SIGMA_FLOOR`` to keep significance tests finite.
    """
    floor = EXACT_SIGMA_FLOOR if exact else 0.0
    eps = {key: Estimate(fr.epc, max(fr.sigma_epc, floor)) for key, fr in fits.items()}
    rb, dl = fits[("mcm_rb", "control")], fits[("delay_rb", "control")]
    value, sigma = irb_estimate(rb.alpha, max(rb.sigma_alpha, floor), dl.alpha, max(dl.sigma_alpha, floor))
    return SuiteResult(
        eps=eps,
        eps_irb=Estimate(value, sigma),
        fit_quality={k: fr.residual_rms for k, fr in fits.items()},
        fits=dict(fits),
    )


@dataclass(frozen=True)
class Thresholds:
    """Decision thresholds for the signature tests.

    A value counts as zero when below ``max(abs_floor, z * sigma)``. One
    value exceeds another when their difference is above
    ``max(sep_floor, z * combined sigma)``. ``dominance`` is the ratio
    for the collision hint.
    """

    abs_floor: float = 1e-3
    z: float = 2.0
    sep_floor: float = 1e-4
    dominance: float = 10.0
    hint_floor: float = 1e-5


@dataclass
class Classification:
    signatures: set
    evidence: dict
    hints: list
    thresholds: Thresholds

    def __contains__(self, sig) -> bool:
        return sig in self.signatures

    def to_dict(self) -> dict:
        return {
            "signatures": sorted(s.name for s in self.signatures),
            "evidence": {s.name: notes for s, notes in self.evidence.items()},
            "hints": list(self.hints),
            "thresholds": asdict(self.thresholds),
        }


def _label(protocol: str, qubit: str) -> str:
    return f"eps_{SHORT[protocol]}^{SHORT[qubit]}"


class _Tests:
    def __init__(self, result: SuiteResult, th: Thresholds):
        self.r = result
        self.th = th

    def est(self, p, q) -> Estimate:
        return self.r.eps[(p, q)]

    def zero(self, p, q):
        e = self.est(p, q)
        limit = max(self.th.abs_floor, self.th.z * e.sigma)
        ok = e.value < limit
        return ok, f"{_label(p, q)}={e.value:.3g} {'<' if ok else '>='} {limit:.3g} (≈0)"

    def positive(self, p, q):
        ok, note = self.zero(p, q)
        return not ok, note.replace("(≈0)", "(>0)")

    def greater(self, p1, p2, q):
        a, b = self.est(p1, q), self.est(p2, q)
        limit = max(self.th.sep_floor, self.th.z * math.hypot(a.sigma, b.sigma))
        ok = a.value - b.value > limit
        return ok, f"{_label(p1, q)}-{_label(p2, q)}={a.value - b.value:.3g} {'>' if ok else '<='} {limit:.3g}"

    def similar(self, p1, p2, q):
        g1, n1 = self.greater(p1, p2, q)
        g2, _ = self.greater(p2, p1, q)
        ok = not g1 and not g2
        return ok, n1 + (" (≈)" if ok else " (differ)")

    def all_zero(self, q):
        checks = [self.zero(p, q) for p in PROTOCOLS]
        return all(c[0] for c in checks), "; ".join(c[1] for c in checks)


def classify_signature(result: SuiteResult, thresholds: Thresholds | None = None) -> Classification:
    """Return every error signature whose EPC/EPM relations hold.

    The two-qubit signature additionally requires some ancilla evidence
    (a non-zero ancilla EPM under mcm-rb or mcm-rep); without it the
    pattern is the control-only signature.
    """
    th = thresholds or Thresholds()
    for p in PROTOCOLS:
        for q in QUBITS:
            if (p, q) not in result.eps:
                raise FitInputError(f"missing {_label(p, q)}")
    t = _Tests(result, th)
    control_same = [t.similar("mcm_rb", "delay_rb", "control"), t.zero("mcm_rep", "control")]
    control_worse = [t.greater("mcm_rb", "delay_rb", "control")]

    rules = {
        ErrorSignature.NoMeasurementInducedError: [t.all_zero("ancilla")] + control_same,
        ErrorSignature.NonQndMeasurement: [
            t.zero("delay_rb", "ancilla"), t.positive("mcm_rb", "ancilla"), t.positive("mcm_rep", "ancilla"),
        ] + control_same,
        ErrorSignature.MeasurementInducedControlError: [t.all_zero("ancilla")] + control_worse,
        ErrorSignature.MeasurementInducedTwoQubitError: [
            t.zero("delay_rb", "ancilla"),
            (not t.all_zero("ancilla")[0], "some ancilla EPM is non-zero"),
        ] + control_worse,
        ErrorSignature.RbCrossTalk: [
            t.zero("mcm_rep", "ancilla"), t.positive("mcm_rb", "ancilla"), t.positive("delay_rb", "ancilla"),
        ] + control_same,
    }
    found, evidence = set(), {}
    for sig, checks in rules.items():
        if all(ok for ok, _ in checks):
            found.add(sig)
            evidence[sig] = [f"{sig.value}: " + note for _, note in checks]

    hints = []
    rb_a, rep_a = t.est("mcm_rb", "ancilla"), t.est("mcm_rep", "ancilla")
    if t.positive("mcm_rb", "ancilla")[0] and rb_a.value > th.dominance * max(rep_a.value, th.hint_floor):
        hints.append(
            f"collision likely: eps_rb^a={rb_a.value:.3g} exceeds {th.dominance:g}x "
            f"max(eps_rep^a={rep_a.value:.3g}, {th.hint_floor:g}); the ancilla is only disturbed "
            "when the control is excited"
        )
    return Classification(found, evidence, hints, th)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcmrb.analysis import (
    PROTOCOLS,
    QUBITS,
    DecayCurve,
    ErrorSignature,
    Estimate,
    FitInputError,
    IRBError,
    SuiteResult,
    classify_signature,
    curve_from_samples,
    epc_from_alpha,
    fit_exponential,
    irb_estimate,
    pgs_brute_force,
    pgs_closed_form,
    pgs_unweighted_closed_form,
    pgs_unweighted_sum,
)

LENGTHS = np.array([1, 2, 4, 6, 8, 12, 16, 24, 32, 48, 64, 90, 110, 130, 150])


def exact_curve(A, alpha, B, lengths=LENGTHS):
    return DecayCurve(lengths, [[A * alpha**n + B] for n in lengths], std_override=np.zeros(len(lengths)))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 0.5), st.floats(0.9, 0.9995), st.floats(0.3, 0.55))
def test_fit_recovers_exact_exponential(A, alpha, B):
    fit = fit_exponential(exact_curve(A, alpha, B))
    assert fit.converged
    assert fit.alpha == pytest.approx(alpha, abs=1e-7)
    assert fit.A == pytest.approx(A, abs=1e-5)
    assert fit.B == pytest.approx(B, abs=1e-5)
    assert fit.residual_rms < 1e-9


def test_fit_uncertainty_covers_truth_with_noise():
    rng = np.random.default_rng(8)
    alpha, hits = 0.985, 0
    for _ in range(200):
        samples = [np.clip(0.45 * alpha**n + 0.5 + rng.normal(0, 0.01, 30), 0, 1) for n in LENGTHS]
        fit = fit_exponential(DecayCurve(LENGTHS, samples))
        hits += abs(fit.alpha - alpha) < 2 * fit.sigma_alpha
    # two-sigma coverage of the covariance estimate
    assert hits / 200 > 0.88


def test_fit_bounds_and_flat_curve():
    flat = DecayCurve(LENGTHS, [[0.97]] * len(LENGTHS), std_override=np.zeros(len(LENGTHS)))
    fit = fit_exponential(flat)
    assert fit.degenerate
    assert (fit.A, fit.alpha, fit.B, fit.epc) == (0.0, 1.0, pytest.approx(0.97), 0.0)


def test_insignificant_decay_is_reported_flat():
    rng = np.random.default_rng(2)
    samples = [np.clip(0.995 + rng.normal(0, 0.002, 40), 0, 1) for _ in LENGTHS]
    fit = fit_exponential(DecayCurve(LENGTHS, samples))
    assert fit.alpha == 1.0 and fit.epc == 0.0
    assert fit.converged


def test_fit_needs_four_lengths():
    with pytest.raises(FitInputError):
        fit_exponential(exact_curve(0.5, 0.9, 0.5, lengths=np.array([1, 2, 3])))


def test_decay_curve_validation():
    with pytest.raises(FitInputError):
        DecayCurve([2, 1], [[0.5], [0.5]])
    with pytest.raises(FitInputError):
        DecayCurve([1, 2], [[0.5], []])


def test_curve_from_samples_std():
    c = curve_from_samples([1, 2, 3, 4], [[0.5], [0.9], [1.0], [0.75]], shots=100)
    assert np.allclose(c.std, [0.05, 0.03, 0.0, np.sqrt(0.75 * 0.25 / 100)])
    assert np.allclose(curve_from_samples([1, 2, 3, 4], [[0.5]] * 4).std, 0.0)
    multi = curve_from_samples([1, 2], [[0.4, 0.6], [0.5, 0.7]], shots=100)
    assert np.allclose(multi.std, np.std([0.4, 0.6], ddof=1))


def test_epc_and_irb():
    assert epc_from_alpha(0.98) == pytest.approx(0.01)
    eps, sigma = irb_estimate(0.97, 0.001, 0.99, 0.001)
    assert eps == pytest.approx((1 - 0.97 / 0.99) / 2)
    expected = 0.5 * math.hypot(0.001 / 0.99, 0.97 * 0.001 / 0.99**2)
    assert sigma == pytest.approx(expected)
    with pytest.raises(IRBError):
        irb_estimate(0.5, 0.01, 0.0, 0.01)


@pytest.mark.parametrize("p", [0.001, 0.01, 0.05, 0.1, 0.25, 0.49, 0.5])
def test_pgs_closed_form_equals_brute_force(p):
    for n in range(151):
        assert abs(pgs_closed_form(p, n) - pgs_brute_force(p, n)) < 1e-12


def test_pgs_small_cases():
    for p in (0.0, 0.2, 0.7):
        assert pgs_brute_force(p, 1) == pytest.approx(1 - p)
        assert pgs_brute_force(p, 0) == 1.0
    assert pgs_brute_force(0.5, 10) == pytest.approx(0.5)


@pytest.mark.parametrize("p", [0.001, 0.1, 0.3, 0.5 - 1e-9, 0.5, 0.7])
@pytest.mark.parametrize("n", [0, 1, 2, 7, 30])
def test_unweighted_sum_closed_form(p, n):
    assert pgs_unweighted_closed_form(p, n) == pytest.approx(pgs_unweighted_sum(p, n), rel=1e-9, abs=1e-15)


def make_result(values, sigma=1e-5, irb=0.0):
    eps = {(p, q): Estimate(values.get((p, q), 0.0), sigma) for p in PROTOCOLS for q in QUBITS}
    return SuiteResult(eps=eps, eps_irb=Estimate(irb, sigma))


S = ErrorSignature
CASES = {
    "none": ({("mcm_rb", "control"): 2e-3, ("delay_rb", "control"): 2e-3}, {S.NoMeasurementInducedError}),
    "non_qnd": ({("mcm_rb", "control"): 2e-3, ("delay_rb", "control"): 2e-3, ("mcm_rb", "ancilla"): 0.01,
                 ("mcm_rep", "ancilla"): 0.01}, {S.NonQndMeasurement}),
    "control": ({("mcm_rb", "control"): 8e-3, ("delay_rb", "control"): 2e-3, ("mcm_rep", "control"): 4e-3},
                {S.MeasurementInducedControlError}),
    "two_qubit": ({("mcm_rb", "control"): 0.012, ("delay_rb", "control"): 2e-3, ("mcm_rb", "ancilla"): 3e-3},
                  {S.MeasurementInducedTwoQubitError}),
    "cross_talk": ({("mcm_rb", "control"): 2e-3, ("delay_rb", "control"): 2e-3, ("mcm_rb", "ancilla"): 5e-3,
                    ("delay_rb", "ancilla"): 5e-3}, {S.RbCrossTalk}),
}


@pytest.mark.parametrize("name", CASES)
def test_classifier_table(name):
    values, expected = CASES[name]
    cls = classify_signature(make_result(values))
    assert cls.signatures == expected
    for sig in expected:
        assert cls.evidence[sig]


def test_collision_hint_only_when_ancilla_rb_dominates():
    values, _ = CASES["two_qubit"]
    assert classify_signature(make_result(values)).hints
    assert not classify_signature(make_result({**values, ("mcm_rep", "ancilla"): 2e-3})).hints


def test_uncertain_values_count_as_zero():
    values = {("mcm_rb", "ancilla"): 4e-3, ("mcm_rep", "ancilla"): 4e-3}
    assert S.NonQndMeasurement in classify_signature(make_result(values, sigma=1e-5))
    assert S.NonQndMeasurement not in classify_signature(make_result(values, sigma=5e-3))


def test_classifier_requires_all_six():
    result = make_result({})
    del result.eps[("mcm_rep", "ancilla")]
    with pytest.raises(FitInputError):
        classify_signature(result)

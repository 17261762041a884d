import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from stdstate.classifier import (
    ClassifierConfig,
    classify,
    min_success_probability,
    parameter_count_note,
    posterior_after_failure,
    posterior_after_success,
)
from stdstate.errors import ValidationError
from stdstate.sequencer import Procedure1Report, sequence_bound


def failure_density(p, N):
    return N * (N + 1) * p * (1 - p) ** (N - 1)


def success_density(p, N):
    return (N + 1) * (1 - p) ** N


def quad_cdf(density, N, p1):
    """Numeric CDF; the densities peak near 1/N, so split [0, p1] geometrically from there."""
    edges, e = [0.0], 0.25 / N
    while e < p1:
        edges.append(e)
        e *= 2
    edges.append(p1)
    return sum(quad(density, a, b, args=(N,), epsabs=1e-15, epsrel=1e-13, limit=200)[0]
               for a, b in zip(edges, edges[1:]))


def mp_cdf_failure(N, p1):
    with mpmath.workdps(60):
        p1 = mpmath.mpf(p1)
        return float(1 - (N * p1 + 1) * (1 - p1) ** N)


def mp_cdf_success(N, p1):
    with mpmath.workdps(60):
        return float(1 - (1 - mpmath.mpf(p1)) ** (N + 1))


def test_densities_integrate_to_one():
    for N in (1, 5, 40):
        assert math.isclose(quad_cdf(failure_density, N, 1.0), 1.0, rel_tol=1e-10)
        assert math.isclose(quad_cdf(success_density, N, 1.0), 1.0, rel_tol=1e-10)


@pytest.mark.parametrize("N", [1, 2, 7, 30, 200])
@pytest.mark.parametrize("p1", [1e-3, 0.05, 0.3, 0.9])
def test_closed_forms_match_quadrature(N, p1):
    assert abs(posterior_after_failure(N, p1) - quad_cdf(failure_density, N, p1)) <= 1e-10
    assert abs(posterior_after_success(N, p1) - quad_cdf(success_density, N, p1)) <= 1e-10


@pytest.mark.parametrize("N,p1", [(10**7, 2.0**-20), (10**9, 2.0**-50), (3, 2.0**-50), (10**12, 1e-6)])
def test_tiny_p1_against_high_precision(N, p1):
    assert math.isclose(posterior_after_success(N, p1), mp_cdf_success(N, p1), rel_tol=1e-12, abs_tol=1e-300)
    assert math.isclose(posterior_after_failure(N, p1), mp_cdf_failure(N, p1), rel_tol=1e-9, abs_tol=1e-300)
    assert posterior_after_success(N, p1) > 0.0


def test_bayesian_worked_example():
    val = posterior_after_success(10**7, 2.0**-20)
    assert 0.99990 <= val <= 0.99995


def test_edges():
    assert posterior_after_success(0, 0.25) == pytest.approx(0.25)
    assert posterior_after_failure(1, 0.5) == pytest.approx(1 - 1.5 * 0.5)
    assert posterior_after_success(5, 0.0) == 0.0
    assert posterior_after_failure(5, 1.0) == 1.0
    for bad in ((0, 0.1), (3, -0.1), (3, 1.5)):
        with pytest.raises(ValidationError):
            posterior_after_failure(*bad)
    with pytest.raises(ValidationError):
        posterior_after_success(-1, 0.1)


@settings(max_examples=200)
@given(st.integers(1, 10**6), st.floats(1e-9, 0.999))
def test_monotone_in_N(N, p1):
    assert posterior_after_success(N + 1, p1) >= posterior_after_success(N, p1)
    assert posterior_after_failure(N + 1, p1) >= posterior_after_failure(N, p1)


@settings(max_examples=200)
@given(st.integers(1, 10**6), st.floats(1e-9, 0.5), st.floats(1.0001, 1.9))
def test_monotone_in_p1(N, p1, scale):
    assert posterior_after_success(N, p1 * scale) >= posterior_after_success(N, p1)
    assert posterior_after_failure(N, p1 * scale) >= posterior_after_failure(N, p1)


def report(outcome, trials, failure=None):
    return Procedure1Report(8, outcome, trials, 4 * trials, failure_trial=failure)


def test_verdicts():
    cfg = ClassifierConfig(8, 16)
    assert cfg.N0 == sequence_bound(8)
    assert classify(report("success", 30), cfg).verdict == "LikelyPolynomial"
    assert classify(report("success", 9), cfg).verdict == "Undecided"
    assert classify(report("failure", 2, 2), cfg).verdict == "UnlikelyPolynomial"
    late = classify(report("failure", 200, 200), cfg)
    assert late.verdict == "Undecided" and late.probability is not None
    amb = classify(report("ambiguous", 3), cfg)
    assert amb.verdict == "Undecided" and amb.probability is None
    assert classify(report("degenerate", 1), cfg).verdict == "Undecided"


def test_report_fields():
    cfg = ClassifierConfig(20, 2**10)
    r = classify(report("success", 10**4), cfg)
    assert r.p1 == 2.0**-10 == r.closeness_heuristic
    assert r.probability == pytest.approx(posterior_after_success(10**4, 2.0**-10))
    assert set(r.to_dict()) == {"verdict", "N", "p1", "probability", "closeness_heuristic", "reason"}


def test_config_validation():
    with pytest.raises(ValidationError):
        ClassifierConfig(4, 16)
    with pytest.raises(ValidationError):
        ClassifierConfig(4, 0.5)
    with pytest.raises(ValidationError):
        ClassifierConfig(4, 2, N0=0)


def test_min_success_probability():
    assert min_success_probability(ClassifierConfig(10, 4)) == 1.0
    cfg = ClassifierConfig(10, 4, N0=50, c=2.0, k_exp=2.0)
    assert min_success_probability(cfg) == pytest.approx((1 - 200 / 1024) ** 50)
    with pytest.raises(ValidationError):
        min_success_probability(ClassifierConfig(4, 2, c=1.0, k_exp=3.0))


def test_parameter_count_note():
    assert parameter_count_note(10) == {"general_state_parameters": 2046}
    assert parameter_count_note(10, c=1.0, k_exp=2.0)["polynomial_budget_4cnk"] == 400.0

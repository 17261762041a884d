"""Bayesian verdict on whether a standard state has polynomially many variants.

With ``p`` the fraction of variant locations and a uniform prior on ``p``,
the first failure at trial ``N`` gives the posterior density
``N(N+1) p (1-p)^(N-1)`` and ``N`` straight successes give
``(N+1)(1-p)^N``. Both integrate in closed form up to ``p1 = K1 / 2**n``.
Powers are evaluated as ``exp(N log1p(-p1))`` so that ``p1 ~ 2**-50``
still registers.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

from .errors import ValidationError
from .sequencer import Procedure1Report, sequence_bound

MIN_EVIDENCE = 10


def _check_p(p1: float) -> float:
    p1 = float(p1)
    if not 0.0 <= p1 <= 1.0:
        raise ValidationError(f"p1 must lie in [0, 1], got {p1}")
    return p1


def posterior_after_failure(N: int, p1: float) -> float:
    """P(p <= p1 | first failure at trial N) = 1 - (N p1 + 1)(1 - p1)^N."""
    if N < 1:
        raise ValidationError("failure trial index must be >= 1")
    p1 = _check_p(p1)
    if p1 == 1.0:
        return 1.0
    val = -math.expm1(math.log1p(N * p1) + N * math.log1p(-p1))
    return min(max(val, 0.0), 1.0)


def posterior_after_success(N: int, p1: float) -> float:
    """P(p <= p1 | N successes) = 1 - (1 - p1)^(N+1)."""
    if N < 0:
        raise ValidationError("success count must be >= 0")
    p1 = _check_p(p1)
    if p1 == 1.0:
        return 1.0
    return min(max(-math.expm1((N + 1) * math.log1p(-p1)), 0.0), 1.0)


@dataclass
class ClassifierConfig:
    n: int
    K1: float
    N0: Optional[int] = None
    c: Optional[float] = None
    k_exp: Optional[float] = None
    min_evidence: int = MIN_EVIDENCE

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("n must be >= 1")
        if not 1 <= self.K1 < 2.0 ** self.n:
            raise ValidationError(f"K1 must satisfy 1 <= K1 < 2^n, got {self.K1}")
        if self.N0 is None:
            self.N0 = max(sequence_bound(self.n), 1)
        if self.N0 < 1:
            raise ValidationError("N0 must be >= 1")

    @property
    def p1(self) -> float:
        return math.ldexp(float(self.K1), -self.n)


def min_success_probability(config: ClassifierConfig) -> float:
    """(1 - c n^k / 2^n)^N0: chance a polynomial state passes all N0 trials."""
    if config.c is None or config.c == 0:
        return 1.0
    k = config.k_exp if config.k_exp is not None else 0.0
    frac = math.ldexp(config.c * float(config.n) ** k, -config.n)
    if frac >= 1.0 or frac < 0.0:
        raise ValidationError(f"c n^k must lie in [0, 2^n); got ratio {frac}")
    return math.exp(config.N0 * math.log1p(-frac))


@dataclass
class PosteriorReport:
    verdict: str  # LikelyPolynomial | UnlikelyPolynomial | Undecided
    N: int
    p1: float
    probability: Optional[float]
    closeness_heuristic: float
    reason: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def classify(report: Procedure1Report, config: ClassifierConfig) -> PosteriorReport:
    p1 = config.p1
    if report.outcome == "failure":
        N = int(report.failure_trial)
        post = posterior_after_failure(N, p1)
        if N > config.N0:
            return PosteriorReport("Undecided", N, p1, post, p1, "failure beyond the planned trial budget")
        return PosteriorReport("UnlikelyPolynomial", N, p1, post, p1, "ratio pattern missing")
    if report.outcome == "success":
        N = report.trials_used
        post = posterior_after_success(N, p1)
        if N < config.min_evidence:
            return PosteriorReport("Undecided", N, p1, post, p1, f"fewer than {config.min_evidence} successes")
        return PosteriorReport("LikelyPolynomial", N, p1, post, p1, "all trials showed a ratio pattern")
    return PosteriorReport("Undecided", report.trials_used, p1, None, p1, f"procedure outcome: {report.outcome}")


def parameter_count_note(n: int, c: Optional[float] = None, k_exp: Optional[float] = None) -> dict:
    """Free real parameters of a general state against a polynomial budget."""
    note = {"general_state_parameters": 2 ** (n + 1) - 2}
    if c is not None:
        note["polynomial_budget_4cnk"] = 4 * c * float(n) ** (k_exp or 0.0)
    return note

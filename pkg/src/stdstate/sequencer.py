"""Qubit-order recovery for minimal standard states by trio ratio tests.

For a trio (j, k, m) and a filler assignment of the other qubits, four
coefficients are retrieved::

    C00 = C(q_j=0, q_k=0, q_m=0)    C11 = C(q_j=1, q_k=1, q_m=0)
    C01 = C(q_j=0, q_k=1, q_m=1)    C10 = C(q_j=1, q_k=0, q_m=1)

and the ratio pattern that holds names the middle qubit of the trio:

    C00/C11 = C01/C10  ->  k in the middle
    C00/C10 = C01/C11  ->  m in the middle
    C00/C11 = C10/C01  ->  j in the middle

Standard states vanish on odd-parity basis states, so fillers are drawn from
the even-parity assignments of the remaining qubits (2**(n-4) of them).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import DegeneratePairError, DegenerateTrioError, ValidationError
from .standard import LevelPair
from .statevector import StateVector, get_amplitude

log = logging.getLogger(__name__)

REL_TOL = 1e-9
FLOOR_ABS = 1e-24
AMBIGUITY_RETRIES = 8


class CoefficientOracle:
    """Counts every coefficient retrieval made through it.

    ``source`` is a :class:`StateVector` or any callable taking a full
    ``{qubit: bit}`` mapping and returning the complex amplitude.
    """

    def __init__(self, source, n: Optional[int] = None):
        if isinstance(source, StateVector):
            self.n = source.n
            self._get = lambda assign: get_amplitude(source, assign)
        else:
            if n is None:
                raise ValidationError("n is required for a callable coefficient source")
            self.n = n
            self._get = source
        self.count = 0

    def __call__(self, assign: Mapping[int, int]) -> complex:
        if len(assign) != self.n:
            raise ValidationError(f"retrieval needs all {self.n} qubits, got {len(assign)}")
        self.count += 1
        return complex(self._get(dict(assign)))


@dataclass
class TrioVerdict:
    trio: tuple
    filler: dict
    coeffs: tuple  # (C00, C11, C01, C10)
    holds: tuple  # qubits whose pattern holds
    status: str  # "pattern" | "none" | "ambiguous"

    @property
    def middle(self) -> Optional[int]:
        return self.holds[0] if self.status == "pattern" else None

    def to_dict(self) -> dict:
        return {
            "trio": list(self.trio),
            "filler": "".join(str(self.filler[q]) for q in sorted(self.filler)),
            "status": self.status,
            "middle": self.middle,
        }


def _equal(lhs: complex, rhs: complex, tol: float, floor_abs: float) -> bool:
    return abs(lhs - rhs) <= tol * max(abs(lhs), abs(rhs), floor_abs)


def trio_test(oracle: CoefficientOracle, j: int, k: int, m: int, filler: Mapping[int, int],
              tol: float = REL_TOL, floor_abs: float = FLOOR_ABS) -> TrioVerdict:
    trio = (j, k, m)
    if len(set(trio)) != 3:
        raise ValidationError(f"trio qubits must be distinct: {trio}")
    rest = set(range(1, oracle.n + 1)) - set(trio)
    if set(filler) != rest:
        raise ValidationError(f"filler must cover exactly qubits {sorted(rest)}")

    def get(bj, bk, bm):
        return oracle({**filler, j: bj, k: bk, m: bm})

    c00, c11, c01, c10 = get(0, 0, 0), get(1, 1, 0), get(0, 1, 1), get(1, 0, 1)
    tests = {
        k: (c00 * c10, c01 * c11),
        m: (c00 * c11, c01 * c10),
        j: (c00 * c01, c10 * c11),
    }
    if all(max(abs(a), abs(b)) <= floor_abs for a, b in tests.values()):
        raise DegenerateTrioError(f"all ratio tests vanish for trio {trio} with filler {dict(filler)}")
    holds = tuple(q for q in (j, k, m) if _equal(*tests[q], tol, floor_abs))
    status = "none" if not holds else "pattern" if len(holds) == 1 else "ambiguous"
    return TrioVerdict(trio, dict(filler), (c00, c11, c01, c10), holds, status)


def random_filler(n: int, exclude: Sequence[int], rng: np.random.Generator) -> dict:
    """Uniform even-parity assignment of the qubits outside ``exclude``."""
    rest = [q for q in range(1, n + 1) if q not in exclude]
    bits = rng.integers(0, 2, size=len(rest))
    if rest and bits.sum() % 2:
        bits[-1] ^= 1
    return {q: int(b) for q, b in zip(rest, bits)}


def sequence_bound(n: int) -> int:
    """Worst-case number of trios: sum_{h=3}^{n} floor((h+1)/2)."""
    return sum((h + 1) // 2 for h in range(3, n + 1))


class SequencingFailure(Exception):
    """A trio showed no ratio pattern (or stayed ambiguous)."""

    def __init__(self, kind: str, trial: int, verdict: TrioVerdict):
        self.kind = kind
        self.trial = trial
        self.verdict = verdict
        super().__init__(f"{kind} at trial {trial}: trio {verdict.trio}")


@dataclass
class _Trials:
    """Trial bookkeeping shared by the sequencing steps."""

    oracle: CoefficientOracle
    rng: np.random.Generator
    tol: float = REL_TOL
    log: list = field(default_factory=list)

    @property
    def used(self) -> int:
        return len(self.log)

    def middle(self, a: int, b: int, c: int) -> int:
        for _ in range(AMBIGUITY_RETRIES):
            filler = random_filler(self.oracle.n, (a, b, c), self.rng)
            verdict = trio_test(self.oracle, a, b, c, filler, self.tol)
            self.log.append(verdict)
            if verdict.status == "pattern":
                return verdict.middle
            if verdict.status == "none":
                raise SequencingFailure("no-pattern", self.used, verdict)
        raise SequencingFailure("ambiguous", self.used, verdict)


def _insert(trials: _Trials, known: list, new: int) -> int:
    """Position at which ``new`` slots into ``known`` (which is correct up to reversal)."""
    h = len(known)
    lo, hi = 0, h - 1
    while True:
        if hi - lo == 0:
            # one candidate neighbour left: decide which side of it
            mid = trials.middle(known[lo - 1], known[lo], new)
            return lo + 1 if mid == known[lo] else lo
        a, b = known[lo], known[hi]
        mid = trials.middle(a, b, new)
        if mid == a:
            return lo
        if mid == b:
            return hi + 1
        if hi - lo == 1:
            return hi
        lo, hi = lo + 1, hi - 1


def insert_qubit(oracle: CoefficientOracle, known: Sequence[int], new_qubit: int,
                 tol: float = REL_TOL, rng: Optional[np.random.Generator] = None) -> tuple:
    """Return ``(position, trials_used)`` for inserting ``new_qubit`` into ``known``.

    Trios move inward from both ends: (first, last, new), (second,
    second-last, new), ... so at most floor((h+1)/2) trials are spent.
    """
    if len(known) < 3:
        raise ValidationError("insertion needs a known sequence of at least 3 qubits")
    trials = _Trials(oracle, rng or np.random.default_rng(0), tol)
    pos = _insert(trials, list(known), new_qubit)
    return pos, trials.used


@dataclass
class QubitOrder:
    sequence: tuple
    note: str = "valid up to full reversal"

    def matches(self, truth: Sequence[int]) -> bool:
        truth = tuple(truth)
        return self.sequence == truth or self.sequence == truth[::-1]


def _sequence(trials: _Trials, n: int) -> list:
    mid = trials.middle(1, 2, 3)
    ends = [q for q in (1, 2, 3) if q != mid]
    seq = [ends[0], mid, ends[1]]
    for q in range(4, n + 1):
        seq.insert(_insert(trials, seq, q), q)
    return seq


def sequence_all(oracle: CoefficientOracle, n: int, tol: float = REL_TOL,
                 rng: Optional[np.random.Generator] = None) -> tuple:
    """Recover the qubit order; returns ``(QubitOrder, trials_used)``.

    Raises :class:`SequencingFailure` on the first trio without a pattern.
    """
    if n < 3:
        raise ValidationError("sequencing needs n >= 3")
    trials = _Trials(oracle, rng or np.random.default_rng(0), tol)
    seq = _sequence(trials, n)
    return QubitOrder(tuple(seq)), trials.used


def level_reference(order: Sequence[int], k: int) -> dict:
    """Basis with logical q_{k-1} = q_k = 1 and everything else 0 (z = e_k)."""
    assign = {q: 0 for q in order}
    assign[order[k - 2]] = 1
    assign[order[k - 1]] = 1
    return assign


def extract_pairs(oracle: CoefficientOracle, order: Sequence[int]) -> list:
    """Pair of every level from the ratio C(0...0) / C(reference basis of that level).

    The all-zero coefficient is retrieved once and shared by all levels.
    """
    order = tuple(order.sequence if isinstance(order, QubitOrder) else order)
    c0 = oracle({q: 0 for q in order})
    pairs = []
    for k in range(2, len(order) + 1):
        c1 = oracle(level_reference(order, k))
        if abs(c1) <= FLOOR_ABS:
            raise DegeneratePairError(f"reference coefficient for level {k} is zero")
        pairs.append(LevelPair.from_ratio(c0 / c1))
    return pairs


@dataclass
class Procedure1Config:
    tol: float = REL_TOL
    extra_confirm_trials: int = 0
    seed: int = 0


@dataclass
class Procedure1Report:
    """``outcome`` is one of success / failure / ambiguous / degenerate."""

    n: int
    outcome: str
    trials_used: int
    retrievals_used: int
    order: Optional[tuple] = None
    pairs: Optional[list] = None
    failure_trial: Optional[int] = None
    log: list = field(default_factory=list)

    @property
    def successes(self) -> int:
        return self.trials_used if self.outcome == "success" else 0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "outcome": self.outcome,
            "trials_used": self.trials_used,
            "retrievals_used": self.retrievals_used,
            "order": list(self.order) if self.order else None,
            "pairs": [[p.alpha.real, p.alpha.imag, p.beta.real, p.beta.imag] for p in self.pairs]
            if self.pairs else None,
            "failure_trial": self.failure_trial,
            "trials": [v.to_dict() for v in self.log],
        }


def _confirm(trials: _Trials, order: tuple, count: int) -> None:
    """Extra random trios, each checked against the middle implied by ``order``."""
    n = len(order)
    pos = {q: i for i, q in enumerate(order)}
    for _ in range(count):
        trio = [int(q) for q in trials.rng.choice(np.arange(1, n + 1), size=3, replace=False)]
        filler = random_filler(n, trio, trials.rng)
        verdict = trio_test(trials.oracle, *trio, filler, trials.tol)
        trials.log.append(verdict)
        expected = sorted(trio, key=pos.__getitem__)[1]
        if verdict.status == "none" or (verdict.status == "pattern" and verdict.middle != expected):
            raise SequencingFailure("no-pattern", trials.used, verdict)


def run_procedure1(oracle: CoefficientOracle, n: int,
                   config: Optional[Procedure1Config] = None) -> Procedure1Report:
    """Sequence, extract pairs, then spend ``extra_confirm_trials`` random trios.

    A confirmation trio fails when no pattern holds or when the pattern names
    a middle qubit inconsistent with the recovered order. Ambiguous trios are
    consistent with a minimal state and are not counted as failures.
    """
    config = config or Procedure1Config()
    if n < 3:
        raise ValidationError("procedure needs n >= 3")
    trials = _Trials(oracle, np.random.default_rng(config.seed), config.tol)
    try:
        order = tuple(_sequence(trials, n))
        pairs = extract_pairs(oracle, order)
        _confirm(trials, order, config.extra_confirm_trials)
    except SequencingFailure as exc:
        outcome = "failure" if exc.kind == "no-pattern" else "ambiguous"
        log.debug("procedure stopped: %s", exc)
        return Procedure1Report(n, outcome, trials.used, oracle.count,
                                failure_trial=exc.trial if outcome == "failure" else None,
                                log=trials.log)
    except (DegenerateTrioError, DegeneratePairError) as exc:
        log.debug("degenerate input: %s", exc)
        return Procedure1Report(n, "degenerate", trials.used, oracle.count, log=trials.log)
    return Procedure1Report(n, "success", trials.used, oracle.count, order, pairs, log=trials.log)

"""Dense state-vector simulation.

Bit convention: bit ``j`` (0-based, least significant first) of a basis index
holds the value of qubit ``q_{j+1}``. So for n=3 the index of ``|q1 q2 q3> =
|1 0 0>`` is 1, and bitstrings passed to this module are read q1 first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import SizeError, ValidationError
from .gates import Cnot, ControlledU, Gate, SingleQubit, TwoLevel

MAX_QUBITS = 30
NORM_TOL = 1e-10

Assignment = Union[str, Mapping[int, int], Sequence[tuple]]


class StateVector:
    """``n`` qubits and 2**n complex amplitudes (single owner, mutated in place)."""

    def __init__(self, n: int, amps=None, *, check_norm: bool = True):
        if not 1 <= n <= MAX_QUBITS:
            raise SizeError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")
        self.n = n
        if amps is None:
            self.amps = np.zeros(1 << n, dtype=complex)
            self.amps[0] = 1.0
        else:
            a = np.array(amps, dtype=complex).reshape(-1)
            if a.shape[0] != 1 << n:
                raise SizeError(f"expected {1 << n} amplitudes for n={n}, got {a.shape[0]}")
            if not np.all(np.isfinite(a)):
                raise ValidationError("amplitudes must be finite")
            if check_norm and abs(np.vdot(a, a).real - 1.0) > NORM_TOL:
                raise ValidationError(f"state is not normalized (norm^2 = {np.vdot(a, a).real!r})")
            self.amps = a

    @classmethod
    def from_amplitudes(cls, amps, normalize: bool = False) -> "StateVector":
        a = np.asarray(amps, dtype=complex).reshape(-1)
        n = int(round(math.log2(a.shape[0]))) if a.shape[0] else 0
        if a.shape[0] != 1 << n:
            raise SizeError(f"amplitude count {a.shape[0]} is not a power of two")
        if normalize:
            nrm = np.linalg.norm(a)
            if nrm == 0:
                raise ValidationError("cannot normalize the zero vector")
            a = a / nrm
        return cls(n, a)

    def copy(self) -> "StateVector":
        return StateVector(self.n, self.amps.copy(), check_norm=False)

    def norm_squared(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def tensor(self) -> np.ndarray:
        """View of the amplitudes as an n-axis tensor; axis ``n - q`` is qubit ``q``."""
        return self.amps.reshape((2,) * self.n)

    def apply(self, g: Gate) -> "StateVector":
        return apply_gate(self, g)

    def run(self, script: Iterable[Gate]) -> "StateVector":
        for g in script:
            apply_gate(self, g)
        return self

    def __repr__(self):
        return f"StateVector(n={self.n})"


def new_zero_state(n: int) -> StateVector:
    return StateVector(n)


def random_state(n: int, rng: np.random.Generator) -> StateVector:
    """Normalized complex-Gaussian amplitudes (Haar-distributed direction)."""
    a = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, a / np.linalg.norm(a))


def _check_qubit(state: StateVector, q: int) -> None:
    if not 1 <= q <= state.n:
        raise SizeError(f"qubit {q} out of range for n={state.n}")


def _apply_controlled(state: StateVector, controls, target: int, u: np.ndarray) -> None:
    n = state.n
    psi = state.tensor()
    idx = [slice(None)] * n
    for q, b in controls:
        idx[n - q] = b
    i0, i1 = list(idx), list(idx)
    i0[n - target], i1[n - target] = 0, 1
    i0, i1 = tuple(i0), tuple(i1)
    a0 = psi[i0].copy()
    a1 = psi[i1]
    new1 = u[1, 0] * a0 + u[1, 1] * a1
    psi[i0] = u[0, 0] * a0 + u[0, 1] * a1
    psi[i1] = new1


def apply_gate(state: StateVector, g: Gate) -> StateVector:
    """Apply ``g`` in place and return ``state``."""
    if isinstance(g, SingleQubit):
        _check_qubit(state, g.target)
        _apply_controlled(state, (), g.target, g.matrix)
    elif isinstance(g, Cnot):
        _check_qubit(state, g.control)
        _check_qubit(state, g.target)
        psi = state.tensor()
        n = state.n
        idx = [slice(None)] * n
        idx[n - g.control] = 1
        sub = psi[tuple(idx)]
        # the control axis is gone from ``sub``; shift the target axis if it sat after it
        t_axis = n - g.target
        if t_axis > n - g.control:
            t_axis -= 1
        psi[tuple(idx)] = np.flip(sub, axis=t_axis).copy()
    elif isinstance(g, ControlledU):
        for q in g.qubits():
            _check_qubit(state, q)
        _apply_controlled(state, g.controls, g.target, g.matrix)
    elif isinstance(g, TwoLevel):
        dim = 1 << state.n
        if not (g.index_i < dim and g.index_j < dim):
            raise SizeError(f"two-level indices ({g.index_i}, {g.index_j}) out of range for n={state.n}")
        a = state.amps
        ai, aj = a[g.index_i], a[g.index_j]
        u = g.matrix
        a[g.index_i] = u[0, 0] * ai + u[0, 1] * aj
        a[g.index_j] = u[1, 0] * ai + u[1, 1] * aj
    else:
        raise TypeError(f"not a gate: {g!r}")
    return state


def _pairs(n: int, assign: Assignment) -> list:
    if isinstance(assign, str):
        if len(assign) > n:
            raise SizeError(f"bitstring {assign!r} longer than n={n}")
        items = [(i + 1, int(c)) for i, c in enumerate(assign)]
    elif isinstance(assign, Mapping):
        items = [(int(q), int(b)) for q, b in assign.items()]
    else:
        items = [(int(q), int(b)) for q, b in assign]
    qs = [q for q, _ in items]
    if len(set(qs)) != len(qs):
        raise ValidationError(f"duplicate qubit in assignment {items}")
    for q, b in items:
        if not 1 <= q <= n:
            raise SizeError(f"qubit {q} out of range for n={n}")
        if b not in (0, 1):
            raise ValidationError(f"bit value must be 0 or 1, got {b}")
    return items


def basis_index(n: int, assign: Assignment) -> int:
    items = _pairs(n, assign)
    if len(items) != n:
        raise ValidationError(f"assignment covers {len(items)} of {n} qubits")
    return sum(b << (q - 1) for q, b in items)


def get_amplitude(state: StateVector, basis: Assignment) -> complex:
    return complex(state.amps[basis_index(state.n, basis)])


def prefix_probability(state: StateVector, assign: Assignment) -> float:
    """Exact probability that a projective measurement finds the assigned bits."""
    items = _pairs(state.n, assign)
    if not items:
        return float(min(1.0, state.norm_squared()))
    idx = [slice(None)] * state.n
    for q, b in items:
        idx[state.n - q] = b
    sub = state.tensor()[tuple(idx)]
    p = float(np.vdot(sub, sub).real)
    return min(max(p, 0.0), 1.0)


@dataclass(frozen=True)
class SampleEstimate:
    estimate: float
    sem: float
    hits: int
    shots: int


def sample_probability(p: float, shots: int, seed) -> SampleEstimate:
    """Counted-Bernoulli estimate of ``p`` from ``shots`` draws."""
    if shots < 1:
        raise ValidationError("shots must be >= 1")
    p = min(max(float(p), 0.0), 1.0)
    rng = np.random.default_rng(seed)
    hits = int(rng.binomial(shots, p))
    est = hits / shots
    return SampleEstimate(est, math.sqrt(est * (1.0 - est) / shots), hits, shots)


def sample_prefix_probability(state: StateVector, assign: Assignment, shots: int, seed=0) -> SampleEstimate:
    if shots < 1:
        raise ValidationError("shots must be >= 1")
    return sample_probability(prefix_probability(state, assign), shots, seed)


def overlap(a: StateVector, b: StateVector) -> complex:
    if a.n != b.n:
        raise ValidationError(f"dimension mismatch: {a.n} vs {b.n} qubits")
    return complex(np.vdot(a.amps, b.amps))


def fidelity(a: StateVector, b: StateVector) -> float:
    return abs(overlap(a, b)) ** 2


def equal_up_to_global_phase(a: StateVector, b: StateVector, tol: float = 1e-9) -> bool:
    return abs(overlap(a, b)) >= 1.0 - tol


def permute_qubits(state: StateVector, order: Sequence[int]) -> StateVector:
    """Relabel qubits: logical qubit ``i`` of the result is physical qubit ``order[i-1]``."""
    n = state.n
    if sorted(order) != list(range(1, n + 1)):
        raise ValidationError(f"order {order} is not a permutation of 1..{n}")
    perm = [0] * n
    for i, q in enumerate(order, 1):
        perm[n - i] = n - q
    out = np.ascontiguousarray(np.transpose(state.tensor(), perm)).reshape(-1)
    return StateVector(n, out, check_norm=False)

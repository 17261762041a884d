"""Standard states: construction, variant injection, the n-CNOT transform,
a brute-force decomposition oracle and sparse-state synthesis.

Levels are named by the qubit whose rotation sets them: level ``k`` (2..n) is
the pair written by ``U_k`` and lives on layer ``L_{k-1}``. A *location* at
level ``k`` is a bitstring over qubits ``q_{k+1} .. q_n`` (q_{k+1} first); the
single location of level ``n`` is the empty string.

In the Gray-code coordinates ``z_k = x_k ^ x_{k+1} ^ ... ^ x_n`` every
standard state satisfies ``z_1 = 0`` (even parity) and

    amp(x) = prod_k pair(k, location_k(x))[z_k]

which is what :func:`full_decompose` inverts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateLocationError, NotStandardFormError, SizeError, ValidationError
from .gates import X, Cnot, ControlledU, GateScript, SingleQubit, TwoLevel
from .statevector import StateVector, apply_gate, new_zero_state, permute_qubits

PAIR_TOL = 1e-10
ZERO_THRESHOLD = 1e-12


@dataclass(frozen=True)
class LevelPair:
    alpha: complex
    beta: complex

    def __post_init__(self):
        a, b = complex(self.alpha), complex(self.beta)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        nrm = abs(a) ** 2 + abs(b) ** 2
        if not np.isfinite(nrm) or abs(nrm - 1.0) > PAIR_TOL:
            raise ValidationError(f"pair ({a}, {b}) is not normalized (|a|^2+|b|^2 = {nrm!r})")

    @classmethod
    def from_ratio(cls, ratio: complex) -> "LevelPair":
        """Pair with ``alpha / beta == ratio``, in canonical phase."""
        beta = 1.0 / np.sqrt(1.0 + abs(ratio) ** 2)
        return cls(ratio * beta, beta).canonical()

    def completion(self) -> np.ndarray:
        """Unitary with first column (alpha, beta), second (-conj(beta), conj(alpha))."""
        a, b = self.alpha, self.beta
        return np.array([[a, -b.conjugate()], [b, a.conjugate()]], dtype=complex)

    def canonical(self) -> "LevelPair":
        """Same pair up to global phase, with its leading nonzero component real positive."""
        lead = self.alpha if abs(self.alpha) > ZERO_THRESHOLD else self.beta
        ph = lead / abs(lead)
        return LevelPair(self.alpha / ph, self.beta / ph)

    def magnitudes(self) -> tuple:
        return abs(self.alpha), abs(self.beta)

    def close_to(self, other: "LevelPair", tol: float = 1e-9, up_to_phase: bool = True) -> bool:
        if up_to_phase:
            ov = abs(self.alpha.conjugate() * other.alpha + self.beta.conjugate() * other.beta)
            return 1.0 - ov <= tol
        return abs(self.alpha - other.alpha) <= tol and abs(self.beta - other.beta) <= tol

    def __getitem__(self, b: int) -> complex:
        return (self.alpha, self.beta)[b]


def random_pair(rng: np.random.Generator, canonical: bool = True) -> LevelPair:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    v /= np.linalg.norm(v)
    p = LevelPair(v[0], v[1])
    return p.canonical() if canonical else p


@dataclass(frozen=True)
class VariantSpec:
    level: int
    pattern: str
    pair: LevelPair

    def __post_init__(self):
        if set(self.pattern) - {"0", "1"}:
            raise ValidationError(f"pattern must be a bitstring, got {self.pattern!r}")

    @property
    def parity(self) -> int:
        return self.pattern.count("1") & 1


@dataclass
class StandardStateSpec:
    """Base pairs for levels 2..n (``base_pairs[0]`` is set by ``U_2``) plus variants.

    ``order`` optionally maps logical qubit ``i`` to physical qubit ``order[i-1]``.
    """

    n: int
    base_pairs: list
    variants: list = field(default_factory=list)
    order: Optional[tuple] = None

    def __post_init__(self):
        if self.n < 2:
            raise SizeError("a standard state needs n >= 2")
        if len(self.base_pairs) != self.n - 1:
            raise ValidationError(f"expected {self.n - 1} base pairs, got {len(self.base_pairs)}")
        if self.order is not None:
            self.order = tuple(int(q) for q in self.order)
            if sorted(self.order) != list(range(1, self.n + 1)):
                raise ValidationError(f"order {self.order} is not a permutation of 1..{self.n}")
        for v in self.variants:
            self.check_variant(v)

    def check_variant(self, v: VariantSpec) -> None:
        if not 2 <= v.level <= self.n:
            raise ValidationError(f"variant level {v.level} outside [2, {self.n}]")
        if len(v.pattern) != self.n - v.level:
            raise ValidationError(
                f"pattern {v.pattern!r} must cover qubits {v.level + 1}..{self.n} "
                f"({self.n - v.level} bits)"
            )

    @property
    def K(self) -> int:
        return len(self.variants)

    def phys(self, k: int) -> int:
        return self.order[k - 1] if self.order else k

    def base(self, level: int) -> LevelPair:
        return self.base_pairs[level - 2]

    def pair_at(self, level: int, pattern: str) -> LevelPair:
        """Pair currently at a location (last variant written there wins)."""
        for v in reversed(self.variants):
            if v.level == level and v.pattern == pattern:
                return v.pair
        return self.base(level)

    def with_variants(self, variants) -> "StandardStateSpec":
        return StandardStateSpec(self.n, list(self.base_pairs), list(variants), self.order)


def random_minimal_spec(n: int, rng: np.random.Generator, order=None) -> StandardStateSpec:
    return StandardStateSpec(n, [random_pair(rng) for _ in range(n - 1)], [], order)


def random_pattern(length: int, rng: np.random.Generator, nonzero: bool = False) -> str:
    while True:
        bits = "".join(str(b) for b in rng.integers(0, 2, size=length))
        if not nonzero or "1" in bits:
            return bits


@dataclass
class BuildResult:
    state: StateVector
    script: GateScript


def variant_rotation(base: LevelPair, target: LevelPair) -> np.ndarray:
    """``V_target @ V_base^dagger``: maps (base.alpha, base.beta) onto the target pair."""
    if not isinstance(base, LevelPair) or not isinstance(target, LevelPair):
        raise ValidationError("variant_rotation expects two LevelPair values")
    return target.completion() @ base.completion().conj().T


def _run(state: StateVector, gates) -> None:
    for g in gates:
        apply_gate(state, g)


def build_minimal(spec: StandardStateSpec) -> BuildResult:
    """U_k on q_k then CNOT k->k-1, for k = 2..n."""
    if spec.variants:
        raise ValidationError("build_minimal takes a spec without variants; use build_standard")
    script = GateScript()
    for k in range(2, spec.n + 1):
        script.append(SingleQubit(spec.phys(k), spec.base(k).completion()))
        script.append(Cnot(spec.phys(k), spec.phys(k - 1)))
    state = new_zero_state(spec.n)
    _run(state, script)
    return BuildResult(state, script)


def inject_variant(state: StateVector, spec: StandardStateSpec, v: VariantSpec) -> GateScript:
    """Write ``v.pair`` at its location of a standard state described by ``spec``.

    Emits CNOT k->k-1, a pattern-controlled rotation on q_k, CNOT k->k-1 and
    applies them to ``state`` in place. Only valid while no deeper-level
    variant sits underneath the target location.
    """
    spec.check_variant(v)
    k = v.level
    for w in spec.variants:
        if w.level < k and w.pattern[k - w.level:] == v.pattern:
            raise ValidationError(
                f"level-{w.level} variant at {w.pattern!r} lies under level-{k} location "
                f"{v.pattern!r}; inject outer levels first"
            )
    u = variant_rotation(spec.pair_at(k, v.pattern), v.pair)
    if v.parity:
        # odd-parity branches hold q_k bit-flipped relative to the pair
        u = X @ u @ X
    controls = tuple((spec.phys(k + 1 + i), int(b)) for i, b in enumerate(v.pattern))
    frag = GateScript(
        [
            Cnot(spec.phys(k), spec.phys(k - 1)),
            ControlledU(controls, spec.phys(k), u),
            Cnot(spec.phys(k), spec.phys(k - 1)),
        ]
    )
    _run(state, frag)
    return frag


def build_standard(spec: StandardStateSpec) -> BuildResult:
    """Minimal construction followed by one three-gate injection per variant.

    Variants are injected outermost level first (stable within a level), so a
    repeated location ends up holding the last pair listed for it.
    """
    res = build_minimal(spec.with_variants([]))
    applied = []
    for v in sorted(spec.variants, key=lambda v: -v.level):
        ctx = spec.with_variants(applied)
        res.script.extend(inject_variant(res.state, ctx, v))
        applied.append(v)
    return res


@dataclass
class TransformResult:
    state: StateVector
    script: GateScript
    order: tuple


def theorem1_transform(state: StateVector) -> TransformResult:
    """Append q_{n+1} = |0>, then CNOT 1->n+1 and CNOT k->k-1 for k = 2..n.

    The output is standard with respect to the qubit order (q_{n+1}, q_1, ..., q_n),
    returned as ``order``.
    """
    n = state.n
    if n + 1 > 30:
        raise SizeError("transform output would exceed the qubit cap")
    amps = np.concatenate([state.amps, np.zeros_like(state.amps)])
    out = StateVector(n + 1, amps, check_norm=False)
    script = GateScript([Cnot(1, n + 1)] + [Cnot(k, k - 1) for k in range(2, n + 1)])
    _run(out, script)
    return TransformResult(out, script, (n + 1,) + tuple(range(1, n + 1)))


def gray(z: np.ndarray) -> np.ndarray:
    return z ^ (z >> 1)


def inverse_gray(x: np.ndarray, nbits: int) -> np.ndarray:
    z = x.copy()
    shift = 1
    while shift < nbits:
        z ^= z >> shift
        shift <<= 1
    return z


def location_pattern(high: int, width: int) -> str:
    """Location bitstring (x over q_{k+1}..q_n) for the Gray index ``high`` of z_{k+1}..z_n."""
    x = high ^ (high >> 1)
    return "".join(str((x >> i) & 1) for i in range(width))


def pattern_high(pattern: str) -> int:
    """Inverse of :func:`location_pattern`."""
    x = sum(int(c) << i for i, c in enumerate(pattern))
    return int(inverse_gray(np.array([x]), max(len(pattern), 1))[0])


@dataclass
class Decomposition:
    """Every pair of a standard-form state, in canonical phase.

    ``alphas[k]`` / ``betas[k]`` are indexed by the Gray index of the location
    (see :func:`pattern_high`); degenerate locations hold NaN.
    """

    n: int
    order: Optional[tuple]
    alphas: dict
    betas: dict
    degenerate: list
    odd_weight: float
    global_phase: complex

    @property
    def ok(self) -> bool:
        return not self.degenerate

    def pair(self, level: int, pattern: str) -> Optional[LevelPair]:
        h = pattern_high(pattern) if pattern else 0
        a, b = self.alphas[level][h], self.betas[level][h]
        if np.isnan(a):
            return None
        return LevelPair(a, b)

    def locations(self, level: int):
        width = self.n - level
        for h in range(len(self.alphas[level])):
            yield location_pattern(h, width)

    def modal_pair(self, level: int, digits: int = 9) -> LevelPair:
        """The pair held by the most locations of a level (lowest Gray index on ties)."""
        a, b = self.alphas[level], self.betas[level]
        counts: dict = {}
        first: dict = {}
        for h in range(len(a)):
            if np.isnan(a[h]):
                continue
            key = tuple(np.round([a[h].real, a[h].imag, b[h].real, b[h].imag], digits))
            counts[key] = counts.get(key, 0) + 1
            first.setdefault(key, h)
        if not counts:
            raise DegenerateLocationError(self.degenerate)
        best = max(counts, key=lambda key: (counts[key], -first[key]))
        h = first[best]
        return LevelPair(a[h], b[h])

    def base_pairs(self) -> list:
        """Most common pair of every level, level 2 first."""
        return [self.modal_pair(k) for k in range(2, self.n + 1)]

    def deviating_locations(self, tol: float = 1e-9, reference: Optional[Sequence[LevelPair]] = None) -> list:
        """Locations whose pair differs (up to phase) from the reference pair of their level.

        ``reference`` lists one pair per level, level 2 first; by default the
        most common pair of each level is used.
        """
        reference = list(reference) if reference is not None else self.base_pairs()
        out = []
        for k in range(2, self.n + 1):
            ref = reference[k - 2].canonical()
            for h in range(len(self.alphas[k])):
                p = self.pair(k, location_pattern(h, self.n - k))
                if p is not None and not p.close_to(ref, tol, up_to_phase=False):
                    out.append((k, location_pattern(h, self.n - k)))
        return out

    def to_spec(self, tol: float = 1e-12) -> StandardStateSpec:
        if self.degenerate:
            raise DegenerateLocationError(self.degenerate)
        base = self.base_pairs()
        variants = [VariantSpec(k, p, self.pair(k, p)) for k, p in self.deviating_locations(tol, base)]
        return StandardStateSpec(self.n, base, variants, self.order)


def full_decompose(state: StateVector, order: Optional[Sequence[int]] = None,
                   zero_threshold: float = ZERO_THRESHOLD, max_qubits: int = 14) -> Decomposition:
    """Read off every level pair from all 2**n amplitudes (exponential-cost oracle)."""
    n = state.n
    if n < 2:
        raise SizeError("decomposition needs n >= 2")
    if n > max_qubits:
        raise SizeError(f"full_decompose is capped at {max_qubits} qubits")
    amps = permute_qubits(state, order).amps if order is not None else state.amps
    nrm = np.linalg.norm(amps)
    if nrm == 0:
        raise ValidationError("state is zero")
    f = amps[gray(np.arange(1 << n))] / nrm
    odd = float(np.sum(np.abs(f[1::2]) ** 2))
    if odd > zero_threshold:
        raise NotStandardFormError(f"weight {odd:.3e} on odd-parity basis states")
    r = f[0::2]
    alphas, betas, degenerate = {}, {}, []
    for k in range(2, n + 1):
        v = r.reshape(-1, 2)
        v0, v1 = v[:, 0], v[:, 1]
        norm = np.sqrt(np.abs(v0) ** 2 + np.abs(v1) ** 2)
        dead = (np.abs(v0) < zero_threshold) & (np.abs(v1) < zero_threshold)
        safe = np.where(dead, 1.0, norm)
        a, b = v0 / safe, v1 / safe
        lead = np.where(np.abs(a) > zero_threshold, a, b)
        phase = np.where(dead, 1.0, lead / np.where(np.abs(lead) > 0, np.abs(lead), 1.0))
        a, b = a / phase, b / phase
        a[dead] = np.nan
        b[dead] = np.nan
        alphas[k], betas[k] = a, b
        for h in np.nonzero(dead)[0]:
            degenerate.append((k, location_pattern(int(h), n - k)))
        r = np.where(dead, 0.0, norm * phase)
    return Decomposition(n, tuple(order) if order is not None else None, alphas, betas,
                         degenerate, odd, complex(r[0]))


def sparse_synthesize(target, n: int) -> BuildResult:
    """Prepare a sparse state with two-level rotations that all involve entry 0.

    ``target`` is an iterable of ``(basis_index, amplitude)``. Emits at most one
    gate per nonzero entry other than index 0.
    """
    entries = {}
    for idx, amp in target:
        idx = int(idx)
        if not 0 <= idx < 1 << n:
            raise SizeError(f"basis index {idx} out of range for n={n}")
        if idx in entries:
            raise ValidationError(f"duplicate basis index {idx}")
        entries[idx] = complex(amp)
    nrm = sum(abs(a) ** 2 for a in entries.values())
    if abs(nrm - 1.0) > PAIR_TOL:
        raise ValidationError(f"target is not normalized (sum |a|^2 = {nrm!r})")

    # Undo the target one entry at a time, folding each into entry 0; the
    # forward script is the reverse of that, daggered.
    cur = entries.get(0, 0j)
    undo = []
    for j in sorted(i for i, a in entries.items() if i != 0 and abs(a) > 0):
        a, b = cur, entries[j]
        r = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
        g = np.array([[a.conjugate(), b.conjugate()], [-b, a]], dtype=complex) / r
        undo.append(TwoLevel(0, j, g))
        cur = complex(r)
    # after a rotation entry 0 is real positive, so the forward script is exact;
    # a lone entry at index 0 is reproduced up to its phase
    script = GateScript([g.dagger() for g in reversed(undo)])
    state = new_zero_state(n)
    _run(state, script)
    return BuildResult(state, script)

"""Locate variant pairs by prefix projection measurements.

A node measures the probability of the prefix ``q1..qd`` (logical order) and
compares it with the minimal-state expectation. Only flagged nodes are
expanded; when a whole depth is quiet, a single representative branch keeps
going so that variants sitting on higher levels are still reached. The tree
is rooted at ``q1 = 0`` and stops at depth ``n - 1``.

Prefix bits fix the Gray coordinates of the low levels: with even total
parity, ``z_{j+1} = x_1 ^ ... ^ x_j``, so a depth-``d`` prefix pins the
components taken at levels ``2 .. d+1``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .standard import LevelPair, location_pattern
from .statevector import StateVector, prefix_probability, sample_probability

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 5.0
EXACT_RTOL = 1e-9
EXACT_ATOL = 1e-14


def _zlow(prefix: str) -> int:
    """Gray index (z_2 first) of the levels pinned by ``prefix``."""
    z, par = 0, 0
    for j, c in enumerate(prefix):
        par ^= int(c)
        z |= par << j
    return z


def expected_prefix_prob(base_pairs: Sequence[LevelPair], prefix: str) -> float:
    """Prefix probability of the minimal state with these pairs (level 2 first)."""
    if len(prefix) > len(base_pairs):
        raise ValidationError(f"prefix depth {len(prefix)} exceeds n-1 = {len(base_pairs)}")
    p, par = 1.0, 0
    for j, c in enumerate(prefix):
        par ^= int(c)
        p *= abs(base_pairs[j][par]) ** 2
    return p


def node_count_bound(K: int, n: int) -> int:
    if K < 1 or n < 2:
        raise ValidationError("bound needs K >= 1 and n >= 2")
    return K * (2 * n - 3)


def node_seed(root_seed: int, prefix: str) -> np.random.SeedSequence:
    """Independent stream per node, derived from the root seed, depth and prefix."""
    return np.random.SeedSequence([int(root_seed), len(prefix), int(prefix, 2)])


# -- samplers -----------------------------------------------------------------


class ExactSampler:
    """Exact prefix probabilities of a state; ``order`` maps logical to physical qubits."""

    shots = None

    def __init__(self, state: StateVector, order: Optional[Sequence[int]] = None):
        self.state = state
        self.order = tuple(order) if order is not None else tuple(range(1, state.n + 1))
        if sorted(self.order) != list(range(1, state.n + 1)):
            raise ValidationError(f"order {self.order} is not a permutation of 1..{state.n}")

    @property
    def n(self) -> int:
        return self.state.n

    def exact(self, prefix: str) -> float:
        return prefix_probability(self.state, [(self.order[i], int(c)) for i, c in enumerate(prefix)])

    def measure(self, prefix: str, seed) -> tuple:
        """``(estimate, sem, shots_spent)``."""
        return self.exact(prefix), 0.0, 0


class ShotSampler(ExactSampler):
    """Counted-Bernoulli estimates from ``shots`` copies per node."""

    def __init__(self, state: StateVector, shots: int, order: Optional[Sequence[int]] = None):
        super().__init__(state, order)
        if shots < 1:
            raise ValidationError("shots must be >= 1")
        self.shots = int(shots)

    def measure(self, prefix: str, seed) -> tuple:
        est = sample_probability(self.exact(prefix), self.shots, seed)
        return est.estimate, est.sem, self.shots


# -- tree ---------------------------------------------------------------------


@dataclass
class MeasurementNode:
    prefix: str
    expected_p: float
    measured_p: float
    sem: float
    sigma: float  # spread expected under the minimal state, used for flagging
    flagged: bool

    @property
    def depth(self) -> int:
        return len(self.prefix)

    def to_dict(self) -> dict:
        return {
            "prefix": self.prefix,
            "expected_p": self.expected_p,
            "measured_p": self.measured_p,
            "sem": self.sem,
            "sigma": self.sigma,
            "flagged": self.flagged,
        }


@dataclass
class LocatorConfig:
    flag_threshold: float = DEFAULT_THRESHOLD
    seed: int = 0
    max_shots: Optional[int] = None
    exact_rtol: float = EXACT_RTOL


@dataclass
class MeasurementTree:
    n: int
    nodes: list = field(default_factory=list)
    shots: Optional[int] = None
    total_shots: int = 0
    truncated: bool = False

    @property
    def mode(self) -> str:
        return "exact" if self.shots is None else "shots"

    def at_depth(self, d: int) -> list:
        return [nd for nd in self.nodes if nd.depth == d]

    @property
    def leaves(self) -> list:
        return self.at_depth(self.n - 1)

    @property
    def branches(self) -> int:
        """Flagged nodes reaching the last depth."""
        return sum(nd.flagged for nd in self.leaves)

    def __len__(self):
        return len(self.nodes)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mode": self.mode,
            "shots_per_node": self.shots,
            "nodes": [nd.to_dict() for nd in self.nodes],
            "totals": {"nodes": len(self.nodes), "shots": self.total_shots,
                       "final_branches": self.branches},
            "truncated": self.truncated,
        }


def _flag(measured: float, expected: float, sigma: float, shots, config: LocatorConfig) -> bool:
    dev = abs(measured - expected)
    if shots is None:
        return dev > config.exact_rtol * max(measured, expected) + EXACT_ATOL
    return dev > config.flag_threshold * sigma


def explore_tree(sampler: ExactSampler, base_pairs: Sequence[LevelPair],
                 config: Optional[LocatorConfig] = None) -> MeasurementTree:
    config = config or LocatorConfig()
    n = len(base_pairs) + 1
    if sampler.n != n:
        raise ValidationError(f"sampler has {sampler.n} qubits, pairs describe {n}")
    tree = MeasurementTree(n, shots=sampler.shots)
    frontier = ["0"]
    for depth in range(1, n):
        level = []
        for prefix in frontier:
            if config.max_shots is not None and sampler.shots is not None \
                    and tree.total_shots + sampler.shots > config.max_shots:
                tree.truncated = True
                log.info("shot budget reached at depth %d", depth)
                return tree
            m, sem, spent = sampler.measure(prefix, node_seed(config.seed, prefix))
            e = expected_prefix_prob(base_pairs, prefix)
            sigma = math.sqrt(e * (1.0 - e) / sampler.shots) if sampler.shots else 0.0
            node = MeasurementNode(prefix, e, m, sem, sigma,
                                   _flag(m, e, sigma, sampler.shots, config))
            tree.total_shots += spent
            tree.nodes.append(node)
            level.append(node)
        if depth == n - 1:
            break
        flagged = [nd.prefix for nd in level if nd.flagged]
        if flagged:
            frontier = [p + b for p in flagged for b in "01"]
        else:
            # quiet depth: keep one branch going, preferring the all-zero prefix
            alive = sorted(nd.prefix for nd in level)
            rep = "0" * depth if "0" * depth in alive else alive[0]
            frontier = [rep + "0"]
    return tree


# -- magnitude model ------------------------------------------------------------


class _MagnitudeModel:
    """Squared pair magnitudes at every location; gives exact prefix marginals."""

    def __init__(self, n: int, base_pairs: Sequence[LevelPair]):
        self.n = n
        self.base = {k: np.array([abs(p.alpha) ** 2, abs(p.beta) ** 2])
                     for k, p in enumerate(base_pairs, 2)}
        self.variants: dict = {}  # (level, h) -> (f0, f1)

    def copy(self) -> "_MagnitudeModel":
        m = _MagnitudeModel.__new__(_MagnitudeModel)
        m.n, m.base, m.variants = self.n, self.base, dict(self.variants)
        return m

    def factor(self, level: int, h: int) -> np.ndarray:
        return np.asarray(self.variants.get((level, h), self.base[level]), dtype=float)

    def marginals(self) -> list:
        """``out[d][zlow]``: probability of the depth-``d`` prefix class ``zlow``."""
        n = self.n
        q = self.base[n].copy()
        for k in range(n - 1, 1, -1):
            mag = np.tile(self.base[k], (1 << (n - k), 1))
            for (lv, h), f in self.variants.items():
                if lv == k:
                    mag[h] = f
            q = (q[:, None] * mag).reshape(-1)
        out = [np.ones(1)]
        for d in range(1, n):
            out.append(q.reshape(-1, 1 << d).sum(axis=0))
        return out


@dataclass
class VariantFinding:
    level: int
    pattern: str
    abs_alpha: float
    abs_beta: float
    sem_alpha: float = 0.0
    sem_beta: float = 0.0

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "pattern": self.pattern,
            "abs_alpha": self.abs_alpha,
            "abs_beta": self.abs_beta,
            "sem_alpha": self.sem_alpha,
            "sem_beta": self.sem_beta,
        }


@dataclass
class LocatorResult:
    tree: MeasurementTree
    findings: list
    unresolved: list = field(default_factory=list)
    explained: bool = True

    def to_dict(self) -> dict:
        out = self.tree.to_dict()
        out["findings"] = [f.to_dict() for f in self.findings]
        out["unresolved"] = [{"level": k, "pattern": p} for k, p in self.unresolved]
        out["explained"] = self.explained
        return out


class _Fitter:
    """Weighted residuals of a magnitude model against every measured node."""

    def __init__(self, tree: MeasurementTree, base_pairs, threshold: float, rtol: float):
        self.n = tree.n
        self.nodes = tree.nodes
        self.exact = tree.shots is None
        self.limit = rtol if self.exact else threshold
        self.depth = np.array([nd.depth for nd in self.nodes], dtype=int)
        self.zlow = np.array([_zlow(nd.prefix) for nd in self.nodes], dtype=int)
        self.meas = np.array([nd.measured_p for nd in self.nodes])
        if self.exact:
            self.scale = np.maximum(self.meas, 1e-300)
        else:
            sig = np.array([max(nd.sigma, nd.sem) for nd in self.nodes])
            self.scale = np.maximum(sig, 1e-15)
        self.leaf_idx = np.nonzero(self.depth == self.n - 1)[0]
        self.base_pairs = base_pairs

    def residual(self, model: _MagnitudeModel) -> np.ndarray:
        marg = model.marginals()
        pred = np.array([marg[d][z] for d, z in zip(self.depth, self.zlow)])
        return (self.meas - pred) / self.scale

    def within(self, res: np.ndarray) -> bool:
        return bool(np.all(np.abs(res) <= self.limit))

    def leaf_guess(self, model: _MagnitudeModel, level: int, h: int) -> Optional[float]:
        """Starting value of the first component from the leaves under a location."""
        res = self.residual(model)
        cur = model.factor(level, h)
        est = []
        for i in self.leaf_idx:
            z = int(self.zlow[i])
            if z >> (level - 1) != h:
                continue
            b = (z >> (level - 2)) & 1
            pred = self.meas[i] - res[i] * self.scale[i]
            if pred <= 1e-300 or cur[b] <= 0:
                continue
            f = self.meas[i] / pred * cur[b]
            est.append(f if b == 0 else 1.0 - f)
        if not est:
            return None
        return float(np.clip(np.mean(est), 0.0, 1.0))

    def refit(self, model: _MagnitudeModel, keys, iters: int = 25) -> np.ndarray:
        """Gauss-Newton on the first components of ``keys``; returns final residual."""
        keys = list(keys)
        theta = np.array([model.variants[k][0] for k in keys], dtype=float)

        def apply(t):
            for key, v in zip(keys, t):
                model.variants[key] = (v, 1.0 - v)
            return self.residual(model)

        res = apply(theta)
        if not keys:
            return res
        sse = res @ res
        eps = 1e-7
        for _ in range(iters):
            jac = np.empty((len(res), len(keys)))
            for j in range(len(keys)):
                t = theta.copy()
                step = eps if t[j] + eps <= 1.0 else -eps
                t[j] += step
                jac[:, j] = (apply(t) - res) / step
            delta, *_ = np.linalg.lstsq(jac, -res, rcond=None)
            new = np.clip(theta + delta, 0.0, 1.0)
            new_res = apply(new)
            new_sse = new_res @ new_res
            if new_sse > sse:
                # plain step overshot; take a short one and stop if that fails too
                new = np.clip(theta + 0.25 * delta, 0.0, 1.0)
                new_res = apply(new)
                new_sse = new_res @ new_res
                if new_sse > sse:
                    break
            done = np.max(np.abs(new - theta)) < 1e-14
            theta, res, sse = new, new_res, new_sse
            if done or sse == 0.0:
                break
        return apply(theta)

    def covariance(self, model: _MagnitudeModel, keys) -> np.ndarray:
        keys = list(keys)
        if not keys or self.exact:
            return np.zeros(len(keys))
        base = self.residual(model)
        jac = np.empty((len(base), len(keys)))
        for j, key in enumerate(keys):
            v = model.variants[key][0]
            step = 1e-6 if v + 1e-6 <= 1.0 else -1e-6
            model.variants[key] = (v + step, 1.0 - v - step)
            jac[:, j] = (self.residual(model) - base) / step
            model.variants[key] = (v, 1.0 - v)
        cov = np.linalg.pinv(jac.T @ jac)
        return np.sqrt(np.maximum(np.diag(cov), 0.0))

    def branch_leaves(self) -> list:
        """Flagged leaves (all leaves if none is flagged)."""
        idx = [i for i in self.leaf_idx if self.nodes[i].flagged]
        return idx or list(self.leaf_idx)

    def locations(self) -> list:
        """Every (level, Gray index) location some flagged branch passes through."""
        out = set()
        for i in self.branch_leaves():
            z = int(self.zlow[i])
            for k in range(2, self.n):
                out.add((k, z >> (k - 1)))
        return sorted(out)

    def add(self, model: _MagnitudeModel, key) -> Optional[_MagnitudeModel]:
        guess = self.leaf_guess(model, *key)
        if guess is None:
            return None
        trial = model.copy()
        trial.variants[key] = (guess, 1.0 - guess)
        return trial


def _covers(outer, inner) -> bool:
    (k, h), (j, g) = outer, inner
    return j < k and g >> (k - j) == h


def _forward(fitter: _Fitter, model: _MagnitudeModel, cands, max_variants: int, unresolved: set):
    """Add locations one at a time until every node is explained."""
    res = fitter.refit(model, sorted(model.variants))
    while not fitter.within(res) and len(model.variants) < max_variants:
        sse = res @ res
        best = None
        for key in cands:
            if key in model.variants:
                continue
            trial = fitter.add(model, key)
            if trial is None:
                unresolved.add(key)
                continue
            r = fitter.refit(trial, [key], iters=4)
            if best is None or r @ r < best[0]:
                best = (r @ r, trial)
        if best is None or best[0] >= sse:
            break
        model = best[1]
        res = fitter.refit(model, sorted(model.variants))
        log.debug("added a location: %d variants, sse %.3e -> %.3e", len(model.variants), sse, res @ res)
    return model, res


def _simplify(fitter: _Fitter, model: _MagnitudeModel, res: np.ndarray, cands):
    """Merge covered groups into one higher location, then drop redundant ones."""
    if not fitter.within(res):
        return model, res
    changed = True
    while changed:
        changed = False
        for key in cands:
            if key in model.variants or key[0] == 2:
                continue
            covered = [v for v in model.variants if _covers(key, v)]
            if len(covered) < 2:
                continue
            trial = model.copy()
            for v in covered:
                del trial.variants[v]
            trial = fitter.add(trial, key)
            if trial is None:
                continue
            r = fitter.refit(trial, sorted(trial.variants))
            if fitter.within(r):
                model, res, changed = trial, r, True
    for key in sorted(model.variants):
        trial = model.copy()
        del trial.variants[key]
        r = fitter.refit(trial, sorted(trial.variants))
        if fitter.within(r):
            model, res = trial, r
    return model, res


def derive_variant_magnitudes(tree: MeasurementTree, base_pairs: Sequence[LevelPair],
                              flag_threshold: float = DEFAULT_THRESHOLD,
                              exact_rtol: float = EXACT_RTOL,
                              max_variants: Optional[int] = None) -> LocatorResult:
    """Sparse set of variant magnitudes explaining every measured node.

    1. Every flagged leaf is read as a level-2 variant at the location its
       branch pins; that reproduces all leaves on its own.
    2. While some node still disagrees, add the location (any level, on a
       flagged branch) that best reduces the weighted squared residual.
    3. Replace groups of variants by a single higher-level location that
       covers them whenever the joint fit stays within tolerance, then drop
       any variant the rest can do without.

    If that leaves nodes unexplained, steps 2-3 are rerun from an empty
    model and the smaller explanation wins. All magnitudes are refitted
    jointly after every change. The tree only sees the ``q1 = 0`` half of
    the state, so different variant sets can fit the same nodes; among
    equally small ones the lower levels are kept.
    """
    fitter = _Fitter(tree, base_pairs, flag_threshold, exact_rtol)
    n = tree.n
    if max_variants is None:
        max_variants = 2 * len(fitter.leaf_idx) + n
    unresolved: set = set()
    cands = fitter.locations()

    model = _MagnitudeModel(n, base_pairs)
    for i in fitter.branch_leaves():
        if fitter.nodes[i].flagged:
            key = (2, int(fitter.zlow[i]) >> 1)
            trial = fitter.add(model, key)
            if trial is None:
                unresolved.add(key)
            else:
                model = trial
    model, res = _simplify(fitter, *_forward(fitter, model, cands, max_variants, unresolved), cands)
    if not fitter.within(res):
        alt, alt_res = _simplify(
            fitter, *_forward(fitter, _MagnitudeModel(n, base_pairs), cands, max_variants, unresolved), cands)
        if fitter.within(alt_res) or alt_res @ alt_res < res @ res:
            model, res = alt, alt_res

    keys = sorted(model.variants)
    sems = dict(zip(keys, fitter.covariance(model, keys)))
    findings = []
    for key in keys:
        k, h = key
        f0 = model.variants[key][0]
        s = sems[key]
        base = model.base[k][0]
        tol = max(10 * exact_rtol, 1e-9) if fitter.exact else flag_threshold * max(s, 1e-15)
        if abs(f0 - base) <= tol:
            continue
        a, b = math.sqrt(max(f0, 0.0)), math.sqrt(max(1.0 - f0, 0.0))
        s = float(s)
        findings.append(VariantFinding(k, location_pattern(h, n - k), a, b,
                                       s / (2 * a) if a > 0 else 0.0,
                                       s / (2 * b) if b > 0 else 0.0))
    found = {(f.level, f.pattern) for f in findings}
    unresolved = sorted((k, location_pattern(h, n - k)) for k, h in unresolved
                        if (k, location_pattern(h, n - k)) not in found)
    return LocatorResult(tree, findings, unresolved, fitter.within(res))


def locate_variants(sampler: ExactSampler, base_pairs: Sequence[LevelPair],
                    config: Optional[LocatorConfig] = None) -> LocatorResult:
    config = config or LocatorConfig()
    tree = explore_tree(sampler, base_pairs, config)
    return derive_variant_magnitudes(tree, base_pairs, config.flag_threshold, config.exact_rtol)

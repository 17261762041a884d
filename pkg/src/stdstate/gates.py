"""Elementary gates and the line-oriented gate script format.

Qubits are labelled 1..n. A script is a plain list of gates; the text form has
one gate per line::

    U    t=<q> m=<re,im;re,im;re,im;re,im>
    CNOT c=<q> t=<q>
    CU   ctrl=<q>:<bit>,<q>:<bit>,... t=<q> m=<...>
    TL   i=<index> j=<index> m=<...>

Matrices are written row-major (U00, U01, U10, U11). ``#`` starts a comment.
Floats are printed with ``repr`` so a dump/parse round trip is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import ScriptParseError, ValidationError

UNITARY_TOL = 1e-10

X = np.array([[0, 1], [1, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def check_unitary(m, tol: float = UNITARY_TOL) -> np.ndarray:
    """Return ``m`` as a 2x2 complex array, raising if it is not unitary."""
    u = np.asarray(m, dtype=complex)
    if u.shape != (2, 2):
        raise ValidationError(f"expected a 2x2 matrix, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise ValidationError("matrix has non-finite entries")
    err = np.max(np.abs(u.conj().T @ u - I2))
    if err > tol:
        raise ValidationError(f"matrix is not unitary (|U^dag U - I| = {err:.3e})")
    return u


def _frozen_matrix(m) -> np.ndarray:
    u = check_unitary(m).copy()
    u.flags.writeable = False
    return u


@dataclass(frozen=True, eq=False)
class SingleQubit:
    target: int
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen_matrix(self.matrix))
        if self.target < 1:
            raise ValidationError("qubit labels start at 1")

    def qubits(self):
        return (self.target,)

    def dagger(self) -> "SingleQubit":
        return SingleQubit(self.target, self.matrix.conj().T)


@dataclass(frozen=True)
class Cnot:
    control: int
    target: int

    def __post_init__(self):
        if self.control == self.target:
            raise ValidationError("CNOT control and target must differ")
        if min(self.control, self.target) < 1:
            raise ValidationError("qubit labels start at 1")

    def qubits(self):
        return (self.control, self.target)

    def dagger(self) -> "Cnot":
        return self


@dataclass(frozen=True, eq=False)
class ControlledU:
    """``matrix`` on ``target`` wherever every ``(qubit, bit)`` control matches."""

    controls: tuple
    target: int
    matrix: np.ndarray

    def __post_init__(self):
        ctrls = tuple((int(q), int(b)) for q, b in self.controls)
        object.__setattr__(self, "controls", ctrls)
        object.__setattr__(self, "matrix", _frozen_matrix(self.matrix))
        qs = [q for q, _ in ctrls] + [self.target]
        if len(set(qs)) != len(qs):
            raise ValidationError("control and target qubits must be distinct")
        if any(b not in (0, 1) for _, b in ctrls):
            raise ValidationError("control bits must be 0 or 1")
        if min(qs) < 1:
            raise ValidationError("qubit labels start at 1")

    def qubits(self):
        return tuple(q for q, _ in self.controls) + (self.target,)

    def dagger(self) -> "ControlledU":
        return ControlledU(self.controls, self.target, self.matrix.conj().T)


@dataclass(frozen=True, eq=False)
class TwoLevel:
    """Unitary acting on the amplitude pair ``(amp[index_i], amp[index_j])``."""

    index_i: int
    index_j: int
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen_matrix(self.matrix))
        if self.index_i == self.index_j:
            raise ValidationError("two-level gate needs two distinct indices")
        if min(self.index_i, self.index_j) < 0:
            raise ValidationError("basis indices must be non-negative")

    def qubits(self):
        return ()

    def dagger(self) -> "TwoLevel":
        return TwoLevel(self.index_i, self.index_j, self.matrix.conj().T)


Gate = Union[SingleQubit, Cnot, ControlledU, TwoLevel]


@dataclass
class GateScript:
    gates: list = field(default_factory=list)

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __getitem__(self, i):
        return self.gates[i]

    def append(self, g: Gate) -> None:
        self.gates.append(g)

    def extend(self, gs: Iterable[Gate]) -> None:
        self.gates.extend(gs)

    def dagger(self) -> "GateScript":
        return GateScript([g.dagger() for g in reversed(self.gates)])

    def count(self, kind) -> int:
        return sum(isinstance(g, kind) for g in self.gates)

    def max_qubit(self) -> int:
        return max((max(g.qubits(), default=0) for g in self.gates), default=0)

    def dumps(self) -> str:
        return dump_script(self)


# -- text format --------------------------------------------------------------


def _fmt_matrix(m: np.ndarray) -> str:
    return ";".join(f"{repr(float(z.real))},{repr(float(z.imag))}" for z in np.asarray(m).ravel())


def _parse_matrix(text: str) -> np.ndarray:
    parts = text.split(";")
    if len(parts) != 4:
        raise ScriptParseError(f"matrix needs 4 entries, got {len(parts)}: {text!r}")
    vals = []
    for p in parts:
        re_im = p.split(",")
        if len(re_im) != 2:
            raise ScriptParseError(f"bad complex entry {p!r}")
        try:
            vals.append(complex(float(re_im[0]), float(re_im[1])))
        except ValueError as exc:
            raise ScriptParseError(f"bad number in {p!r}") from exc
    return np.array(vals, dtype=complex).reshape(2, 2)


def format_gate(g: Gate) -> str:
    if isinstance(g, SingleQubit):
        return f"U t={g.target} m={_fmt_matrix(g.matrix)}"
    if isinstance(g, Cnot):
        return f"CNOT c={g.control} t={g.target}"
    if isinstance(g, ControlledU):
        ctrl = ",".join(f"{q}:{b}" for q, b in g.controls)
        return f"CU ctrl={ctrl} t={g.target} m={_fmt_matrix(g.matrix)}"
    if isinstance(g, TwoLevel):
        return f"TL i={g.index_i} j={g.index_j} m={_fmt_matrix(g.matrix)}"
    raise TypeError(f"not a gate: {g!r}")


def dump_script(script: Sequence[Gate]) -> str:
    return "".join(format_gate(g) + "\n" for g in script)


def _fields(tokens, lineno, required):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ScriptParseError(f"line {lineno}: expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        out[k] = v
    missing = set(required) - set(out)
    extra = set(out) - set(required)
    if missing or extra:
        raise ScriptParseError(f"line {lineno}: fields {sorted(out)} do not match {sorted(required)}")
    return out


def _int(v, lineno):
    try:
        return int(v)
    except ValueError as exc:
        raise ScriptParseError(f"line {lineno}: bad integer {v!r}") from exc


def parse_gate(line: str, lineno: int = 0) -> Gate:
    tokens = line.split()
    op, rest = tokens[0].upper(), tokens[1:]
    try:
        if op == "U":
            f = _fields(rest, lineno, ("t", "m"))
            return SingleQubit(_int(f["t"], lineno), _parse_matrix(f["m"]))
        if op == "CNOT":
            f = _fields(rest, lineno, ("c", "t"))
            return Cnot(_int(f["c"], lineno), _int(f["t"], lineno))
        if op == "CU":
            f = _fields(rest, lineno, ("ctrl", "t", "m"))
            ctrls = []
            for item in filter(None, f["ctrl"].split(",")):
                q, _, b = item.partition(":")
                ctrls.append((_int(q, lineno), _int(b, lineno)))
            return ControlledU(tuple(ctrls), _int(f["t"], lineno), _parse_matrix(f["m"]))
        if op == "TL":
            f = _fields(rest, lineno, ("i", "j", "m"))
            return TwoLevel(_int(f["i"], lineno), _int(f["j"], lineno), _parse_matrix(f["m"]))
    except ValidationError as exc:
        raise ScriptParseError(f"line {lineno}: {exc}") from exc
    raise ScriptParseError(f"line {lineno}: unknown gate {tokens[0]!r}")


def parse_script(text: str) -> GateScript:
    script = GateScript()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            script.append(parse_gate(line, lineno))
    return script

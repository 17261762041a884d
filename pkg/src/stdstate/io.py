"""JSON file formats for states, specs, variant lists and reports.

State:   {"n": int, "amplitudes": [[re, im], ...]}   (2**n entries, q1 = least significant bit)
Spec:    {"n": int, "base_pairs": [[re, im, re, im], ...],
          "variants": [{"level": k, "pattern": "bits over q_{k+1}..q_n", "pair": [...]}],
          "order": [...] (optional)}
Reports: any JSON object; written with sorted keys and a schema version.

Python's ``json`` prints floats with the shortest repr, so a round trip is exact.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Union

import numpy as np

from .errors import FileFormatError, StdStateError
from .standard import LevelPair, StandardStateSpec, VariantSpec
from .statevector import StateVector

SCHEMA_VERSION = 1

PathLike = Union[str, Path]


def _read_json(path: PathLike) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise FileFormatError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path} is not valid JSON: {exc}") from exc


def dumps_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: PathLike, obj: Any) -> None:
    Path(path).write_text(dumps_json(obj))


def write_report(path: PathLike, report: dict) -> None:
    write_json(path, {"schema_version": SCHEMA_VERSION, **report})


# -- states ---------------------------------------------------------------------


def state_to_dict(state: StateVector) -> dict:
    return {"n": state.n, "amplitudes": [[float(a.real), float(a.imag)] for a in state.amps]}


def state_from_dict(data: Any) -> StateVector:
    try:
        n = data["n"]
        amps = np.array([complex(float(re), float(im)) for re, im in data["amplitudes"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"malformed state: {exc}") from exc
    if not isinstance(n, int):
        raise FileFormatError("state 'n' must be an integer")
    try:
        return StateVector(n, amps)
    except StdStateError as exc:
        raise FileFormatError(f"invalid state: {exc}") from exc


def save_state(path: PathLike, state: StateVector) -> None:
    write_json(path, state_to_dict(state))


def load_state(path: PathLike) -> StateVector:
    return state_from_dict(_read_json(path))


# -- specs ----------------------------------------------------------------------


def pair_to_list(p: LevelPair) -> list:
    return [p.alpha.real, p.alpha.imag, p.beta.real, p.beta.imag]


def pair_from_list(v) -> LevelPair:
    if len(v) != 4 or not all(isinstance(x, (int, float)) and math.isfinite(x) for x in v):
        raise FileFormatError(f"pair must be four finite numbers [re, im, re, im], got {v!r}")
    return LevelPair(complex(v[0], v[1]), complex(v[2], v[3]))


def variant_to_dict(v: VariantSpec) -> dict:
    return {"level": v.level, "pattern": v.pattern, "pair": pair_to_list(v.pair)}


def variant_from_dict(d) -> VariantSpec:
    try:
        return VariantSpec(int(d["level"]), str(d["pattern"]), pair_from_list(d["pair"]))
    except (KeyError, TypeError) as exc:
        raise FileFormatError(f"malformed variant entry {d!r}") from exc


def spec_to_dict(spec: StandardStateSpec) -> dict:
    out = {
        "n": spec.n,
        "base_pairs": [pair_to_list(p) for p in spec.base_pairs],
        "variants": [variant_to_dict(v) for v in spec.variants],
    }
    if spec.order is not None:
        out["order"] = list(spec.order)
    return out


def spec_from_dict(data: Any) -> StandardStateSpec:
    try:
        base = [pair_from_list(p) for p in data["base_pairs"]]
        variants = [variant_from_dict(v) for v in data.get("variants", [])]
        return StandardStateSpec(int(data["n"]), base, variants, data.get("order"))
    except (KeyError, TypeError, AttributeError) as exc:
        raise FileFormatError(f"malformed spec: {exc}") from exc
    except StdStateError as exc:
        if isinstance(exc, FileFormatError):
            raise
        raise FileFormatError(f"invalid spec: {exc}") from exc


def save_spec(path: PathLike, spec: StandardStateSpec) -> None:
    write_json(path, spec_to_dict(spec))


def load_spec(path: PathLike) -> StandardStateSpec:
    return spec_from_dict(_read_json(path))


def load_variants(path: PathLike) -> list:
    """A list of variant entries, bare or under a ``"variants"`` key."""
    data = _read_json(path)
    if isinstance(data, dict):
        data = data.get("variants")
    if not isinstance(data, list):
        raise FileFormatError(f"{path}: expected a list of variants")
    try:
        return [variant_from_dict(v) for v in data]
    except StdStateError as exc:
        if isinstance(exc, FileFormatError):
            raise
        raise FileFormatError(f"invalid variant: {exc}") from exc


def load_json(path: PathLike) -> Any:
    return _read_json(path)

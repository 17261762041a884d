"""``stdstate`` command line: generate, analyze, locate, transform, verify.

Exit codes: 0 ok, 1 verification failed, 2 usage error, 3 file or parse error.
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import io
from .classifier import ClassifierConfig, classify, min_success_probability, parameter_count_note
from .errors import FileFormatError, ScriptParseError, StdStateError, ValidationError
from .gates import parse_script
from .locator import ExactSampler, LocatorConfig, ShotSampler, locate_variants
from .sequencer import CoefficientOracle, Procedure1Config, run_procedure1
from .standard import (
    StandardStateSpec,
    VariantSpec,
    build_minimal,
    build_standard,
    random_minimal_spec,
    random_pair,
    random_pattern,
    sparse_synthesize,
    theorem1_transform,
)
from .statevector import MAX_QUBITS, StateVector, equal_up_to_global_phase, random_state

log = logging.getLogger("stdstate")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _threads() -> int:
    # everything runs on one thread; the variable is accepted and only capped
    raw = os.environ.get("STDSTATE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"STDSTATE_THREADS must be an integer, got {raw!r}")


def _sibling(path: str, suffix: str) -> Path:
    p = Path(path)
    stem = p.name[: -len(p.suffix)] if p.suffix else p.name
    return p.with_name(stem + suffix)


def parse_k1(text: str, n: int) -> float:
    """A count like ``1048576`` or a power like ``2^20``."""
    m = re.fullmatch(r"\s*2\s*\^\s*(\d+(?:\.\d+)?)\s*", text)
    try:
        return 2.0 ** float(m.group(1)) if m else float(text)
    except ValueError:
        raise UsageError(f"--k1 expects a number or 2^b, got {text!r}")


# -- generate -------------------------------------------------------------------


def _random_variants(spec: StandardStateSpec, K: int, rng) -> list:
    if K and spec.n < 3:
        raise UsageError("random variants need n >= 3")
    seen, out = set(), []
    capacity = sum(2 ** (spec.n - k) - 1 for k in range(2, spec.n))
    if K > capacity:
        raise UsageError(f"at most {capacity} distinct variant locations for n={spec.n}")
    while len(out) < K:
        k = int(rng.integers(2, spec.n))
        pat = random_pattern(spec.n - k, rng, nonzero=True)
        if (k, pat) not in seen:
            seen.add((k, pat))
            out.append(VariantSpec(k, pat, random_pair(rng)))
    return out


def cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    constructed = args.mode in ("minimal", "standard")
    if not constructed and (args.spec or args.variants):
        raise UsageError(f"--spec/--variants do not apply to mode {args.mode}")
    if args.mode == "minimal" and args.variants:
        raise UsageError("--variants needs --mode standard")
    if args.k and args.mode != "standard":
        raise UsageError("--k needs --mode standard")
    if args.spec:
        spec = io.load_spec(args.spec)
        if args.n is not None and args.n != spec.n:
            raise UsageError(f"--n {args.n} conflicts with the spec's n = {spec.n}")
        if args.mode == "minimal" and spec.variants:
            raise UsageError("spec has variants; use --mode standard")
    else:
        if args.n is None:
            raise UsageError("--n is required unless --spec is given")
        if not 1 <= args.n <= MAX_QUBITS:
            raise UsageError(f"--n must be in [1, {MAX_QUBITS}]")
        spec = random_minimal_spec(args.n, rng) if constructed else None
    n = spec.n if spec is not None else args.n

    script = None
    if args.mode == "minimal":
        res = build_minimal(spec)
        state, script = res.state, res.script
    elif args.mode == "standard":
        extra = io.load_variants(args.variants) if args.variants else _random_variants(spec, args.k, rng)
        spec = spec.with_variants(list(spec.variants) + extra)
        res = build_standard(spec)
        state, script = res.state, res.script
    elif args.mode == "sparse":
        m = min(args.nonzeros, 1 << n)
        idx = np.sort(rng.choice(1 << n, size=m, replace=False))
        vals = rng.normal(size=m) + 1j * rng.normal(size=m)
        vals /= np.linalg.norm(vals)
        res = sparse_synthesize(list(zip(idx.tolist(), vals)), n)
        state, script = res.state, res.script
    else:
        state = random_state(n, rng)

    io.save_state(args.out, state)
    written = [args.out]
    if spec is not None:
        spec_path = args.spec_out or _sibling(args.out, ".spec.json")
        io.save_spec(spec_path, spec)
        written.append(str(spec_path))
    if script is not None:
        script_path = args.script_out or _sibling(args.out, ".script")
        Path(script_path).write_text(script.dumps())
        written.append(str(script_path))
    for w in written:
        print(w)
    return EXIT_OK


# -- analyze --------------------------------------------------------------------


def cmd_analyze(args) -> int:
    state = io.load_state(args.state)
    n = state.n
    if n < 3:
        raise UsageError("analysis needs at least 3 qubits")
    k1 = parse_k1(args.k1, n) if args.k1 else float(min(n * n, 2 ** (n - 1)))
    try:
        cfg = ClassifierConfig(n, k1, N0=args.n0, c=args.c, k_exp=args.kexp)
    except ValidationError as exc:
        raise UsageError(str(exc))
    report = run_procedure1(CoefficientOracle(state), n,
                            Procedure1Config(tol=args.tol, extra_confirm_trials=args.trials, seed=args.seed))
    post = classify(report, cfg)
    out = {
        "input": {"state": str(args.state), "n": n},
        "procedure1": report.to_dict(),
        "posterior": post.to_dict(),
        "parameter_count": parameter_count_note(n, args.c, args.kexp),
        "reconstruction_script": None,
    }
    if args.c is not None:
        try:
            out["min_success_probability"] = min_success_probability(cfg)
        except ValidationError as exc:
            out["min_success_probability"] = None
            log.warning("%s", exc)
    if post.verdict == "LikelyPolynomial":
        spec = StandardStateSpec(n, report.pairs, [], report.order)
        script = build_minimal(spec).script
        script_path = args.script_out or _sibling(args.out, ".script")
        Path(script_path).write_text(script.dumps())
        out["reconstruction_script"] = str(script_path)
    io.write_report(args.out, out)
    print(f"{post.verdict} ({report.outcome}, {report.trials_used} trials)")
    return EXIT_OK


# -- locate ---------------------------------------------------------------------


def _pairs_from_report(path) -> tuple:
    if not Path(path).exists():
        raise UsageError(f"pairs file {path} does not exist")
    data = io.load_json(path)
    p1 = data.get("procedure1", data) if isinstance(data, dict) else None
    if not isinstance(p1, dict) or not p1.get("pairs") or not p1.get("order"):
        raise FileFormatError(f"{path} holds no recovered order and pairs (analysis did not succeed?)")
    try:
        pairs = [io.pair_from_list(p) for p in p1["pairs"]]
    except StdStateError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
    return tuple(int(q) for q in p1["order"]), pairs


def cmd_locate(args) -> int:
    state = io.load_state(args.state)
    order, pairs = _pairs_from_report(args.pairs)
    if len(order) != state.n or len(pairs) != state.n - 1:
        raise UsageError(f"pairs file describes {len(order)} qubits, state has {state.n}")
    if args.shots == "exact":
        sampler = ExactSampler(state, order)
    else:
        try:
            shots = int(args.shots)
        except ValueError:
            raise UsageError(f"--shots expects 'exact' or an integer, got {args.shots!r}")
        if shots < 1:
            raise UsageError("--shots must be >= 1")
        sampler = ShotSampler(state, shots, order)
    cfg = LocatorConfig(flag_threshold=args.threshold, seed=args.seed, max_shots=args.max_shots)
    result = locate_variants(sampler, pairs, cfg)
    out = {"input": {"state": str(args.state), "pairs": str(args.pairs), "order": list(order)},
           "tree": result.to_dict()}
    io.write_report(args.out, out)
    print(f"{len(result.findings)} finding(s), {len(result.tree)} node(s)"
          + (" [truncated]" if result.tree.truncated else ""))
    return EXIT_OK


# -- transform / verify ---------------------------------------------------------


def cmd_transform(args) -> int:
    state = io.load_state(args.state)
    res = theorem1_transform(state)
    io.save_state(args.out, res.state)
    script_path = args.script_out or _sibling(args.out, ".script")
    Path(script_path).write_text(
        f"# order {' '.join(map(str, res.order))}\n" + res.script.dumps())
    print(args.out)
    print(script_path)
    return EXIT_OK


def cmd_verify(args) -> int:
    target = io.load_state(args.state)
    try:
        text = Path(args.script).read_text()
    except OSError as exc:
        raise FileFormatError(f"cannot read {args.script}: {exc.strerror}") from exc
    script = parse_script(text)
    if script.max_qubit() > target.n:
        raise FileFormatError(f"script touches qubit {script.max_qubit()} but the state has {target.n}")
    state = StateVector(target.n).run(script)
    ok = equal_up_to_global_phase(state, target, args.tol)
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


# -- wiring ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stdstate", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a state (and its spec and script)")
    g.add_argument("--n", type=int)
    g.add_argument("--mode", choices=["minimal", "standard", "sparse", "random"], default="minimal")
    g.add_argument("--spec")
    g.add_argument("--variants")
    g.add_argument("--k", type=int, default=0, help="random variants to plant (standard mode)")
    g.add_argument("--nonzeros", type=int, default=8, help="nonzero entries (sparse mode)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--spec-out")
    g.add_argument("--script-out")
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("analyze", help="recover order and pairs, then classify")
    a.add_argument("--state", required=True)
    a.add_argument("--k1", help="variant cutoff, e.g. 1000 or 2^20 (default min(n^2, 2^(n-1)))")
    a.add_argument("--trials", type=int, default=0, help="extra confirmation trios")
    a.add_argument("--tol", type=float, default=1e-9)
    a.add_argument("--n0", type=int, help="planned trial budget")
    a.add_argument("--c", type=float)
    a.add_argument("--kexp", type=float)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out", required=True)
    a.add_argument("--script-out")
    a.set_defaults(func=cmd_analyze)

    loc = sub.add_parser("locate", help="measurement-tree search for variants")
    loc.add_argument("--state", required=True)
    loc.add_argument("--pairs", required=True, help="analysis report with recovered order and pairs")
    loc.add_argument("--shots", default="exact")
    loc.add_argument("--threshold", type=float, default=5.0)
    loc.add_argument("--max-shots", type=int)
    loc.add_argument("--seed", type=int, default=0)
    loc.add_argument("--out", required=True)
    loc.set_defaults(func=cmd_locate)

    t = sub.add_parser("transform", help="embed an n-qubit state as an (n+1)-qubit standard state")
    t.add_argument("--state", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--script-out")
    t.set_defaults(func=cmd_transform)

    v = sub.add_parser("verify", help="run a script from |0...0> and compare with a state")
    v.add_argument("--state", required=True)
    v.add_argument("--script", required=True)
    v.add_argument("--tol", type=float, default=1e-9)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        log.debug("threads: %d", _threads())
        return args.func(args)
    except UsageError as exc:
        print(f"stdstate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileFormatError, ScriptParseError) as exc:
        print(f"stdstate: {exc}", file=sys.stderr)
        return EXIT_IO
    except StdStateError as exc:
        print(f"stdstate: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

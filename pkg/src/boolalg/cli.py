"""Command-line front-end.

Exit status: 0 true/success, 1 false or search exhausted, 2 invalid input,
3 an internal cross-check failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Any, Optional, Sequence

from . import fixtures
from .amalgam import (
    HypothesisFailed,
    InvalidSystem,
    OverlapSystem,
    assemble,
    commutatively_reflects,
    embed_as_system,
    missing_atoms,
    pushout,
)
from .commute import commutes_result, failing_subfamily, weakly_commutes_result
from .core import GroundMismatch, InternalCheckError, InvalidSubalgebra, Subalgebra
from .functors import CONDITIONS, SizeOverflow, search_algebra_counterexample, search_cube_counterexample
from .logic import FormulaSyntaxError, SatisfiableInput, TooManyVariables, interpolants, parse, to_text

EXIT_TRUE, EXIT_FALSE, EXIT_INVALID, EXIT_INTERNAL = 0, 1, 2, 3

logger = logging.getLogger("boolalg")


class InputError(Exception):
    pass


def _load(path: str) -> Any:
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def load_family(data: Any) -> list[Subalgebra]:
    if not isinstance(data, dict) or "subalgebras" not in data:
        raise InputError('family JSON needs {"ground": m, "subalgebras": [...]}')
    ground = data.get("ground")
    family = []
    for k, sub in enumerate(data["subalgebras"]):
        if not isinstance(sub, dict):
            raise InputError(f"subalgebra {k} is not an object")
        sub = {"ground": ground, **sub}
        try:
            A = Subalgebra.from_json(sub)
        except (InvalidSubalgebra, KeyError, TypeError, ValueError) as exc:
            raise InputError(f"subalgebra {k}: {exc}") from exc
        if ground is not None and A.ground != int(ground):
            raise InputError(f"subalgebra {k} has ground {A.ground}, family has {ground}")
        family.append(A)
    return family


def load_system(data: Any) -> OverlapSystem:
    if isinstance(data, dict) and "subalgebras" in data:
        return embed_as_system(load_family(data))
    if not isinstance(data, dict) or "atomCounts" not in data:
        raise InputError('system JSON needs {"atomCounts": [...], "pairs": [...]} (or a family)')
    try:
        return OverlapSystem.from_json(data)
    except (InvalidSystem, ValueError, TypeError) as exc:
        raise InputError(f"invalid overlap system: {exc}") from exc


def _emit(obj: Any) -> None:
    print(json.dumps(obj, sort_keys=True))


def _verdict(result: bool) -> int:
    return EXIT_TRUE if result else EXIT_FALSE


# -- commands ----------------------------------------------------------------


def cmd_verify_paper(args) -> int:
    if args.regenerate_oracles:
        data = fixtures.regenerate_oracles()
        print(json.dumps(data, indent=2, sort_keys=True))
    reports = fixtures.run_all()
    if args.json:
        _emit([r.to_json() for r in reports])
    else:
        for r in reports:
            print(f"{'PASS' if r.passed else 'FAIL'}  {r.fixture}")
            for name, exp, obs in r.claims:
                mark = "ok " if exp == obs else "BAD"
                print(f"   {mark} {name}: expected {exp}, observed {obs}")
    return _verdict(all(r.passed for r in reports))


def cmd_commutes(args) -> int:
    res = commutes_result(load_family(_load(args.input)))
    _emit(res.to_json())
    return _verdict(res.result)


def cmd_weakly_commutes(args) -> int:
    res = weakly_commutes_result(load_family(_load(args.input)))
    _emit(res.to_json())
    return _verdict(res.result)


def cmd_commutes_well(args) -> int:
    family = load_family(_load(args.input))
    bad = failing_subfamily(family, args.max_arity, weak=args.weak)
    _emit({"result": bad is None, "counterexample": None if bad is None else list(bad)})
    return _verdict(bad is None)


def cmd_amalgamates(args) -> int:
    missing = missing_atoms(load_system(_load(args.input)))
    _emit({"result": not missing, "counterexample": [list(x) for x in missing] or None})
    return _verdict(not missing)


def cmd_pushout(args) -> int:
    res = pushout(load_system(_load(args.input)))
    _emit(res.to_json(coprojections=args.emit_coprojections))
    return EXIT_TRUE


def cmd_assemble(args) -> int:
    system = load_system(_load(args.input))
    try:
        chain = assemble(system)
    except HypothesisFailed as exc:
        _emit({"result": False, "error": "hypothesis-failed", "stage": exc.stage, "which": exc.which, "detail": exc.detail})
        return EXIT_FALSE
    _emit({"result": True, **chain.to_json()})
    return EXIT_TRUE


def cmd_reflects(args) -> int:
    data = _load(args.input)
    if not isinstance(data, dict) or "traces" not in data:
        raise InputError('reflects input needs {"system" or "family": ..., "traces": [...]}')
    system = load_system(data.get("system") or data.get("family"))
    try:
        traces = [Subalgebra.from_json(t) for t in data["traces"]]
    except (InvalidSubalgebra, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid trace: {exc}") from exc
    try:
        report = commutatively_reflects(system, traces)
    except (InvalidSystem, ValueError) as exc:
        raise InputError(str(exc)) from exc
    _emit(report.to_json())
    return _verdict(report.result)


def cmd_interpolate(args) -> int:
    if len(args.formulas) < 2:
        raise InputError("need at least two formulas")
    phis = []
    for text in args.formulas:
        try:
            phis.append(parse(text))
        except FormulaSyntaxError as exc:
            raise InputError(f"{text!r}: {exc}") from exc
    try:
        psis = interpolants(phis)
    except SatisfiableInput as exc:
        if args.json:
            _emit({"result": False, "model": {k: int(v) for k, v in exc.model.items()}})
        else:
            print("satisfiable: " + " ".join(f"{k}={int(v)}" for k, v in exc.model.items()))
        return EXIT_FALSE
    except TooManyVariables as exc:
        raise InputError(str(exc)) from exc
    if args.json:
        _emit({"result": True, "interpolants": [to_text(p) for p in psis]})
    else:
        for p in psis:
            print(to_text(p))
    return EXIT_TRUE


def cmd_search(args) -> int:
    if args.kind == "algebra":
        if args.ground is None:
            raise InputError("algebra search needs --ground")
        hit = search_algebra_counterexample(args.functor, args.ground, condition=args.condition, workers=args.workers)
    else:
        if args.universe is None:
            raise InputError("cube search needs --universe")
        hit = search_cube_counterexample(args.functor, args.universe)
    if args.json:
        _emit({"result": hit is not None, "witness": None if hit is None else hit.to_json()})
    elif hit is None:
        print("none")
    else:
        if args.kind == "algebra":
            print("witness: " + json.dumps([A.to_json()["blocks"] for A in hit.family]))
        else:
            print("witness: " + json.dumps([list(a) for a in hit.sets]))
        for line in hit.transcript:
            print("  " + line)
    return _verdict(hit is not None)


# -- parser ------------------------------------------------------------------


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _nonneg(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boolalg", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("verify-paper", help="check the built-in example fixtures")
    s.add_argument("--regenerate-oracles", action="store_true", help="recompute oracle-derived numbers first")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_verify_paper)

    for name, func, help_ in (
        ("commutes", cmd_commutes, "does a family of subalgebras commute"),
        ("weakly-commutes", cmd_weakly_commutes, "does a family weakly commute"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("input", help="family JSON file, or - for stdin")
        s.set_defaults(func=func)

    s = sub.add_parser("commutes-well", help="does every small subfamily commute")
    s.add_argument("input")
    s.add_argument("--max-arity", type=_positive, default=None)
    s.add_argument("--weak", action="store_true", help="test weak commutativity instead")
    s.set_defaults(func=cmd_commutes_well)

    s = sub.add_parser("amalgamates", help="do the algebras of a system have a common extension")
    s.add_argument("input", help="system or family JSON")
    s.set_defaults(func=cmd_amalgamates)

    s = sub.add_parser("pushout", help="compute the pushout of a system")
    s.add_argument("input")
    s.add_argument("--emit-coprojections", action="store_true")
    s.set_defaults(func=cmd_pushout)

    s = sub.add_parser("assemble", help="amalgamate a system step by step")
    s.add_argument("input")
    s.set_defaults(func=cmd_assemble)

    s = sub.add_parser("reflects", help="check the reflection conditions for given traces")
    s.add_argument("input")
    s.set_defaults(func=cmd_reflects)

    s = sub.add_parser("interpolate", help="n-ary interpolants of jointly unsatisfiable formulas")
    s.add_argument("formulas", nargs="+")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_interpolate)

    s = sub.add_parser("search", help="search for functor counterexamples")
    s.add_argument("kind", choices=("algebra", "cube"))
    s.add_argument("--functor", default="exp", help="exp, sp2, sp3, ...")
    s.add_argument("--ground", type=_nonneg)
    s.add_argument("--universe", type=_nonneg)
    s.add_argument("--condition", choices=CONDITIONS, default="well")
    s.add_argument("--workers", type=_positive, default=1)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_search)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_TRUE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except InternalCheckError as exc:
        print(f"internal check failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (InputError, GroundMismatch, InvalidSubalgebra, InvalidSystem, SizeOverflow, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

"""Command line for majorization, range inclusion and Douglas factorization.

Exit codes: 0 the condition holds / a solution was found, 1 a definite
negative answer, 2 bad input (flags, JSON, shapes, tolerances), 3 an
internal cross-check failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from pathlib import Path

from . import serialization as ser
from .cstar_core import AlgebraElement
from .douglas import (
    check_majorization,
    check_norm_majorization,
    douglas_solve,
    minimal_lambda,
    range_inclusion,
    theorem_report,
)
from .errors import (
    CrossCheckError,
    FormatError,
    HypothesisViolatedError,
    NoSolutionError,
    NonPositiveError,
    NotMajorizedError,
    ShapeMismatchError,
)
from .hilbert_module import AdjointableOperator, ModuleElement
from .lemma_engine import lemma_witness
from .tolerance import DEFAULT_SEED, ToleranceConfig
from .truncation_lab import TruncationFamily, obstruction_sweep, sweep_csv

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3
SEED_ENV = "DOUGLASKIT_SEED"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _InputError(f"{self.prog}: error: {message}")


class _InputError(Exception):
    pass


def _int(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None


def _pos_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", type=Path, help="write machine output here instead of stdout")
    common.add_argument("--tol-psd", type=_pos_float, default=None)
    common.add_argument("--tol-rank", type=_pos_float, default=None)
    common.add_argument("--samples", type=_int, default=None)
    common.add_argument("--seed", type=_int, default=None)

    pair = _Parser(add_help=False)
    pair.add_argument("--t", required=True, type=Path, help="operator T (JSON)")
    pair.add_argument("--tprime", required=True, type=Path, help="operator T' (JSON)")

    p = _Parser(prog="douglaskit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    c = sub.add_parser("check", parents=[common, pair], help="test condition i, ii or iv")
    c.add_argument("--condition", choices=("i", "ii", "iv"), default="i")
    sub.add_parser("lambda", parents=[common, pair], help="minimal majorization constant")
    sub.add_parser("solve", parents=[common, pair], help="reduced solution of T' = TX")
    sub.add_parser("report", parents=[common, pair], help="all four conditions, cross-checked")

    w = sub.add_parser("lemma-witness", parents=[common], help="witness c with ||ac|| > ||bc||")
    w.add_argument("--a", required=True, type=Path)
    w.add_argument("--b", required=True, type=Path)

    s = sub.add_parser("lab-sweep", parents=[common], help="truncation obstruction sweep (CSV)")
    s.add_argument("--family", choices=("harmonic", "geometric", "custom"), default="harmonic")
    s.add_argument("--sizes", type=_int_list, required=True)
    s.add_argument("--sigmas", type=_float_list, default=None,
                   help="sigma_1, sigma_2, ... for --family custom")

    v = sub.add_parser("validate", parents=[common], help="parse and check input files")
    v.add_argument("--t", type=Path)
    v.add_argument("--tprime", type=Path)
    v.add_argument("--a", type=Path)
    v.add_argument("--b", type=Path)
    return p


def _tolerance(args) -> ToleranceConfig:
    seed = args.seed
    if seed is None:
        env = os.environ.get(SEED_ENV)
        if env is not None:
            try:
                seed = int(env, 0)
            except ValueError:
                raise _InputError(f"{SEED_ENV}={env!r} is not an integer") from None
    kw = {"rng_seed": DEFAULT_SEED if seed is None else seed}
    if args.tol_psd is not None:
        kw["psd_tol"] = args.tol_psd
    if args.tol_rank is not None:
        kw["rank_rtol"] = args.tol_rank
    if args.samples is not None:
        kw["sample_count"] = args.samples
    try:
        return ToleranceConfig(**kw)
    except ValueError as exc:
        raise _InputError(str(exc)) from None


def _load(path: Path, kind: type, what: str):
    try:
        obj = ser.load(path)
    except OSError as exc:
        raise _InputError(f"cannot read {what} from {path}: {exc.strerror}") from None
    if not isinstance(obj, kind):
        raise FormatError(f"{path}: expected {kind.__name__} for {what}, got {type(obj).__name__}")
    return obj


def _emit(args, text: str):
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)


def _say(msg: str):
    print(msg, file=sys.stderr)


def _witness_json(w):
    return ser.module_element_to_json(w) if isinstance(w, ModuleElement) else None


def _cmd_check(args, tol) -> int:
    T = _load(args.t, AdjointableOperator, "T")
    Tp = _load(args.tprime, AdjointableOperator, "T'")
    out = {"condition": args.condition}
    if args.condition == "i":
        r = check_majorization(Tp, T, tol)
        out.update(holds=r.holds, lambda_star=ser.finite_or_none(r.lambda_star),
                   witness=_witness_json(r.witness), marginal=r.marginal)
    elif args.condition == "ii":
        r = check_norm_majorization(Tp, T, tol)
        out.update(holds=r.holds, mu_star=ser.finite_or_none(r.mu_star),
                   witness=_witness_json(r.witness), sampled_max_ratio=r.sampled_max_ratio,
                   sample_violations=r.sample_violations, marginal=r.marginal)
    else:
        r = range_inclusion(Tp, T, tol)
        out.update(holds=r.holds, residual=r.residual,
                   witness=_witness_json(r.witness_element(T.codomain)), marginal=r.marginal)
    _emit(args, ser.dumps(out))
    _say(f"condition ({args.condition}): {'holds' if out['holds'] else 'fails'}")
    return EXIT_OK if out["holds"] else EXIT_NEGATIVE


def _cmd_lambda(args, tol) -> int:
    T = _load(args.t, AdjointableOperator, "T")
    Tp = _load(args.tprime, AdjointableOperator, "T'")
    try:
        lam = minimal_lambda(Tp, T, tol)
    except NotMajorizedError as exc:
        _emit(args, ser.dumps({"lambda_star": None, "witness": _witness_json(exc.witness)}))
        _say(f"not majorized: {exc}")
        return EXIT_NEGATIVE
    _emit(args, ser.dumps({"lambda_star": lam}))
    _say(f"lambda* = {lam!r}")
    return EXIT_OK


def _cmd_solve(args, tol) -> int:
    T = _load(args.t, AdjointableOperator, "T")
    Tp = _load(args.tprime, AdjointableOperator, "T'")
    try:
        sol = douglas_solve(Tp, T, tol)
    except NoSolutionError as exc:
        _emit(args, ser.dumps({"solution": None, "residual": exc.residual,
                               "witness": _witness_json(exc.witness)}))
        _say(f"no solution: {exc}")
        return EXIT_NEGATIVE
    _emit(args, ser.dumps(ser.operator_to_json(sol.D)))
    _say(f"reduced solution: residual={sol.residual:.3e} ||D||^2={sol.norm_sq!r} "
         f"lambda*={sol.lambda_star!r} reduced={sol.reduced} flags={list(sol.flags)}")
    return EXIT_OK


def _cmd_report(args, tol) -> int:
    T = _load(args.t, AdjointableOperator, "T")
    Tp = _load(args.tprime, AdjointableOperator, "T'")
    rep = theorem_report(Tp, T, tol)
    _emit(args, ser.dumps(ser.report_to_json(rep)))
    _say("conditions " + " ".join(f"({k})={'T' if v else 'F'}" for k, v in rep.holds.items())
         + f" consistent={rep.consistency}")
    if not rep.consistency:
        return EXIT_INTERNAL
    return EXIT_OK if rep.holds_i else EXIT_NEGATIVE


def _cmd_lemma_witness(args, tol) -> int:
    a = _load(args.a, AlgebraElement, "a")
    b = _load(args.b, AlgebraElement, "b")
    try:
        w = lemma_witness(a, b, tol)
    except HypothesisViolatedError as exc:
        _emit(args, ser.dumps({"witness": None, "reason": str(exc)}))
        _say(str(exc))
        return EXIT_NEGATIVE
    _emit(args, ser.dumps(ser.witness_bundle_to_json(w)))
    _say(f"m={w.m!r} ||ac||={w.lhs_norm!r} ||bc||={w.rhs_norm!r} verified={w.verified}")
    return EXIT_OK if w.verified else EXIT_INTERNAL


def _cmd_lab_sweep(args, tol) -> int:
    if args.family == "custom" and not args.sigmas:
        raise _InputError("--family custom requires --sigmas")
    try:
        fam = TruncationFamily(args.family, tuple(args.sizes), args.sigmas)
        reports = obstruction_sweep(fam, tol)
    except ValueError as exc:
        raise _InputError(str(exc)) from None
    _emit(args, sweep_csv(reports, tol.rng_seed))
    worst = max(r.forced_identity_residual for r in reports)
    _say(f"{len(reports)} truncations, max forced-identity residual {worst:.3e}")
    return EXIT_OK


def _cmd_validate(args, tol) -> int:
    found = {}
    for name in ("t", "tprime", "a", "b"):
        path = getattr(args, name)
        if path is None:
            continue
        obj = _load(path, object, name)
        found[name] = type(obj).__name__
    if not found:
        raise _InputError("validate needs at least one of --t, --tprime, --a, --b")
    if "t" in found and "tprime" in found:
        T = _load(args.t, AdjointableOperator, "T")
        Tp = _load(args.tprime, AdjointableOperator, "T'")
        if T.codomain != Tp.codomain:
            raise ShapeMismatchError("T and T' have different codomains")
    _emit(args, ser.dumps({"valid": True, "objects": found}))
    return EXIT_OK


_COMMANDS = {
    "check": _cmd_check,
    "lambda": _cmd_lambda,
    "solve": _cmd_solve,
    "report": _cmd_report,
    "lemma-witness": _cmd_lemma_witness,
    "lab-sweep": _cmd_lab_sweep,
    "validate": _cmd_validate,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _InputError as exc:
        _say(str(exc))
        return EXIT_INPUT
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        tol = _tolerance(args)
        return _COMMANDS[args.verb](args, tol)
    except (_InputError, FormatError, ShapeMismatchError, NonPositiveError) as exc:
        _say(f"input error: {exc}")
        return EXIT_INPUT
    except CrossCheckError as exc:
        _say(f"cross-check failed: {exc}")
        return EXIT_INTERNAL
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

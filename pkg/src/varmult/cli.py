"""Command-line front end.

Subcommands: check (run the decision algorithm on u^(2n) = f), construct
(build f, rho, L from free data), fels (fourth-order invariants T5/I1),
verify (test a candidate triple), roundtrip (construct -> check -> verify on
random data).  Output is plain text or a JSON envelope

    {"tool": "varmult", "version": ..., "subcommand": ...,
     "input": {...}, "result": {...}, "trace": [...]}

Exit codes: 0 success/accepted/zero, 1 rejected/nonzero, 2 usage or parse
error, 3 inconclusive.  VARMULT_SEED overrides the default seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

from . import __version__
from .checker import Accepted, CheckReport, Rejected, check
from .jetops import total_derivative
from .symexpr import (
    Expr,
    ExprError,
    NonZero,
    ParseError,
    ZERO,
    ZeroTestConfig,
    add,
    is_zero,
    mul,
    parse,
    render,
)
from .testkit import GenConfig, gen_params
from .varcore import ParamSet, VariationalTriple, construct, fels_I1, fels_T5, verify_triple

__all__ = ["main", "run"]

_MAX_CLI_LOWER = 9  # --f0 .. --f9 registered flags


def _default_seed() -> int:
    try:
        return int(os.environ.get("VARMULT_SEED", "0"))
    except ValueError:
        return 0


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="varmult",
                                 description="variational multiplier toolkit "
                                             "for scalar equations u^(2n) = f")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p_check = sub.add_parser("check", help="decide variationality of u^(2n) = f")
    p_check.add_argument("--order", type=int, required=True, metavar="N",
                         help="half-order n >= 2 of the equation u^(2n) = f")
    p_check.add_argument("--expr", required=True, metavar="F",
                         help="right-hand side f in x, p0..p(2n-1)")
    p_check.add_argument("--json", action="store_true")
    p_check.add_argument("--seed", type=int, default=None)
    p_check.add_argument("--samples", type=int, default=None)
    p_check.add_argument("--tol", type=float, default=None)

    p_con = sub.add_parser("construct", help="build (f, rho, L) from free data")
    p_con.add_argument("--order", type=int, required=True, metavar="N")
    p_con.add_argument("--lagrangian-order", type=int, default=None, metavar="M")
    p_con.add_argument("--R", default="0", metavar="E")
    for ell in range(_MAX_CLI_LOWER + 1):
        p_con.add_argument(f"--f{ell}", default=None, metavar="E",
                           help=argparse.SUPPRESS if ell > 2 else f"lower function f_{ell}")
    p_con.add_argument("--N", default="0", metavar="E")
    p_con.add_argument("--json", action="store_true")

    p_fels = sub.add_parser("fels", help="fourth-order invariants T5 and I1")
    p_fels.add_argument("--expr", required=True, metavar="F3")
    p_fels.add_argument("--json", action="store_true")

    p_ver = sub.add_parser("verify", help="verify a candidate (f, rho, L) triple")
    p_ver.add_argument("--order", type=int, required=True, metavar="N")
    p_ver.add_argument("--expr", required=True, metavar="F")
    p_ver.add_argument("--rho", required=True, metavar="E")
    p_ver.add_argument("--lagrangian", required=True, metavar="E")
    p_ver.add_argument("--json", action="store_true")

    p_rt = sub.add_parser("roundtrip", help="construct -> check -> verify on random data")
    p_rt.add_argument("--order", type=int, required=True, metavar="N")
    p_rt.add_argument("--trials", type=int, required=True, metavar="T")
    p_rt.add_argument("--seed", type=int, default=None, metavar="S")
    p_rt.add_argument("--json", action="store_true")

    return ap


def _cfg(seed: int | None, samples: int | None = None, tol: float | None = None) -> ZeroTestConfig:
    kw = {}
    if seed is not None:
        kw["seed"] = seed
    else:
        kw["seed"] = _default_seed()
    if samples is not None:
        kw["samples"] = samples
    if tol is not None:
        kw["atol"] = tol
    return ZeroTestConfig(**kw)


def _envelope(subcommand: str, input_obj: dict, result_obj: dict, trace: list) -> str:
    return json.dumps({"tool": "varmult", "version": __version__,
                       "subcommand": subcommand, "input": input_obj,
                       "result": result_obj, "trace": trace})


def _trace_obj(report: CheckReport) -> list:
    out = []
    for t in report.trace:
        out.append({"step": t.step, "kind": t.kind,
                    "checked": render(t.checked),
                    "verdict": t.verdict.to_obj(),
                    "derived": None if t.derived is None else render(t.derived),
                    "note": t.note})
    return out


def _run_check(args, out) -> int:
    n = args.order
    if n < 2:
        raise _Usage("--order must be >= 2")
    f = parse(args.expr)
    cfg = _cfg(args.seed, args.samples, args.tol)
    report = check(f, n, cfg)
    o = report.outcome
    if isinstance(o, Accepted):
        result = {"outcome": "accepted", "R": render(o.R), "rho": render(o.rho),
                  "f_lower": [render(g) for g in o.f_lower], "L": render(o.L),
                  "residual": o.residual.to_obj()}
        code = 0
    elif isinstance(o, Rejected):
        result = {"outcome": "rejected", "step": o.step,
                  "witness": render(o.witness), "verdict": o.verdict.to_obj()}
        code = 1
    else:
        result = {"outcome": "inconclusive", "step": o.step,
                  "witness": render(o.witness)}
        code = 3
    if args.json:
        out.write(_envelope("check", {"order": n, "expr": args.expr,
                                      "seed": cfg.seed, "samples": cfg.samples,
                                      "atol": cfg.atol},
                            result, _trace_obj(report)) + "\n")
    else:
        out.write(f"outcome: {result['outcome']}\n")
        if isinstance(o, Accepted):
            out.write(f"R: {render(o.R)}\nrho: {render(o.rho)}\n")
            for ell, g in enumerate(o.f_lower):
                out.write(f"f{ell}: {render(g)}\n")
            out.write(f"L: {render(o.L)}\nresidual: {o.residual.describe()}\n")
        else:
            out.write(f"step: {o.step}\nwitness: {render(o.witness)}\n")
            if isinstance(o, Rejected):
                out.write(f"verdict: {o.verdict.describe()}\n")
        for t in report.trace:
            mark = t.step if t.kind == "check" else f"{t.step} [note]"
            out.write(f"  {mark}: {t.verdict.describe()}  checked {render(t.checked)}\n")
    return code


def _parse_lower(args, n: int) -> tuple[Expr, ...]:
    lower = []
    for ell in range(n):
        if ell > _MAX_CLI_LOWER:
            lower.append(ZERO)
            continue
        raw = getattr(args, f"f{ell}")
        lower.append(ZERO if raw is None else parse(raw))
    for ell in range(n, _MAX_CLI_LOWER + 1):
        if getattr(args, f"f{ell}") is not None:
            raise _Usage(f"--f{ell} given but order {n} only uses f0..f{n - 1}")
    return tuple(lower)


def _run_construct(args, out) -> int:
    n = args.order
    if n < 2:
        raise _Usage("--order must be >= 2")
    m = args.lagrangian_order if args.lagrangian_order is not None else n
    params = ParamSet(n=n, R=parse(args.R), f_lower=_parse_lower(args, n),
                      N=parse(args.N), m=m)
    t = construct(params)
    result = {"f": render(t.f), "rho": render(t.rho), "L": render(t.L),
              "order": n, "lagrangian_order": m}
    if args.json:
        out.write(_envelope("construct",
                            {"order": n, "lagrangian_order": m, "R": args.R,
                             "f_lower": [render(g) for g in params.f_lower],
                             "N": args.N},
                            result, []) + "\n")
    else:
        out.write(f"f: {render(t.f)}\nrho: {render(t.rho)}\nL: {render(t.L)}\n")
    return 0


def _run_fels(args, out) -> int:
    f3 = parse(args.expr)
    cfg = _cfg(None)
    t5 = fels_T5(f3)
    i1 = fels_I1(f3)
    v5 = is_zero(t5, cfg)
    v1 = is_zero(i1, cfg)
    both_zero = v5.is_zero and v1.is_zero
    result = {"T5": render(t5), "T5_verdict": v5.to_obj(),
              "I1": render(i1), "I1_verdict": v1.to_obj(),
              "variational_candidate": both_zero}
    if args.json:
        out.write(_envelope("fels", {"expr": args.expr, "seed": cfg.seed},
                            result, []) + "\n")
    else:
        out.write(f"T5: {render(t5)}\nT5 verdict: {v5.describe()}\n")
        out.write(f"I1: {render(i1)}\nI1 verdict: {v1.describe()}\n")
    return 0 if both_zero else 1


def _run_verify(args, out) -> int:
    n = args.order
    if n < 2:
        raise _Usage("--order must be >= 2")
    try:
        triple = VariationalTriple(f=parse(args.expr), rho=parse(args.rho),
                                   L=parse(args.lagrangian), n=n, m=n)
    except ValueError as exc:
        raise _Usage(str(exc)) from None
    cfg = _cfg(None)
    v = verify_triple(triple, cfg)
    result = {"verdict": v.to_obj()}
    if args.json:
        out.write(_envelope("verify",
                            {"order": n, "expr": args.expr, "rho": args.rho,
                             "lagrangian": args.lagrangian, "seed": cfg.seed},
                            result, []) + "\n")
    else:
        out.write(f"verdict: {v.describe()}\n")
    if v.is_zero:
        return 0
    return 1 if isinstance(v, NonZero) else 3


def _run_roundtrip(args, out) -> int:
    n = args.order
    if n < 2:
        raise _Usage("--order must be >= 2")
    if args.trials < 1:
        raise _Usage("--trials must be >= 1")
    seed = args.seed if args.seed is not None else _default_seed()
    cfg = _cfg(seed)
    trials = []
    all_ok = True
    for i in range(args.trials):
        params = gen_params(n, n, GenConfig(seed=seed + 7919 * i,
                                            max_degree=2, max_terms=3))
        triple = construct(params)
        report = check(triple.f, n, cfg)
        ok = isinstance(report.outcome, Accepted)
        residual = report.outcome.residual.to_obj() if ok else None
        consistent = False
        if ok:
            drift = add(report.outcome.R, mul(-1, params.R))
            consistent = is_zero(total_derivative(n + 1, drift), cfg).is_zero
            ok = ok and report.outcome.residual.is_zero and consistent
        trials.append({"trial": i, "accepted": isinstance(report.outcome, Accepted),
                       "residual": residual, "multiplier_consistent": consistent,
                       "ok": ok})
        all_ok = all_ok and ok
    result = {"trials": trials, "all_passed": all_ok}
    if args.json:
        out.write(_envelope("roundtrip",
                            {"order": n, "trials": args.trials, "seed": seed},
                            result, []) + "\n")
    else:
        for t in trials:
            out.write(f"trial {t['trial']}: accepted={t['accepted']} "
                      f"consistent={t['multiplier_consistent']} ok={t['ok']}\n")
        out.write(("all trials passed\n") if all_ok else ("some trials failed\n"))
    return 0 if all_ok else 1


class _Usage(Exception):
    pass


def run(argv: Sequence[str], out=None, err=None) -> int:
    """Dispatch a CLI invocation; returns the exit code."""
    out = out or sys.stdout
    err = err or sys.stderr
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {"check": _run_check, "construct": _run_construct,
                "fels": _run_fels, "verify": _run_verify,
                "roundtrip": _run_roundtrip}
    try:
        return handlers[args.subcommand](args, out)
    except ParseError as exc:
        err.write(f"varmult: expression error: {exc}\n")
        return 2
    except (_Usage, ExprError, ValueError) as exc:
        err.write(f"varmult: error: {exc}\n")
        return 2


def main() -> None:
    raise SystemExit(run(sys.argv[1:]))

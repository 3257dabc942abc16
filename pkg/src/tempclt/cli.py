"""Command line front end.

Exit codes: 0 success, 1 self-test failure, 2 invalid parameters,
3 coboundary parameters, 4 insufficient depth.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from typing import Optional, Sequence

from . import __version__
from .markov import VARIANTS, block_contraction, build_markov, chain_moments, sample_paths
from .qfield import Surd, format_literal, parse_literal
from .renorm import CoboundaryError, InvalidParameter, classify_diophantine, renorm_orbit, to_internal
from .towers import LETTERS, build_stack
from .walk import InsufficientDepth, WalkConfig, birkhoff, histogram_csv, ks_statistic, temporal_experiment

SCHEMA_VERSION = 1

EXIT_OK, EXIT_SELFTEST, EXIT_INVALID, EXIT_COBOUNDARY, EXIT_DEPTH = 0, 1, 2, 3, 4


def num(v) -> dict:
    """JSON form of a number: exact literal when available plus a 12 digit decimal."""
    if isinstance(v, Fraction):
        v = Surd.coerce(v)
    if isinstance(v, Surd):
        return {"literal": format_literal(v), "decimal": f"{float(v.to_decimal(64)[0]):.12g}"}
    return {"decimal": f"{float(v):.12g}"}


def _params(args):
    try:
        alpha = parse_literal(args.alpha)
        beta = parse_literal(args.beta, alpha)
    except ValueError as exc:
        raise InvalidParameter(str(exc)) from None
    return to_internal(alpha, beta)


def _inputs(args, params) -> dict:
    out = {"alpha": format_literal(params.alpha), "beta": format_literal(params.beta)}
    for key in ("depth", "n", "bins", "seed", "mode", "frac_bits", "guard_bits", "exact_cap", "block_len", "samples"):
        if getattr(args, key, None) is not None:
            out[key.replace("_", "-")] = getattr(args, key)
    if getattr(args, "x", None) is not None:
        out["x"] = format_literal(parse_literal(args.x, params.alpha))
    return out


def _orbit(params, depth):
    orbit = renorm_orbit(params, depth)
    if orbit.coboundary_detected:
        raise CoboundaryError(f"expansion terminates at level {orbit.coboundary_level}")
    return orbit


def cmd_expand(args) -> tuple[dict, int]:
    params = _params(args)
    orbit = renorm_orbit(params, args.depth)
    levels = [
        {
            "n": s.n,
            "a": s.a,
            "b": s.b,
            "state": str(s.state),
            "alpha_n": num(s.alpha_n),
            "beta_n": num(s.beta_n),
            "x_term": num(s.x_term),
            "beta_marked": num(s.beta_marked),
        }
        for s in orbit.steps
    ]
    payload = {
        "alpha0": num(params.alpha0),
        "beta0": num(params.beta0),
        "digits": orbit.digits,
        "states": [str(s) for s in orbit.states],
        "cf": orbit.cf,
        "cycle": list(orbit.cycle) if orbit.cycle else None,
        "coboundary_level": orbit.coboundary_level,
        "levels": levels,
    }
    if orbit.steps:
        rep = classify_diophantine(orbit)
        payload["diophantine"] = {"a_max": rep.a_max, "M": rep.M, "horizon": rep.horizon, "exact": rep.exact}
    return payload, EXIT_COBOUNDARY if orbit.coboundary_detected else EXIT_OK


def cmd_towers(args) -> tuple[dict, int]:
    params = _params(args)
    stack = build_stack(_orbit(params, args.depth + 1), args.depth)
    levels = []
    for lv in stack.levels:
        levels.append(
            {
                "n": lv.n,
                "state": str(lv.step.state),
                "substitution": {J: lv.sub[J] for J in LETTERS},
                "incidence": [list(r) for r in lv.incidence],
                "heights": list(lv.heights),
                "phi": {J: num(lv.special_sum(J)) for J in LETTERS},
                "interval": [num(v) for v in lv.interval],
            }
        )
    return {"mean": num(params.mean), "levels": levels}, EXIT_OK


def cmd_markov(args) -> tuple[dict, int]:
    params = _params(args)
    if args.n > args.depth:
        raise InsufficientDepth(f"n={args.n} exceeds depth {args.depth}")
    orbit = _orbit(params, args.depth + 1)
    stack = build_stack(orbit, args.depth)
    arr = build_markov(stack, args.n)
    moments = {}
    for v in VARIANTS:
        rep = chain_moments(arr, v, exact_cap=args.exact_cap)
        moments[v] = {"e": num(rep.e), "var": num(rep.var), "exact": rep.exact}
    payload = {"state_sizes": [len(arr.states[k]) for k in range(1, args.n + 1)], "moments": moments}
    if args.n > args.block_len:
        cr = block_contraction(arr, args.block_len)
        payload["contraction"] = {"block_len": cr.block_len, "delta": num(cr.delta)}
    if args.samples:
        rep = chain_moments(arr, "full", exact_cap=args.exact_cap)
        sums = sample_paths(arr, "full", args.samples, args.seed)
        payload["sampled_ks"] = num(ks_statistic((sums - float(rep.e)) / rep.sigma))
    return payload, EXIT_OK


def _walk_config(args, params) -> WalkConfig:
    try:
        x = parse_literal(args.x, params.alpha)
        return WalkConfig(params, x, args.n, args.mode, args.frac_bits, args.guard_bits)
    except ValueError as exc:
        raise InvalidParameter(str(exc)) from None


def cmd_simulate(args) -> tuple[dict, int]:
    params = _params(args)
    _orbit(params, args.depth)
    trace = birkhoff(_walk_config(args, params))
    vals = trace.floats()
    payload = {
        "phi_last": num(trace.value(trace.n - 1)),
        "phi_min": num(vals.min()),
        "phi_max": num(vals.max()),
        "occupation_below_beta": num(Surd(int(trace.hits[-1]), 0, max(trace.n - 1, 1), 0)),
        "exact_fallbacks": trace.exact_fallbacks,
    }
    return payload, EXIT_OK


def cmd_tclt(args) -> tuple[dict, int]:
    params = _params(args)
    orbit = _orbit(params, args.depth + 1)
    stack = build_stack(orbit, args.depth)
    if stack[args.depth].height("S") < args.n:
        raise InsufficientDepth(f"h_S at depth {args.depth} is below n={args.n}")
    exp = temporal_experiment(_walk_config(args, params), args.bins, stack, args.exact_cap)
    payload = {
        "N": exp.N,
        "c_n_x": num(exp.c_n_x),
        "e_N": num(exp.e_N),
        "sigma_N": num(exp.sigma_N),
        "D": num(exp.ks),
        "histogram": {
            "counts": [int(c) for c in exp.hist.counts],
            "below": exp.hist.below,
            "above": exp.hist.above,
            "range": [-5, 5],
        },
        "exact_fallbacks": exp.exact_fallbacks,
    }
    if args.hist_out:
        with open(args.hist_out, "w", encoding="utf-8") as fh:
            fh.write(histogram_csv(exp.hist))
    return payload, EXIT_OK


def cmd_selftest(args) -> tuple[dict, int]:
    from .checks import selftest

    results = selftest()
    for r in results:
        print(r.line(), file=sys.stderr)
    payload = {r.name: {"pass": r.passed, **{k: str(v) for k, v in r.detail.items()}} for r in results}
    return payload, EXIT_OK if all(r.passed for r in results) else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tempclt", description="Renormalization towers and temporal CLT experiments for rotations.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p, n_default: Optional[int] = None):
        p.add_argument("--alpha", required=True, help="rotation number literal, e.g. surd:2:-1:1:1")
        p.add_argument("--beta", required=True, help="marked point literal, e.g. rat:1/2")
        p.add_argument("--depth", type=int, default=64)
        p.add_argument("--out", help="write the JSON report here instead of stdout")
        p.add_argument("--timing", action="store_true", help="include wall time in the report")
        if n_default is not None:
            p.add_argument("--n", type=int, default=n_default)

    def walk_opts(p):
        p.add_argument("--x", default="rat:0/1")
        p.add_argument("--mode", choices=("exact", "fixed_point"), default="fixed_point")
        p.add_argument("--frac-bits", type=int, default=128)
        p.add_argument("--guard-bits", type=int, default=64)

    p = sub.add_parser("expand", help="Ostrowski renormalization orbit")
    common(p)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("towers", help="tower heights, substitutions and special sums")
    common(p)
    p.set_defaults(func=cmd_towers)

    p = sub.add_parser("markov", help="chain moments and contraction")
    common(p, 10)
    p.add_argument("--exact-cap", type=int, default=60)
    p.add_argument("--block-len", type=int, default=6)
    p.add_argument("--samples", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_markov)

    p = sub.add_parser("simulate", help="Birkhoff sums along one orbit")
    common(p, 1000)
    walk_opts(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tclt", help="temporal CLT experiment")
    common(p, 1000)
    walk_opts(p)
    p.add_argument("--bins", type=int, default=80)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exact-cap", type=int, default=60)
    p.add_argument("--hist-out", help="histogram CSV path")
    p.set_defaults(func=cmd_tclt)

    p = sub.add_parser("selftest", help="run the exact identity checks")
    p.add_argument("--out")
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_selftest)
    return ap


def _validate(args) -> None:
    for key in ("depth", "n", "bins"):
        v = getattr(args, key, None)
        if v is not None and v < 1:
            raise InvalidParameter(f"--{key} must be >= 1")


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        _validate(args)
        payload, code = args.func(args)
    except InvalidParameter as exc:
        print(f"invalid parameter: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CoboundaryError as exc:
        print(f"coboundary: {exc}", file=sys.stderr)
        return EXIT_COBOUNDARY
    except InsufficientDepth as exc:
        print(f"insufficient depth: {exc}", file=sys.stderr)
        return EXIT_DEPTH
    report = {"schema_version": SCHEMA_VERSION, "verb": args.verb, "result": payload}
    if args.verb != "selftest":
        report["inputs"] = _inputs(args, _params(args))
    if args.timing:
        report["seconds"] = round(time.perf_counter() - t0, 3)
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())

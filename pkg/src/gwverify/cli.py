"""Command-line interface.

Subcommands:

* ``compute`` -- one exact correlator value
* ``check``   -- run one identity check or a sweep, printing report lines
* ``script``  -- execute a relation script file

Exit codes: 0 when every non-probe check HOLDS or is TRIVIAL, 1 when any
non-probe check FAILS, 2 on usage or parse errors.

The persistent cache path comes from ``--cache`` or the ``GWVERIFY_CACHE``
environment variable; ``--no-cache`` disables persistence.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from gwverify.cache import CacheError, cache_load, cache_store
from gwverify.expr import CapabilityError, TruncationError
from gwverify.point_oracle import ResourceCapError
from gwverify.target_oracle import DegreeCutoffError, NoOracleError
from gwverify.model import (
    CorrelatorKey,
    ModelError,
    format_rational,
    get_model,
    parse_insertions,
    selection_rule,
)
from gwverify.relations import CheckParamError, CheckSpec, battery_multisets, exit_code, run_sweep
from gwverify.script import ScriptError, compute_value, parse_script, run_script

USAGE_ERROR = 2


def _parse_range(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(text)]


def _add_cache_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cache", help="cache file path (default: $GWVERIFY_CACHE)")
    p.add_argument("--no-cache", action="store_true", help="disable cache persistence")


def _cache_path(args) -> str | None:
    if args.no_cache:
        return None
    return args.cache or os.environ.get("GWVERIFY_CACHE") or None


def _load_cache(path: str | None) -> None:
    if path and Path(path).exists():
        cache_load(path)


def _store_cache(path: str | None) -> None:
    if path:
        cache_store(path)


def _cmd_compute(args) -> int:
    path = _cache_path(args)
    _load_cache(path)
    ins = parse_insertions(args.ins) if args.ins else ()
    value = compute_value(args.target, args.genus, args.degree, ins)
    model = get_model(args.target)
    ok = selection_rule(model, CorrelatorKey(args.genus, args.degree, ins))
    print(format_rational(value))
    print(f"selection: {'ok' if ok else 'vanishes'}", file=sys.stderr)
    _store_cache(path)
    return 0


def _collect_params(args) -> dict:
    params: dict = {}
    for key in ("g", "m", "k", "l", "j", "p", "x", "ph", "qh"):
        vals = getattr(args, key, None)
        if vals is not None:
            params[key] = vals
    if args.h_split is not None:
        params["h"] = args.h_split
    if args.form:
        params["form"] = [args.form]
    if args.w:
        params["w"] = [args.w]
    if args.u:
        params["u"] = [args.u]
    if args.v:
        params["v"] = [args.v]
    if args.ws:
        params["ws"] = [[s.strip() for s in args.ws.split(",")]]
    if args.vs:
        params["vs"] = [[s.strip() for s in args.vs.split(",")]]
    return params


def _cmd_check(args) -> int:
    path = _cache_path(args)
    _load_cache(path)
    # every parameter value is a list (possibly a range sweep)
    swept = _collect_params(args)
    keys = sorted(swept)
    combos = [{}]
    for key in keys:
        combos = [dict(c, **{key: v}) for c in combos for v in swept[key]]
    if args.extras is not None:
        batteries = [parse_insertions(args.extras)]
    elif args.extras_level is not None:
        n_classes = get_model(args.target).n_classes
        batteries = battery_multisets(args.max_extras, args.extras_level, n_classes)
    else:
        batteries = [()]
    specs = [CheckSpec(args.identity, target=args.target, params=combo,
                       extras=batt, cutoff=args.degree, probe=args.probe)
             for combo in combos for batt in batteries]
    reports = run_sweep(specs, jobs=args.jobs)
    for r in reports:
        print(r.render())
    _store_cache(path)
    return exit_code(reports)


def _cmd_script(args) -> int:
    path = _cache_path(args)
    _load_cache(path)
    text = Path(args.file).read_text()
    stmts = parse_script(text)
    result = run_script(stmts)
    sys.stdout.write(result.output)
    _store_cache(path)
    return exit_code(result.reports)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gwverify",
        description="Exact verifier for descendant Gromov-Witten correlator identities.")
    sub = ap.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("compute", help="compute one exact correlator")
    pc.add_argument("--target", default="point")
    pc.add_argument("--genus", "--g", dest="genus", type=int, default=0)
    pc.add_argument("--degree", "--d", dest="degree", type=int, default=0)
    pc.add_argument("--ins", default="", help="insertions as k:a,k:a,...")
    _add_cache_flags(pc)
    pc.set_defaults(func=_cmd_compute)

    pk = sub.add_parser("check", help="run an identity check or sweep")
    pk.add_argument("identity", help="relation id, e.g. conjA, conjB, g2T4")
    pk.add_argument("--target", default="point")
    for key, help_text in (
            ("g", "genus (or range a..b)"), ("m", "sum length"), ("k", "shift index"),
            ("l", "field level index"), ("j", "T-power"), ("p", "extra level"),
            ("x", "extra class"), ("ph", "left tensor genus"), ("qh", "right tensor genus")):
        pk.add_argument(f"--{key}", type=_parse_range, default=None, help=help_text)
    pk.add_argument("--genus", dest="g", type=_parse_range, default=None,
                    help="alias for --g")
    pk.add_argument("--h-split", "--h", dest="h_split", type=_parse_range, default=None,
                    help="genus split (allg1)")
    pk.add_argument("--form", choices=["direct", "T"], default=None)
    pk.add_argument("--w", default=None, help="field selector, e.g. tau_0(1), S, X, Delta")
    pk.add_argument("--u", default=None)
    pk.add_argument("--v", default=None)
    pk.add_argument("--ws", default=None, help="comma-separated field selectors")
    pk.add_argument("--vs", default=None)
    pk.add_argument("--ins", dest="extras", default=None,
                    help="explicit derivative battery k:a,k:a,...")
    pk.add_argument("--extras", dest="extras", help=argparse.SUPPRESS)
    pk.add_argument("--extras-level", type=int, default=None,
                    help="sweep all batteries with total level <= L")
    pk.add_argument("--max-extras", type=int, default=3,
                    help="battery size bound for sweeps (default 3)")
    pk.add_argument("--degree", "--d", dest="degree", type=int, default=None,
                    help="degree cutoff for target models")
    pk.add_argument("--probe", action="store_true",
                    help="allow out-of-hypothesis parameters")
    pk.add_argument("--jobs", type=int, default=1)
    _add_cache_flags(pk)
    pk.set_defaults(func=_cmd_check)

    ps = sub.add_parser("script", help="run a relation script file")
    ps.add_argument("file")
    ps.add_argument("--jobs", type=int, default=1)
    _add_cache_flags(ps)
    ps.set_defaults(func=_cmd_script)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ModelError, CheckParamError, ScriptError, CacheError, DegreeCutoffError,
            NoOracleError, ResourceCapError, CapabilityError, TruncationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())

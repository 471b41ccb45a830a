"""Command line front end.

Exit codes: 0 success, 1 a verification check failed, 2 bad input or flags,
3 a cap or precondition is not met, 4 the metric is degenerate at the base
point.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import verify as V
from .graphs import catalog_record, enumerate_by_operator_weight, enumerate_by_weight
from .operators import operator_C_graphs, operator_E_graphs
from .potential import PotentialSpec
from .serialize import format_complex, jet_from_json, scalar_to_json
from .series import CapError, DegenerateMetricError
from .star import star_product

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_CAPS, EXIT_METRIC = 0, 1, 2, 3, 4

SUITES = ("axioms", "inversion", "fundamental", "composition", "enumeration")


class InputError(Exception):
    pass


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"{path} is not valid JSON: {e}") from None


def _load_potential(path: str) -> PotentialSpec:
    data = _load_json(path)
    try:
        return PotentialSpec.from_json(data)
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"bad potential file {path}: {e}") from None


def _load_function(path: str, pot: PotentialSpec) -> tuple[dict, int]:
    """The function file and its polynomial degree, validated against the potential."""
    data = _load_json(path)
    try:
        degree = max((sum(t["zdeg"]) + sum(t["zbardeg"]) for t in data["terms"]), default=0)
        if int(data["dim"]) != pot.dim:
            raise ValueError("function and potential dimensions differ")
        jet_from_json(data, degree, pot.base_point)
        return data, degree
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"bad function file {path}: {e}") from None


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


# -- commands -----------------------------------------------------------------

def cmd_enumerate(args) -> int:
    if args.by_operator_weight is not None:
        if args.source_degree is None:
            raise InputError("--by-operator-weight needs --source-degree")
        graphs = enumerate_by_operator_weight(args.by_operator_weight, args.source_degree)
    else:
        if args.max_weight is None:
            raise InputError("enumerate needs --max-weight or --by-operator-weight")
        graphs = enumerate_by_weight(args.max_weight)
    records = [catalog_record(g) for g in graphs]
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["type", "W", "W_hat", "N", "aut", "key", "in_U"])
        for r in records:
            w.writerow([json.dumps(r["type"], sort_keys=True), r["W"], r["W_hat"], r["N"], r["aut"],
                        r["key"], int(r["in_U"])])
        _write(buf.getvalue(), args.out)
    else:
        _write(_dumps(records), args.out)
    return EXIT_OK


def cmd_star(args) -> int:
    pot = _load_potential(args.potential)
    fdata, fdeg = _load_function(args.f, pot)
    gdata, gdeg = _load_function(args.g, pot)
    N = args.nu_order
    need = 2 * N + fdeg + gdeg
    deg = need if args.jet_degree is None else args.jet_degree
    if deg < need:
        raise CapError(f"--jet-degree {deg} is below 2N + deg f + deg g = {need}")
    f = jet_from_json(fdata, deg, pot.base_point)
    g = jet_from_json(gdata, deg, pot.base_point)
    res = star_product(pot, f, g, N)
    _write(_dumps(scalar_to_json(res, N)), args.out)
    return EXIT_OK


def _entries(op) -> list:
    return [[s, list(K), list(I), *format_complex(v)] for (s, K, I), v in sorted(op.entries.items())]


def cmd_operators(args) -> int:
    pot = _load_potential(args.potential)
    wanted = [x.strip() for x in args.emit.split(",") if x.strip()]
    if not wanted or any(x not in ("C", "E") for x in wanted):
        raise InputError("--emit takes a comma separated subset of C,E")
    out = {"nu_cap": args.nu_order, "index_cap": args.index_cap}
    for name in wanted:
        build = operator_C_graphs if name == "C" else operator_E_graphs
        out[name] = _entries(build(pot, args.nu_order, args.index_cap))
    _write(_dumps(out), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    pot = _load_potential(args.potential)
    suites = SUITES if args.suite == "all" else (args.suite,)
    N = args.nu_order
    reports = []
    for suite in suites:
        if suite == "axioms":
            deg = max(12, 2 * N + 6) if args.jet_degree is None else args.jet_degree
            rep = V.verify_axioms(pot, N, deg, seed=args.seed,
                                  fault=V.DEFAULT_C_FAULT if args.inject_fault else None)
        elif suite == "inversion":
            rep = V.verify_inversion(pot, N, args.index_cap,
                                     fault=V.DEFAULT_E_FAULT if args.inject_fault else None)
        elif suite == "fundamental":
            rep = V.verify_fundamental(pot, N, fault=V.DEFAULT_C_FAULT if args.inject_fault else None)
        elif suite == "composition":
            rep = V.verify_composition(pot)
        else:
            rep = V.verify_enumeration()
        reports.append(rep.to_json())
    passed = all(r["passed"] for r in reports)
    _write(_dumps({"passed": passed, "nu_order": N, "reports": reports}), args.out)
    return EXIT_OK if passed else EXIT_FAILED


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sepstar", description="Exact star products with separation of variables.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("enumerate", help="list graph classes")
    e.add_argument("--max-weight", type=int)
    e.add_argument("--by-operator-weight", type=int)
    e.add_argument("--source-degree", type=int)
    e.add_argument("--format", choices=("json", "csv"), default="json")
    e.add_argument("--out")
    e.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("star", help="compute f * g")
    s.add_argument("--potential", required=True)
    s.add_argument("--f", required=True)
    s.add_argument("--g", required=True)
    s.add_argument("--nu-order", type=int, required=True)
    s.add_argument("--jet-degree", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_star)

    o = sub.add_parser("operators", help="emit the Fock-space matrices of C and E")
    o.add_argument("--potential", required=True)
    o.add_argument("--nu-order", type=int, required=True)
    o.add_argument("--index-cap", type=int, required=True)
    o.add_argument("--emit", default="C,E")
    o.add_argument("--out")
    o.set_defaults(func=cmd_operators)

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--potential", required=True)
    v.add_argument("--nu-order", type=int, default=3)
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--index-cap", type=int, default=3)
    v.add_argument("--jet-degree", type=int)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--inject-fault", action="store_true")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("max_weight", "nu_order", "index_cap", "by_operator_weight", "source_degree", "jet_degree"):
        val = getattr(args, name, None)
        if val is not None and val < 0:
            parser.error(f"--{name.replace('_', '-')} must be nonnegative")
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except DegenerateMetricError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_METRIC
    except CapError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CAPS


if __name__ == "__main__":
    sys.exit(main())

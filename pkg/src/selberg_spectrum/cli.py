"""Command line: spectrum caches, phi, mean squares, C(sigma), prime geodesic counts, verification."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import arith, oracle, qforms, spectrum, zeta
from .spectrum import CacheError, SpectrumError, WeightError

EXIT_OK, EXIT_VERIFY, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def fmt(v) -> str:
    # repr is the shortest string that round-trips the float exactly
    return repr(v) if isinstance(v, float) else str(v)


def emit(rows: list[dict], fmt_name: str, out=None) -> None:
    """Flat records as CSV (header + rows) or JSON (object, or list when several)."""
    out = out or sys.stdout
    if fmt_name == "json":
        clean = [{k: (v if not isinstance(v, float) or math.isfinite(v) else str(v)) for k, v in r.items()} for r in rows]
        out.write(json.dumps(clean[0] if len(clean) == 1 else clean) + "\n")
        return
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(rows[0]))
    for r in rows:
        writer.writerow([fmt(v) for v in r.values()])
    out.write(buf.getvalue())


def _positive(name, v):
    if v is None or not v > 0:
        raise UsageError(f"--{name} must be given and positive")
    return v


def load_table(args, X_needed: float) -> spectrum.SpectrumTable:
    if args.cache:
        try:
            weight = spectrum.parse_weight(args.weight) if args.weight != "unity" else None
        except WeightError as exc:
            raise UsageError(str(exc)) from None
        table = spectrum.read_cache(args.cache, weight)
        if args.weight != "unity" and table.weight.spec != args.weight:
            raise UsageError(f"cache was built with weight={table.weight.spec}, not {args.weight}")
        if not table.covers(X_needed):
            raise UsageError(f"cache {args.cache} has X={table.X:g}, needs X >= {X_needed:g}")
        return table
    weight = spectrum.parse_weight(args.weight)
    return spectrum.build_table(max(X_needed, 3.5), weight, threads=args.threads)


def _weight_label(table) -> str:
    return "upper_bound" if table.weight.is_bound else "exact"


def cmd_spectrum(args) -> int:
    X = _positive("xmax", args.xmax)
    if not X > 3:
        raise UsageError("--xmax must exceed 3")
    out = args.output or args.cache
    if not out:
        raise UsageError("spectrum needs -o/--cache for the output file")
    weight = spectrum.parse_weight(args.weight)
    path = Path(out)
    if path.exists():
        try:
            old_X, old_spec = spectrum.read_header(path)
            if old_X == float(X) and old_spec == weight.spec:
                table = spectrum.read_cache(path, weight)
                if not spectrum.check_table(table):
                    print(f"cache {path} up to date: {len(table)} entries, max m(n) = {max((e.m for e in table.entries), default=0)}")
                    return EXIT_OK
        except CacheError:
            pass
    table = spectrum.build_table(X, weight, threads=args.threads)
    spectrum.write_cache(table, path)
    top = max(table.entries, key=lambda e: e.m) if table.entries else None
    print(f"wrote {path}: {len(table)} entries, max m(n) = {top.m if top else 0}"
          f"{' at n=%d' % top.n if top else ''}, weight={weight.spec}")
    return EXIT_OK


def cmd_phi(args) -> int:
    x = _positive("x", args.x)
    sigma = _positive("sigma", args.sigma)
    table = load_table(args, zeta.cutoff(x))
    z = zeta.phi(zeta.EvalPoint(sigma, args.t, x), table)
    emit([{"sigma": sigma, "t": float(args.t), "x": x, "re": z.real, "im": z.imag, "abs": abs(z)}], args.format)
    return EXIT_OK


def cmd_sqint(args) -> int:
    x = _positive("x", args.x)
    sigma = _positive("sigma", args.sigma)
    if args.T is None or not args.T > 1:
        raise UsageError("--T must exceed 1")
    table = load_table(args, zeta.cutoff(x))
    res = zeta.square_integral_mean(sigma, args.T, x, table, threads=args.threads)
    row = res.as_dict()
    row["multiplicity"] = _weight_label(table)
    emit([row], args.format)
    return EXIT_OK


def cmd_cconst(args) -> int:
    sigma = _positive("sigma", args.sigma)
    if not sigma > 0.75:
        raise UsageError("--sigma must exceed 3/4: C(sigma) diverges otherwise")
    N = args.N if args.N is not None else 10_000
    if N < 3:
        raise UsageError("--N must be at least 3")
    table = load_table(args, N + 1)
    partial, tail = zeta.c_constant(sigma, table.weight, N, table=table)
    emit([{"sigma": sigma, "N": N, "partial": partial, "tail_bound": tail,
           "tail_bound_kind": "heuristic", "multiplicity": _weight_label(table)}], args.format)
    return EXIT_OK


def pgt_grid(xmax: float, points: int) -> np.ndarray:
    return np.geomspace(5.0, xmax, points)


def cmd_pgt(args) -> int:
    xmax = _positive("xmax", args.xmax)
    if not xmax > 5:
        raise UsageError("--xmax must exceed 5")
    table = load_table(args, zeta.cutoff(xmax))
    rows = []
    for x in pgt_grid(xmax, args.points):
        x = float(x)
        count = zeta.prime_geodesic_count(x, table.weight, table=table)
        L = zeta.li(x)
        rows.append({"x": x, "count": count, "li": L, "count_minus_li": count - L})
    emit(rows, args.format)
    return EXIT_OK


# verification suites ------------------------------------------------------


def _suite_pell(args, report):
    budget = oracle.OracleBudget(max_u=args.max_u)
    checked = inconclusive = 0
    for D in range(5, args.pell_dmax + 1):
        if not arith.is_discriminant(D):
            continue
        ref = oracle.brute_pell(D, budget)
        if ref is oracle.INCONCLUSIVE:
            inconclusive += 1
            continue
        fast = arith.pell_fundamental(D)
        checked += 1
        if (fast.t, fast.u) != (ref.t, ref.u):
            report("pell", False, f"D={D}: continued fraction {(fast.t, fast.u)} != brute {(ref.t, ref.u)}")
            return
    report("pell", True, f"{checked} discriminants <= {args.pell_dmax} agree ({inconclusive} beyond budget)")


def _suite_classno(args, report):
    for D in range(5, args.classno_dmax + 1):
        if not arith.is_discriminant(D):
            continue
        ref = oracle.brute_class_number(D)
        if ref is oracle.INCONCLUSIVE or ref != qforms.class_number(D):
            report("classno", False, f"D={D}: cycles {qforms.class_number(D)} vs brute {ref}")
            return
    report("classno", True, f"class numbers agree with orbit search for D <= {args.classno_dmax}")


def _suite_formula(args, report):
    for D in range(5, args.formula_dmax + 1):
        if not arith.is_discriminant(D):
            continue
        v = qforms.class_number_via_formula(D, tol=args.tol)
        if round(v) != qforms.class_number(D) or abs(v - round(v)) > 1e-6:
            report("formula", False, f"D={D}: formula {v!r} vs cycles {qforms.class_number(D)}")
            return
    report("formula", True, f"class number formula rounds correctly for D <= {args.formula_dmax}")


def _suite_multiplicity(args, report):
    hc: dict = {}
    for n in range(3, args.mult_nmax + 1):
        ref = oracle.brute_multiplicity(n, _h_cache=hc)
        fast = spectrum.multiplicity(n)[0]
        if ref is oracle.INCONCLUSIVE or ref != fast:
            report("multiplicity", False, f"n={n}: fast {fast} vs brute {ref}")
            return
    report("multiplicity", True, f"m(n) matches the brute oracle for 3 <= n <= {args.mult_nmax}")


def _suite_quadrature(args, report):
    grid = [(s, T, x) for s in (0.6, 0.75, 0.9) for T in (10.0, 100.0) for x in (1e2, 1e4)]
    if args.sigma is not None and args.T is not None and args.x is not None:
        grid = [(args.sigma, args.T, args.x)]
    X = max(zeta.cutoff(x) for _, _, x in grid)
    table = load_table(args, X)
    budget = oracle.OracleBudget(quad_tol=args.quad_tol)
    worst = 0.0
    for s, T, x in grid:
        exact = zeta.square_integral_mean(s, T, x, table, threads=args.threads).mean
        quad = oracle.quad_square_integral(s, T, x, table, budget)
        rel = abs(exact - quad) / max(abs(quad), 1e-300)
        worst = max(worst, rel)
        if len(grid) == 1:
            print(f"quadrature sigma={fmt(s)} T={fmt(T)} x={fmt(x)} closed_form={fmt(exact)} quadrature={fmt(quad)}")
        if rel > 1e-6:
            report("quadrature", False, f"sigma={s} T={T} x={x}: closed form {exact!r} vs quadrature {quad!r}")
            return
    report("quadrature", True, f"{len(grid)} grid points agree, worst relative gap {worst:.2e}")


def _suite_cache(args, report):
    if not args.cache:
        report("cache", True, "skipped (no --cache given)")
        return
    try:
        table = spectrum.read_cache(args.cache)
    except CacheError as exc:
        report("cache", False, str(exc))
        return
    problems = spectrum.check_table(table, recompute_upto=args.recompute_upto)
    if problems:
        report("cache", False, f"{len(problems)} problem(s); first: {problems[0]}")
    else:
        report("cache", True, f"{len(table)} entries consistent (recomputed n <= {args.recompute_upto})")


SUITES = {
    "pell": _suite_pell,
    "classno": _suite_classno,
    "formula": _suite_formula,
    "multiplicity": _suite_multiplicity,
    "quadrature": _suite_quadrature,
    "cache": _suite_cache,
}


def cmd_verify(args) -> int:
    suite = "quadrature" if args.quadrature else args.suite
    names = list(SUITES) if suite == "all" else [suite]
    failures = []

    def report(name, ok, detail):
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        if not ok:
            failures.append(name)

    for name in names:
        start = time.perf_counter()
        SUITES[name](args, report)
        if args.timing:
            print(f"  {name} took {time.perf_counter() - start:.1f}s")
    return EXIT_VERIFY if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--sigma", type=float)
    common.add_argument("--t", type=float, default=0.0)
    common.add_argument("--T", type=float)
    common.add_argument("--x", type=float)
    common.add_argument("--xmax", type=float)
    common.add_argument("--N", type=int)
    common.add_argument("--weight", default="unity", help="unity | index:<k> | table:<path>")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--cache", help="spectrum cache file")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--tol", type=float, default=1e-10, help="L(1, chi) tolerance for the formula suite")

    p = argparse.ArgumentParser(prog="selberg-spectrum", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", parents=[common], help="compute and cache the length spectrum")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("phi", parents=[common], help="evaluate phi_s(x)")
    s.set_defaults(func=cmd_phi)

    s = sub.add_parser("sqint", parents=[common], help="mean square of phi over [1, T]")
    s.set_defaults(func=cmd_sqint)

    s = sub.add_parser("cconst", parents=[common], help="partial sums of C(sigma)")
    s.set_defaults(func=cmd_cconst)

    s = sub.add_parser("pgt", parents=[common], help="prime geodesic counts against li(x)")
    s.add_argument("--points", type=int, default=25)
    s.set_defaults(func=cmd_pgt)

    s = sub.add_parser("verify", parents=[common], help="cross-check fast paths against the oracles")
    s.add_argument("--suite", choices=["all", *SUITES], default="all")
    s.add_argument("--quadrature", action="store_true", help="shorthand for --suite quadrature")
    s.add_argument("--max-u", type=int, default=100_000)
    s.add_argument("--quad-tol", type=float, default=1e-11)
    s.add_argument("--pell-dmax", type=int, default=10_000)
    s.add_argument("--classno-dmax", type=int, default=500)
    s.add_argument("--formula-dmax", type=int, default=10_000)
    s.add_argument("--mult-nmax", type=int, default=200)
    s.add_argument("--recompute-upto", type=int, default=200)
    s.add_argument("--timing", action="store_true")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
    except (WeightError, CacheError, SpectrumError, zeta.ZetaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

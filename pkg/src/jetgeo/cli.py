"""Command-line front end.

Subcommands: invariants, equivalent, residual, geodesic, cover-check,
symmetry-check, selftest.  Inputs are JSON spec files (formats documented
in the README); bulk numeric output is CSV (or JSON with --format json) on
stdout or --out, human summaries go to stderr.  All randomness derives
from --seed / JETGEO_SEED, so identical invocations produce byte-identical
output.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import expr
from .acceptance import AcceptanceConfig, run_all
from .connections import grass_invariants, load_connection, thomas_pi
from .errors import (
    DomainError,
    JetGeoError,
    ParseError,
    SingularJacobianError,
    UnknownSymbolError,
)
from .expr import CoordinateFrame
from .geodesy import (
    covering_commutation_deviation,
    geodesic_steps,
    grass_equivalent,
    param_residual2,
    quotient_diagram_deviation,
    residual2,
)
from .jets import AffineMap, SecJet, cover2, load_jets
from .sampling import random_secjet1, spawn_rng
from .symmetry import (
    affine_symmetry_check,
    field_preserves_distribution,
    jetfield_from_dict,
    jetmap_from_dict,
    preserves_distribution,
)


def _fmt(x):
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


class Output:
    def __init__(self, args):
        self.format = args.format
        self.path = args.out
        self.columns = None
        self.rows = []

    def table(self, columns, rows):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]

    def flush(self, summary=None):
        if self.format == "json":
            text = json.dumps(
                {"columns": self.columns, "rows": self.rows, "summary": summary or {}},
                indent=2,
                default=_fmt,
            ) + "\n"
        else:
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            if self.columns:
                writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([_fmt(v) for v in row])
            text = buf.getvalue()
        if self.path:
            with open(self.path, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


def _say(message):
    print(message, file=sys.stderr)


def _flat_theta(n):
    from .connections import Connection

    return Connection.zero(CoordinateFrame(tuple(f"x{i}" for i in range(1, n + 1)), n))


def _load_theta(args, n):
    if getattr(args, "theta", None):
        return load_connection(args.theta)
    return _flat_theta(n)


def _split(args, g):
    return args.n if args.n is not None else g.frame.split


# ---------------------------------------------------------------------------
# subcommands


def cmd_invariants(args):
    g = load_connection(args.connection)
    n = _split(args, g)
    if args.compare:
        other = load_connection(args.compare)
        rng = spawn_rng(args.seed, 0)
        pi_a, pi_b = thomas_pi(g), thomas_pi(other)
        pi_dev = 0.0
        for _ in range(12):
            p = rng.uniform(-1, 1, g.dim)
            pi_dev = max(pi_dev, float(np.abs(pi_a.at(p) - pi_b.at(p)).max()))
        from .connections import invariants_match

        _, grass_dev = invariants_match(
            grass_invariants(g, n), grass_invariants(other, n), spawn_rng(args.seed, 1)
        )
        out = Output(args)
        out.table(
            ["family", "max_deviation"],
            [["thomas", pi_dev], ["grassmann", grass_dev]],
        )
        tol = args.tol if args.tol is not None else 1e-10
        same = pi_dev <= tol and grass_dev <= tol
        out.flush({"identical": same, "tol": tol})
        _say(f"invariant tables {'identical' if same else 'differ'} "
             f"(thomas {pi_dev:.3e}, grassmann {grass_dev:.3e})")
        return 0
    rows = []
    for (a, c, b), e in sorted(thomas_pi(g).pi.items()):
        rows.append(["thomas", f"{a},{c},{b}", expr.to_text(e)])
    inv = grass_invariants(g, n)
    for name, family in (("order0", inv.order0), ("order1", inv.order1),
                         ("order2", inv.order2), ("order3", inv.order3)):
        for key, e in sorted(family.items()):
            if not expr.is_zero(e):
                rows.append([name, ",".join(map(str, key)), expr.to_text(e)])
    out = Output(args)
    out.table(["family", "indices", "expression"], rows)
    out.flush({"n": n, "components": len(rows)})
    _say(f"{len(rows)} nonzero invariant components (split n={n})")
    return 0


def cmd_equivalent(args):
    g1 = load_connection(args.connection)
    g2 = load_connection(args.other)
    if g1.frame.names != g2.frame.names:
        raise JetGeoError("connections live on different coordinate frames")
    n = _split(args, g1)
    tol = args.tol if args.tol is not None else 1e-10
    verdict = grass_equivalent(g1, g2, n, samples=args.samples, tol=tol, seed=args.seed)
    out = Output(args)
    out.table(
        ["quantity", "value"],
        [
            ["equivalent", verdict.equivalent],
            ["max_deviation", verdict.max_deviation],
            ["invariants_equal", verdict.invariants_equal],
            ["invariants_deviation", verdict.invariants_deviation],
        ],
    )
    out.flush({"samples": verdict.samples, "tol": tol})
    word = "EQUIVALENT" if verdict.equivalent else "NOT equivalent"
    fast = "equal" if verdict.invariants_equal else "differ"
    _say(f"{word} (max deviation {verdict.max_deviation:.3e}; invariant fast path: {fast})")
    return 0 if verdict.equivalent else 1


def _jet_coord_row(jet):
    if isinstance(jet, SecJet):
        vals = list(jet.x) + list(jet.u)
    else:
        vals = list(jet.base)
    vals.extend(v for _, v in sorted(jet.derivs.items()))
    return vals


def cmd_residual(args):
    g = load_connection(args.connection)
    jets = load_jets(args.jets)
    rows = []
    tol = args.tol if args.tol is not None else 1e-10
    worst = 0.0
    if args.mode == "param":
        if not all(isinstance(t, SecJet) for t in jets):
            raise JetGeoError("param mode needs section jets")
        theta = _load_theta(args, jets[0].n)
        for idx, t in enumerate(jets):
            r = param_residual2(g, theta, t)
            flat = [r.table[c, xi, lam] for c in range(t.l)
                    for xi in range(t.n) for lam in range(xi, t.n)]
            rows.append([idx, "ok"] + _jet_coord_row(t) + flat + [r.max_abs()])
            worst = max(worst, r.max_abs())
    else:
        for idx, t in enumerate(jets):
            if isinstance(t, SecJet):
                try:
                    q = cover2(t)
                except SingularJacobianError:
                    rows.append([idx, "singular-jacobian"])
                    continue
            else:
                q = t
            r = residual2(g, q)
            flat = [r.table[kk, lam, xi] for kk in range(q.m)
                    for lam in range(q.n) for xi in range(lam, q.n)]
            rows.append([idx, "ok"] + _jet_coord_row(t) + flat + [r.max_abs()])
            worst = max(worst, r.max_abs())
    out = Output(args)
    ncols = max(len(r) for r in rows)
    header = ["jet", "status"] + [f"c{i}" for i in range(ncols - 2)]
    out.table(header, rows)
    out.flush({"mode": args.mode, "max_abs": worst})
    _say(f"{len(rows)} jets, worst residual {worst:.3e} (tol {tol:.1e})")
    return 0


def cmd_geodesic(args):
    if args.h <= 0:
        raise JetGeoError("step size must be positive")
    g = load_connection(args.connection)
    theta = _load_theta(args, 1)
    start = [float(v) for v in args.start.split(",")]
    velocity = [float(v) for v in args.velocity.split(",")]
    rows = []
    truncated = False
    try:
        for t in geodesic_steps(g, theta, start, velocity, args.h, args.steps):
            r = param_residual2(g, theta, t)
            rows.append(
                [t.x[0]] + list(t.u) + list(t.first_matrix()[:, 0]) + [r.max_abs()]
            )
    except DomainError as e:
        rows.append(["error", str(e)])
        truncated = True
    l = g.dim
    header = (["t"] + [f"u{i}" for i in range(1, l + 1)]
              + [f"v{i}" for i in range(1, l + 1)] + ["residual_max"])
    out = Output(args)
    out.table(header, rows)
    out.flush({"steps": args.steps, "h": args.h, "truncated": truncated})
    if truncated:
        _say("trajectory truncated by a domain error")
        return 3
    _say(f"integrated {args.steps} steps of size {args.h}")
    return 0


def cmd_cover_check(args):
    g = load_connection(args.connection)
    n = _split(args, g)
    theta = _load_theta(args, n)
    tol = args.tol if args.tol is not None else 1e-10
    rng = spawn_rng(args.seed, 0)
    rows = []
    worst = 0.0
    for idx in range(args.samples):
        p = random_secjet1(n, g.dim, rng)
        c_dev = covering_commutation_deviation(g, theta, p)
        q_dev = quotient_diagram_deviation(
            g, theta, p,
            rng.uniform(-1, 1, n), rng.uniform(-1, 1, g.dim), rng.uniform(-1, 1, (g.dim, n)),
        )
        worst = max(worst, c_dev, q_dev)
        rows.append([idx, c_dev, q_dev, "pass" if max(c_dev, q_dev) <= tol else "fail"])
    out = Output(args)
    out.table(["sample", "commutation_dev", "quotient_dev", "status"], rows)
    passed = worst <= tol
    out.flush({"max_deviation": worst, "tol": tol, "passed": passed})
    _say(f"{'PASS' if passed else 'FAIL'} covering checks: worst {worst:.3e}, tol {tol:.1e}")
    return 0 if passed else 1


def cmd_symmetry_check(args):
    g = load_connection(args.connection)
    n = _split(args, g)
    tol = args.tol if args.tol is not None else 1e-8
    samples = args.samples
    if args.affine:
        with open(args.affine, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        aff = AffineMap(np.array(data["a"], dtype=float), np.array(data["b"], dtype=float))
        theta = _load_theta(args, aff.n)
        report = affine_symmetry_check(g, theta, aff, samples=samples, tol=tol, seed=args.seed)
    elif args.field:
        with open(args.field, "r", encoding="utf-8") as fh:
            f = jetfield_from_dict(json.load(fh))
        report = field_preserves_distribution(f, g, n, samples=samples, tol=tol, seed=args.seed)
    else:
        with open(args.map, "r", encoding="utf-8") as fh:
            jmap = jetmap_from_dict(json.load(fh))
        theta = _load_theta(args, n) if jmap.kind == "secjet" else None
        report = preserves_distribution(jmap, g, n, samples=samples, tol=tol,
                                        seed=args.seed, theta=theta)
    rows = [
        [idx, *coords, res, "pass" if res <= report.tol else "fail"]
        for idx, (coords, res) in enumerate(report.rows)
    ]
    ncoords = len(report.rows[0][0]) if report.rows else 0
    header = ["sample"] + [f"c{i}" for i in range(ncoords)] + ["residual", "status"]
    out = Output(args)
    out.table(header, rows)
    out.flush({
        "passed": report.passed,
        "worst_residual": report.worst_residual,
        "skipped": report.skipped,
        "tol": report.tol,
    })
    _say(f"{report.summary()} (worst residual {report.worst_residual:.3e}, "
         f"skipped {report.skipped})")
    return 0 if report.passed else 1


def cmd_selftest(args):
    cfg = AcceptanceConfig(seed=args.seed, tol_override=args.tol)
    results = run_all(cfg)
    for res in results:
        print(res.line())
    failed = [r for r in results if not r.passed]
    _say(f"{len(results) - len(failed)}/{len(results)} criteria passed (seed {args.seed})")
    return 0 if not failed else 1


# ---------------------------------------------------------------------------
# argument wiring


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="random seed (default: $JETGEO_SEED or 0)")
    p.add_argument("--samples", type=int, default=200, help="sample count for randomized checks")
    p.add_argument("--tol", type=float, default=None, help="tolerance override")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="write the table to this path instead of stdout")
    p.add_argument("--n", type=int, default=None, help="base/fibre split (default: from the spec)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="jetgeo",
        description="Totally geodesic submanifold equations from symbolic Christoffel data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("invariants", help="print projective and Grassmannian invariant tables")
    p.add_argument("connection")
    p.add_argument("--compare", default=None, help="second connection spec to diff against")
    _add_common(p)
    p.set_defaults(fn=cmd_invariants)

    p = sub.add_parser("equivalent", help="decide Grassmannian equivalence of two connections")
    p.add_argument("connection")
    p.add_argument("other")
    _add_common(p)
    p.set_defaults(fn=cmd_equivalent)

    p = sub.add_parser("residual", help="evaluate a totally geodesic residual on jet files")
    p.add_argument("connection")
    p.add_argument("--jets", required=True)
    p.add_argument("--mode", choices=("param", "unparam"), required=True)
    p.add_argument("--theta", default=None, help="parameter-space connection spec (param mode)")
    _add_common(p)
    p.set_defaults(fn=cmd_residual)

    p = sub.add_parser("geodesic", help="integrate the parametrized geodesic equation")
    p.add_argument("connection")
    p.add_argument("--start", required=True, help="comma-separated start point")
    p.add_argument("--velocity", required=True, help="comma-separated start velocity")
    p.add_argument("--h", type=float, required=True, help="step size")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--theta", default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_geodesic)

    p = sub.add_parser("cover-check", help="verify covering commutation and the quotient diagram")
    p.add_argument("connection")
    p.add_argument("--theta", default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_cover_check)

    p = sub.add_parser("symmetry-check", help="check a candidate symmetry")
    p.add_argument("connection")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--map", default=None, help="jet map spec")
    group.add_argument("--field", default=None, help="jet field spec")
    group.add_argument("--affine", default=None, help="affine map spec")
    p.add_argument("--theta", default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_symmetry_check)

    p = sub.add_parser("selftest", help="run every acceptance criterion")
    _add_common(p)
    p.set_defaults(fn=cmd_selftest)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is None:
        args.seed = int(os.environ.get("JETGEO_SEED", "0"))
    if args.samples < 1:
        _say("error: samples must be >= 1")
        return 2
    if args.tol is not None and args.tol <= 0:
        _say("error: tol must be positive")
        return 2
    try:
        return args.fn(args)
    except JetGeoError as e:
        _say(f"error: {e}")
        if isinstance(e, (ParseError, UnknownSymbolError)):
            _say("expression grammar: infix + - * / ^ with parentheses, calls "
                 "sin/cos/exp/sqrt, rational literals p/q, and declared coordinate names")
        return 2
    except FileNotFoundError as e:
        _say(f"error: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())

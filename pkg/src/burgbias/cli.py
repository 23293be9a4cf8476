"""Command-line interface.

Subcommands::

    burgbias bias  --est burg --phi 0.5,0.2 --mean known
    burgbias expr  "2*S[0,1,2]/(S[0,0,2]+S[1,1,2])" --phi 0.3
    burgbias mc    --est burg --phi 0.5,0.2 --n 50 --reps 200000 --seed 42
    burgbias table [--phi1 LIST --phi2 LIST] [--point P1,P2 ...] [--yw]

Output is CSV (header plus one row per coefficient or grid cell, floats to 12
significant digits) or JSON with the same fields. Exit status: 0 success,
2 usage error, 3 domain error, 4 convergence error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from burgbias.errors import (
    ConvergenceError,
    DegenerateInputError,
    DomainError,
    ExprSyntaxError,
    InvalidAtomError,
    SingularExpansionError,
)
from burgbias.estimators import ESTIMATORS, closed_form_bias, estimator_def
from burgbias.expansion import expand, parse_expr
from burgbias.model import ArModel, MomentContext, admissible, char_roots
from burgbias.simulator import WORKERS_ENV, McConfig, mc_bias
from burgbias.statdsl import MeanMode

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_CONVERGENCE = 0, 2, 3, 4

DEFAULT_PHI2 = (-0.8, -0.4, 0.0, 0.4, 0.8)
DEFAULT_SHAPE = (-0.8, -0.4, 0.0, 0.4, 0.8)


class UsageError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not all(math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError("values must be finite")
    return values


def _phi(text: str) -> tuple[float, ...]:
    values = _float_list(text)
    if len(values) not in (1, 2):
        raise argparse.ArgumentTypeError("--phi takes one (AR(1)) or two (AR(2)) coefficients")
    return tuple(values)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}")
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError("expected a positive finite number")
    return v


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return "" if not math.isfinite(value) else f"{float(value):.12g}"
    if value is None:
        return ""
    return str(value)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        return float(f"{float(value):.12g}") if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def render(rows: list[dict], fmt: str, command: str) -> str:
    fields: list[str] = []
    for row in rows:
        fields.extend(k for k in row if k not in fields)
    if fmt == "json":
        doc = {"command": command, "fields": fields, "rows": [{k: _json_value(r.get(k)) for k in fields} for r in rows]}
        return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([_fmt(row.get(k)) for k in fields])
    return buf.getvalue()


def _model(args) -> ArModel:
    return ArModel(args.phi, args.sigma2)


def _context(model: ArModel, tol: float) -> MomentContext:
    if not admissible(model):
        raise DomainError(f"model phi={model.phi} is outside the admissible (stationary) region")
    return MomentContext(model, tol)


def _phi_text(phi) -> str:
    return ",".join(_fmt(float(c)) for c in phi)


def cmd_bias(args) -> list[dict]:
    model = _model(args)
    ctx = _context(model, args.tol)
    mode = MeanMode.parse(args.mean)
    definition = estimator_def(args.est, model.order, mode)
    closed = closed_form_bias(args.est, mode, model.phi)
    rows = []
    for j, (name, res) in enumerate(zip(definition.coefficient_names, definition.expand(ctx))):
        row = {
            "estimator": args.est,
            "mean": mode.value,
            "phi": _phi_text(model.phi),
            "sigma2": model.sigma2,
            "coefficient": name,
            "true_value": model.phi[j],
            "value_at_mean": res.value_at_mean,
            "bias_coefficient": res.bias_coefficient,
            "variance_coefficient": res.variance_coefficient,
            "closed_form": closed[j] if closed else None,
            "abs_deviation": abs(res.bias_coefficient - closed[j]) if closed else None,
            "near_boundary": ctx.near_boundary,
        }
        rows.append(row)
    return rows


def cmd_expr(args) -> list[dict]:
    node = parse_expr(args.expression)
    model = _model(args)
    ctx = _context(model, args.tol)
    mode = MeanMode.parse(args.mean)
    res = expand(node, ctx, mode)
    return [
        {
            "expression": args.expression,
            "mean": mode.value,
            "phi": _phi_text(model.phi),
            "sigma2": model.sigma2,
            "atoms": " ".join(str(a) for a in res.atoms),
            "value_at_mean": res.value_at_mean,
            "bias_coefficient": res.bias_coefficient,
            "variance_coefficient": res.variance_coefficient,
            "near_boundary": ctx.near_boundary,
        }
    ]


def cmd_mc(args) -> list[dict]:
    model = _model(args)
    _context(model, args.tol)
    if args.n <= model.order + 2:
        raise UsageError(f"--n must exceed order + 2 = {model.order + 2}")
    config = McConfig(model, args.n, args.reps, args.est, args.mean, args.seed)
    report = mc_bias(config)
    rows = report.rows()
    for r in rows:
        r["phi"] = _phi_text(model.phi)
    return rows


def _grid(args) -> list[tuple[float, ...]]:
    if args.order == 1:
        values = args.phi1 if args.phi1 is not None else [-0.9, -0.5, 0.0, 0.3, 0.5, 0.9]
        points = [(v,) for v in values]
        points += [tuple(p[:1]) for p in (args.point or [])]
    else:
        if args.phi1 is not None or args.phi2 is not None:
            if args.phi1 is None or args.phi2 is None:
                raise UsageError("--phi1 and --phi2 must be given together")
            points = [(a, b) for b in args.phi2 for a in args.phi1]
        elif args.point:
            points = []
        else:
            points = [(round((1 - b) * u, 10), b) for b in DEFAULT_PHI2 for u in DEFAULT_SHAPE]
        for p in args.point or []:
            if len(p) != 2:
                raise UsageError("--point takes two coefficients for order 2")
            points.append(tuple(p))
    if not points:
        raise UsageError("the grid is empty")
    return points


def cmd_table(args) -> list[dict]:
    points = _grid(args)
    modes = [MeanMode.KNOWN, MeanMode.UNKNOWN] if args.mean == "both" else [MeanMode.parse(args.mean)]
    names = ["burg", "ls"] + (["yw"] if args.yw else [])
    order = len(points[0])
    rows = []
    for phi in points:
        model = ArModel(phi, args.sigma2)
        for mode in modes:
            row = {"phi1": phi[0]}
            if order == 2:
                row["phi2"] = phi[1]
            row["mean"] = mode.value
            if not admissible(model):
                row["status"] = "inadmissible"
                rows.append(row)
                continue
            ctx = MomentContext(model, args.tol)
            row["status"] = "near_boundary" if ctx.near_boundary else "ok"
            row["roots"] = char_roots(model).kind if order == 2 else "real"
            biases = {}
            for name in names:
                res = estimator_def(name, order, mode).expand(ctx)
                biases[name] = [r.bias_coefficient for r in res]
                for j, r in enumerate(res):
                    row[f"{name}_b{j + 1}"] = r.bias_coefficient
            closed = closed_form_bias("burg", mode, phi)
            for j, c in enumerate(closed):
                row[f"closed_b{j + 1}"] = c
            row["max_burg_ls_dev"] = max(abs(a - b) for a, b in zip(biases["burg"], biases["ls"]))
            row["max_burg_closed_dev"] = max(abs(a - c) for a, c in zip(biases["burg"], closed))
            rows.append(row)
    return rows


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="burgbias", description="Order-1/n bias of AR estimators.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, model=True, means=("known", "unknown")):
        if model:
            p.add_argument("--phi", type=_phi, required=True, help="AR coefficients, e.g. 0.5,0.2")
        p.add_argument("--mean", choices=list(means), default=means[-1] if "both" in means else "known")
        p.add_argument("--sigma2", type=_positive_float, default=1.0)
        p.add_argument("--tol", type=_positive_float, default=1e-12, help="truncation tolerance for lag sums")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--out", help="output path (default: standard output)")

    p = sub.add_parser("bias", help="bias and variance coefficients of a shipped estimator")
    p.add_argument("--est", choices=ESTIMATORS, default="burg")
    common(p)
    p.set_defaults(func=cmd_bias)

    p = sub.add_parser("expr", help="expand a user-supplied expression in S[m,k,i] atoms")
    p.add_argument("expression")
    common(p)
    p.set_defaults(func=cmd_expr)

    p = sub.add_parser("mc", help="Monte Carlo bias next to the predicted b/n")
    p.add_argument("--est", choices=ESTIMATORS, default="burg")
    p.add_argument("--n", type=_positive_int, default=50)
    p.add_argument("--reps", type=_positive_int, default=10000)
    p.add_argument("--seed", type=_seed, default=0)
    common(p)
    p.epilog = f"Worker threads are read from ${WORKERS_ENV} (default 1)."
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("table", help="Burg vs least-squares bias over a coefficient grid")
    p.add_argument("--order", type=int, choices=[1, 2], default=2)
    p.add_argument("--phi1", type=_float_list)
    p.add_argument("--phi2", type=_float_list)
    p.add_argument("--point", type=_float_list, action="append", help="extra grid point, repeatable")
    p.add_argument("--yw", action="store_true", help="include Yule-Walker columns")
    common(p, model=False, means=("known", "unknown", "both"))
    p.set_defaults(func=cmd_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rows = args.func(args)
    except (UsageError, ExprSyntaxError, InvalidAtomError) as exc:
        print(f"burgbias: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, SingularExpansionError, DegenerateInputError) as exc:
        print(f"burgbias: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ConvergenceError as exc:
        print(f"burgbias: convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    text = render(rows, args.format, args.command)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Exit codes: 0 success, 2 usage or input error, 3 no solution, 4 hypotheses
not verified. ``ML_RHO_LOG`` sets the log level (a name such as ``DEBUG`` or
a number).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np
from referencing import Registry, Resource

from mlorder.exceptions import DomainError, MLOverflowError
from mlorder.inverse import (
    PointObservation,
    PskhuProblem,
    Status,
    solve_alimov,
    solve_norm,
    solve_point,
    solve_pskhu,
)
from mlorder.monotonicity import (
    Kind,
    scan_derivative_sign,
    threshold_decreasing,
    threshold_increasing,
    verify_term_monotonicity,
)
from mlorder.special import MLQuery, dml_drho_scaled, ml
from mlorder.spectral import (
    DerivativeKind,
    alimov_first_eigenvalue,
    forward_eval,
    problem_from_dict,
    solve_forward,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_SOLUTION = 3
EXIT_UNVERIFIED = 4

log = logging.getLogger("mlorder")

_SCHEMAS = ("problem.json", "inverse_problem.json", "inverse_result.json", "table.json")


class InputError(Exception):
    """Bad input document or flag combination (exit code 2)."""


# {{{ io helpers


def _schema(name: str) -> dict:
    text = resources.files("mlorder.schemas").joinpath(name).read_text()
    return json.loads(text)


def _validator(name: str) -> jsonschema.protocols.Validator:
    schema = _schema(name)
    registry = Registry().with_resources(
        (n, Resource.from_contents(_schema(n))) for n in _SCHEMAS
    )
    cls = jsonschema.validators.validator_for(schema)
    return cls(schema, registry=registry)


def validate(doc: Any, schema_name: str) -> None:
    errors = sorted(_validator(schema_name).iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.path) or "<root>"
        raise InputError(f"schema error in {schema_name} at {where}: {e.message}")


def _load_json(path: str, schema_name: str) -> dict:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from exc
    validate(doc, schema_name)
    return doc


def _clean(v: Any) -> Any:
    """Replace non-finite floats by ``None`` for JSON output."""
    if isinstance(v, float):
        return v if math.isfinite(v) else None
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, list | tuple):
        return [_clean(x) for x in v]
    if isinstance(v, np.generic):
        return _clean(v.item())
    return v


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float | np.floating):
        return format(float(v), ".17g")
    return str(v)


class Table:
    def __init__(self, command: str, columns: list[str]):
        self.command = command
        self.columns = columns
        self.rows: list[list[Any]] = []
        self.summary: dict[str, Any] = {}

    def add(self, *row: Any) -> None:
        self.rows.append(list(row))

    def render(self, fmt: str) -> str:
        if fmt == "json":
            doc = _clean({"command": self.command, "columns": self.columns, "rows": self.rows})
            if self.summary:
                doc["summary"] = _clean(self.summary)
            validate(doc, "table.json")
            return json.dumps(doc, indent=2) + "\n"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        for k, v in self.summary.items():
            buf.write(f"# {k}={_fmt(v)}\n")
        return buf.getvalue()


def _emit(text: str, output: str | None) -> None:
    if output and output != "-":
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _floats(values: list[str]) -> list[float]:
    out = []
    for v in values:
        for part in v.split(","):
            if part.strip():
                out.append(float(part))
    return out


# }}}


# {{{ commands


def cmd_ml_eval(args) -> tuple[str, int]:
    t = Table("ml eval", ["z", "value", "abs_error_bound", "method"])
    for z in _floats(args.z):
        try:
            r = ml(MLQuery(args.rho, args.mu, z, args.rel_tol))
            t.add(z, r.value, r.abs_error_bound, r.method.value)
        except MLOverflowError as exc:
            t.add(z, math.inf, math.nan, f"overflow(log={exc.log_value:.17g})")
    return t.render(args.format), EXIT_OK


def cmd_ml_dml(args) -> tuple[str, int]:
    t = Table("ml dml", ["rho", "t", "lambda", "kind", "derivative"])
    for tt in _floats(args.t):
        t.add(args.rho, tt, args.lam, args.kind,
              dml_drho_scaled(args.rho, args.lam, tt, args.kind))
    return t.render(args.format), EXIT_OK


def cmd_mono_scan(args) -> tuple[str, int]:
    kind = Kind(args.kind)
    grid = np.linspace(args.rho0, args.rho_max, args.points)
    rep = scan_derivative_sign(grid, args.t, kind)
    t = Table("mono scan", ["rho", "dvalue"])
    for r, v in zip(rep.rho_grid, rep.derivative_values):
        t.add(r, v)
    thr = threshold_increasing(args.rho0) if kind is Kind.Caputo1Param \
        else threshold_decreasing(args.rho0)
    t.summary = {
        "kind": kind.value,
        "t": args.t,
        "threshold": thr,
        "in_regime": args.t <= thr,
        "all_positive": rep.all_positive,
        "all_negative": rep.all_negative,
        "first_violation_rho": rep.first_violation[0] if rep.first_violation else None,
    }
    return t.render(args.format), EXIT_OK


def cmd_mono_verify_terms(args) -> tuple[str, int]:
    if args.random:
        rng = np.random.default_rng(args.seed)
        pairs = []
        for _ in range(args.random):
            rho = float(rng.uniform(0.05, 0.95))
            tt = threshold_increasing(rho) * float(1.0 - rng.uniform(0.0, 1.0))
            pairs.append((rho, tt))
    else:
        if args.rho is None or args.t is None:
            raise InputError("give --rho and --t, or --random N")
        pairs = [(args.rho, args.t)]
    t = Table("mono verify-terms", ["rho", "t", "n_max", "in_regime", "violations",
                                    "first_violation"])
    total = 0
    for rho, tt in pairs:
        rep = verify_term_monotonicity(rho, tt, args.n_max)
        total += len(rep.violations)
        t.add(rho, tt, args.n_max, rep.in_regime, len(rep.violations),
              rep.first_violation if rep.first_violation is not None else "")
    t.summary = {"cases": len(pairs), "total_violations": total}
    return t.render(args.format), EXIT_OK


def cmd_forward_solve(args) -> tuple[str, int]:
    doc = _load_json(args.problem, "problem.json")
    domain, field = problem_from_dict(doc)
    rho = args.rho if args.rho is not None else doc.get("rho")
    if rho is None:
        raise InputError("give --rho or a 'rho' field in the problem")
    kind = args.kind or doc.get("derivative_kind", "caputo")
    sol = solve_forward(domain, field, float(rho), DerivativeKind(kind), args.n_modes)
    xs = _floats(args.x)
    ts = _floats(args.t)
    if domain.dimension == 2:
        if args.y is None:
            raise InputError("rectangle problems need --y")
        ys = _floats(args.y)
        t = Table("forward solve", ["x", "y", "t", "u"])
        for x in xs:
            for y in ys:
                for tt in ts:
                    t.add(x, y, tt, forward_eval(sol, (x, y), tt))
    else:
        t = Table("forward solve", ["x", "t", "u"])
        for x in xs:
            for tt in ts:
                t.add(x, tt, forward_eval(sol, x, tt))
    t.summary = {"rho": float(rho), "kind": kind, "modes": sol.truncation,
                 "tail_bound_at_t1": sol.tail_bound}
    return t.render(args.format), EXIT_OK


def _resolve_domain(doc: dict, base: Path) -> tuple:
    if "domain" in doc:
        return problem_from_dict(doc["domain"])
    if "domain_ref" in doc:
        sub = _load_json(str(base / doc["domain_ref"]), "problem.json")
        if "field_ref" in doc:
            fdoc = _load_json(str(base / doc["field_ref"]), "problem.json")
            sub = dict(sub, coefficients=fdoc["coefficients"])
        return problem_from_dict(sub)
    raise InputError("the problem needs 'domain' or 'domain_ref'")


def _require(obs: dict, *keys: str) -> None:
    missing = [k for k in keys if k not in obs]
    if missing:
        raise InputError(f"observation is missing {', '.join(missing)}")


def cmd_inverse(args) -> tuple[str, int]:
    doc = _load_json(args.problem, "inverse_problem.json")
    base = Path(args.problem).parent if args.problem != "-" else Path.cwd()
    obs = doc["observation"]
    tol = doc.get("tol", 1e-12)
    which = args.inverse_kind
    if which == "pskhu":
        _require(obs, "phi", "lambda", "x0", "u0")
        res = solve_pskhu(PskhuProblem(obs["phi"], obs["lambda"], obs["x0"], obs["u0"]),
                          doc.get("rho0", 0.1), tol)
    else:
        domain, field = _resolve_domain(doc, base)
        if which == "point":
            _require(obs, "x0", "t0", "d0")
            _require(doc, "rho0")
            res = solve_point(PointObservation(obs["x0"], obs["t0"], obs["d0"]), domain, field,
                              doc["rho0"], tol, doc.get("epsilon", 1e-6))
        elif which == "norm":
            _require(obs, "t0", "d0")
            _require(doc, "rho0")
            res = solve_norm(obs["t0"], obs["d0"], domain, field, doc["rho0"], tol)
        else:
            _require(obs, "x0", "t0", "d0")
            res = solve_alimov(PointObservation(obs["x0"], obs["t0"], obs["d0"]), domain, field,
                               tol, doc.get("rho_lo", 0.05))
    out = _clean(res.to_dict())
    validate(out, "inverse_result.json")
    code = {
        Status.Unique: EXIT_OK,
        Status.NoSolutionBelowRange: EXIT_NO_SOLUTION,
        Status.NoSolutionAboveRange: EXIT_NO_SOLUTION,
        Status.HypothesesUnverified: EXIT_UNVERIFIED,
    }[res.status]
    if args.format == "csv":
        t = Table("inverse", ["rho_hat", "status", "iterations", "residual"])
        t.add(res.rho_hat, res.status.value, res.iterations, res.residual)
        return t.render("csv"), code
    return json.dumps(out, indent=2) + "\n", code


def cmd_alimov_eigen(args) -> tuple[str, int]:
    lam = alimov_first_eigenvalue(args.h, args.H)
    t = Table("alimov eigen", ["h", "H", "mu", "lambda1"])
    t.add(args.h, args.H, math.sqrt(-lam), lam)
    return t.render(args.format), EXIT_OK


# }}}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", default=argparse.SUPPRESS,
                        help="write to this file instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="mlorder", parents=[common],
                                description="Mittag-Leffler evaluation and order recovery.")
    groups = p.add_subparsers(dest="group", required=True)

    g = groups.add_parser("ml", help="Mittag-Leffler function").add_subparsers(
        dest="sub", required=True)
    q = g.add_parser("eval", parents=[common])
    q.add_argument("--rho", type=float, required=True)
    q.add_argument("--mu", type=float, default=1.0)
    q.add_argument("--z", nargs="+", required=True, help="values or comma lists")
    q.add_argument("--rel-tol", type=float, default=1e-12)
    q.set_defaults(func=cmd_ml_eval)
    q = g.add_parser("dml", parents=[common])
    q.add_argument("--rho", type=float, required=True)
    q.add_argument("--t", nargs="+", required=True)
    q.add_argument("--lam", type=float, default=1.0)
    q.add_argument("--kind", choices=("caputo", "rl"), default="caputo")
    q.set_defaults(func=cmd_ml_dml)

    g = groups.add_parser("mono", help="monotonicity checks").add_subparsers(
        dest="sub", required=True)
    q = g.add_parser("scan", parents=[common])
    q.add_argument("--rho0", type=float, required=True)
    q.add_argument("--t", type=float, required=True)
    q.add_argument("--kind", choices=("caputo", "rl"), default="caputo")
    q.add_argument("--points", type=int, default=64)
    q.add_argument("--rho-max", type=float, default=0.999)
    q.set_defaults(func=cmd_mono_scan)
    q = g.add_parser("verify-terms", parents=[common])
    q.add_argument("--rho", type=float)
    q.add_argument("--t", type=float)
    q.add_argument("--n-max", type=int, default=500)
    q.add_argument("--random", type=int, default=0, metavar="N")
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_mono_verify_terms)

    g = groups.add_parser("forward", help="forward problems").add_subparsers(
        dest="sub", required=True)
    q = g.add_parser("solve", parents=[common])
    q.add_argument("--problem", required=True, help="problem JSON file, - for stdin")
    q.add_argument("--rho", type=float)
    q.add_argument("--kind", choices=("caputo", "rl"))
    q.add_argument("--x", nargs="+", required=True)
    q.add_argument("--y", nargs="+")
    q.add_argument("--t", nargs="+", required=True)
    q.add_argument("--n-modes", type=int)
    q.set_defaults(func=cmd_forward_solve)

    g = groups.add_parser("inverse", help="order recovery").add_subparsers(
        dest="inverse_kind", required=True)
    for name in ("point", "norm", "alimov", "pskhu"):
        q = g.add_parser(name, parents=[common])
        q.add_argument("--problem", required=True, help="problem JSON file, - for stdin")
        q.set_defaults(func=cmd_inverse, default_format="json")

    g = groups.add_parser("alimov", help="negative first eigenvalue").add_subparsers(
        dest="sub", required=True)
    q = g.add_parser("eigen", parents=[common])
    q.add_argument("--h", type=float, required=True)
    q.add_argument("--H", type=float, required=True)
    q.set_defaults(func=cmd_alimov_eigen)
    return p


def _setup_logging() -> None:
    level = os.environ.get("ML_RHO_LOG")
    if not level:
        return
    value = int(level) if level.isdigit() else getattr(logging, level.upper(), logging.WARNING)
    logging.basicConfig(level=value, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    args.format = getattr(args, "format", getattr(args, "default_format", "csv"))
    output = getattr(args, "output", None)
    try:
        text, code = args.func(args)
    except (InputError, DomainError) as exc:
        print(f"mlorder: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(text, output)
    return code


if __name__ == "__main__":
    sys.exit(main())

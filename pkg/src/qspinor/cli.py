"""``qspinor`` command line: parse, q-derivatives, solvers and self-checks.

Every command prints one JSON document::

    {"version", "command", "config", "result", "diagnostics": [...], "timing_ms"}

Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
3 numeric or convergence error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from qspinor import __version__
from qspinor.clifford import GAMMA_REPRESENTATIONS, Signature, gamma_set
from qspinor.expr import (
    Call,
    Const,
    Expr,
    ExprSyntaxError,
    Pow,
    UnboundVariableError,
    Var,
    parse,
    to_text,
)
from qspinor.expr.nodes import Neg, _Binary
from qspinor.qderiv import QContext, chain_rule, qderivative
from qspinor.qintegral import SeriesDivergenceError, QContour
from qspinor.qsolve import (
    DiracEM,
    Electromagnetic,
    Homogeneous,
    Inhomogeneous,
    NewOpInhomogeneous,
    PotentialB,
    solve_dirac_em,
    solve_electromagnetic,
    solve_homogeneous,
    solve_inhomogeneous,
    solve_new_op_inhomogeneous,
    solve_potential_b,
)
from qspinor.verify import SUITES, VerifySettings, run_suites

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

DEFAULTS: dict[str, Any] = {
    "q": 0.5,
    "tol": 1e-10,
    "max_terms": 1000,
    "signature": (0, 4),
    "gamma_rep": "dirac",
    "x0": 1.0,
    "K": 200,
    "output": None,
    "pretty": False,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument errors become a JSON document and exit code 2."""

    def error(self, message):
        raise UsageError(message)


# -- config ----------------------------------------------------------------


def _parse_signature(text) -> tuple[int, int]:
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).replace("(", "").replace(")", "").split(",")
    if len(parts) != 2:
        raise UsageError(f"signature must be 'p,q', got {text!r}")
    try:
        p, q = (int(str(v).strip()) for v in parts)
    except ValueError:
        raise UsageError(f"signature must be two integers, got {text!r}") from None
    return p, q


def _coerce(key: str, value):
    try:
        if key in ("q", "tol", "x0"):
            return float(value)
        if key in ("max_terms", "K"):
            f = float(value)
            if f != int(f):
                raise ValueError
            return int(f)
        if key == "signature":
            return _parse_signature(value)
        if key == "pretty":
            if isinstance(value, bool):
                return value
            return str(value).strip().lower() in ("1", "true", "yes", "on")
        return None if value is None else str(value)
    except (TypeError, ValueError):
        raise UsageError(f"bad value for {key}: {value!r}") from None


def load_config(path: str) -> dict:
    """JSON object or flat ``key=value`` lines (``#`` comments allowed)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            raw = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"config {path}:{lineno}: expected key=value")
            k, v = line.split("=", 1)
            raw[k.strip()] = v.strip()
    out = {}
    for k, v in raw.items():
        key = k.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"unknown config key {k!r}")
        out[key] = _coerce(key, v)
    return out


def resolve_config(args: argparse.Namespace) -> dict:
    """Flags over config file over defaults."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(load_config(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            cfg[key] = _coerce(key, value)
    return cfg


def _context(cfg: dict) -> QContext:
    try:
        return QContext(cfg["q"], cfg["tol"], cfg["max_terms"], cfg["x0"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _signature(cfg: dict) -> Signature:
    try:
        return Signature(*cfg["signature"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _gamma(cfg: dict):
    try:
        return gamma_set(cfg["gamma_rep"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def config_json(cfg: dict) -> dict:
    return {**cfg, "signature": list(cfg["signature"])}


# -- JSON helpers ----------------------------------------------------------


def expr_to_json(e: Expr) -> dict:
    """Tree as nested objects: ``{"node": ..., ...}``."""
    if isinstance(e, Const):
        if e.name:
            return {"node": "const", "name": e.name}
        v = e.value
        if isinstance(v, complex):
            return {"node": "const", "value": [v.real, v.imag]}
        if isinstance(v, (int, float)):
            return {"node": "const", "value": v}
        return {"node": "const", "text": to_text(e)}
    if isinstance(e, Var):
        return {"node": "var", "name": e.name, "kind": e.kind}
    if isinstance(e, Neg):
        return {"node": "neg", "arg": expr_to_json(e.arg)}
    if isinstance(e, Call):
        return {"node": "call", "func": e.func, "arg": expr_to_json(e.arg)}
    if isinstance(e, Pow):
        return {"node": "pow", "base": expr_to_json(e.base), "exponent": e.exponent}
    if isinstance(e, _Binary):
        return {"node": type(e).__name__.lower(), "left": expr_to_json(e.left), "right": expr_to_json(e.right)}
    raise TypeError(f"cannot serialize {e!r}")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _sanitize(obj):
    """Replace non-finite floats by None so the output is strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj


# -- commands --------------------------------------------------------------


def cmd_parse(args, cfg) -> tuple[dict, list[str], int]:
    sig = _signature(cfg)
    e = parse(args.expr, sig=sig, functions=args.function or ())
    printed = to_text(e)
    again = parse(printed, sig=sig, functions=args.function or ())
    return {"input": args.expr, "tree": expr_to_json(e), "printed": printed, "roundtrip": again == e}, [], EXIT_OK


def cmd_qderiv(args, cfg) -> tuple[dict, list[str], int]:
    if args.expr is None:
        raise UsageError("--expr is required")
    sig = _signature(cfg)
    ctx = _context(cfg)
    f = parse(args.expr, sig=sig, functions=args.function or ())
    if args.kind == "chain":
        if args.u_of_x is None:
            raise UsageError("--u-of-x is required for --kind chain")
        result = chain_rule(f, parse(args.u_of_x, sig=sig), args.var, ctx, u=args.u)
    elif args.kind == "directional":
        if args.dir is None or args.step is None:
            raise UsageError("--dir and --step are required for --kind directional")
        try:
            direction = parse(args.dir, sig=sig)
        except ExprSyntaxError as exc:
            raise UsageError(f"bad --dir: {exc}") from None
        try:
            result = qderivative(f, args.var, args.kind, ctx, direction=direction, step=args.step)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        result = qderivative(f, args.var, args.kind, ctx)
    printed = to_text(result)
    return {
        "input": args.expr,
        "kind": args.kind,
        "var": args.var,
        "result_expr": expr_to_json(result),
        "result_printed": printed,
    }, [], EXIT_OK


def _points(text: str) -> list[float]:
    try:
        pts = [float(p) for p in text.replace(";", ",").split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"--points must be a comma-separated list of numbers, got {text!r}") from None
    if not pts:
        raise UsageError("--points is empty")
    return pts


def _seed(text: str | None):
    if text is None:
        return None
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise UsageError(f"--seed must be a complex number, got {text!r}") from None


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing " + ", ".join("--" + n.replace("_", "-") for n in missing))


def cmd_solve(args, cfg) -> tuple[dict, list[str], int]:
    ctx = _context(cfg)
    sig = _signature(cfg)
    gamma = _gamma(cfg)
    points = _points(args.points)
    seed = _seed(args.seed)
    common = dict(ctx=ctx, u_of_x=_expr_arg(args.u_of_x, sig))
    try:
        if args.eq == "homogeneous":
            _require(args, "b")
            eq = Homogeneous(b=args.b, gamma=gamma, mu=args.mu, **common)
            report = solve_homogeneous(eq, points, seed=0.0 if seed is None else seed)
        elif args.eq == "inhomogeneous":
            _require(args, "b", "phi")
            eq = Inhomogeneous(b=args.b, phi=_expr_arg(args.phi, sig), gamma=gamma, mu=args.mu, **common)
            report = solve_inhomogeneous(eq, points)
        elif args.eq == "em":
            _require(args, "e", "m", "A", "g")
            eq = Electromagnetic(e=args.e, m=args.m, A=_expr_arg(args.A, sig), g=_expr_arg(args.g, sig),
                                 gamma=gamma, mu=args.mu, **common)
            report = solve_electromagnetic(eq, points, seed=seed)
        elif args.eq == "dirac-em":
            _require(args, "e", "m", "A")
            eq = DiracEM(e=args.e, m=args.m, A=_expr_arg(args.A, sig), gamma=gamma, mu=args.mu, **common)
            report = solve_dirac_em(eq, points, seed=0.0 if seed is None else seed)
        elif args.eq == "potential-b":
            _require(args, "a", "b", "B", "phi")
            eq = PotentialB(a=args.a, b=args.b, B=_expr_arg(args.B, sig), phi=_expr_arg(args.phi, sig), sig=sig,
                            mu=args.mu if args.mu else 1, **common)
            report = solve_potential_b(eq, points)
        else:
            _require(args, "a", "phi")
            eq = NewOpInhomogeneous(a=args.a, phi=_expr_arg(args.phi, sig), sig=sig,
                                    mu=args.mu if args.mu else 1, **common)
            report = solve_new_op_inhomogeneous(eq, points)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ExprSyntaxError):
            raise
        raise UsageError(str(exc)) from None
    code = EXIT_OK if report.converged_everywhere else EXIT_NUMERIC
    return report.to_dict(), list(report.diagnostics), code


def _expr_arg(text: str | None, sig: Signature):
    return None if text is None else parse(text, sig=sig)


def cmd_verify(args, cfg) -> tuple[dict, list[str], int]:
    names = args.suite or list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise UsageError(f"unknown suite(s) {unknown}; known: {sorted(SUITES)}")
    settings = VerifySettings(_context(cfg), _signature(cfg), _gamma(cfg), QContour(cfg["x0"], cfg["K"]))
    results = run_suites(names, settings)
    failed = [n for n, r in results.items() if r["failed"]]
    diagnostics = [f"suite {n} had {results[n]['failed']} failure(s)" for n in failed]
    return results, diagnostics, EXIT_VERIFY if failed else EXIT_OK


# -- parser ----------------------------------------------------------------


def _common_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run configuration (flags > --config file > defaults)")
    g.add_argument("--q", type=float, help="deformation parameter (default 0.5)")
    g.add_argument("--tol", type=float, help="series tolerance (default 1e-10)")
    g.add_argument("--max-terms", type=int, dest="max_terms", help="series cap (default 1000)")
    g.add_argument("--signature", help="Clifford signature 'p,q' (default 0,4)")
    g.add_argument("--gamma-rep", dest="gamma_rep", choices=sorted(GAMMA_REPRESENTATIONS),
                   help="gamma matrix representation (default dirac)")
    g.add_argument("--x0", type=float, help="lattice base point (default 1)")
    g.add_argument("--K", type=int, help="lattice depth (default 200)")
    g.add_argument("--output", help="write JSON here instead of stdout")
    g.add_argument("--config", help="JSON or key=value file with the keys above")
    g.add_argument("--pretty", action="store_true", default=None, help="indent the JSON output")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = _Parser(prog="qspinor", description="q-deformed spinor calculus toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("parse", parents=[common], help="parse and pretty-print an expression")
    p.add_argument("--expr", required=True)
    p.add_argument("--function", action="append", help="register an opaque function symbol")
    p.set_defaults(handler=cmd_parse)

    p = sub.add_parser("qderiv", parents=[common], help="symbolic q-derivative")
    p.add_argument("--kind", choices=["jackson", "modified", "directional", "chain"], default="jackson")
    p.add_argument("--expr")
    p.add_argument("--var", default="x")
    p.add_argument("--dir", help="direction generator for --kind directional, e.g. e2")
    p.add_argument("--step", help="spinor step variable for --kind directional, e.g. xd2")
    p.add_argument("--u-of-x", dest="u_of_x", help="inner function for --kind chain")
    p.add_argument("--u", default="u", help="outer variable for --kind chain")
    p.add_argument("--function", action="append", help="register an opaque function symbol")
    p.set_defaults(handler=cmd_qderiv)

    p = sub.add_parser("solve", parents=[common], help="series solution with residual audit")
    p.add_argument("--eq", required=True,
                   choices=["homogeneous", "inhomogeneous", "em", "dirac-em", "potential-b", "new-op-inhomogeneous"])
    p.add_argument("--points", required=True, help="comma-separated x values")
    for name in ("a", "b", "e", "m"):
        p.add_argument(f"--{name}", type=float)
    for name in ("phi", "A", "g", "B"):
        p.add_argument(f"--{name}", help="expression in x and u")
    p.add_argument("--mu", type=int, default=None, help="gamma index (0-based) or generator index (1-based)")
    p.add_argument("--u-of-x", dest="u_of_x", default="x")
    p.add_argument("--seed", help="start value of the fixed-point iteration, e.g. 0.3+0.2i")
    p.set_defaults(handler=cmd_solve)

    p = sub.add_parser("verify", parents=[common], help="run self-check suites")
    p.add_argument("--suite", action="append", help=f"one of {', '.join(SUITES)} (repeatable)")
    p.set_defaults(handler=cmd_verify)
    return parser


def _emit(doc: dict, output: str | None, pretty: bool, stream) -> None:
    text = json.dumps(_sanitize(doc), indent=2 if pretty else None, default=_json_default, allow_nan=False)
    if output:
        Path(output).write_text(text + "\n")
    else:
        stream.write(text + "\n")


def main(argv: Sequence[str] | None = None, stream=None) -> int:
    stream = stream or sys.stdout
    start = time.perf_counter()
    parser = build_parser()
    command = None
    cfg = dict(DEFAULTS)
    diagnostics: list[str] = []
    result: Any = None
    try:
        args = parser.parse_args(argv)
        command = args.command
        if command is None:
            raise UsageError("a command is required: parse, qderiv, solve or verify")
        cfg = resolve_config(args)
        if args.command == "solve" and args.mu is None:
            args.mu = 0 if args.eq not in ("potential-b", "new-op-inhomogeneous") else 1
        result, diagnostics, code = args.handler(args, cfg)
    except UsageError as exc:
        diagnostics, code = [f"usage: {exc}"], EXIT_USAGE
    except ExprSyntaxError as exc:
        diagnostics, code = [f"parse error: {exc}"], EXIT_USAGE
    except (ZeroDivisionError, UnboundVariableError, SeriesDivergenceError, ArithmeticError, ValueError,
            TypeError, np.linalg.LinAlgError) as exc:
        diagnostics, code = [f"numeric error: {type(exc).__name__}: {exc}"], EXIT_NUMERIC
    doc = {
        "version": __version__,
        "command": command,
        "config": config_json(cfg),
        "result": result,
        "diagnostics": diagnostics,
        "timing_ms": round((time.perf_counter() - start) * 1000, 3),
    }
    try:
        _emit(doc, cfg.get("output"), bool(cfg.get("pretty")), stream)
    except OSError as exc:
        sys.stderr.write(f"cannot write output: {exc}\n")
        return EXIT_USAGE
    return code


if __name__ == "__main__":
    sys.exit(main())

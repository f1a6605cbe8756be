"""Command-line front end.

Every subcommand parses an integrand, runs one operation and prints a report.
JSON reports are deterministic: keys are sorted, no timestamps are written,
and non-finite numbers appear as ``null`` with the status carrying the meaning.
Exit codes: 0 for Finite/Exists/Converged, 2 for NotIntegrable, infinite values,
NoValue or Diverged, 3 for Inconclusive, 64 for usage and parse errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .expr import ParseError, parse

EXIT_OK, EXIT_NEGATIVE, EXIT_UNDECIDED, EXIT_USAGE = 0, 2, 3, 64

_EXIT = {
    "Finite": EXIT_OK, "Exists": EXIT_OK, "Converged": EXIT_OK, "MeasureConsistent": EXIT_OK,
    "NotIntegrable": EXIT_NEGATIVE, "PlusInfinity": EXIT_NEGATIVE, "MinusInfinity": EXIT_NEGATIVE,
    "NoValue": EXIT_NEGATIVE, "Diverged": EXIT_NEGATIVE, "ViolationAt": EXIT_NEGATIVE,
    "Inconclusive": EXIT_UNDECIDED, "MeasureInconclusive": EXIT_UNDECIDED,
}

SUBCOMMANDS = ("integrate", "improper", "pointvalue", "lateral", "fourier",
               "phifield", "verdict", "moments", "reconstruct", "mvt")


def exit_code(status: str) -> int:
    """Map a result status to the process exit code."""
    return _EXIT[status]


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    tol: float = 1e-8
    k_max: int = 6
    n_max: int = 6
    mesh_ratio: float = 0.9
    output: str = "text"
    trace: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise UsageError("tol must be positive")
        if not 0 < self.mesh_ratio < 1:
            raise UsageError("mesh_ratio must lie in (0, 1)")
        if self.output not in ("json", "csv", "text"):
            raise UsageError("output must be json, csv or text")
        if self.k_max < 0 or self.n_max < 0:
            raise UsageError("k_max and n_max must be non-negative")


def _coerce(name: str, raw: str):
    kind = {f.name: f.type for f in fields(RunConfig)}[name]
    try:
        if kind in (float, "float"):
            return float(raw)
        if kind in (int, "int"):
            return int(raw)
        if kind in (bool, "bool"):
            low = str(raw).strip().lower()
            if low not in ("1", "0", "true", "false", "yes", "no"):
                raise ValueError(raw)
            return low in ("1", "true", "yes")
        return str(raw).strip()
    except ValueError:
        raise UsageError(f"bad value for {name}: {raw!r}") from None


def read_config_file(path: str) -> dict:
    """key=value lines; blank lines and '#' comments are ignored."""
    out = {}
    names = {f.name for f in fields(RunConfig)}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in names:
            raise UsageError(f"{path}:{no}: unknown key {key!r}")
        out[key] = _coerce(key, val.strip('"\''))
    return out


def resolve_config(flags: dict, env: Optional[dict] = None, path: Optional[str] = None) -> RunConfig:
    """Defaults, overridden by the config file, then environment, then flags."""
    env = os.environ if env is None else env
    values = {}
    if path:
        values.update(read_config_file(path))
    for f in fields(RunConfig):
        for key in (f"DISTINT_{f.name.upper()}", f"DISTINT_{f.name.upper().replace('_', '')}"):
            if key in env:
                values[f.name] = _coerce(f.name, env[key])
                break
    values.update({k: v for k, v in flags.items() if v is not None})
    return RunConfig(**values)


# ---------------------------------------------------------------------------
# serialisation helpers


def _num(v):
    if v is None:
        return None
    if isinstance(v, (complex, np.complexfloating)):
        v = complex(v)
        if v.imag != 0.0:
            return {"re": _num(v.real), "im": _num(v.imag)}
        v = v.real
    v = float(v)
    return v if math.isfinite(v) else None


def _trace(entries) -> list:
    return [{"lo": _num(t.lo), "hi": _num(t.hi), "strategy": t.strategy,
             "value": _num(t.value), "diagnostics": str(t.diagnostics)} for t in entries]


def _floats(text: str) -> list:
    try:
        return [float(eval_number(s)) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def eval_number(text: str) -> float:
    """A number, allowing 'pi', 'inf' and simple products such as '2*pi' or 'pi/2'."""
    t = text.strip().lower().replace(" ", "")
    if not t:
        raise ValueError("empty number")
    sign = -1.0 if t.startswith("-") else 1.0
    t = t.lstrip("+-")
    if t in ("inf", "infinity"):
        return sign * math.inf
    value = 1.0
    for k, part in enumerate(t.replace("/", "*/").split("*")):
        div = part.startswith("/")
        part = part.lstrip("/")
        v = math.pi if part == "pi" else float(part)
        value = value / v if div else value * v
    return sign * value


def _grid(text: str, geometric: bool) -> np.ndarray:
    parts = text.split(":")
    if len(parts) == 3:
        lo, hi, n = eval_number(parts[0]), eval_number(parts[1]), int(parts[2])
        if n < 1:
            raise UsageError("grid size must be positive")
        if geometric:
            if lo <= 0 or hi <= 0:
                raise UsageError("t grid needs positive endpoints")
            return np.geomspace(lo, hi, n)
        return np.linspace(lo, hi, n)
    return np.array(_floats(text))


def _kernel(text: str):
    from .phitransform import bump, poisson

    parts = text.split(":")
    if parts[0] == "poisson" and len(parts) == 1:
        return poisson()
    if parts[0] == "bump" and len(parts) in (1, 2, 3):
        R = eval_number(parts[1]) if len(parts) > 1 else 1.0
        sh = eval_number(parts[2]) if len(parts) > 2 else 0.0
        return bump(R, sh)
    raise UsageError(f"kernel must be 'poisson' or 'bump:R[:shift]', got {text!r}")


def _distrep(expr, deltas: Sequence[str]):
    from .phitransform import DistRep

    atoms = []
    for d in deltas or ():
        vals = _floats(d)
        if len(vals) != 3:
            raise UsageError("--delta takes c,m,x0")
        atoms.append((vals[0], int(vals[1]), vals[2]))
    return DistRep(expr, tuple(atoms))


# ---------------------------------------------------------------------------
# operations; each returns the operation-specific part of the report


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flag = {"lo": "--from", "hi": "--to"}
        raise UsageError(f"{args.command} needs " + ", ".join(flag.get(n, "--" + n.replace("_", "-")) for n in missing))


def _integral_report(r) -> dict:
    return {"value": _num(r.value), "status": r.status, "error_estimate": _num(r.error_estimate),
            "trace": _trace(r.trace)}


def op_integrate(expr, args, cfg: RunConfig) -> dict:
    from .integrate import dist_integrate

    _need(args, "lo", "hi")
    return _integral_report(dist_integrate(expr, args.lo, args.hi, tol=cfg.tol))


def op_improper(expr, args, cfg: RunConfig) -> dict:
    from .integrate import integrate_improper

    _need(args, "lo")
    # Cesàro limits at infinity are read off a finite mesh; tighter tolerances are not meaningful
    r = integrate_improper(expr, args.lo, direction=args.direction, k_max=cfg.k_max,
                           k=args.cesaro_order, tol=max(cfg.tol, 1e-3))
    return _integral_report(r)


def _point_report(p) -> dict:
    out = {"value": _num(p.value), "status": p.status, "error_estimate": None, "trace": [],
           "order": p.order_n, "detail": p.detail}
    if p.laterals is not None:
        out["laterals"] = [_num(v) for v in p.laterals]
    return out


def op_pointvalue(expr, args, cfg: RunConfig) -> dict:
    from .reduce import point_value

    _need(args, "at")
    return _point_report(point_value(expr, args.at, n_max=cfg.n_max, tol=max(cfg.tol, 1e-6)))


def op_lateral(expr, args, cfg: RunConfig) -> dict:
    from .reduce import lateral_value

    _need(args, "at")
    return _point_report(lateral_value(expr, args.at, args.side, n_max=cfg.n_max, tol=max(cfg.tol, 1e-6)))


def op_fourier(expr, args, cfg: RunConfig) -> dict:
    from .fourier import fourier_coeffs, recover_value

    period = None if args.period is None else args.period
    fd = fourier_coeffs(expr, args.coeffs, period=period)
    doc = json.loads(fd.to_json())
    out = {"value": None, "status": "Finite", "error_estimate": None, "trace": [], "coefficients": doc}
    if args.at is not None:
        p = recover_value(fd, args.at, k=args.cesaro_order, tol=max(cfg.tol, 1e-3))
        out.update(value=_num(p.value), status=p.status, order=p.order_n, detail=p.detail)
    out["_csv"] = "n,re,im\n" + "".join(f"{n},{re!r},{im!r}\n" for n, re, im in zip(doc["n"], doc["re"], doc["im"]))
    return out


def op_phifield(expr, args, cfg: RunConfig) -> dict:
    from .phitransform import phi_field

    _need(args, "grid_x", "grid_t")
    field = phi_field(_distrep(expr, args.delta), _kernel(args.kernel),
                      _grid(args.grid_x, False), _grid(args.grid_t, True))
    ok = bool(np.all(field.status == "Finite"))
    return {"value": None, "status": "Finite" if ok else "Inconclusive", "error_estimate": None,
            "trace": [], "field": json.loads(field.to_json()), "_csv": field.to_csv()}


def op_verdict(expr, args, cfg: RunConfig) -> dict:
    from .phitransform import ViolationAt, measure_verdict

    _need(args, "lo", "hi")
    v = measure_verdict(_distrep(expr, args.delta), _kernel(args.kernel), (args.lo, args.hi))
    out = {"value": None, "status": type(v).__name__, "error_estimate": None, "trace": []}
    if isinstance(v, ViolationAt):
        out["witness"] = {"x": v.x, "t": v.t, "value": _num(v.value)}
    else:
        out["detail"] = v.detail
    return out


def op_moments(expr, args, cfg: RunConfig) -> dict:
    from .cesaro import EvDisagreement
    from .integrate import moment

    orders = [int(v) for v in _floats(args.orders)]
    rows, statuses = [], []
    for n in orders:
        try:
            cv = moment(expr, n, k_max=cfg.k_max, tol=max(cfg.tol, 1e-3))
            rows.append({"n": n, "value": _num(cv.value), "order": cv.order_k, "status": cv.status})
            statuses.append(cv.status)
        except EvDisagreement as exc:
            rows.append({"n": n, "value": None, "order": None, "status": "Inconclusive", "detail": str(exc)})
            statuses.append("Inconclusive")
    worst = max(statuses, key=lambda s: (exit_code(s) == EXIT_NEGATIVE, exit_code(s) == EXIT_UNDECIDED))
    first = rows[0]["value"] if len(rows) == 1 else None
    csv_body = "n,value,order,status\n" + "".join(
        f"{r['n']},{'' if r['value'] is None else repr(r['value'])},{'' if r['order'] is None else r['order']},{r['status']}\n"
        for r in rows)
    return {"value": first, "status": worst, "error_estimate": None, "trace": [], "moments": rows, "_csv": csv_body}


def op_reconstruct(expr, args, cfg: RunConfig) -> dict:
    from .integrate import reconstruct_from_peano

    _need(args, "lo", "hi", "grid_x")
    inits = _floats(args.inits) if args.inits else [0.0] * args.order
    pts = reconstruct_from_peano(expr, inits, args.lo, args.hi, args.order, _grid(args.grid_x, False))
    ok = all(math.isfinite(v) for _, v in pts)
    return {"value": None, "status": "Finite" if ok else "Inconclusive", "error_estimate": None, "trace": [],
            "points": [{"x": x, "f": _num(v)} for x, v in pts],
            "_csv": "x,f\n" + "".join(f"{x!r},{v!r}\n" for x, v in pts)}


def op_mvt(expr, args, cfg: RunConfig) -> dict:
    from .integrate import ResidualNotBracketed, mvt_find_xi

    _need(args, "lo", "hi", "psi")
    psi = parse(args.psi)
    try:
        xi = mvt_find_xi(args.kind, expr, psi, args.lo, args.hi, tol=max(cfg.tol, 1e-8))
    except ResidualNotBracketed as exc:
        return {"value": None, "status": "Inconclusive", "error_estimate": None, "trace": [], "detail": str(exc)}
    return {"value": xi, "status": "Exists", "error_estimate": None, "trace": []}


OPERATIONS = {
    "integrate": op_integrate, "improper": op_improper, "pointvalue": op_pointvalue,
    "lateral": op_lateral, "fourier": op_fourier, "phifield": op_phifield, "verdict": op_verdict,
    "moments": op_moments, "reconstruct": op_reconstruct, "mvt": op_mvt,
}

HELP = {
    "integrate": "integral over [--from, --to]",
    "improper": "(C) integral from --from to +inf or -inf",
    "pointvalue": "distributional point value at --at",
    "lateral": "lateral value at --at from --side",
    "fourier": "Fourier coefficients; with --at, the point value from Cesàro partial sums",
    "phifield": "phi-transform on a (x, t) grid",
    "verdict": "heuristic positive-measure check on [--from, --to]",
    "moments": "(C) moments of the given --orders",
    "reconstruct": "rebuild f from its n-th derivative and initial values",
    "mvt": "mean value point xi for f against --psi",
}


# ---------------------------------------------------------------------------
# argument parsing and the entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _number(text: str) -> float:
    try:
        return eval_number(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="distint", description="Distributional integrals, point values and summability.")
    p.add_argument("--version", action="version", version=f"distint {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name, help=HELP[name])
        s.add_argument("expr", help="integrand, e.g. 'chirp(alpha=-3,beta=1,sin)*indicator(0,1)'")
        s.add_argument("--from", dest="lo", type=_number)
        s.add_argument("--to", dest="hi", type=_number)
        s.add_argument("--at", type=_number)
        s.add_argument("--tol", type=float)
        s.add_argument("--k-max", dest="k_max", type=int)
        s.add_argument("--n-max", dest="n_max", type=int)
        s.add_argument("--mesh-ratio", dest="mesh_ratio", type=float)
        s.add_argument("--cesaro-order", dest="cesaro_order", type=int)
        s.add_argument("--kernel", default="poisson", help="poisson | bump:R[:shift]")
        s.add_argument("--grid-x", dest="grid_x", help="lo:hi:n (linear) or comma list")
        s.add_argument("--grid-t", dest="grid_t", help="hi:lo:n (geometric) or comma list")
        s.add_argument("--delta", action="append", help="c,m,x0 adds c times the m-th derivative of delta at x0")
        s.add_argument("--side", choices=("left", "right"), default="right")
        s.add_argument("--direction", choices=("+inf", "-inf"), default="+inf")
        s.add_argument("--coeffs", type=int, default=32, help="number of Fourier coefficients per side")
        s.add_argument("--period", type=_number)
        s.add_argument("--orders", default="0", help="moment orders, comma separated")
        s.add_argument("--order", type=int, default=1, help="Peano order n")
        s.add_argument("--inits", help="initial values f(a), f'(a), ...")
        s.add_argument("--psi", help="smooth multiplier for mvt")
        s.add_argument("--kind", choices=("first", "second", "bonnet"), default="first")
        out = s.add_mutually_exclusive_group()
        out.add_argument("--json", dest="output", action="store_const", const="json")
        out.add_argument("--csv", dest="output", action="store_const", const="csv")
        out.add_argument("--text", dest="output", action="store_const", const="text")
        s.add_argument("--trace", action="store_const", const=True, default=None)
        s.add_argument("--config", help="key=value configuration file")
    return p


def render(report: dict, cfg: RunConfig) -> str:
    """Serialise a report in the configured output format."""
    csv_body = report.pop("_csv", None)
    if cfg.output == "json":
        return json.dumps(report, sort_keys=True, indent=2, allow_nan=False)
    if cfg.output == "csv":
        if csv_body is not None:
            return csv_body.rstrip("\n")
        return f"status,value\n{report['status']},{'' if report['value'] is None else repr(report['value'])}"
    lines = [f"status: {report['status']}", f"value: {report['value']}"]
    for key in ("order", "laterals", "witness", "detail"):
        if report.get(key) not in (None, "", []):
            lines.append(f"{key}: {report[key]}")
    if cfg.trace:
        for t in report["trace"]:
            lines.append(f"  [{t['lo']}, {t['hi']}] {t['strategy']}: {t['value']} ({t['diagnostics']})")
    return "\n".join(lines)


def run(argv: Optional[Sequence[str]] = None, env: Optional[dict] = None,
        stdout=None, stderr=None) -> int:
    """Run one command; returns the exit code."""
    from .integrate import HypothesisViolation, UnsupportedTransform
    from .expr import DomainError

    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
        flags = {k: getattr(args, k) for k in ("tol", "k_max", "n_max", "mesh_ratio", "output", "trace")}
        cfg = resolve_config(flags, env, args.config)
        expr = parse(args.expr)
        body = OPERATIONS[args.command](expr, args, cfg)
    except ParseError as exc:
        print(exc.diagnostics.render(args.expr), file=stderr)
        return EXIT_USAGE
    except (UsageError, DomainError, UnsupportedTransform, HypothesisViolation) as exc:
        print(f"distint: error: {exc}", file=stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"distint: error: {exc}", file=stderr)
        return EXIT_USAGE
    report = {
        "tool": "distint",
        "version": __version__,
        "command": args.command,
        "input": args.expr,
        "config": asdict(cfg),
    }
    report.update(body)
    print(render(report, cfg), file=stdout)
    return exit_code(report["status"])


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

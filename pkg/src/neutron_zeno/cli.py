"""Command-line driver: parameter sweeps and figure data written as CSV/TSV.

Usage::

    neutron-zeno <command> [--config FILE] [--set key=value]... [--out FILE] [--format csv|tsv]

Every parameter value is either a scalar expression (``pi/2``, ``4*sqrt(3)/9``),
a comma list (``1,2,4``) or a linear grid ``min:max:steps``. Swept keys become
leading output columns; rows are the Cartesian product with the first listed key
varying slowest.
"""
from __future__ import annotations

import argparse
import ast
import csv
import io
import math
import operator
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import abstract_model as am
from . import ideal_spin as ideal
from . import scattering as sc
from . import verification
from . import zeno_scattering as zs
from .linalg import SingularMatrix

COMMANDS = (
    "ideal", "abstract", "scatter", "zeno-scatter",
    "fig5a", "fig5b", "fig6", "verify-appendix", "verify-all",
)
FORMATS = {"csv": ",", "tsv": "\t"}
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3

INT_KEYS = {"N", "n", "offset", "workers"}
TEXT_KEYS = {"units", "projector", "scheme", "regime"}
TEXT_CHOICES = {
    "units": ("dimensionless", "physical"),
    "projector": ("none", "E1", "E2"),
    "scheme": ("sensitive", "insensitive"),
    "regime": ("limit", "finite"),
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key or line."""


class NumericalFailure(RuntimeError):
    pass


# -- value parsing ------------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_NAMES = {"pi": math.pi, "e": math.e, "tau": math.tau, "inf": math.inf}
_FUNCS = {"sqrt": math.sqrt, "exp": math.exp, "log": math.log,
          "sin": math.sin, "cos": math.cos}


def parse_number(text: str) -> float:
    """Evaluate an arithmetic expression over numbers, ``pi``, ``e`` and a few functions."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError(f"unsupported expression {text!r}")

    try:
        return float(ev(ast.parse(text.strip(), mode="eval")))
    except (SyntaxError, ZeroDivisionError, OverflowError, ValueError) as exc:
        raise ValueError(f"cannot parse number {text!r}: {exc}") from None


def _fmt_float(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class Grid:
    lo: float
    hi: float
    steps: int

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)

    def __str__(self) -> str:
        return f"{format_value(self.lo)}:{format_value(self.hi)}:{self.steps}"


def _parse_scalar(key: str, text: str):
    if key in TEXT_KEYS:
        if text not in TEXT_CHOICES[key]:
            raise ValueError(f"expected one of {', '.join(TEXT_CHOICES[key])}")
        return text
    if key == "gamma" and text == "auto":
        return text
    x = parse_number(text)
    if key in INT_KEYS:
        if key == "N" and math.isinf(x):
            return "inf"
        if x != int(x):
            raise ValueError(f"{x} is not an integer")
        return int(x)
    return x


def parse_value(key: str, text: str):
    """Scalar, tuple (comma list) or :class:`Grid`."""
    text = text.strip()
    if not text:
        raise ConfigError(f"{key}: empty value")
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError("grid must be min:max:steps")
            steps = parse_number(parts[2])
            if steps != int(steps) or steps < 2:
                raise ValueError("grid needs an integer steps >= 2")
            grid = Grid(parse_number(parts[0]), parse_number(parts[1]), int(steps))
            if key in TEXT_KEYS:
                raise ValueError("text key cannot be swept")
            if key in INT_KEYS:
                if np.any(grid.values() != np.round(grid.values())):
                    raise ValueError("integer key needs a grid of whole numbers")
                grid = Grid(int(grid.lo), int(grid.hi), grid.steps)
            return grid
        if "," in text:
            return tuple(_parse_scalar(key, t.strip()) for t in text.split(","))
        return _parse_scalar(key, text)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def format_value(value) -> str:
    if isinstance(value, Grid):
        return str(value)
    if isinstance(value, tuple):
        return ",".join(format_value(v) for v in value)
    if isinstance(value, float):
        return _fmt_float(value)
    return str(value)


def _axis(key: str, value) -> list:
    if isinstance(value, Grid):
        vals = value.values()
        return [int(round(v)) for v in vals] if key in INT_KEYS else [float(v) for v in vals]
    if isinstance(value, tuple):
        return list(value)
    return [value]


# -- command tables -----------------------------------------------------------

_SCATTER_DIMENSIONLESS = {"ka": "1", "kb": "0", "zeta": "0:1.2:100", "N": "1"}
_SCATTER_PHYSICAL = {"k": "1", "m": "1", "muB": "0.3", "a": "1", "b": "0", "N": "1"}

DEFAULTS: dict[str, dict[str, str]] = {
    "ideal": {"omega": "pi", "T": "1", "N": "1,2,4,8,16,32,64,128,256,512,1024"},
    "abstract": {"g": "1", "alpha": "-0.5", "beta": "-1", "gamma": "auto", "T": "0:pi:51",
                 "projector": "none", "N": "inf"},
    "scatter": {"units": "dimensionless", **_SCATTER_DIMENSIONLESS},
    "zeno-scatter": {"units": "dimensionless", "scheme": "sensitive", "regime": "limit",
                     "ka": "0.1", "kb": "0", "zeta": "0:1.2:50", "N": "100"},
    "fig5a": {"kD": "0:30:200", "zeta": "0:1.2:200"},
    "fig5b": {"B1": "0:10:200", "kD": "0.15:30:200"},
    "fig6": {"n": "1:20:20", "offset": "9"},
    "verify-appendix": {"ka": "pi/20:pi:20", "zeta": "0:0.45:20", "tol": "1e-10"},
    "verify-all": {},
}
COMMON_DEFAULTS = {"workers": "1"}


def _allowed_keys(command: str, units: str) -> dict[str, str]:
    base = dict(DEFAULTS[command])
    if units == "physical" and "units" in base:
        for key in _SCATTER_DIMENSIONLESS:
            base.pop(key, None)
        base.update(_SCATTER_PHYSICAL)
        base["units"] = "physical"
    base.update(COMMON_DEFAULTS)
    return base


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    format: str = "csv"
    output_path: str | None = None

    def to_text(self) -> str:
        lines = [f"command = {self.command}", f"format = {self.format}"]
        if self.output_path is not None:
            lines.append(f"out = {self.output_path}")
        lines += [f"{k} = {format_value(v)}" for k, v in self.params.items()]
        return "\n".join(lines) + "\n"

    def header_line(self) -> str:
        items = [f"command={self.command}", f"format={self.format}"]
        items += [f"{k}={format_value(v)}" for k, v in self.params.items()]
        return "# " + " ".join(items)

    def swept_keys(self) -> list[str]:
        return [k for k, v in self.params.items() if not np.isscalar(v) and k != "workers"]


def parse_assignments(lines, source: str = "<config>") -> dict[str, tuple[str, str]]:
    """``key = value`` lines to ``{key: (value, location)}``; ``#`` starts a comment."""
    out = {}
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{no}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{no}: missing key")
        out[key] = (value, f"{source}:{no}")
    return out


def resolve_config(command: str | None, assignments: dict[str, tuple[str, str]],
                   fmt: str | None = None, out: str | None = None) -> RunConfig:
    """Merge defaults with raw assignments and validate every key."""
    assignments = dict(assignments)
    given_cmd = assignments.pop("command", (None, ""))
    if command is None:
        command = given_cmd[0]
    elif given_cmd[0] is not None and given_cmd[0] != command:
        raise ConfigError(f"{given_cmd[1]}: command {given_cmd[0]!r} conflicts with {command!r}")
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    file_fmt = assignments.pop("format", (None, ""))
    fmt = fmt or file_fmt[0] or "csv"
    if fmt not in FORMATS:
        raise ConfigError(f"format: expected csv or tsv, got {fmt!r}")
    file_out = assignments.pop("out", (None, ""))
    out = out or file_out[0]

    units = assignments.get("units", (DEFAULTS[command].get("units", "dimensionless"), ""))[0]
    if units not in TEXT_CHOICES["units"]:
        raise ConfigError(f"{assignments['units'][1]}: units: expected dimensionless or physical")
    allowed = _allowed_keys(command, units)
    params = {}
    for key, default in allowed.items():
        text, where = assignments.pop(key, (default, "default"))
        try:
            params[key] = parse_value(key, text)
        except ConfigError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    if assignments:
        key, (_, where) = next(iter(assignments.items()))
        raise ConfigError(f"{where}: unknown key {key!r} for {command} (allowed: {', '.join(allowed)})")
    if not (isinstance(params["workers"], int) and params["workers"] >= 1):
        raise ConfigError("workers: must be a single integer >= 1")
    return RunConfig(command, params, fmt, out)


def config_from_text(text: str, source: str = "<config>") -> RunConfig:
    return resolve_config(None, parse_assignments(text.splitlines(), source))


# -- evaluation ---------------------------------------------------------------

@dataclass
class SweepResult:
    header: tuple
    rows: list
    failures: int = 0


def _points(cfg: RunConfig) -> tuple[list[str], list[dict]]:
    keys = [k for k in cfg.params if k != "workers"]
    axes = [_axis(k, cfg.params[k]) for k in keys]
    return keys, [dict(zip(keys, combo)) for combo in product(*axes)]


def _scatter_params(pt: dict, needs_channels: bool = True) -> sc.ScatterParams:
    if pt.get("units") == "physical":
        p = sc.ScatterParams(k=pt["k"], m=pt["m"], muB=pt["muB"], a=pt["a"], b=pt["b"], N=pt["N"])
    else:
        if not pt["zeta"] >= 0:
            raise ValueError("zeta must be >= 0")
        p = sc.ScatterParams.from_dimensionless(pt["ka"], pt["kb"], pt["zeta"], pt["N"])
    if needs_channels:
        p.eta(1)  # rejects the degenerate zeta = 1/2
    return p


def _build(command: str, pt: dict):
    """Module parameter object for one grid point; raises ValueError on bad input."""
    if command == "ideal":
        return ideal.IdealParams(pt["omega"], pt["T"], pt["N"])
    if command == "abstract":
        gamma = None if pt["gamma"] == "auto" else pt["gamma"]
        p = am.AbstractParams(pt["g"], pt["alpha"], pt["beta"], pt["T"], gamma)
        n = pt["N"]
        if n != "inf" and n < 1:
            raise ValueError("N must be >= 1 or inf")
        if pt["projector"] == "E1" and n == "inf" and not p.factorized:
            raise ValueError("E1 limit needs gamma = alpha*beta")
        return p, pt["projector"], n
    if command in ("scatter", "zeno-scatter"):
        limit = pt.get("regime") == "limit"
        return _scatter_params(pt, not limit), pt.get("scheme"), pt.get("regime")
    if command == "fig5a":
        if pt["kD"] < 0 or pt["zeta"] < 0:
            raise ValueError("kD and zeta must be >= 0")
        return pt["kD"], pt["zeta"]
    if command == "fig5b":
        if pt["kD"] <= 0 or pt["B1"] < 0:
            raise ValueError("need kD > 0 and B1 >= 0")
        return pt["B1"], pt["kD"]
    if command == "fig6":
        if pt["n"] < 1 or pt["offset"] < 1 or pt["offset"] % 2 == 0:
            raise ValueError("need n >= 1 and a positive odd offset")
        return pt["n"], pt["offset"]
    if command == "verify-appendix":
        return sc.ScatterParams.from_dimensionless(pt["ka"], 0.0, pt["zeta"]), pt["tol"]
    raise ConfigError(f"no sweep for {command}")


def _evaluate(task) -> tuple:
    command, obj = task
    if command == "ideal":
        return (ideal.survival_after_N(obj),)
    if command == "abstract":
        p, proj, n = obj
        if proj == "none":
            u = am.propagator(p)
        elif n == "inf":
            u = am.zeno_limit_E1(p) if proj == "E1" else am.zeno_limit_E2(p)
        else:
            u = am.zeno_chain_finite(p, am.ProjectorKind(proj), n)
        amps = np.abs(am.amplitudes_from_propagator(u).as_array()) ** 2
        return (*amps, amps.sum())
    if command == "scatter":
        amps = sc.solve_no_measurement(obj[0])
        return (*(np.abs(amps.as_array()) ** 2), amps.flux)
    if command == "zeno-scatter":
        p, scheme, regime = obj
        reg = zs.Regime.CONTINUOUS_LIMIT if regime == "limit" else zs.Regime.FINITE_N
        fn = zs.sensitive_chain if scheme == "sensitive" else zs.insensitive_chain
        res = fn(p, reg)
        a = res.amplitudes
        return abs(a.t_up) ** 2, abs(a.r_up) ** 2, abs(a.r_down) ** 2, res.survival
    if command == "fig6":
        n, offset = obj
        return zs.zeno_vs_no_measurement_report([n], offset)[0][1:]
    if command == "verify-appendix":
        p, _ = obj
        return verification.appendix_rows([p.ka], [p.zeta])[0][2:]
    raise ConfigError(f"no evaluator for {command}")


OUTPUT_COLUMNS = {
    "ideal": ("survival",),
    "abstract": ("P_R_up", "P_R_down", "P_L_up", "P_L_down", "total"),
    "scatter": ("T_up", "T_down", "R_up", "R_down", "flux"),
    "zeno-scatter": ("T_up", "R_up", "R_down", "survival"),
    "fig5a": ("T_up",),
    "fig5b": ("T_up",),
    "fig6": ("T_down_free", "T_up_insensitive", "T_up_sensitive"),
    "verify-appendix": ("generator_dev", "hadamard_dev", "modulus_dev"),
}
FIXED_AXES = {"fig5a": ("kD", "zeta"), "fig5b": ("B1", "kD"), "fig6": ("n",)}


def _sensitive_surface(objs: list[tuple[float, float]]) -> list[tuple]:
    # group by zeta so each Z2 is decomposed once
    by_zeta: dict[float, list[int]] = {}
    for i, (_, zeta) in enumerate(objs):
        by_zeta.setdefault(zeta, []).append(i)
    out = [None] * len(objs)
    for zeta, idx in by_zeta.items():
        amps = zs.sensitive_limit_scan([objs[i][0] for i in idx], zeta)
        for i, a in zip(idx, amps):
            out[i] = (abs(a.t_up) ** 2,)
    return out


def run(cfg: RunConfig) -> SweepResult:
    """Validate every grid point, evaluate in grid order, and check finiteness."""
    if cfg.command == "verify-all":
        checks = verification.run_all()
        rows = [(c.name, c.measured, c.tolerance, int(c.passed)) for c in checks]
        return SweepResult(("check", "measured", "tolerance", "passed"), rows,
                           sum(not c.passed for c in checks))

    keys, points = _points(cfg)
    try:
        objs = [_build(cfg.command, pt) for pt in points]
    except ValueError as exc:
        raise ConfigError(f"{cfg.command}: {exc}") from None

    axes = list(FIXED_AXES.get(cfg.command, ()))
    axes += [k for k in cfg.swept_keys() if k not in axes]
    header = (*axes, *OUTPUT_COLUMNS[cfg.command])

    try:
        if cfg.command == "fig5a":
            values = _sensitive_surface(objs)
        elif cfg.command == "fig5b":
            values = _sensitive_surface([(kd, (b1 / kd) ** 2) for b1, kd in objs])
        else:
            tasks = [(cfg.command, o) for o in objs]
            workers = cfg.params["workers"]
            if workers > 1 and len(tasks) > 1:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    values = list(pool.map(_evaluate, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
            else:
                values = [_evaluate(t) for t in tasks]
    except (SingularMatrix, ArithmeticError) as exc:
        raise NumericalFailure(str(exc)) from None

    rows = []
    for pt, vals in zip(points, values):
        vals = tuple(float(v) for v in vals)
        if not all(math.isfinite(v) for v in vals):
            raise NumericalFailure(f"non-finite result at {pt}")
        rows.append((*(pt[k] for k in axes), *vals))

    failures = 0
    if cfg.command == "verify-appendix":
        tol = cfg.params["tol"]
        failures = sum(max(r[-3:]) > tol for r in rows)
    return SweepResult(header, rows, failures)


# -- output -------------------------------------------------------------------

def _cell(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def render(cfg: RunConfig, result: SweepResult) -> str:
    buf = io.StringIO()
    buf.write(cfg.header_line() + "\n")
    writer = csv.writer(buf, delimiter=FORMATS[cfg.format], lineterminator="\n")
    writer.writerow(result.header)
    for row in result.rows:
        writer.writerow([_cell(x) for x in row])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="neutron-zeno", description="Zeno-effect scattering sweeps.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="file of key=value lines")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--out", help="output file (default: stdout)")
    ap.add_argument("--format", choices=tuple(FORMATS))
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        assignments = {}
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    lines = fh.read().splitlines()
            except OSError as exc:
                print(f"error: cannot read config: {exc}", file=sys.stderr)
                return EXIT_IO
            assignments.update(parse_assignments(lines, args.config))
        assignments.update(parse_assignments(args.overrides, "--set"))
        cfg = resolve_config(args.command, assignments, args.format, args.out)
        result = run(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    text = render(cfg, result)
    if cfg.output_path:
        try:
            with open(cfg.output_path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: cannot write output: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stdout.write(text)

    if cfg.command.startswith("verify"):
        total = len(result.rows)
        print(f"{total - result.failures} passed, {result.failures} failed", file=sys.stderr)
    return EXIT_NUMERICAL if result.failures else EXIT_OK

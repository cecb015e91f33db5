"""Run configuration: ``key = value`` lines grouped under ``[section]`` headers.

Example::

    [coefficients]
    d1 = 1
    d2 = 1
    a11 = 1
    a12 = 1
    a21 = 1
    a22 = 1
    b1 = 1
    b2 = 0.5
    c1 = 0.5
    c2 = 1
    a1 = 1
    a2 = 1

    [grid]
    dim = 1
    nx = 64          # hx defaults to 1/nx
    bc = neumann

    [scheme]
    k = 0.01         # solver, M, tolerances and max_iters have defaults

    [run]
    T = 1
    output = out
    seed = 0

    [initial]
    kind = random    # constant (u, v) | random (amplitude) | snapshot (u_path, v_path)
    amplitude = 2
"""
from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass, fields

from .coefficients import COEFFICIENT_NAMES, Coefficients
from .errors import ValidationError
from .grid import Grid, format_float
from .stepper import SchemeConfig

_DECIMAL = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")
_INTEGER = re.compile(r"[+-]?\d+")

SCHEME_DEFAULTS = {
    "M": 1.0e6,
    "solver": "picard",
    "nonlinear_tol": 1.0e-10,
    "max_iters": 100,
    "positivity_tol": 1.0e-10,
}

_KEYS = {
    "coefficients": set(COEFFICIENT_NAMES),
    "grid": {"dim", "nx", "ny", "hx", "hy", "bc"},
    "scheme": {"k", "M", "solver", "nonlinear_tol", "max_iters", "linear_tol", "positivity_tol"},
    "run": {"T", "output", "seed"},
    "initial": {"kind", "u", "v", "amplitude", "u_path", "v_path"},
}
_REQUIRED = {
    "coefficients": set(COEFFICIENT_NAMES),
    "grid": {"dim", "nx"},
    "scheme": {"k"},
    "run": {"T"},
    "initial": {"kind"},
}
_INITIAL_KEYS = {"constant": {"u", "v"}, "random": {"amplitude"}, "snapshot": {"u_path", "v_path"}}


class ConfigParseError(ValueError):
    def __init__(self, message, lineno=None):
        super().__init__(f"line {lineno}: {message}" if lineno else message)
        self.lineno = lineno


@dataclass(frozen=True)
class InitialSpec:
    kind: str
    u: float | None = None
    v: float | None = None
    amplitude: float | None = None
    u_path: str | None = None
    v_path: str | None = None


@dataclass(frozen=True)
class RunConfig:
    coefficients: Coefficients
    grid: Grid
    scheme: SchemeConfig
    initial: InitialSpec
    T: float
    output: str = "output"
    seed: int = 0


def _number(section, key, text):
    if not _DECIMAL.fullmatch(text):
        raise ValidationError(f"{section}.{key}: expected a decimal number, got {text!r}")
    return float(text)


def _integer(section, key, text):
    if not _INTEGER.fullmatch(text):
        raise ValidationError(f"{section}.{key}: expected an integer, got {text!r}")
    return int(text)


def _read(text):
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",), default_section="\0")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigParseError("expected a [section] header", exc.lineno) from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigParseError(exc.message.split(": ", 1)[-1], exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigParseError(f"cannot parse {line.strip()!r}", lineno) from None
    return parser


def parse_config(text: str, base_dir: str = ".") -> RunConfig:
    """Parse and validate a run configuration.

    Snapshot paths are resolved against ``base_dir`` and must exist.
    """
    parser = _read(text)
    data = {}
    for section in parser.sections():
        if section not in _KEYS:
            raise ValidationError(f"[{section}]: unknown section")
        items = dict(parser.items(section))
        unknown = set(items) - _KEYS[section]
        if unknown:
            raise ValidationError(f"{section}.{sorted(unknown)[0]}: unknown key")
        data[section] = items
    for section, required in _REQUIRED.items():
        if section not in data:
            raise ValidationError(f"[{section}]: missing section")
        missing = required - set(data[section])
        if missing:
            raise ValidationError(f"{section}.{sorted(missing)[0]}: required key missing")

    def wrap(section, build):
        try:
            return build()
        except ValidationError as exc:
            msg = str(exc)
            raise ValidationError(msg if msg.startswith(section + ".") else f"{section}.{msg}") from None

    co = data["coefficients"]
    coefficients = wrap("coefficients", lambda: Coefficients(
        **{name: _number("coefficients", name, co[name]) for name in COEFFICIENT_NAMES}))

    gr = data["grid"]
    dim = _integer("grid", "dim", gr["dim"])
    nx = _integer("grid", "nx", gr["nx"])
    if dim == 2 and "ny" not in gr:
        raise ValidationError("grid.ny: required key missing for dim = 2")
    ny = _integer("grid", "ny", gr["ny"]) if "ny" in gr else 1
    hx = _number("grid", "hx", gr["hx"]) if "hx" in gr else (1.0 / nx if nx > 0 else 0.0)
    default_hy = 1.0 if dim == 1 else (1.0 / ny if ny > 0 else 0.0)
    hy = _number("grid", "hy", gr["hy"]) if "hy" in gr else default_hy
    grid = wrap("grid", lambda: Grid(dim, nx, ny, hx, hy, gr.get("bc", "neumann")))

    sc = data["scheme"]
    kw = dict(SCHEME_DEFAULTS)
    for key, text in sc.items():
        if key == "solver":
            kw[key] = text
        elif key == "max_iters":
            kw[key] = _integer("scheme", key, text)
        else:
            kw[key] = _number("scheme", key, text)
    scheme = wrap("scheme", lambda: SchemeConfig(**kw))

    rn = data["run"]
    T = _number("run", "T", rn["T"])
    if not T >= scheme.k:
        raise ValidationError("run.T: must be >= scheme.k")
    seed = _integer("run", "seed", rn["seed"]) if "seed" in rn else 0
    output = rn.get("output", "output")

    ini = data["initial"]
    kind = ini["kind"]
    if kind not in _INITIAL_KEYS:
        raise ValidationError(f"initial.kind: must be constant, random or snapshot, got {kind!r}")
    extra = set(ini) - {"kind"} - _INITIAL_KEYS[kind]
    if extra:
        raise ValidationError(f"initial.{sorted(extra)[0]}: not used by kind = {kind}")
    missing = _INITIAL_KEYS[kind] - set(ini)
    if missing:
        raise ValidationError(f"initial.{sorted(missing)[0]}: required for kind = {kind}")
    if kind == "constant":
        u, v = _number("initial", "u", ini["u"]), _number("initial", "v", ini["v"])
        for key, val in (("u", u), ("v", v)):
            if val < 0:
                raise ValidationError(f"initial.{key}: must be >= 0")
        initial = InitialSpec(kind, u=u, v=v)
    elif kind == "random":
        amplitude = _number("initial", "amplitude", ini["amplitude"])
        if amplitude < 0:
            raise ValidationError("initial.amplitude: must be >= 0")
        initial = InitialSpec(kind, amplitude=amplitude)
    else:
        for key in ("u_path", "v_path"):
            path = os.path.join(base_dir, ini[key])
            if not os.path.isfile(path):
                raise ValidationError(f"initial.{key}: file not found: {ini[key]}")
        initial = InitialSpec(kind, u_path=ini["u_path"], v_path=ini["v_path"])
    return RunConfig(coefficients, grid, scheme, initial, T, output, seed)


def _fmt(value):
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def serialize(cfg: RunConfig) -> str:
    """Inverse of ``parse_config``; every key written explicitly."""
    lines = ["[coefficients]"]
    lines += [f"{name} = {_fmt(getattr(cfg.coefficients, name))}" for name in COEFFICIENT_NAMES]
    g = cfg.grid
    lines += ["", "[grid]", f"dim = {g.dim}", f"nx = {g.nx}", f"ny = {g.ny}",
              f"hx = {_fmt(g.hx)}", f"hy = {_fmt(g.hy)}", f"bc = {g.bc}"]
    s = cfg.scheme
    lines += ["", "[scheme]"]
    lines += [f"{f.name} = {_fmt(getattr(s, f.name))}" for f in fields(s)
              if f.name in _KEYS["scheme"]]
    lines += ["", "[run]", f"T = {_fmt(cfg.T)}", f"output = {cfg.output}", f"seed = {cfg.seed}"]
    lines += ["", "[initial]", f"kind = {cfg.initial.kind}"]
    for key in sorted(_INITIAL_KEYS[cfg.initial.kind]):
        lines.append(f"{key} = {_fmt(getattr(cfg.initial, key))}")
    return "\n".join(lines) + "\n"


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, os.path.dirname(os.path.abspath(path)))

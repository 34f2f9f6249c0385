"""Flat ``key = value`` configuration files.

Grammar: one ``key = value`` per line, ``#`` starts a comment, blank lines
are ignored, keys may appear once.  Lists use commas; pairs use ``a:b``::

    grid_n = 32                 # or 64,64,8
    init = taylor_green(1.0)    # shear(A), random_divfree(band=1:4, amplitude=1), zero, file(path)
    criteria.logE_list = 1, 10
    criteria.p_alpha_list = 2:0.25, 4:0
"""
from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass

from .criteria import CriteriaConfig, ParameterError, validate_params
from .solver import SolverConfig
from .spectral import make_grid


class ConfigError(ValueError):
    def __init__(self, key: str | None, message: str):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


SOLVER_KEYS = ("grid_n", "box_length", "viscosity", "dt", "t_end", "init", "seed", "output_stride", "cfl_safety")
CRITERIA_KEYS = ("criteria.logE_list", "criteria.p_alpha_list", "criteria.m_beta_list", "criteria.qp_list",
                 "criteria.c_gronwall")
KNOWN_KEYS = SOLVER_KEYS + CRITERIA_KEYS

_LINE = re.compile(r"^\s*([A-Za-z_][\w.]*)\s*=\s*(.*?)\s*$")
_CALL = re.compile(r"^([a-z_]+)\s*(?:\((.*)\))?$")


@dataclass(frozen=True)
class RawConfig:
    values: dict
    text: str

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()

    def normalized(self) -> dict:
        return dict(sorted(self.values.items()))


def parse_text(text: str) -> RawConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise ConfigError(None, f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = m.group(1), m.group(2)
        if key not in KNOWN_KEYS:
            raise ConfigError(key, f"unknown key (line {lineno}); known keys: {', '.join(KNOWN_KEYS)}")
        if key in values:
            raise ConfigError(key, f"duplicate key (line {lineno})")
        if value == "":
            raise ConfigError(key, f"empty value (line {lineno})")
        values[key] = value
    return RawConfig(values, text)


def load(path) -> RawConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(None, f"cannot read config {path}: {exc.strerror}") from None
    return parse_text(text)


def _number(key: str, text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        v = float(t)
    except ValueError:
        raise ConfigError(key, f"not a number: {text!r}") from None
    if math.isnan(v):
        raise ConfigError(key, "NaN is not allowed")
    return v


def _integer(key: str, text: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(key, f"not an integer: {text!r}") from None


def _number_list(key: str, text: str) -> list:
    return [_number(key, x) for x in text.split(",") if x.strip()]


def _pair_list(key: str, text: str) -> list:
    out = []
    for item in (x.strip() for x in text.split(",")):
        if not item:
            continue
        a, sep, b = item.partition(":")
        if not sep:
            raise ConfigError(key, f"expected 'a:b' pairs, got {item!r}")
        out.append((_number(key, a), _number(key, b)))
    if not out:
        raise ConfigError(key, "empty list")
    return out


def parse_init(text: str, key: str = "init") -> tuple[str, dict]:
    """``taylor_green(1.0)`` -> ("taylor_green", {"amplitude": 1.0})."""
    m = _CALL.match(text.strip())
    if not m:
        raise ConfigError(key, f"cannot parse initial-data selector {text!r}")
    name, args = m.group(1), (m.group(2) or "").strip()
    if name == "file":
        if not args:
            raise ConfigError(key, "file(path) needs a path")
        return "file", {"path": args}
    if name == "zero":
        if args:
            raise ConfigError(key, "zero takes no arguments")
        return "zero", {}
    if name not in ("taylor_green", "shear", "random_divfree"):
        raise ConfigError(key, f"unknown selector {name!r}; expected taylor_green, shear, random_divfree, zero or file")
    out = {}
    for pos, item in enumerate(x.strip() for x in args.split(",") if x.strip()):
        k, sep, v = item.partition("=")
        if not sep:
            k, v = "amplitude", item
            if pos != 0:
                raise ConfigError(key, f"positional argument {item!r} must come first")
        k = k.strip()
        if k == "amplitude":
            out["amplitude"] = _number(key, v)
            if not math.isfinite(out["amplitude"]):
                raise ConfigError(key, "amplitude must be finite")
        elif k == "band" and name == "random_divfree":
            lo, sep2, hi = v.partition(":")
            if not sep2:
                raise ConfigError(key, f"band must be lo:hi, got {v!r}")
            out["band"] = (_integer(key, lo), _integer(key, hi))
        else:
            raise ConfigError(key, f"unexpected argument {k!r} for {name}")
    return name, out


def _grid(key: str, text: str, box_length: float):
    parts = [x for x in text.split(",") if x.strip()]
    if len(parts) not in (1, 3):
        raise ConfigError(key, f"expected one or three sizes, got {text!r}")
    n = [_integer(key, x) for x in parts]
    try:
        return make_grid(n[0] if len(n) == 1 else tuple(n), box_length)
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from None


def solver_config(raw: RawConfig) -> SolverConfig:
    v = raw.values
    if "grid_n" not in v:
        raise ConfigError("grid_n", "required key missing")
    box = _number("box_length", v.get("box_length", "1"))
    grid = _grid("grid_n", v["grid_n"], box)
    init, init_args = parse_init(v.get("init", "taylor_green(1)"))
    kw = {
        "grid": grid,
        "viscosity": _number("viscosity", v.get("viscosity", "1")),
        "dt": _number("dt", v.get("dt", "0.01")),
        "t_end": _number("t_end", v.get("t_end", "1")),
        "output_stride": _integer("output_stride", v.get("output_stride", "1")),
        "cfl_safety": _number("cfl_safety", v.get("cfl_safety", "1")),
        "init": init,
        "init_args": init_args,
        "seed": _integer("seed", v.get("seed", "0")),
    }
    try:
        return SolverConfig(**kw)
    except ValueError as exc:
        msg = str(exc)
        key = next((k for k in SOLVER_KEYS if msg.startswith(k)), None)
        raise ConfigError(key, msg) from None


def criteria_config(raw: RawConfig) -> CriteriaConfig:
    v = raw.values
    cfg = CriteriaConfig()
    if "criteria.logE_list" in v:
        cfg.log_E = _number_list("criteria.logE_list", v["criteria.logE_list"])
    if "criteria.p_alpha_list" in v:
        cfg.p_alpha = _pair_list("criteria.p_alpha_list", v["criteria.p_alpha_list"])
    if "criteria.m_beta_list" in v:
        cfg.m_beta = _pair_list("criteria.m_beta_list", v["criteria.m_beta_list"])
    if "criteria.qp_list" in v:
        cfg.qp = _pair_list("criteria.qp_list", v["criteria.qp_list"])
    if "criteria.c_gronwall" in v:
        text = v["criteria.c_gronwall"].strip()
        cfg.c_gronwall = "fit" if text == "fit" else _number("criteria.c_gronwall", text)
    checks = (("criteria.logE_list", lambda: [validate_params("log_half", {"E": e}) for e in cfg.log_E]),
              ("criteria.p_alpha_list",
               lambda: [validate_params("aniso_besov", {"p": p, "alpha": a}) for p, a in cfg.p_alpha]),
              ("criteria.m_beta_list",
               lambda: [validate_params("aniso_besov", {"p": m, "alpha": b}) for m, b in cfg.m_beta or []]),
              ("criteria.qp_list", lambda: [validate_params("neg_besov", {"q": q, "p": p}) for q, p in cfg.qp]),
              ("criteria.c_gronwall", cfg.normalized))
    for key, check in checks:
        try:
            check()
        except ParameterError as exc:
            raise ConfigError(key, str(exc)) from None
    return cfg

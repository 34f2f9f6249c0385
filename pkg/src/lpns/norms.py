"""Homogeneous Sobolev, Besov and log-weighted norms on the periodic box.

All norms are homogeneous: the k = 0 mode never contributes.  Besov norms
sum only over active block indices of the filter bank; content that sits in
no block (zero frequency in the block direction) is ignored.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dyadic import DyadicFilterBank, build_bank
from .spectral import ScalarField, ifft3, lebesgue_norm_samples, mixed_norm_samples

_CHUNK = 16


class DegenerateModesWarning(UserWarning):
    """Negative anisotropic exponents forced nonzero modes to be dropped."""

    def __init__(self, message: str, mass_fraction: float):
        super().__init__(message)
        self.mass_fraction = mass_fraction


def sequence_norm(values, r: float) -> float:
    """l^r norm of a finite sequence; the empty sequence has norm 0."""
    v = np.abs(np.asarray(list(values), dtype=float))
    if v.size == 0:
        return 0.0
    if np.isinf(r):
        return float(v.max())
    return float(np.sum(v**r) ** (1.0 / r))


def _check_r(r):
    if not (r == np.inf or (np.isfinite(r) and r >= 1)):
        raise ValueError(f"summation index must lie in [1, inf], got {r!r}")


def sobolev(f: ScalarField, s: float) -> float:
    g = f.grid
    k = g.k_abs
    nz = k > 0
    w = np.zeros(g.shape)
    w[nz] = k[nz] ** (2 * s)
    return float(np.sqrt(g.volume * np.sum(w * np.abs(f.coeffs) ** 2)))


def _directional_weight(mag: np.ndarray, expo: float) -> tuple[np.ndarray, np.ndarray]:
    """|xi|^(2 expo) with its drop mask (zero frequency, negative exponent)."""
    with np.errstate(divide="ignore"):
        w = np.where(mag > 0, mag ** (2 * expo), 0.0 if expo > 0 else 1.0)
    drop = (mag == 0) & (expo < 0)
    return np.where(drop, 0.0, w), drop


def aniso_sobolev(f: ScalarField, t_h: float, s_v: float) -> float:
    """(int |xi_h|^{2t} |xi_v|^{2s} |f^|^2)^{1/2}.

    Zero-frequency planes get weight 0 for a positive exponent and 1 for a
    zero exponent.  For a negative exponent they are dropped; if that drops
    nonzero coefficients a :class:`DegenerateModesWarning` is issued.
    """
    g = f.grid
    wh, dh = _directional_weight(g.kh_abs, t_h)
    wv, dv = _directional_weight(g.kv_abs, s_v)
    w = wh * wv
    power = np.abs(f.coeffs) ** 2
    power_nz = power.copy()
    power_nz[0, 0, 0] = 0.0
    drop = np.broadcast_to(dh | dv, g.shape)
    dropped = float(np.sum(power_nz[drop]))
    if dropped > 0:
        frac = dropped / float(np.sum(power_nz))
        warnings.warn(DegenerateModesWarning(
            f"degenerate-modes-dropped: mass fraction {frac:.3e} on zero-frequency planes", frac), stacklevel=2)
    w = np.broadcast_to(w, g.shape).copy()
    w[0, 0, 0] = 0.0
    return float(np.sqrt(g.volume * np.sum(w * power)))


def _block_stack_norms(f: ScalarField, multipliers: list, norm) -> list[float]:
    """Apply each multiplier, transform in chunks and evaluate ``norm``."""
    out = [0.0] * len(multipliers)
    todo = []
    for i, m in enumerate(multipliers):
        c = f.coeffs * m
        if np.any(c):
            todo.append((i, c))
    for start in range(0, len(todo), _CHUNK):
        chunk = todo[start:start + _CHUNK]
        phys = ifft3(np.stack([c for _, c in chunk])).real
        for (i, _), samples in zip(chunk, phys):
            out[i] = norm(samples)
    return out


def block_norms(f: ScalarField, kind: str, p: float, bank: DyadicFilterBank | None = None) -> dict[int, float]:
    """{j: ||Delta_j f||_{L^p}} over the active indices of ``kind``."""
    b = build_bank(f.grid) if bank is None else bank
    idx = list(b.indices(kind))
    mults = [b.multiplier(kind, j) for j in idx]
    g = f.grid
    if p == 2:
        vals = [float(np.sqrt(g.volume * np.sum(np.abs(f.coeffs * m) ** 2))) for m in mults]
    else:
        vals = _block_stack_norms(f, mults, lambda x: lebesgue_norm_samples(g, x, p))
    return dict(zip(idx, vals))


def pair_norms(f: ScalarField, p1: float, p2: float, bank: DyadicFilterBank | None = None) -> dict:
    """{(k, q): ||Delta^h_k Delta^v_q f||_{L^{p1}_h L^{p2}_v}}."""
    b = build_bank(f.grid) if bank is None else bank
    keys = [(k, q) for k in b.indices("h") for q in b.indices("v")]
    mults = [b.multiplier("h", k) * b.multiplier("v", q) for k, q in keys]
    g = f.grid
    if p1 == 2 and p2 == 2:
        vals = [float(np.sqrt(g.volume * np.sum(np.abs(f.coeffs * m) ** 2))) for m in mults]
    else:
        vals = _block_stack_norms(f, mults, lambda x: mixed_norm_samples(g, x, "h", p1, p2))
    return dict(zip(keys, vals))


def besov(f: ScalarField, s: float, p: float, r: float, bank: DyadicFilterBank | None = None) -> float:
    _check_r(r)
    norms = block_norms(f, "iso", p, bank)
    return sequence_norm((2.0 ** (j * s) * v for j, v in norms.items()), r)


def besov_attaining_index(f: ScalarField, s: float, p: float, bank: DyadicFilterBank | None = None) -> int | None:
    """Index where the r = inf Besov supremum is attained (None for f = 0)."""
    norms = block_norms(f, "iso", p, bank)
    weighted = {j: 2.0 ** (j * s) * v for j, v in norms.items()}
    best = max(weighted, key=weighted.get)
    return best if weighted[best] > 0 else None


def aniso_besov(f: ScalarField, t_h: float, s_v: float, p1: float = 2, r1: float = np.inf,
                p2: float | None = None, r2: float | None = None,
                bank: DyadicFilterBank | None = None) -> float:
    """Norm of (B^{t_h}_{p1,r1})_h (B^{s_v}_{p2,r2})_v.

    Outer l^{r1} over the horizontal index, inner l^{r2} over the vertical
    index of 2^{k t_h} 2^{q s_v} ||Delta^h_k Delta^v_q f||_{L^{p1}_h L^{p2}_v}.
    ``p2``/``r2`` default to ``p1``/``r1``.
    """
    p2 = p1 if p2 is None else p2
    r2 = r1 if r2 is None else r2
    _check_r(r1)
    _check_r(r2)
    b = build_bank(f.grid) if bank is None else bank
    norms = pair_norms(f, p1, p2, b)
    rows = []
    for k in b.indices("h"):
        inner = [2.0 ** (k * t_h + q * s_v) * norms[k, q] for q in b.indices("v")]
        rows.append(sequence_norm(inner, r2))
    return sequence_norm(rows, r1)


def _log_direction(f: ScalarField, direction: str) -> np.ndarray:
    g = f.grid
    if direction == "h":
        return np.broadcast_to(g.kh_abs, g.shape)
    if direction == "v":
        return np.broadcast_to(g.kv_abs, g.shape)
    if direction == "min":
        return np.minimum(g.kh_abs, g.kv_abs)
    raise ValueError(f"direction must be 'h', 'v' or 'min', got {direction!r}")


def log_half(f: ScalarField, direction: str, E: float) -> float:
    """H^{1/2} norm with weight log(E w(xi) + e), natural log."""
    if not (np.isfinite(E) and E > 0):
        raise ValueError(f"E must be positive, got {E!r}")
    g = f.grid
    w = g.k_abs * np.log(E * _log_direction(f, direction) + math.e)
    return float(np.sqrt(g.volume * np.sum(w * np.abs(f.coeffs) ** 2)))


def dominant_split(f: ScalarField) -> tuple[ScalarField, ScalarField]:
    """(f_h, f_v): modes with |k_3| <= |k_h| and with |k_h| < |k_3|."""
    g = f.grid
    horiz = np.broadcast_to(g.kv_abs <= g.kh_abs, g.shape)
    return f.with_coeffs(np.where(horiz, f.coeffs, 0)), f.with_coeffs(np.where(horiz, 0, f.coeffs))


# ---------------------------------------------------------------------------
# NormSpec: canonical string syntax
#
#   sobolev:s=0.5
#   anisos:t=1,s=0.5                     aniso_sobolev(t_h=t, s_v=s)
#   besov:s=-0.5,p=3,r=inf
#   anisob:t=0.25,s=0.25,p=2,r=inf       p, r shared by both directions
#   anisob:t=0,s=0,p1=4,r1=2,p2=2,r2=1   separate exponents
#   logh12:dir=v,E=10                    dir in {h, v, min}
# ---------------------------------------------------------------------------

_FAMILIES = {
    "sobolev": ("s",),
    "anisos": ("t", "s"),
    "besov": ("s", "p", "r"),
    "anisob": ("t", "s", "p1", "r1", "p2", "r2"),
    "logh12": ("dir", "E"),
}


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if np.isinf(v):
        return "inf"
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def _num(key: str, text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ValueError(f"parameter {key!r}: not a number: {text!r}") from None
    if np.isnan(v) or v == -np.inf:
        raise ValueError(f"parameter {key!r}: invalid value {text!r}")
    return v


@dataclass(frozen=True)
class NormSpec:
    family: str
    params: tuple

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown norm family {self.family!r}")
        names = tuple(k for k, _ in self.params)
        if names != _FAMILIES[self.family]:
            raise ValueError(f"{self.family} expects parameters {_FAMILIES[self.family]}, got {names}")
        d = dict(self.params)
        for key in ("p", "r", "p1", "r1", "p2", "r2"):
            if key in d and not (d[key] == np.inf or d[key] >= 1):
                raise ValueError(f"parameter {key!r} must lie in [1, inf], got {d[key]!r}")
        if self.family == "logh12":
            if d["dir"] not in ("h", "v", "min"):
                raise ValueError(f"parameter 'dir' must be h, v or min, got {d['dir']!r}")
            if not d["E"] > 0 or np.isinf(d["E"]):
                raise ValueError(f"parameter 'E' must be positive and finite, got {d['E']!r}")

    @classmethod
    def make(cls, family: str, **kw) -> NormSpec:
        order = _FAMILIES.get(family)
        if order is None:
            raise ValueError(f"unknown norm family {family!r}")
        if family == "anisob":
            if "p" in kw:
                kw.setdefault("p1", kw["p"])
                kw.setdefault("p2", kw.pop("p"))
            if "r" in kw:
                kw.setdefault("r1", kw["r"])
                kw.setdefault("r2", kw.pop("r"))
        missing = [k for k in order if k not in kw]
        extra = [k for k in kw if k not in order]
        if missing or extra:
            raise ValueError(f"{family}: missing {missing}, unexpected {extra}")
        vals = tuple((k, kw[k] if k == "dir" else float(kw[k])) for k in order)
        return cls(family, vals)

    @classmethod
    def parse(cls, text: str) -> NormSpec:
        family, sep, rest = text.strip().partition(":")
        if not sep:
            raise ValueError(f"norm spec {text!r} lacks 'family:' prefix")
        kw = {}
        for item in filter(None, (s.strip() for s in rest.split(","))):
            key, eq, val = item.partition("=")
            key = key.strip()
            if not eq:
                raise ValueError(f"norm spec item {item!r} is not key=value")
            if key in kw:
                raise ValueError(f"duplicate parameter {key!r}")
            kw[key] = val.strip() if key == "dir" else _num(key, val.strip())
        return cls.make(family.strip(), **kw)

    def __str__(self) -> str:
        d = dict(self.params)
        if self.family == "anisob" and d["p1"] == d["p2"] and d["r1"] == d["r2"]:
            items = [("t", d["t"]), ("s", d["s"]), ("p", d["p1"]), ("r", d["r1"])]
        else:
            items = list(self.params)
        return f"{self.family}:" + ",".join(f"{k}={_fmt(v)}" for k, v in items)

    def __getitem__(self, key):
        return dict(self.params)[key]

    def evaluate(self, f: ScalarField) -> float:
        d = dict(self.params)
        if self.family == "sobolev":
            return sobolev(f, d["s"])
        if self.family == "anisos":
            return aniso_sobolev(f, d["t"], d["s"])
        if self.family == "besov":
            return besov(f, d["s"], d["p"], d["r"])
        if self.family == "anisob":
            return aniso_besov(f, d["t"], d["s"], d["p1"], d["r1"], d["p2"], d["r2"])
        return log_half(f, d["dir"], d["E"])

"""Littlewood-Paley bump pair and dyadic block operators.

The low-pass bump ``psi`` equals 1 on ``|xi| <= 3/4`` and vanishes for
``|xi| >= 4/3``; ``phi(xi) = psi(xi/2) - psi(xi)`` is supported in the annulus
``3/4 <= |xi| <= 8/3``.  Blocks come in three kinds: ``h`` uses the
horizontal radius |xi_h|, ``v`` uses |xi_3| and ``iso`` the full radius.

On the lattice each kind has a finite set of active indices (those whose
annulus meets a nonzero lattice frequency).  Modes with zero frequency in
the kind's direction belong to no block; they are the "zero content" that
the low-pass operators carry.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .spectral import FourierGrid, ScalarField

KINDS = ("h", "v", "iso")
INNER_RADIUS = 3.0 / 4.0
PSI_EDGE = 4.0 / 3.0
OUTER_RADIUS = 8.0 / 3.0
_CLAMP = 1e-300


class EmptyBlockWarning(UserWarning):
    """A block index outside the active range was requested."""


def _smooth_step(x):
    """C^infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
        out = a / (a + b)
    return np.where(x <= 0, 0.0, np.where(x >= 1, 1.0, out))


def psi(r):
    """Low-pass bump as a function of the radius."""
    r = np.abs(np.asarray(r, dtype=float))
    return 1.0 - _smooth_step((r - INNER_RADIUS) / (PSI_EDGE - INNER_RADIUS))


def phi(r):
    """Annular bump psi(r/2) - psi(r), clamped to exact zero off support."""
    r = np.abs(np.asarray(r, dtype=float))
    out = psi(r / 2) - psi(r)
    return np.where(out < _CLAMP, 0.0, out)


def _radius(grid: FourierGrid, kind: str) -> np.ndarray:
    if kind == "h":
        return grid.kh_abs
    if kind == "v":
        return grid.kv_abs
    if kind == "iso":
        return grid.k_abs
    raise ValueError(f"block kind must be one of {KINDS}, got {kind!r}")


@dataclass(frozen=True, eq=False)
class DyadicFilterBank:
    grid: FourierGrid
    ranges: dict
    multipliers: dict = field(repr=False)
    zero_content: dict = field(repr=False)

    def indices(self, kind: str) -> range:
        lo, hi = self.ranges[kind]
        return range(lo, hi + 1)

    def is_active(self, kind: str, j: int) -> bool:
        lo, hi = self.ranges[kind]
        return lo <= j <= hi

    def multiplier(self, kind: str, j: int) -> np.ndarray:
        """phi(2^-j |xi_kind|) on the lattice (broadcastable array)."""
        if self.is_active(kind, j):
            return self.multipliers[kind][j]
        return np.zeros((1, 1, 1))

    def lowpass_multiplier(self, kind: str, j: int) -> np.ndarray:
        """Zero content plus the exact partial sum of blocks with index < j."""
        out = self.zero_content[kind].astype(float)
        for jj in self.indices(kind):
            if jj < j:
                out = out + self.multipliers[kind][jj]
        return out

    @staticmethod
    def annulus(j: int) -> tuple[float, float]:
        return INNER_RADIUS * 2.0**j, OUTER_RADIUS * 2.0**j

    def describe(self) -> dict:
        g = self.grid
        out = {
            "grid": list(g.n),
            "box_length": g.box_length,
            "bump": {"psi_support": [0.0, PSI_EDGE], "phi_support": [INNER_RADIUS, OUTER_RADIUS],
                     "psi_equals_one_below": INNER_RADIUS},
            "kinds": {},
        }
        for kind in KINDS:
            r = _radius(g, kind)
            nz = r[r > 0]
            out["kinds"][kind] = {
                "active_range": list(self.ranges[kind]),
                "lattice_frequency_range": [float(nz.min()), float(nz.max())],
                "annuli": {str(j): list(self.annulus(j)) for j in self.indices(kind)},
            }
        return out


@lru_cache(maxsize=32)
def build_bank(grid: FourierGrid) -> DyadicFilterBank:
    ranges, mults, zeros = {}, {}, {}
    for kind in KINDS:
        r = _radius(grid, kind)
        nz = r[r > 0]
        lo = int(np.floor(np.log2(nz.min() / OUTER_RADIUS))) - 1
        hi = int(np.ceil(np.log2(nz.max() / INNER_RADIUS))) + 1
        table = {}
        for j in range(lo, hi + 1):
            m = phi(r * 2.0**-j)
            if np.any(m > 0):
                m.flags.writeable = False
                table[j] = m
        active = sorted(table)
        if active != list(range(active[0], active[-1] + 1)):
            raise RuntimeError(f"non-contiguous active range for kind {kind}: {active}")
        ranges[kind] = (active[0], active[-1])
        mults[kind] = table
        z = r == 0
        z.flags.writeable = False
        zeros[kind] = z
    return DyadicFilterBank(grid, ranges, mults, zeros)


def _bank(f: ScalarField, bank: DyadicFilterBank | None) -> DyadicFilterBank:
    return build_bank(f.grid) if bank is None else bank


def block(f: ScalarField, kind: str, j: int, bank: DyadicFilterBank | None = None) -> ScalarField:
    """Dyadic block Delta_j of the given kind.

    Indices outside the active range give the zero field and an
    :class:`EmptyBlockWarning`.
    """
    b = _bank(f, bank)
    if kind not in KINDS:
        raise ValueError(f"block kind must be one of {KINDS}, got {kind!r}")
    if not b.is_active(kind, j):
        warnings.warn(f"block index {j} outside active {kind} range {b.ranges[kind]}", EmptyBlockWarning,
                      stacklevel=2)
        return ScalarField.zeros(f.grid)
    return f.with_coeffs(f.coeffs * b.multiplier(kind, j))


def lowpass(f: ScalarField, kind: str, j: int, bank: DyadicFilterBank | None = None) -> ScalarField:
    """S_j f: zero content plus all blocks with index below j."""
    b = _bank(f, bank)
    if kind not in KINDS:
        raise ValueError(f"block kind must be one of {KINDS}, got {kind!r}")
    return f.with_coeffs(f.coeffs * b.lowpass_multiplier(kind, j))


def zero_content(f: ScalarField, kind: str, bank: DyadicFilterBank | None = None) -> ScalarField:
    """Modes with vanishing frequency in the kind's direction."""
    b = _bank(f, bank)
    return f.with_coeffs(f.coeffs * b.zero_content[kind])


def block_pair(f: ScalarField, k: int, q: int, bank: DyadicFilterBank | None = None) -> ScalarField:
    """Delta^h_k Delta^v_q f (zero if either index is inactive)."""
    b = _bank(f, bank)
    return f.with_coeffs(f.coeffs * (b.multiplier("h", k) * b.multiplier("v", q)))

"""Bony decompositions and the frequency splits built on dyadic blocks.

Lattice convention for the paraproducts: each field splits as
``a = a_0 + sum_q Delta_q a`` where ``a_0`` is its zero content (no
frequency in the decomposition direction).  ``S_q`` includes ``a_0``, so

    T_a b = sum_q S_{q-1} a Delta_q b
    R(a, b) = a_0 b_0 + sum_q sum_{|i|<=1} Delta_{q+i} a Delta_q b

and ``ab = T_a b + T_b a + R(a, b)`` holds exactly on the retained modes.
Inputs are truncated by the 2/3 rule before splitting and every part is
truncated again afterwards.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .dyadic import KINDS, DyadicFilterBank, build_bank
from .spectral import ScalarField, fft3, ifft3

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BonyParts:
    T_ab: ScalarField
    T_ba: ScalarField
    R_ab: ScalarField
    T_tilde_ab: ScalarField
    kind: str

    def total(self) -> ScalarField:
        return self.T_ab + self.T_ba + self.R_ab


def _pieces(f: ScalarField, kind: str, bank: DyadicFilterBank):
    """Physical samples of the zero content and of each active block."""
    mult = [bank.zero_content[kind].astype(float)] + [bank.multiplier(kind, q) for q in bank.indices(kind)]
    phys = ifft3(np.stack([f.coeffs * m for m in mult])).real
    return phys[0], list(bank.indices(kind)), phys[1:]


def bony(a: ScalarField, b: ScalarField, kind: str, bank: DyadicFilterBank | None = None) -> BonyParts:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    grid = a.grid
    bk = build_bank(grid) if bank is None else bank
    mask = grid.dealias_mask
    a = a.with_coeffs(a.coeffs * mask)
    b = b.with_coeffs(b.coeffs * mask)
    a0, idx, da = _pieces(a, kind, bk)
    b0, _, db = _pieces(b, kind, bk)
    nq = len(idx)

    def low(zero, blocks, upto):
        # S_{idx[upto]} : zero content plus blocks at positions < upto
        out = zero.copy()
        for m in range(min(max(upto, 0), nq)):
            out += blocks[m]
        return out

    t_ab = np.zeros(grid.shape)
    t_ba = np.zeros(grid.shape)
    rem = a0 * b0
    t_tilde = a0 * b0
    for pos in range(nq):
        t_ab += low(a0, da, pos - 1) * db[pos]
        t_ba += low(b0, db, pos - 1) * da[pos]
        t_tilde += low(a0, da, pos + 2) * db[pos]
        for i in (-1, 0, 1):
            if 0 <= pos + i < nq:
                rem += da[pos + i] * db[pos]

    def spectral(x):
        return ScalarField(grid, fft3(x) * mask)

    return BonyParts(spectral(t_ab), spectral(t_ba), spectral(rem), spectral(t_tilde), kind)


def sharp_flat_split(f: ScalarField, E: float) -> tuple[ScalarField, ScalarField]:
    """(f_flat, f_sharp) with f_flat on |xi_h| < 1/E; ties go to f_sharp."""
    if not (np.isfinite(E) and E > 0):
        raise ValueError(f"E must be positive, got {E!r}")
    flat = np.broadcast_to(f.grid.kh_abs < 1.0 / E, f.grid.shape)
    return f.with_coeffs(np.where(flat, f.coeffs, 0)), f.with_coeffs(np.where(flat, 0, f.coeffs))


def bad_multiplier(bank: DyadicFilterBank) -> np.ndarray:
    """sum over active (k, q) with k < q of phi^h_k phi^v_q."""
    out = np.zeros(bank.grid.shape)
    for k in bank.indices("h"):
        for q in bank.indices("v"):
            if k < q:
                out = out + bank.multiplier("h", k) * bank.multiplier("v", q)
    return out


def unpaired_content(f: ScalarField, bank: DyadicFilterBank | None = None) -> ScalarField:
    """Modes with xi_h = 0 or xi_3 = 0, which no block pair reaches."""
    bk = build_bank(f.grid) if bank is None else bank
    m = np.broadcast_to(bk.zero_content["h"] | bk.zero_content["v"], f.grid.shape)
    return f.with_coeffs(np.where(m, f.coeffs, 0))


def good_bad_split(f: ScalarField, bank: DyadicFilterBank | None = None) -> tuple[ScalarField, ScalarField]:
    """(f_good, f_bad): horizontally dominated pairs q <= k versus k < q.

    Unpaired content is assigned to the good part.
    """
    bk = build_bank(f.grid) if bank is None else bank
    bad = f.with_coeffs(f.coeffs * bad_multiplier(bk))
    good = f - bad
    if log.isEnabledFor(logging.DEBUG):
        total = f.l2()
        extra = unpaired_content(f, bk).l2()
        log.debug("good/bad split: unpaired content %.3e of %.3e assigned to good", extra, total)
    return good, bad

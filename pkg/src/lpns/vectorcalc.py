"""Vorticity, Leray projection, horizontal div-curl decomposition, Riesz symbols.

Odd-order symbols use the Nyquist-free wavenumbers ``grid.k_deriv`` so that
every operator here maps real fields to real fields and agrees with
:func:`lpns.spectral.derivative`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import FourierGrid, ScalarField, VectorField, derivative

DIV_TOLERANCE = 1e-8


class DivergenceError(ValueError):
    pass


def vorticity3(u: VectorField) -> ScalarField:
    """omega^3 = d_1 u^2 - d_2 u^1."""
    return derivative(u.component(2), 1) - derivative(u.component(1), 2)


def vorticity(u: VectorField) -> VectorField:
    c1, c2, c3 = u.components
    return VectorField.from_components([
        derivative(c3, 2) - derivative(c2, 3),
        derivative(c1, 3) - derivative(c3, 1),
        derivative(c2, 1) - derivative(c1, 2),
    ])


def leray_coeffs(grid: FourierGrid, coeffs: np.ndarray) -> np.ndarray:
    kd = grid.k_deriv
    k2 = kd[0] ** 2 + kd[1] ** 2 + kd[2] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(k2 > 0, 1.0 / k2, 0.0)
    kdotv = kd[0] * coeffs[0] + kd[1] * coeffs[1] + kd[2] * coeffs[2]
    return np.stack([coeffs[i] - kd[i] * kdotv * inv for i in range(3)])


def leray_project(v: VectorField) -> VectorField:
    """(I - k k^T / |k|^2) v^ mode by mode; the mean mode is untouched."""
    return VectorField(v.grid, leray_coeffs(v.grid, v.coeffs))


def _inv_kh2(grid: FourierGrid) -> np.ndarray:
    k1, k2, _ = grid.k_deriv
    kh2 = k1**2 + k2**2
    with np.errstate(divide="ignore"):
        return np.where(kh2 > 0, 1.0 / kh2, 0.0)


def plane_mean_mask(grid: FourierGrid) -> np.ndarray:
    """Modes whose (Nyquist-free) horizontal wavenumber vanishes."""
    k1, k2, _ = grid.k_deriv
    return np.broadcast_to((k1 == 0) & (k2 == 0), grid.shape)


@dataclass(frozen=True, eq=False)
class DivCurl:
    curl_part: tuple[ScalarField, ScalarField]
    grad_part: tuple[ScalarField, ScalarField]
    residual: tuple[ScalarField, ScalarField]


def divcurl_decompose(u: VectorField, tol: float = DIV_TOLERANCE) -> DivCurl:
    """u^h = grad_h^perp Lap_h^{-1} omega^3 - grad_h Lap_h^{-1} d_3 u^3 + residual.

    Lap_h^{-1} vanishes on k_h = 0; those modes of u^h form the residual.
    """
    ratio = u.divergence_ratio()
    if ratio > tol:
        raise DivergenceError(f"input divergence ratio {ratio:.3e} exceeds {tol:.0e}")
    g = u.grid
    k1, k2, _ = g.k_deriv
    inv = _inv_kh2(g)
    w_hat = vorticity3(u).coeffs
    d_hat = derivative(u.component(3), 3).coeffs
    # grad_perp = (-d_2, d_1); Lap_h^{-1} has symbol -1/|k_h|^2
    stream = -w_hat * inv
    potential = -d_hat * inv
    curl = (ScalarField(g, -1j * k2 * stream), ScalarField(g, 1j * k1 * stream))
    grad = (ScalarField(g, -1j * k1 * potential), ScalarField(g, -1j * k2 * potential))
    pm = plane_mean_mask(g)
    resid = tuple(ScalarField(g, np.where(pm, u.coeffs[i], 0)) for i in (0, 1))
    return DivCurl(curl, grad, resid)


@dataclass(frozen=True, eq=False)
class RieszPair:
    """Symbols of R_{i,j} (acting on omega^3) and R~_{i,j} (acting on d_3 u^3)."""

    i: int
    j: int
    curl_symbol: np.ndarray
    grad_symbol: np.ndarray


def riesz_pair(grid: FourierGrid, i: int, j: int) -> RieszPair:
    if i not in (1, 2) or j not in (1, 2):
        raise ValueError(f"Riesz indices must be horizontal (1 or 2), got ({i}, {j})")
    k1, k2, _ = grid.k_deriv
    kh = (k1, k2)
    perp = (-k2, k1)
    inv = _inv_kh2(grid)
    curl = np.broadcast_to(kh[i - 1] * perp[j - 1] * inv, grid.shape[:2] + (1,))
    grad = np.broadcast_to(-kh[i - 1] * kh[j - 1] * inv, grid.shape[:2] + (1,))
    return RieszPair(i, j, curl, grad)


def riesz_partial(i: int, j: int, w3: ScalarField, d3u3: ScalarField) -> ScalarField:
    """R_{i,j} w3 + R~_{i,j} d3u3, which equals d_i u^j on k_h != 0."""
    if w3.grid != d3u3.grid:
        raise ValueError("fields live on different grids")
    rp = riesz_pair(w3.grid, i, j)
    return w3.with_coeffs(rp.curl_symbol * w3.coeffs + rp.grad_symbol * d3u3.coeffs)


def riesz_apply(f: ScalarField, i: int, j: int, which: str = "curl") -> ScalarField:
    rp = riesz_pair(f.grid, i, j)
    sym = rp.curl_symbol if which == "curl" else rp.grad_symbol
    return f.with_coeffs(f.coeffs * sym)

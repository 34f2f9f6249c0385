"""Periodic-box Fourier substrate.

Fields live on the box [0, 2*pi*L)^3 and are stored by their complex Fourier
coefficients in the *mean-per-mode* convention::

    f(x) = sum_k c_k exp(i k.x / L),      c_k = mean(f(x) exp(-i k.x / L))

so the constant field 1 has c_0 = 1 and Parseval reads
``||f||_{L^2}^2 = (2 pi L)^3 sum_k |c_k|^2``.  Axes 1-2 are the horizontal
plane, axis 3 is vertical.  Integer lattice indices use the standard FFT
ordering ``{0, ..., n/2-1, -n/2, ..., -1}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.fft as sfft

AXES = (-3, -2, -1)


def fft3(samples: np.ndarray) -> np.ndarray:
    """Forward transform over the last three axes, mean-per-mode scaling."""
    return sfft.fftn(samples, axes=AXES, norm="forward")


def ifft3(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`fft3` (complex output)."""
    return sfft.ifftn(coeffs, axes=AXES, norm="forward")


@dataclass(frozen=True)
class FourierGrid:
    n: tuple[int, int, int]
    box_length: float = 1.0

    def __post_init__(self):
        n = tuple(int(v) for v in self.n)
        if len(n) != 3:
            raise ValueError(f"grid needs three resolutions, got {self.n!r}")
        for v in n:
            if v % 2:
                raise ValueError(f"odd resolution {v} in {n}")
            if v < 8:
                raise ValueError(f"resolution {v} below the minimum of 8")
        L = float(self.box_length)
        if not np.isfinite(L) or L <= 0:
            raise ValueError(f"box_length must be positive, got {self.box_length!r}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "box_length", L)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.n

    @property
    def size(self) -> int:
        return self.n[0] * self.n[1] * self.n[2]

    @property
    def period(self) -> float:
        return 2 * np.pi * self.box_length

    @property
    def volume(self) -> float:
        return self.period**3

    @property
    def spacing(self) -> tuple[float, float, float]:
        return tuple(self.period / m for m in self.n)

    @cached_property
    def lattice(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-axis integer wavenumbers in FFT order."""
        return tuple(np.rint(np.fft.fftfreq(m, 1.0 / m)).astype(np.int64) for m in self.n)

    @cached_property
    def k(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Physical wavenumbers k/L, shaped to broadcast over the 3D lattice."""
        k1, k2, k3 = (kk / self.box_length for kk in self.lattice)
        return k1[:, None, None], k2[None, :, None], k3[None, None, :]

    @cached_property
    def k_deriv(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Physical wavenumbers with the Nyquist index -n/2 set to zero.

        Used by every odd-order operator so that it maps real fields to real
        fields (the Nyquist mode has no conjugate partner).
        """
        out = []
        for axis, (kk, m) in enumerate(zip(self.lattice, self.n)):
            kd = np.where(kk == -m // 2, 0, kk) / self.box_length
            shape = [1, 1, 1]
            shape[axis] = m
            out.append(kd.reshape(shape))
        return tuple(out)

    @cached_property
    def k_abs(self) -> np.ndarray:
        k1, k2, k3 = self.k
        return np.sqrt(k1**2 + k2**2 + k3**2)

    @cached_property
    def kh_abs(self) -> np.ndarray:
        k1, k2, _ = self.k
        return np.sqrt(k1**2 + k2**2)

    @cached_property
    def kv_abs(self) -> np.ndarray:
        return np.abs(self.k[2])

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keeps |k_i| < n_i/3 on every axis."""
        m = [np.abs(kk) < nn / 3.0 for kk, nn in zip(self.lattice, self.n)]
        return m[0][:, None, None] & m[1][None, :, None] & m[2][None, None, :]

    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable physical sample coordinates."""
        xs = [np.arange(m) * self.period / m for m in self.n]
        return xs[0][:, None, None], xs[1][None, :, None], xs[2][None, None, :]

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.broadcast_to(x, self.n) for x in self.coordinates())


def make_grid(n: int | Sequence[int], box_length: float = 1.0) -> FourierGrid:
    """Build a grid; a single int means a cubic grid."""
    if np.isscalar(n):
        n = (int(n),) * 3
    return FourierGrid(tuple(n), box_length)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: FourierGrid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", _frozen(c))

    @classmethod
    def zeros(cls, grid: FourierGrid) -> ScalarField:
        return cls(grid, np.zeros(grid.shape, complex))

    @classmethod
    def from_physical(cls, grid: FourierGrid, samples) -> ScalarField:
        return transform_forward(grid, samples)

    def physical(self) -> np.ndarray:
        return transform_inverse(self)

    @property
    def mean(self) -> float:
        return float(self.coeffs[0, 0, 0].real)

    def with_coeffs(self, coeffs) -> ScalarField:
        return ScalarField(self.grid, coeffs)

    def _check(self, other: ScalarField):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other: ScalarField) -> ScalarField:
        self._check(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: ScalarField) -> ScalarField:
        self._check(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __neg__(self) -> ScalarField:
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, scalar: float) -> ScalarField:
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def l2(self) -> float:
        return float(np.sqrt(self.grid.volume * np.sum(np.abs(self.coeffs) ** 2)))


@dataclass(frozen=True, eq=False)
class VectorField:
    """Three-component field; ``coeffs`` has shape (3, n1, n2, n3)."""

    grid: FourierGrid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (3,) + self.grid.shape:
            raise ValueError(f"vector coefficient shape {c.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", _frozen(c))

    @classmethod
    def from_components(cls, components: Sequence[ScalarField]) -> VectorField:
        grid = components[0].grid
        if any(c.grid != grid for c in components):
            raise ValueError("components live on different grids")
        return cls(grid, np.stack([c.coeffs for c in components]))

    @classmethod
    def from_physical(cls, grid: FourierGrid, samples) -> VectorField:
        samples = np.asarray(samples, dtype=float)
        if samples.shape != (3,) + grid.shape:
            raise ValueError(f"sample shape {samples.shape} does not match grid {grid.shape}")
        return cls(grid, fft3(samples))

    @classmethod
    def zeros(cls, grid: FourierGrid) -> VectorField:
        return cls(grid, np.zeros((3,) + grid.shape, complex))

    def component(self, i: int) -> ScalarField:
        """Component u^i, 1-based."""
        return ScalarField(self.grid, self.coeffs[i - 1])

    @property
    def components(self) -> tuple[ScalarField, ScalarField, ScalarField]:
        return tuple(self.component(i) for i in (1, 2, 3))

    def physical(self) -> np.ndarray:
        return ifft3(self.coeffs).real

    def divergence(self) -> ScalarField:
        kd = self.grid.k_deriv
        return ScalarField(self.grid, sum(1j * kd[i] * self.coeffs[i] for i in range(3)))

    def divergence_ratio(self) -> float:
        """||div u||_{L^2} / ||grad u||_{L^2} (0 for a constant field)."""
        kd = self.grid.k_deriv
        num = np.sum(np.abs(sum(kd[i] * self.coeffs[i] for i in range(3))) ** 2)
        k2 = sum(kk**2 for kk in kd)
        den = np.sum(k2 * np.abs(self.coeffs) ** 2)
        return float(np.sqrt(num / den)) if den > 0 else 0.0

    def __add__(self, other: VectorField) -> VectorField:
        return VectorField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: VectorField) -> VectorField:
        return VectorField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> VectorField:
        return VectorField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def l2(self) -> float:
        return float(np.sqrt(self.grid.volume * np.sum(np.abs(self.coeffs) ** 2)))


def transform_forward(grid: FourierGrid, samples) -> ScalarField:
    samples = np.asarray(samples)
    if samples.shape != grid.shape:
        raise ValueError(f"sample shape {samples.shape} does not match grid {grid.shape}")
    if np.iscomplexobj(samples):
        raise ValueError("physical samples must be real")
    return ScalarField(grid, fft3(samples.astype(float)))


def transform_inverse(f: ScalarField) -> np.ndarray:
    return ifft3(f.coeffs).real


def derivative(f: ScalarField, axis: int, order: int = 1) -> ScalarField:
    """Spectral derivative along axis 1, 2 or 3.

    Odd orders drop the Nyquist index, which has no faithful derivative.
    """
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {axis!r}")
    if order < 1 or int(order) != order:
        raise ValueError(f"order must be a positive integer, got {order!r}")
    kk = f.grid.k_deriv[axis - 1] if order % 2 else f.grid.k[axis - 1]
    return f.with_coeffs(f.coeffs * (1j * kk) ** int(order))


def gradient_h_abs(f: ScalarField) -> ScalarField:
    """|nabla_h| f, i.e. multiplication by |k_h|."""
    return f.with_coeffs(f.coeffs * f.grid.kh_abs)


def _lp(values: np.ndarray, p: float, weight: float, axes) -> np.ndarray:
    a = np.abs(values)
    if np.isinf(p):
        return a.max(axis=axes)
    return (weight * np.sum(a**p, axis=axes)) ** (1.0 / p)


def _check_exponent(p):
    if not (p == np.inf or (np.isfinite(p) and p >= 1)):
        raise ValueError(f"Lebesgue exponent must lie in [1, inf], got {p!r}")


def mixed_norm_samples(grid: FourierGrid, samples: np.ndarray, outer: str, p_outer: float, p_inner: float) -> float:
    """Mixed Lebesgue norm of physical samples.

    ``outer='h'`` gives L^{p_outer}_h(L^{p_inner}_v): the inner norm runs over
    the vertical axis at each horizontal point.  ``outer='v'`` gives
    L^{p_outer}_v(L^{p_inner}_h).
    """
    _check_exponent(p_outer)
    _check_exponent(p_inner)
    d1, d2, d3 = grid.spacing
    if outer == "h":
        inner = _lp(samples, p_inner, d3, axes=2)
        return float(_lp(inner, p_outer, d1 * d2, axes=(0, 1)))
    if outer == "v":
        inner = _lp(samples, p_inner, d1 * d2, axes=(0, 1))
        return float(_lp(inner, p_outer, d3, axes=0))
    raise ValueError(f"outer axis group must be 'h' or 'v', got {outer!r}")


def mixed_lebesgue_norm(f: ScalarField, outer: str, p_outer: float, p_inner: float) -> float:
    return mixed_norm_samples(f.grid, f.physical(), outer, p_outer, p_inner)


def lebesgue_norm_samples(grid: FourierGrid, samples: np.ndarray, p: float) -> float:
    _check_exponent(p)
    d1, d2, d3 = grid.spacing
    return float(_lp(samples, p, d1 * d2 * d3, axes=None))


def lebesgue_norm(f: ScalarField, p: float) -> float:
    return lebesgue_norm_samples(f.grid, f.physical(), p)


def inner_product_l2(f: ScalarField, g: ScalarField) -> float:
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    return float(f.grid.volume * np.sum(f.coeffs * np.conj(g.coeffs)).real)


def dealias(f: ScalarField) -> ScalarField:
    return f.with_coeffs(f.coeffs * f.grid.dealias_mask)


def dealiased_product(a: ScalarField, b: ScalarField) -> ScalarField:
    """Pointwise product under the 2/3 rule: inputs and output truncated."""
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    mask = a.grid.dealias_mask
    prod = ifft3(a.coeffs * mask).real * ifft3(b.coeffs * mask).real
    return ScalarField(a.grid, fft3(prod) * mask)


def hermitian_defect(coeffs: np.ndarray) -> float:
    """max |c(-k) - conj c(k)| relative to max |c|; zero for real fields."""
    flipped = np.roll(np.flip(coeffs, axis=AXES), 1, axis=AXES)
    scale = np.abs(coeffs).max()
    return float(np.abs(flipped - np.conj(coeffs)).max() / scale) if scale > 0 else 0.0

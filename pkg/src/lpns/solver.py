"""Pseudo-spectral incompressible Navier-Stokes on the periodic box.

Convective nonlinearity under the 2/3 rule, Leray projection at every
stage, and integrating-factor RK4 (the viscous factor exp(-nu |k|^2 tau) is
applied exactly).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .spectral import AXES, FourierGrid, ScalarField, VectorField, fft3, ifft3
from .vectorcalc import leray_coeffs

log = logging.getLogger(__name__)


class CFLError(RuntimeError):
    def __init__(self, max_speed: float, dt: float, limit: float):
        super().__init__(f"CFL violation: max|u| = {max_speed:.6g} needs dt <= {limit:.6g}, got dt = {dt:.6g}")
        self.max_speed = max_speed
        self.dt = dt
        self.limit = limit


# -- initial data -----------------------------------------------------------

def taylor_green(grid: FourierGrid, amplitude: float = 1.0) -> VectorField:
    """A (sin x1 cos x2 cos x3, -cos x1 sin x2 cos x3, 0) in box units."""
    if not np.isfinite(amplitude):
        raise ValueError(f"amplitude must be finite, got {amplitude!r}")
    x1, x2, x3 = (x / grid.box_length for x in grid.coordinates())
    u1 = np.sin(x1) * np.cos(x2) * np.cos(x3)
    u2 = -np.cos(x1) * np.sin(x2) * np.cos(x3)
    samples = amplitude * np.stack([np.broadcast_to(u1, grid.shape), np.broadcast_to(u2, grid.shape),
                                    np.zeros(grid.shape)])
    return VectorField.from_physical(grid, samples)


def shear(grid: FourierGrid, amplitude: float = 1.0) -> VectorField:
    """A (sin x2, 0, 0): an exact single-mode Stokes solution."""
    _, x2, _ = (x / grid.box_length for x in grid.coordinates())
    samples = np.zeros((3,) + grid.shape)
    samples[0] = amplitude * np.broadcast_to(np.sin(x2), grid.shape)
    return VectorField.from_physical(grid, samples)


def random_coeffs(grid: FourierGrid, rng: np.random.Generator, band: tuple[int, int], ncomp: int) -> np.ndarray:
    """Gaussian coefficients with Hermitian symmetry on kmin <= |k| <= kmax.

    Draws happen on a fixed (2 kmax + 1)^3 lattice, so the same generator
    state gives the same function on every grid that resolves the band.
    """
    kmin, kmax = int(band[0]), int(band[1])
    if kmin > kmax or kmax < 1:
        raise ValueError(f"empty band {band!r}")
    if kmax > min(grid.n) // 2 - 1:
        raise ValueError(f"band {band!r} exceeds lattice {grid.n}")
    m = 2 * kmax + 1
    z = rng.standard_normal((ncomp, m, m, m)) + 1j * rng.standard_normal((ncomp, m, m, m))
    # z[:, a, b, c] sits at lattice point (a - kmax, b - kmax, c - kmax)
    z = 0.5 * (z + np.conj(z[:, ::-1, ::-1, ::-1]))
    kk = np.arange(-kmax, kmax + 1)
    r = np.sqrt(kk[:, None, None] ** 2 + kk[None, :, None] ** 2 + kk[None, None, :] ** 2)
    z = z * ((r >= kmin) & (r <= kmax))
    out = np.zeros((ncomp,) + grid.shape, complex)
    idx = np.ix_(range(ncomp), *(kk % n for n in grid.n))
    out[idx] = z
    return out


def random_scalar(grid: FourierGrid, seed, band: tuple[int, int], amplitude: float = 1.0) -> ScalarField:
    """Band-limited Gaussian real field with L^2 norm ``amplitude``."""
    c = random_coeffs(grid, np.random.default_rng(seed), band, 1)[0]
    f = ScalarField(grid, c)
    return f * (amplitude / f.l2())


def random_divfree(grid: FourierGrid, seed, band: tuple[int, int], amplitude: float = 1.0) -> VectorField:
    """Leray-projected band-limited Gaussian field with L^2 norm ``amplitude``."""
    c = leray_coeffs(grid, random_coeffs(grid, np.random.default_rng(seed), band, 3))
    u = VectorField(grid, c)
    norm = u.l2()
    if norm == 0:
        raise ValueError(f"band {band!r} produced no divergence-free content")
    return u * (amplitude / norm)


# -- dynamics ---------------------------------------------------------------
#
# The stepper works on half-spectrum (rfft) arrays of shape (3, n1, n2, n3/2+1);
# public functions take and return full-lattice VectorFields.

def _rfft3(samples):
    return sfft.rfftn(samples, axes=AXES, norm="forward")


class _Operators:
    """Precomputed half-spectrum symbols for one grid."""

    def __init__(self, grid: FourierGrid):
        self.grid = grid
        n1, n2, n3 = grid.n
        m = n3 // 2 + 1
        self.kd = grid.k_deriv[0], grid.k_deriv[1], grid.k_deriv[2][..., :m]
        self.k2 = (grid.k_abs**2)[..., :m]
        self.mask = grid.dealias_mask[..., :m]
        kd = self.kd
        kk = kd[0] ** 2 + kd[1] ** 2 + kd[2] ** 2
        self.inv_k2 = np.where(kk > 0, 1.0 / np.where(kk > 0, kk, 1.0), 0.0)
        # multiplicity of each stored k3 plane in the full lattice
        w = np.full(m, 2.0)
        w[0] = 1.0
        if n3 % 2 == 0:
            w[-1] = 1.0
        self.plane_weight = w

    def to_half(self, coeffs: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(coeffs[..., : self.grid.n[2] // 2 + 1])

    def to_full(self, half: np.ndarray) -> np.ndarray:
        return fft3(self.physical(half))

    def physical(self, half: np.ndarray) -> np.ndarray:
        return sfft.irfftn(half, s=self.grid.n, axes=AXES, norm="forward")

    def project(self, uh: np.ndarray) -> np.ndarray:
        kd = self.kd
        kdotv = (kd[0] * uh[0] + kd[1] * uh[1] + kd[2] * uh[2]) * self.inv_k2
        return uh - np.stack([kd[0] * kdotv, kd[1] * kdotv, kd[2] * kdotv])

    def nonlinear(self, uh: np.ndarray, return_speed: bool = False):
        """-P(u . grad u) with 2/3 dealiasing."""
        kd = self.kd
        um = uh * self.mask
        stack = np.empty((12,) + um.shape[1:], complex)
        stack[:3] = um
        for i in range(3):
            stack[3 + 3 * i: 6 + 3 * i] = 1j * kd[i] * um  # d_i u^j
        phys = self.physical(stack)
        u = phys[:3]
        conv = u[0] * phys[3:6] + u[1] * phys[6:9] + u[2] * phys[9:12]
        out = -self.project(_rfft3(conv) * self.mask)
        if return_speed:
            return out, float(np.sqrt(np.sum(u**2, axis=0)).max())
        return out

    def sum_sq(self, half: np.ndarray, weight=1.0) -> float:
        """Full-lattice sum of weight * |c|^2 from half-spectrum data."""
        return float(np.sum(self.plane_weight * weight * np.abs(half) ** 2))

    def record(self, t: float, uh: np.ndarray, dt: float) -> StepRecord:
        vol = self.grid.volume
        en = vol * self.sum_sq(uh)
        ens = vol * self.sum_sq(uh, self.k2)
        kd = self.kd
        div = self.physical(1j * (kd[0] * uh[0] + kd[1] * uh[1] + kd[2] * uh[2]))
        rms_grad = np.sqrt(ens / vol)
        md = float(np.abs(div).max() / rms_grad) if rms_grad > 0 else 0.0
        return StepRecord(float(t), en, ens, md, float(dt))


def nonlinear_term(u: VectorField) -> VectorField:
    ops = _Operators(u.grid)
    return VectorField(u.grid, ops.to_full(ops.nonlinear(ops.to_half(u.coeffs))))


def max_speed(u: VectorField) -> float:
    return float(np.sqrt(np.sum(u.physical() ** 2, axis=0)).max())


def cfl_limit(grid: FourierGrid, speed: float, cfl_safety: float) -> float:
    return np.inf if speed == 0 else cfl_safety * min(grid.spacing) / speed


def _ifrk4(ops: _Operators, uh: np.ndarray, dt: float, nu: float, cfl_safety: float | None) -> np.ndarray:
    e_half = np.exp(-nu * ops.k2 * dt / 2)
    e_full = e_half * e_half
    k1, speed = ops.nonlinear(uh, return_speed=True)
    if cfl_safety is not None:
        limit = cfl_limit(ops.grid, speed, cfl_safety)
        if dt > limit:
            raise CFLError(speed, dt, limit)
    k2 = ops.nonlinear(ops.project(e_half * (uh + 0.5 * dt * k1)))
    k3 = ops.nonlinear(ops.project(e_half * uh + 0.5 * dt * k2))
    k4 = ops.nonlinear(ops.project(e_full * uh + dt * e_half * k3))
    new = e_full * uh + dt / 6.0 * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)
    return ops.project(new)


def step(u: VectorField, dt: float, nu: float = 1.0, cfl_safety: float | None = 1.0) -> VectorField:
    """One integrating-factor RK4 step; raises :class:`CFLError` on violation."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    ops = _Operators(u.grid)
    return VectorField(u.grid, ops.to_full(_ifrk4(ops, ops.to_half(u.coeffs), dt, nu, cfl_safety)))


# -- diagnostics ------------------------------------------------------------

def energy(u: VectorField) -> float:
    """||u||_{L^2}^2."""
    return u.grid.volume * float(np.sum(np.abs(u.coeffs) ** 2))


def enstrophy(u: VectorField) -> float:
    """||grad u||_{L^2}^2."""
    return u.grid.volume * float(np.sum(u.grid.k_abs**2 * np.abs(u.coeffs) ** 2))


def max_divergence(u: VectorField) -> float:
    """Grid max of |div u| relative to the RMS of |grad u|."""
    ops = _Operators(u.grid)
    return ops.record(0.0, ops.to_half(u.coeffs), 0.0).max_div


@dataclass
class StepRecord:
    t: float
    energy: float
    enstrophy: float
    max_div: float
    dt: float


@dataclass
class SolverConfig:
    grid: FourierGrid
    viscosity: float = 1.0
    dt: float = 1e-2
    t_end: float = 1.0
    output_stride: int = 1
    cfl_safety: float = 1.0
    init: str = "taylor_green"
    init_args: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if not self.viscosity >= 0:
            raise ValueError(f"viscosity must be non-negative, got {self.viscosity!r}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be non-negative, got {self.t_end!r}")
        if int(self.output_stride) != self.output_stride or self.output_stride < 1:
            raise ValueError(f"output_stride must be a positive integer, got {self.output_stride!r}")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def initial_field(self) -> VectorField:
        a = dict(self.init_args)
        if self.init == "taylor_green":
            return taylor_green(self.grid, a.get("amplitude", 1.0))
        if self.init == "shear":
            return shear(self.grid, a.get("amplitude", 1.0))
        if self.init == "random_divfree":
            band = a.get("band", (1, 4))
            return random_divfree(self.grid, self.seed, band, a.get("amplitude", 1.0))
        if self.init == "zero":
            return VectorField.zeros(self.grid)
        if self.init == "file":
            from .snapshot import read_snapshot

            u = read_snapshot(a["path"])
            if not isinstance(u, VectorField) or u.grid != self.grid:
                raise ValueError(f"initial snapshot {a['path']} does not hold a velocity on grid {self.grid.n}")
            return u
        raise ValueError(f"unknown init selector {self.init!r}")


@dataclass
class Trajectory:
    grid: FourierGrid
    viscosity: float
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    steps: list = field(default_factory=list)

    def append_snapshot(self, t: float, u: VectorField):
        if self.times and not t > self.times[-1]:
            raise ValueError(f"snapshot times must increase: {t} after {self.times[-1]}")
        self.times.append(float(t))
        self.snapshots.append(u)


def simulate(config: SolverConfig, u0: VectorField | None = None, on_sample=None) -> Trajectory:
    """Run the solver; snapshots every ``output_stride`` steps, scalars every step."""
    u = config.initial_field() if u0 is None else u0
    grid = u.grid
    ops = _Operators(grid)
    traj = Trajectory(grid, config.viscosity)
    uh = ops.to_half(u.coeffs)
    traj.append_snapshot(0.0, u)
    traj.steps.append(ops.record(0.0, uh, 0.0))
    if on_sample:
        on_sample(0, 0.0, u)
    n = config.n_steps
    for s in range(1, n + 1):
        uh = _ifrk4(ops, uh, config.dt, config.viscosity, config.cfl_safety)
        t = s * config.dt
        traj.steps.append(ops.record(t, uh, config.dt))
        if s % config.output_stride == 0 or s == n:
            u = VectorField(grid, ops.to_full(uh))
            traj.append_snapshot(t, u)
            if on_sample:
                on_sample(len(traj.times) - 1, t, u)
    log.info("simulated %d steps to t=%g on %s", n, n * config.dt, grid.n)
    return traj


def running_integral(t, y, end_correction: bool = False) -> np.ndarray:
    """Cumulative trapezoidal integral of samples ``y`` over ``t``.

    With ``end_correction`` and uniform spacing, Gregory's endpoint term
    ``-h^2/12 (y'(t_n) - y'(t_0))`` is added using second-order one-sided
    differences of the samples (centered at the second sample), which makes
    the rule exact for quadratics.
    """
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    acc = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))])
    if not end_correction or len(t) < 3:
        return acc
    h = np.diff(t)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0.0):
        return acc
    h = h[0]
    d0 = (-3 * y[0] + 4 * y[1] - y[2]) / (2 * h)
    dn = np.empty_like(y)
    dn[2:] = (3 * y[2:] - 4 * y[1:-1] + y[:-2]) / (2 * h)
    dn[1] = (y[2] - y[0]) / (2 * h)
    corr = -(h**2) / 12 * (dn - d0)
    corr[0] = 0.0
    return acc + corr


def energy_report(traj: Trajectory, end_correction: bool = True) -> list[dict]:
    """Energy inequality budget along the per-step scalar log.

    ``lhs = ||u(t)||^2 + 2 nu int_0^t ||grad u||^2`` and
    ``residual = ||u_0||^2 - lhs``.  The time integral is the trapezoidal rule
    with Gregory's endpoint correction (see :func:`running_integral`);
    ``residual_trapezoid`` keeps the uncorrected value.
    """
    t = [r.t for r in traj.steps]
    z = [r.enstrophy for r in traj.steps]
    corrected = running_integral(t, z, end_correction)
    plain = running_integral(t, z, False)
    e0 = traj.steps[0].energy
    out = []
    for rec, acc, acc0 in zip(traj.steps, corrected, plain):
        lhs = rec.energy + 2 * traj.viscosity * acc
        res = e0 - lhs
        res0 = e0 - rec.energy - 2 * traj.viscosity * acc0
        out.append({"t": rec.t, "lhs": float(lhs), "residual": float(res),
                    "relative_residual": float(res / e0) if e0 else 0.0,
                    "residual_trapezoid": float(res0)})
    return out


@dataclass
class GradhBudget:
    """Terms of the horizontal-gradient budget.

    ``d/dt ||grad_h u||^2 / 2 = -nu * gradh_h1 + E1 + E2 + E3 + E4`` with
    E4 the (d_i u^3 d_3 u^3 | d_i u^3) term; ``E4_displayed`` repeats the
    E3 expression.
    """

    gradh_l2: float
    gradh_h1: float
    E1: float
    E2: float
    E3: float
    E4: float
    E4_displayed: float
    J: dict

    @property
    def trilinear_sum(self) -> float:
        return self.E1 + self.E2 + self.E3 + self.E4

    def rate(self, nu: float) -> float:
        return -nu * self.gradh_h1 + self.trilinear_sum


def _gradients(u: VectorField) -> np.ndarray:
    """G[i, j] = d_i u^j in physical space (axes 0-based), 2/3-truncated input."""
    kd = u.grid.k_deriv
    um = u.coeffs * u.grid.dealias_mask
    return ifft3(np.stack([np.stack([1j * kd[i] * um[j] for j in range(3)]) for i in range(3)])).real


def gradh_budget(u: VectorField) -> GradhBudget:
    g = u.grid
    w = g.volume / g.size
    G = _gradients(u)
    k2 = g.k_abs**2
    kh2 = g.kh_abs**2
    power = np.abs(u.coeffs * g.dealias_mask) ** 2
    gradh_l2 = g.volume * float(np.sum(kh2 * power))
    gradh_h1 = g.volume * float(np.sum(kh2 * k2 * power))
    H = (0, 1)
    E1 = -w * sum(float(np.sum(G[i, l] * G[l, m] * G[i, m])) for i in H for l in H for m in H)
    E2 = -w * sum(float(np.sum(G[i, l] * G[l, 2] * G[i, 2])) for i in H for l in H)
    J = {(i + 1, l + 1): w * float(np.sum(G[i, 2] * G[2, l] * G[i, l])) for i in H for l in H}
    E3 = -sum(J.values())
    E4 = -w * sum(float(np.sum(G[i, 2] * G[2, 2] * G[i, 2])) for i in H)
    return GradhBudget(gradh_l2, gradh_h1, E1, E2, E3, E4, E3, J)


@dataclass
class GradBudget:
    """``d/dt ||grad u||^2 / 2 = -nu ||Lap u||^2 - sum int d_k u^j d_j u^i d_k u^i``."""

    grad_l2: float
    lap_l2: float
    trilinear: float

    def rate(self, nu: float) -> float:
        return -nu * self.lap_l2 + self.trilinear


def grad_budget(u: VectorField) -> GradBudget:
    g = u.grid
    w = g.volume / g.size
    G = _gradients(u)
    k2 = g.k_abs**2
    power = np.abs(u.coeffs * g.dealias_mask) ** 2
    tri = -w * float(sum(np.sum(G[k, j] * G[j, i] * G[k, i]) for i in range(3) for j in range(3) for k in range(3)))
    return GradBudget(g.volume * float(np.sum(k2 * power)), g.volume * float(np.sum(k2**2 * power)), tri)

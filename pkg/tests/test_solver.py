import math

import numpy as np
import pytest

from conftest import rand_divfree
from lpns.dyadic import block
from lpns.snapshot import write_snapshot
from lpns.solver import (CFLError, SolverConfig, energy, energy_report, enstrophy, grad_budget, gradh_budget,
                         max_divergence, nonlinear_term, random_divfree, running_integral, shear, simulate, step,
                         taylor_green)
from lpns.spectral import VectorField, make_grid


def run(u, dt, t_end, nu):
    for _ in range(int(round(t_end / dt))):
        u = step(u, dt, nu)
    return u


def rel_l2(a, b):
    return math.sqrt(energy(a - b) / energy(b))


def int_freqs(n):
    return np.array([i if i < n // 2 else i - n for i in range(n)])


def nonlinear_oracle(u):
    """-P(u.grad u) by the explicit convolution sum over retained modes."""
    g = u.grid
    mask = np.ones(g.shape, bool)
    for ax, n in enumerate(g.n):
        shape = [1, 1, 1]
        shape[ax] = n
        mask &= (np.abs(int_freqs(n)) < n / 3).reshape(shape)
    c = u.coeffs * mask
    modes = [tuple(i) for i in np.argwhere(np.abs(c).max(axis=0) > 0)]
    freq = [int_freqs(n) for n in g.n]
    conv = np.zeros((3,) + g.shape, complex)
    for m in modes:
        um = c[(slice(None),) + m]
        for q in modes:
            kq = np.array([freq[a][q[a]] for a in range(3)], float) / g.box_length
            # (u_m . i k_q) u_q contributes at m + q
            coef = np.dot(um, 1j * kq)
            idx = tuple((m[a] + q[a]) % g.n[a] for a in range(3))
            conv[(slice(None),) + idx] += coef * c[(slice(None),) + q]
    out = np.zeros_like(conv)
    for idx in np.ndindex(*g.shape):
        if not mask[idx]:
            continue
        k = np.array([freq[a][idx[a]] for a in range(3)], float) / g.box_length
        v = conv[(slice(None),) + idx]
        kk = k @ k
        out[(slice(None),) + idx] = -(v - k * (k @ v) / kk) if kk > 0 else -v
    return out


class TestInitialData:
    def test_taylor_green(self, g16):
        u = taylor_green(g16, 1.0)
        assert u.divergence().l2() <= 1e-13
        assert energy(u) == pytest.approx((2 * np.pi) ** 3 / 4, rel=1e-14)
        assert energy(taylor_green(g16, 2.0)) == pytest.approx(4 * energy(u), rel=1e-14)

    def test_taylor_green_box_length(self):
        g = make_grid(16, 2.0)
        assert energy(taylor_green(g)) == pytest.approx((4 * np.pi) ** 3 / 4, rel=1e-14)

    def test_non_finite_amplitude(self, g8):
        with pytest.raises(ValueError):
            taylor_green(g8, float("nan"))

    def test_random_divfree_contract(self, g16, g32):
        a, b = random_divfree(g16, 7, (1, 4), 2.5), random_divfree(g16, 7, (1, 4), 2.5)
        assert np.array_equal(a.coeffs, b.coeffs)
        assert a.divergence_ratio() <= 1e-13
        for seed in range(10):
            assert abs(energy(random_divfree(g16, seed, (1, 4), 2.5)) - 6.25) <= 1e-12 * 6.25
        # annuli with |xi| >= 8/3 2^j > 4 miss the band entirely... only j >= 2 touches it
        u = random_divfree(g32, 3, (1, 4))
        for j in (3, 4):
            assert all(block(c, "iso", j).l2() <= 1e-15 for c in u.components)
        assert block(u.component(1), "iso", 1).l2() > 0

    def test_random_divfree_grid_independent(self, g16, g32):
        a, b = random_divfree(g16, 1, (1, 4)), random_divfree(g32, 1, (1, 4))
        xa, xb = a.physical(), b.physical()[:, ::2, ::2, ::2]
        assert np.abs(xa - xb).max() <= 1e-13

    @pytest.mark.parametrize("band", [(3, 2), (0, 0), (1, 8)])
    def test_random_divfree_bad_band(self, g16, band):
        with pytest.raises(ValueError):
            random_divfree(g16, 0, band)


class TestNonlinear:
    def test_shear_is_steady(self, g16):
        assert nonlinear_term(shear(g16)).l2() <= 1e-14

    def test_output_divergence_free(self, g16):
        for seed in range(5):
            u = rand_divfree(g16, seed)
            n = nonlinear_term(u)
            assert n.divergence_ratio() <= 1e-12

    def test_taylor_green_convolution_oracle(self, g8):
        u = taylor_green(g8, 1.0)
        got = nonlinear_term(u).coeffs
        ref = nonlinear_oracle(u)
        assert np.linalg.norm(got - ref) <= 1e-13 * np.linalg.norm(ref)

    def test_random_convolution_oracle(self, g8):
        u = random_divfree(g8, 4, (1, 2))
        got = nonlinear_term(u).coeffs
        ref = nonlinear_oracle(u)
        assert np.linalg.norm(got - ref) <= 1e-12 * np.linalg.norm(ref)


class TestStep:
    def test_stokes_mode(self, g16):
        u0 = shear(g16)
        assert rel_l2(run(u0, 1e-2, 1.0, 1.0), u0 * math.exp(-1.0)) <= 1e-10

    def test_stokes_mode_box_length(self):
        g = make_grid(16, 0.5)
        u0 = shear(g)
        # |k/L|^2 = 4, so the mode decays as exp(-4 nu t)
        assert rel_l2(run(u0, 1e-2, 1.0, 0.5), u0 * math.exp(-2.0)) <= 1e-10

    def test_fourth_order(self, g16):
        u0 = taylor_green(g16, 5.0)
        ref = run(u0, 1e-2 / 16, 1.0, 0.1)
        errs = [rel_l2(run(u0, dt, 1.0, 0.1), ref) for dt in (1e-2, 5e-3, 2.5e-3)]
        orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert all(3.2 <= o <= 4.8 for o in orders), orders

    def test_inviscid_step_drift_order(self, g16):
        u0 = taylor_green(g16, 1.0)
        drift = [abs(energy(step(u0, dt, 0.0)) - energy(u0)) / energy(u0) for dt in (0.1, 0.05, 0.025)]
        orders = [math.log2(drift[i] / drift[i + 1]) for i in range(2)]
        assert min(orders) >= 5.0, orders

    def test_inviscid_conservation(self, g16):
        cfg = SolverConfig(g16, viscosity=0.0, dt=1e-2, t_end=1.0, output_stride=100)
        traj = simulate(cfg)
        e = np.array([r.energy for r in traj.steps])
        assert np.abs(e - e[0]).max() <= 1e-8 * e[0]

    def test_cfl_violation(self, g16):
        u = taylor_green(g16, 100.0)
        with pytest.raises(CFLError) as exc:
            step(u, 0.1, 1.0)
        assert exc.value.max_speed == pytest.approx(100.0, rel=1e-6)
        assert "max|u|" in str(exc.value)

    def test_bad_dt(self, g8):
        with pytest.raises(ValueError):
            step(taylor_green(g8), 0.0)


class TestSimulate:
    def test_trajectory_shape(self, g16):
        cfg = SolverConfig(g16, dt=1e-2, t_end=0.1, output_stride=3)
        traj = simulate(cfg)
        assert traj.times == pytest.approx([0.0, 0.03, 0.06, 0.09, 0.1])
        assert len(traj.steps) == 11
        assert np.all(np.diff(traj.times) > 0)
        assert max(r.max_div for r in traj.steps) <= 1e-8

    def test_energy_monotone(self, g16):
        traj = simulate(SolverConfig(g16, dt=1e-2, t_end=1.0, output_stride=100))
        e = np.array([r.energy for r in traj.steps])
        assert np.all(np.diff(e) <= 0)

    def test_on_sample_and_u0(self, g16):
        seen = []
        u0 = rand_divfree(g16, 2)
        simulate(SolverConfig(g16, dt=1e-2, t_end=0.02), u0=u0, on_sample=lambda i, t, u: seen.append((i, t)))
        assert seen == [(0, 0.0), (1, 0.01), (2, 0.02)]

    def test_init_selectors(self, g16, tmp_path):
        assert energy(SolverConfig(g16, init="zero").initial_field()) == 0
        assert energy(SolverConfig(g16, init="shear", init_args={"amplitude": 2}).initial_field()) == pytest.approx(
            4 * energy(shear(g16)))
        u = SolverConfig(g16, init="random_divfree", init_args={"band": (1, 3), "amplitude": 3}, seed=5).initial_field()
        assert energy(u) == pytest.approx(9, rel=1e-12)
        write_snapshot(tmp_path / "u.lpns", u)
        back = SolverConfig(g16, init="file", init_args={"path": str(tmp_path / "u.lpns")}).initial_field()
        assert np.array_equal(back.coeffs, u.coeffs)
        with pytest.raises(ValueError):
            SolverConfig(make_grid(8), init="file", init_args={"path": str(tmp_path / "u.lpns")}).initial_field()

    @pytest.mark.parametrize("kw", [dict(viscosity=-1), dict(dt=0), dict(t_end=-1), dict(output_stride=0),
                                    dict(cfl_safety=1.5), dict(cfl_safety=0)])
    def test_config_rejects(self, g8, kw):
        with pytest.raises(ValueError):
            SolverConfig(g8, **kw)


class TestEnergyReport:
    def test_running_integral_quadratic_exact(self):
        t = np.linspace(0, 2, 41)
        y = 3 * t**2 - t + 1
        exact = t**3 - t**2 / 2 + t
        assert np.abs(running_integral(t, y, True) - exact).max() <= 1e-13
        assert np.abs(running_integral(t, y, False) - exact).max() > 1e-4

    def test_running_integral_fourth_order(self):
        errs = []
        for n in (21, 41, 81):
            t = np.linspace(0, 1, n)
            errs.append(abs(running_integral(t, np.exp(-3 * t), True)[-1] - (1 - math.exp(-3)) / 3))
        orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert min(orders) >= 3.5, orders

    def test_stokes_residual(self, g16):
        traj = simulate(SolverConfig(g16, init="shear", dt=1e-2, t_end=1.0, output_stride=100))
        rep = energy_report(traj)
        assert max(abs(r["relative_residual"]) for r in rep) <= 1e-8

    def test_taylor_green_residual_16(self, g16):
        traj = simulate(SolverConfig(g16, dt=1e-3, t_end=1.0, output_stride=1000))
        rep = energy_report(traj)
        assert max(abs(r["relative_residual"]) for r in rep) <= 1e-6
        assert rep[0]["residual"] == 0.0

    def test_inviscid_report_is_energy_drift(self, g16):
        traj = simulate(SolverConfig(g16, viscosity=0.0, dt=1e-2, t_end=0.2))
        rep = energy_report(traj)
        assert max(abs(r["relative_residual"]) for r in rep) <= 1e-8


def fft_gradients(u):
    """G[i][j] = d_i u^j on the samples by hand (numpy.fft, Nyquist zeroed, 2/3 input)."""
    g = u.grid
    ks = []
    for n in g.n:
        k = np.array([i if i < n // 2 else (0 if i == n // 2 else i - n) for i in range(n)], float)
        ks.append(k / g.box_length)
    K = np.meshgrid(*ks, indexing="ij")
    keep = np.ones(g.shape, bool)
    for ax, n in enumerate(g.n):
        shape = [1, 1, 1]
        shape[ax] = n
        keep &= (np.abs(int_freqs(n)) < n / 3).reshape(shape)
    c = [u.coeffs[j] * keep * g.size for j in range(3)]
    return [[np.fft.ifftn(1j * K[i] * c[j]).real for j in range(3)] for i in range(3)]


class TestBudgets:
    def test_shear_terms_vanish(self, g16):
        b = gradh_budget(shear(g16))
        for v in (b.E1, b.E2, b.E3, b.E4, *b.J.values()):
            assert abs(v) <= 1e-14
        assert b.E3 == b.E4_displayed

    def test_quadrature_oracle(self, g16):
        u = run(taylor_green(g16, 2.0), 1e-2, 0.3, 1.0)
        G = fft_gradients(u)
        w = g16.volume / g16.size
        H = (0, 1)
        E1 = -w * sum(np.sum(G[i][l] * G[l][m] * G[i][m]) for i in H for l in H for m in H)
        E2 = -w * sum(np.sum(G[i][l] * G[l][2] * G[i][2]) for i in H for l in H)
        J = {(i + 1, l + 1): w * np.sum(G[i][2] * G[2][l] * G[i][l]) for i in H for l in H}
        E4 = -w * sum(np.sum(G[i][2] * G[2][2] * G[i][2]) for i in H)
        b = gradh_budget(u)
        scale = abs(b.gradh_h1)
        assert abs(b.E1 - E1) <= 1e-12 * scale
        assert abs(b.E2 - E2) <= 1e-12 * scale
        assert abs(b.E4 - E4) <= 1e-12 * scale
        for key, val in J.items():
            assert abs(b.J[key] - val) <= 1e-12 * scale
        assert b.E3 == pytest.approx(-sum(J.values()), abs=1e-12 * scale)
        gl2 = w * sum(np.sum(G[i][j] ** 2) for i in H for j in range(3))
        assert b.gradh_l2 == pytest.approx(gl2, rel=1e-12)

    @pytest.mark.parametrize("which", ["gradh", "grad"])
    def test_time_derivative_balance(self, g16, which):
        nu, dt = 1.0, 1e-3
        us = [taylor_green(g16, 1.0)]
        for _ in range(120):
            us.append(step(us[-1], dt, nu))
        worst = 0.0
        for idx in (1, 40, 80, 119):
            if which == "gradh":
                q = [gradh_budget(us[idx + d]).gradh_l2 for d in (-1, 1)]
                rate = gradh_budget(us[idx]).rate(nu)
            else:
                q = [grad_budget(us[idx + d]).grad_l2 for d in (-1, 1)]
                rate = grad_budget(us[idx]).rate(nu)
            fd = (q[1] - q[0]) / (2 * dt) / 2
            worst = max(worst, abs(fd - rate) / abs(rate))
        assert worst <= 1e-4

    def test_diagnostics(self, g16):
        u = taylor_green(g16, 1.0)
        assert enstrophy(u) == pytest.approx(3 * energy(u), rel=1e-13)
        assert max_divergence(u) <= 1e-14
        v = VectorField.from_physical(g16, np.stack([np.sin(g16.mesh()[0]), *np.zeros((2,) + g16.shape)]))
        assert max_divergence(v) > 0.5

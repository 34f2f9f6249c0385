"""Blow-up criterion quantities along a trajectory.

For every sampled velocity the monitor evaluates

* log-weighted H^{1/2} norms of u^3 (directions h, v, min) at each E,
* anisotropic Besov norms B^{alpha, s_p - alpha}_{2,inf} of d_3 u^3 and
  B^{beta, s_m - beta}_{2,inf} of omega^3, with s_p = 2/p - 1/2,
* isotropic Besov norms B^{3/q + 2/p - 2}_{q,inf} of the same two fields,

their running time integrals (trapezoidal, at the sampling cadence) and an
exponential Gronwall envelope for ||grad u(t)||^2.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .norms import aniso_besov, besov, log_half
from .solver import enstrophy, running_integral
from .spectral import VectorField, derivative
from .vectorcalc import vorticity3

log = logging.getLogger(__name__)

GRONWALL_SLACK = 1e-3
_EDGE = 1e-12

TORUS_NOTICE = (
    "Computed on the periodic box [0, 2*pi*L)^3. The criteria concern solutions on R^3; "
    "torus trajectories are a surrogate and are not claimed to approximate whole-space dynamics."
)
CONTRAPOSITIVE_NOTICE = (
    "Smooth periodic runs never reach a blow-up time. These series evidence only the "
    "contrapositive direction: finite criterion integrals go together with bounded ||grad u||^2."
)


class ParameterError(ValueError):
    """Parameters outside an admissible range; the message names the constraint."""


class MonotonicityError(RuntimeError):
    """A running integral decreased; this is an internal error."""


def s_p(p: float) -> float:
    return 2.0 / p - 0.5


def _in_closed(x, lo, hi) -> bool:
    return lo - _EDGE <= x <= hi + _EDGE


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return "inf" if x == math.inf else f"{x:g}"


def validate_params(kind: str, params: dict) -> dict:
    """Check a criterion or lemma parameter set and derive its exponents.

    kinds:
      ``aniso_besov``   (p, alpha): p in [2, 4], alpha in [0, 2/p - 1/2]
      ``neg_besov``     (q, p): q in [3, inf), 3/q + 2/p in ]1, 2[
      ``aniso_lemma``   (p, alpha): p in ]2, 4[, alpha in ]0, 2/p - 1/2[
      ``neg_lemma``     (q, p): q, p in [1, inf], 3/q + 2/p in ]1, 2[
      ``log_half``      (E,): E > 0
    """
    try:
        vals = {k: float(v) for k, v in params.items()}
    except (TypeError, ValueError):
        raise ParameterError(f"{kind}: parameters must be numbers, got {params!r}") from None
    if any(math.isnan(v) for v in vals.values()):
        raise ParameterError(f"{kind}: NaN parameter in {params!r}")

    def need(*names):
        missing = [n for n in names if n not in vals]
        if missing:
            raise ParameterError(f"{kind}: missing parameter(s) {missing}")

    if kind in ("aniso_besov", "aniso_lemma"):
        need("p", "alpha")
        p, a = vals["p"], vals["alpha"]
        sp = s_p(p) if math.isfinite(p) and p > 0 else math.nan
        if kind == "aniso_besov":
            if not _in_closed(p, 2, 4):
                raise ParameterError(f"p = {_fmt(p)} violates p in [2, 4]")
            if not _in_closed(a, 0, sp):
                raise ParameterError(
                    f"alpha = {_fmt(a)} violates alpha in [0, 2/p - 1/2] = [0, {sp:g}] for p = {_fmt(p)}")
        else:
            if not 2 < p < 4:
                raise ParameterError(f"p = {_fmt(p)} violates p in ]2, 4[")
            if not 0 < a < sp:
                raise ParameterError(
                    f"alpha = {_fmt(a)} violates alpha in ]0, 2/p - 1/2[ = ]0, {sp:g}[ for p = {_fmt(p)}")
        a = min(max(a, 0.0), sp)
        return {"p": p, "alpha": a, "s_p": sp, "t_h": a, "s_v": sp - a}

    if kind in ("neg_besov", "neg_lemma"):
        need("q", "p")
        q, p = vals["q"], vals["p"]
        if kind == "neg_besov":
            if not (3 - _EDGE <= q < math.inf):
                raise ParameterError(f"q = {_fmt(q)} violates q in [3, inf[")
        elif not (q >= 1 and q <= math.inf):
            raise ParameterError(f"q = {_fmt(q)} violates q in [1, inf]")
        if not (p >= 1 and p <= math.inf):
            raise ParameterError(f"p = {_fmt(p)} violates p in [1, inf]")
        total = 3.0 / q + 2.0 / p
        if not 1 < total < 2:
            raise ParameterError(f"(q, p) = ({_fmt(q)}, {_fmt(p)}): 3/q + 2/p = {total:g} violates 3/q + 2/p in ]1, 2[")
        return {"q": q, "p": p, "regularity": total - 2.0}

    if kind == "log_half":
        need("E")
        E = vals["E"]
        if not (E > 0 and math.isfinite(E)):
            raise ParameterError(f"E = {_fmt(E)} violates E > 0")
        return {"E": E}

    raise ParameterError(f"unknown parameter kind {kind!r}")


@dataclass
class CriteriaConfig:
    log_E: list = field(default_factory=lambda: [1.0, 10.0])
    p_alpha: list = field(default_factory=lambda: [(2.0, 0.25), (4.0, 0.0)])
    m_beta: list | None = None  # defaults to p_alpha
    qp: list = field(default_factory=lambda: [(3.0, 3.0)])
    c_gronwall: float | str = "fit"

    def normalized(self) -> dict:
        """Validated parameter sets; raises :class:`ParameterError`."""
        mb = self.p_alpha if self.m_beta is None else self.m_beta
        cg = self.c_gronwall
        if cg != "fit":
            cg = float(cg)
            if not (cg >= 0 and math.isfinite(cg)):
                raise ParameterError(f"c_gronwall = {cg!r} must be a finite non-negative number or 'fit'")
        return {
            "log_E": [validate_params("log_half", {"E": e})["E"] for e in self.log_E],
            "p_alpha": [validate_params("aniso_besov", {"p": p, "alpha": a}) for p, a in self.p_alpha],
            "m_beta": [validate_params("aniso_besov", {"p": m, "alpha": b}) for m, b in mb],
            "qp": [validate_params("neg_besov", {"q": q, "p": p}) for q, p in self.qp],
            "c_gronwall": cg,
        }


def _name(prefix: str, **kw) -> str:
    return prefix + "[" + ",".join(f"{k}={_fmt(v)}" for k, v in kw.items()) + "]"


def sample_norms(u: VectorField, params: dict) -> dict:
    """All configured criterion norms of one velocity sample."""
    u3 = u.component(3)
    d3u3 = derivative(u3, 3)
    w3 = vorticity3(u)
    out = {}
    for E in params["log_E"]:
        for d in ("h", "v", "min"):
            out[_name("loghalf_u3", dir=d, E=E)] = log_half(u3, d, E)
    for pa in params["p_alpha"]:
        out[_name("anisob_d3u3", p=pa["p"], alpha=pa["alpha"])] = aniso_besov(d3u3, pa["t_h"], pa["s_v"], 2, np.inf)
    for mb in params["m_beta"]:
        out[_name("anisob_w3", m=mb["p"], beta=mb["alpha"])] = aniso_besov(w3, mb["t_h"], mb["s_v"], 2, np.inf)
    for qp in params["qp"]:
        s = qp["regularity"]
        out[_name("negb_d3u3", q=qp["q"], p=qp["p"])] = besov(d3u3, s, qp["q"], np.inf)
        out[_name("negb_w3", q=qp["q"], p=qp["p"])] = besov(w3, s, qp["q"], np.inf)
    out["grad_l2_sq"] = enstrophy(u)
    return out


def fit_gronwall_constant(z0: float, z, integral) -> float:
    """Smallest C >= 0 with z(t) <= z0 exp(C I(t)) at every sample.

    Returns inf when growth occurs while I(t) = 0.
    """
    c = 0.0
    for zt, it in zip(z, integral):
        if zt <= z0 * (1 + GRONWALL_SLACK):
            continue
        if it <= 0 or z0 <= 0:
            return math.inf
        c = max(c, math.log(zt / z0) / it)
    return c


@dataclass
class CriterionReport:
    times: list
    series: dict
    integrals: dict
    gronwall: list
    params: dict

    def check_monotone(self):
        for name, vals in self.integrals.items():
            v = np.asarray(vals)
            if np.any(np.diff(v) < 0):
                raise MonotonicityError(f"running integral {name} decreases")

    @property
    def all_finite(self) -> bool:
        vals = [v for s in self.series.values() for v in s] + [v for s in self.integrals.values() for v in s]
        return bool(np.all(np.isfinite(vals)))

    @property
    def gronwall_ok(self) -> bool:
        return all(g["dominates"] for g in self.gronwall)

    def to_dict(self) -> dict:
        return {
            "times": self.times,
            "series": self.series,
            "integrals": self.integrals,
            "gronwall": self.gronwall,
            "params": self.params,
            "all_finite": self.all_finite,
            "gronwall_dominates": self.gronwall_ok,
        }

    def csv_rows(self) -> tuple[list, list]:
        names = list(self.series) + [f"int_{k}" for k in self.integrals] + [f"gronwall_{g['pair']}" for g in self.gronwall]
        rows = []
        for i, t in enumerate(self.times):
            row = [t] + [self.series[k][i] for k in self.series] + [self.integrals[k][i] for k in self.integrals]
            row += [g["bound"][i] for g in self.gronwall]
            rows.append(row)
        return ["t"] + names, rows


def criteria_series(times, velocities, config: CriteriaConfig) -> CriterionReport:
    """Criterion series, running integrals and Gronwall envelopes.

    ``velocities`` is a sequence (or iterable) of VectorFields sampled at
    ``times``.
    """
    params = config.normalized()
    times = [float(t) for t in times]
    if len(times) == 0:
        raise ValueError("trajectory has no snapshots")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("snapshot times must increase strictly")
    rows = []
    for u in velocities:
        rows.append(sample_norms(u, params))
    if len(rows) != len(times):
        raise ValueError(f"missing snapshots: {len(rows)} fields for {len(times)} times")
    series = {k: [r[k] for r in rows] for k in rows[0]}

    integrals = {}
    powered = {}
    for pa in params["p_alpha"]:
        k = _name("anisob_d3u3", p=pa["p"], alpha=pa["alpha"])
        powered[k] = np.asarray(series[k]) ** pa["p"]
    for mb in params["m_beta"]:
        k = _name("anisob_w3", m=mb["p"], beta=mb["alpha"])
        powered[k] = np.asarray(series[k]) ** mb["p"]
    for qp in params["qp"]:
        for base in ("negb_d3u3", "negb_w3"):
            k = _name(base, q=qp["q"], p=qp["p"])
            powered[k] = np.asarray(series[k]) ** qp["p"]
    for k, v in powered.items():
        integrals[k] = [float(x) for x in running_integral(times, v)]

    z = np.asarray(series["grad_l2_sq"])
    gron = []
    for pa in params["p_alpha"]:
        for mb in params["m_beta"]:
            ka = _name("anisob_d3u3", p=pa["p"], alpha=pa["alpha"])
            kb = _name("anisob_w3", m=mb["p"], beta=mb["alpha"])
            total = np.asarray(integrals[ka]) + np.asarray(integrals[kb])
            c = params["c_gronwall"]
            fitted = c == "fit"
            if fitted:
                c = fit_gronwall_constant(z[0], z, total)
            with np.errstate(over="ignore", invalid="ignore"):
                bound = z[0] * np.exp(c * total) if math.isfinite(c) else np.where(total > 0, np.inf, z[0])
            dominates = bool(np.all(z <= bound * (1 + GRONWALL_SLACK) + 1e-300))
            gron.append({
                "pair": f"{ka}+{kb}",
                "c_gronwall": c if math.isfinite(c) else "inf",
                "c_fitted": fitted,
                "bound": [float(b) for b in bound],
                "measured": [float(x) for x in z],
                "dominates": dominates,
            })
    report = CriterionReport(times, series, integrals, gron, {
        "log_E": params["log_E"],
        "p_alpha": [[d["p"], d["alpha"], d["s_p"]] for d in params["p_alpha"]],
        "m_beta": [[d["p"], d["alpha"], d["s_p"]] for d in params["m_beta"]],
        "qp": [[d["q"], d["p"], d["regularity"]] for d in params["qp"]],
        "c_gronwall": params["c_gronwall"],
        "gronwall_slack": GRONWALL_SLACK,
    })
    report.check_monotone()
    log.info("criteria: %d samples, %d series", len(times), len(series))
    return report

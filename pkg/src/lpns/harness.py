"""Empirical-constant harness for the functional inequalities.

Every lemma is evaluated on an ensemble of band-limited random fields.  For
each sample and parameter tuple the harness forms ``ratio = LHS / RHS`` with
the implicit constant removed, keeps the maximum per tuple and grid, and
compares grids.  Ensembles are grid independent (the same seed draws the same
function on every grid resolving the band), so grid drift is discretization
error only.

Pass rule: all ratios finite, no sample with RHS = 0 and LHS != 0, and the
max ratio per tuple changes by at most ``DRIFT_LIMIT`` between grids.  The
L^inf_v(H^s_h) bound carries an explicit constant sqrt(2) and is also
compared against it with 5% slack.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dyadic import build_bank
from .norms import aniso_besov, aniso_sobolev, besov, block_norms, sobolev
from .paraproduct import good_bad_split, sharp_flat_split
from .solver import random_coeffs
from .spectral import FourierGrid, ScalarField, dealiased_product, derivative, make_grid, mixed_lebesgue_norm
from .vectorcalc import riesz_apply

log = logging.getLogger(__name__)

LEMMA_IDS = ("B1", "B2", "B3", "B4", "B5", "B6", "B7", "L2.2", "L2.3", "RIESZ")
DRIFT_LIMIT = 2.0
EXPLICIT_B4 = math.sqrt(2.0)
EXPLICIT_SLACK = 1.05
TRILINEAR_EPS = 0.1
DEFAULT_BAND = (1, 5)
_ZERO = 1e-13


class UnknownLemmaError(ValueError):
    pass


def _rng(seed: int, sample: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, sample, stream])


def random_field(grid: FourierGrid, seed: int, sample: int, stream: int = 0, band=DEFAULT_BAND) -> ScalarField:
    """Unit-L^2 real field with Gaussian coefficients on ``band``."""
    f = ScalarField(grid, random_coeffs(grid, _rng(seed, sample, stream), band, 1)[0])
    return f * (1.0 / f.l2())


def _lp_norm(f: ScalarField, p: float) -> float:
    return mixed_lebesgue_norm(f, "h", p, p)


def _multiplier(f: ScalarField, symbol) -> ScalarField:
    return f.with_coeffs(f.coeffs * symbol)


def _h_power(f: ScalarField, s: float) -> ScalarField:
    """|nabla_h|^s f (zero on k_h = 0 for s > 0)."""
    kh = f.grid.kh_abs
    with np.errstate(divide="ignore"):
        sym = np.where(kh > 0, kh ** s, 0.0 if s > 0 else 1.0)
    return _multiplier(f, sym)


def _grad_h_l2(f: ScalarField) -> float:
    return float(np.hypot(derivative(f, 1).l2(), derivative(f, 2).l2()))


def _without_plane_means(f: ScalarField) -> ScalarField:
    return _multiplier(f, f.grid.kh_abs > 0)


# -- per-lemma evaluators ---------------------------------------------------
#
# Each evaluator maps (grid, seed, sample) to a list of
# (tuple_label, lhs, rhs) triples.

def _b1(grid, seed, i):
    """Bernstein: derivative and integrability gains on dyadic supports."""
    f = random_field(grid, seed, i)
    bank = build_bank(grid)
    out = []
    for k in bank.indices("h"):
        a = _multiplier(f, bank.multiplier("h", k))
        if a.l2() == 0:
            continue
        d1 = derivative(a, 1)
        d2 = derivative(a, 2)
        # ball, alpha = (1, 0), L^2_h(L^2_v) <- L^2_h(L^2_v)
        out.append(("ball_h:alpha=(1,0),p1=2,p2=2,q=2", d1.l2(), 2.0**k * a.l2()))
        # ball, alpha = (0, 1), L^inf_h(L^2_v) <- L^2_h(L^2_v)
        out.append(("ball_h:alpha=(0,1),p1=inf,p2=2,q=2", mixed_lebesgue_norm(d2, "h", np.inf, 2),
                    2.0 ** (2 * k) * a.l2()))
        # ball, alpha = (1, 0), L^4_h(L^inf_v) <- L^2_h(L^inf_v)
        out.append(("ball_h:alpha=(1,0),p1=4,p2=2,q=inf", mixed_lebesgue_norm(d1, "h", 4, np.inf),
                    2.0 ** (k * 1.5) * mixed_lebesgue_norm(a, "h", 2, np.inf)))
        # ring, N = 1
        out.append(("ring_h:N=1,p=2,q=2", a.l2(), 2.0**-k * max(d1.l2(), d2.l2())))
    for q in bank.indices("v"):
        a = _multiplier(f, bank.multiplier("v", q))
        if a.l2() == 0:
            continue
        d3 = derivative(a, 3)
        # ball, beta = 1, L^2_h(L^inf_v) <- L^2_h(L^2_v)
        out.append(("ball_v:beta=1,p=2,q1=inf,q2=2", mixed_lebesgue_norm(d3, "h", 2, np.inf),
                    2.0 ** (q * 1.5) * a.l2()))
        out.append(("ring_v:N=1,p=2,q=2", a.l2(), 2.0**-q * d3.l2()))
    return out


PRODUCT_TUPLES = (
    # p1, p2, q, s1, s2, sigma1, sigma2
    (2.0, 2.0, 2.0, 0.5, 0.5, 0.25, 0.25),
    (2.0, 2.0, 1.0, 1.0, 0.5, 0.5, 0.25),
    (2.0, 2.0, np.inf, 0.75, -0.25, 0.25, 0.0),
    (4.0, 2.0, 2.0, 0.25, 0.5, 0.1, 0.25),
    (2.0, 2.0, 2.0, 0.5, 0.25, 0.4, -0.1),
)


def product_tuple_admissible(p1, p2, q, s1, s2, sig1, sig2) -> bool:
    closed = q == 1

    def lt(a, b):
        return a <= b if closed else a < b

    return (p1 >= p2 >= 1 and 1 / p1 + 1 / p2 <= 1 and lt(s1, 2 / p1) and lt(s2, 2 / p2) and s1 + s2 > 0
            and lt(sig1, 1 / p1) and lt(sig2, 1 / p2) and sig1 + sig2 > 0)


def _ab(f, s, sig, p, q):
    return aniso_besov(f, s, sig, p, q, p, q)


def _b2(grid, seed, i):
    a = random_field(grid, seed, i, 0)
    b = random_field(grid, seed, i, 1)
    ab = dealiased_product(a, b)
    out = []
    for p1, p2, q, s1, s2, g1, g2 in PRODUCT_TUPLES:
        label = f"p1={p1:g},p2={p2:g},q={q:g},s=({s1:g},{s2:g}),sigma=({g1:g},{g2:g})"
        lhs = _ab(ab, s1 + s2 - 2 / p2, g1 + g2 - 1 / p2, p1, q)
        rhs = _ab(a, s1, g1, p1, q) * _ab(b, s2, g2, p2, q)
        out.append((label, lhs, rhs))
    return out


EMBEDDING_TUPLES = ((1.0, 0.5, 2.0, 2.0), (0.5, 0.25, 2.0, np.inf), (1.0, 0.25, 4.0, 2.0), (0.75, 0.5, 3.0, 1.0))


def _b3(grid, seed, i):
    f = random_field(grid, seed, i)
    out = []
    for s, th, p, q in EMBEDDING_TUPLES:
        lhs = aniso_besov(f, s - th, th, p, q, p, 1.0)
        out.append((f"s={s:g},theta={th:g},p={p:g},q={q:g}", lhs, besov(f, s, p, q)))
    return out


def _b4(grid, seed, i):
    f = random_field(grid, seed, i)
    out = []
    for s in (0.5, 0.75):
        lhs = mixed_lebesgue_norm(_h_power(f, s), "v", np.inf, 2)
        out.append((f"s={s:g}", lhs, sobolev(f, 0.5 + s)))
    return out


def interpolation_cut(f: ScalarField, p: float) -> tuple[float, float]:
    """Both sides of the two-term dyadic bound at the optimal cut N.

    lhs = sum_{j <= N} 2^{2j/p} |D_j f| + sum_{j > N} 2^{j(2/p - 1)} |D_j grad f|
    rhs = 2^{2N/p} |f| + 2^{(2/p - 1) N} |grad f|
    with 2^N = ((1 - 2/p) / (2/p)) |grad f| / |f|, all norms L^2.
    """
    g = f.grid
    bank = build_bank(g)
    blocks = block_norms(f, "iso", 2, bank)
    power = np.abs(f.coeffs) ** 2
    grad_blocks = {j: math.sqrt(g.volume * float(np.sum(bank.multiplier("iso", j) ** 2 * g.k_abs**2 * power)))
                   for j in blocks}
    f2 = f.l2()
    grad = sobolev(f, 1.0)
    r = 2.0 / p
    n_cut = math.log2((1 - r) / r * grad / f2)
    lhs = sum(2.0 ** (j * r) * blocks[j] if j <= n_cut else 2.0 ** (j * (r - 1)) * grad_blocks[j] for j in blocks)
    rhs = 2.0 ** (r * n_cut) * f2 + 2.0 ** ((r - 1) * n_cut) * grad
    return lhs, rhs


def _b5(grid, seed, i):
    f = random_field(grid, seed, i)
    out = []
    for p in (3.0, 4.0, 6.0):
        r = 2.0 / p
        out.append((f"p={p:g}", besov(f, r, 2, 1), sobolev(f, 1.0) ** r * f.l2() ** (1 - r)))
        lhs, rhs = interpolation_cut(f, p)
        out.append((f"cut:p={p:g}", lhs, rhs))
    return out


GOOD_TUPLES = ((0.0, 0.0), (0.5, 0.5), (-0.5, 1.0), (1.0, 0.25))


def _b6(grid, seed, i):
    f = _without_plane_means(random_field(grid, seed, i))
    good, _ = good_bad_split(f)
    d3g = derivative(good, 3)
    gh = (derivative(f, 1), derivative(f, 2))
    out = []
    for s, t in GOOD_TUPLES:
        rhs = math.hypot(*(aniso_sobolev(x, s, t) for x in gh))
        out.append((f"s={s:g},t={t:g}", aniso_sobolev(d3g, s, t), rhs))
    return out


BAD_E = (1.0, 10.0, 100.0)


def _b7(grid, seed, i):
    f = random_field(grid, seed, i)
    bank = build_bank(grid)
    grad_h = _grad_h_l2(f)
    vq = list(bank.indices("v"))
    # envelope c_q |grad_h f| = (sum_{|i| <= 1} |D^v_{q+i} grad_h f|^2)^{1/2}
    gh = {q: _grad_h_l2(_multiplier(f, bank.multiplier("v", q))) for q in vq}
    env = {q: math.sqrt(sum(gh.get(q + d, 0.0) ** 2 for d in (-1, 0, 1))) for q in vq}
    out = []
    for E in BAD_E:
        _, sharp = sharp_flat_split(f, E)
        _, bad = good_bad_split(sharp)
        for q in vq:
            lg = math.sqrt(math.log(E * 2.0**q + math.e))
            piece = _multiplier(bad, bank.multiplier("v", q))
            out.append((f"bad1:E={E:g}", mixed_lebesgue_norm(piece, "v", 2, np.inf), lg * env[q]))
            low = _multiplier(bad, bank.lowpass_multiplier("v", q - 1))
            out.append((f"bad2:E={E:g}", mixed_lebesgue_norm(low, "v", np.inf, np.inf),
                        lg * 2.0 ** (q / 2) * grad_h))
    return out


def optimal_split_constant(A: float, B: float, F: float, G: float, p: float, eps: float = TRILINEAR_EPS) -> float:
    """Smallest C with mu A <= eps B + C mu^p F^p G for every mu > 0.

    Equals (p-1)^{p-1} / (p^p eps^{p-1}) * A^p / (B^{p-1} F^p G).
    """
    if A == 0:
        return 0.0
    if F == 0 or G == 0:
        return math.inf
    if p == 1:
        return A / (F * G)
    if B == 0:
        return math.inf
    log_c = ((p - 1) * math.log(p - 1) - p * math.log(p) - (p - 1) * math.log(eps)
             + p * math.log(A) - (p - 1) * math.log(B) - p * math.log(F) - math.log(G))
    return math.exp(log_c)


TRILINEAR_ANISO = ((2.5, 0.15), (3.0, 1.0 / 12.0), (3.5, 1.0 / 28.0))
TRILINEAR_NEG = ((3.0, 3.0), (4.0, 2.5), (6.0, 2.0), (3.0, 6.0))


def _trilinear(grid, seed, i, tuples, fnorm):
    f = random_field(grid, seed, i, 0)
    g = random_field(grid, seed, i, 1)
    gp = g.physical()
    # exact quadrature: three band-limited factors stay below the grid Nyquist
    A = abs(grid.volume / grid.size * float(np.sum(f.physical() * gp * gp)))
    B = sobolev(g, 1.0) ** 2
    G = g.l2() ** 2
    out = []
    for a, b in tuples:
        label, p, F = fnorm(f, a, b)
        c = optimal_split_constant(A, B, F, G, p)
        # reported as lhs / rhs with rhs = 1 so that the ratio is C itself
        out.append((label, c, 1.0 if math.isfinite(c) else 0.0))
    return out


def _l22(grid, seed, i):
    def fnorm(f, p, alpha):
        sp = 2.0 / p - 0.5
        return f"p={p:g},alpha={alpha:.6g}", p, aniso_besov(f, alpha, sp - alpha, 2, np.inf)

    return _trilinear(grid, seed, i, TRILINEAR_ANISO, fnorm)


def _l23(grid, seed, i):
    def fnorm(f, q, p):
        return f"q={q:g},p={p:g}", p, besov(f, 3.0 / q + 2.0 / p - 2.0, q, np.inf)

    return _trilinear(grid, seed, i, TRILINEAR_NEG, fnorm)


RIESZ_Q = (1.5, 2.0, 3.0, 4.0)


def _riesz(grid, seed, i):
    f = _without_plane_means(random_field(grid, seed, i))
    out = []
    for which in ("curl", "grad"):
        for a in (1, 2):
            for b in (1, 2):
                rf = riesz_apply(f, a, b, which)
                for q in RIESZ_Q:
                    out.append((f"{which}:i={a},j={b},q={q:g}", _lp_norm(rf, q), _lp_norm(f, q)))
    return out


_EVALUATORS = {"B1": _b1, "B2": _b2, "B3": _b3, "B4": _b4, "B5": _b5, "B6": _b6, "B7": _b7,
               "L2.2": _l22, "L2.3": _l23, "RIESZ": _riesz}


# -- reports ----------------------------------------------------------------

@dataclass
class TupleResult:
    label: str
    grid: tuple
    max_ratio: float
    attained_by: int
    violations: list = field(default_factory=list)


@dataclass
class HarnessReport:
    lemma: str
    samples: int
    seed: int
    grids: list
    band: tuple
    results: list
    drift: dict
    max_ratio: float
    passed: bool
    reasons: list
    explicit_constant: float | None = None

    def to_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "samples": self.samples,
            "seed": self.seed,
            "grids": [list(g) for g in self.grids],
            "band": list(self.band),
            "tuples": [{"label": r.label, "grid": list(r.grid), "max_ratio": _jsonable(r.max_ratio),
                        "attained_by_sample": r.attained_by, "violations": r.violations} for r in self.results],
            "drift": {k: _jsonable(v) for k, v in self.drift.items()},
            "drift_limit": DRIFT_LIMIT,
            "max_ratio": _jsonable(self.max_ratio),
            "explicit_constant": self.explicit_constant,
            "explicit_bound": None if self.explicit_constant is None else self.explicit_constant * EXPLICIT_SLACK,
            "passed": self.passed,
            "reasons": self.reasons,
        }


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else "nan"
    return x


def _ratio(lhs: float, rhs: float) -> tuple[float, bool]:
    """(ratio, violated); RHS = 0 with LHS != 0 is a violation."""
    if rhs > 0:
        return lhs / rhs, False
    if abs(lhs) <= _ZERO:
        return 0.0, False
    return math.inf, True


def _grid_list(grids) -> list:
    out = []
    for g in grids:
        out.append(g if isinstance(g, FourierGrid) else make_grid(g))
    return out


def verify_lemma(lemma: str, grids=(16, 32), samples: int = 100, seed: int = 0, jobs: int = 1) -> HarnessReport:
    """Empirical constants of one inequality over a seeded ensemble.

    ``grids`` is a sequence of grid sizes (ints, triples or FourierGrids);
    drift is measured between consecutive grids.
    """
    if lemma not in _EVALUATORS:
        raise UnknownLemmaError(f"unknown lemma id {lemma!r}; expected one of {', '.join(LEMMA_IDS)}")
    if samples < 1:
        raise ValueError(f"samples must be positive, got {samples}")
    glist = _grid_list(grids)
    for g in glist:
        if max(DEFAULT_BAND) > min(g.n) // 2 - 1:
            raise ValueError(f"grid {g.n} does not resolve the sampling band {DEFAULT_BAND}")
    evaluator = _EVALUATORS[lemma]
    results: list[TupleResult] = []
    per_grid: list[dict] = []
    for g in glist:
        def run(i, g=g):
            return evaluator(g, seed, i)

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(run, range(samples)))
        else:
            rows = [run(i) for i in range(samples)]
        best: dict = {}
        for i, triples in enumerate(rows):
            for label, lhs, rhs in triples:
                r, bad = _ratio(lhs, rhs)
                cur = best.setdefault(label, TupleResult(label, g.n, 0.0, -1))
                if bad:
                    cur.violations.append(i)
                if r > cur.max_ratio or cur.attained_by < 0:
                    cur.max_ratio, cur.attained_by = r, i
        per_grid.append(best)
        results.extend(best.values())
        log.info("%s on %s: %d tuples", lemma, g.n, len(best))

    reasons = []
    for r in results:
        if r.violations:
            reasons.append(f"{r.label} on {r.grid}: RHS = 0 with LHS != 0 in samples {r.violations[:5]}")
        elif not math.isfinite(r.max_ratio):
            reasons.append(f"{r.label} on {r.grid}: non-finite ratio")
    drift = {}
    for a, b in zip(per_grid, per_grid[1:]):
        for label in sorted(set(a) | set(b)):
            ra = a[label].max_ratio if label in a else 0.0
            rb = b[label].max_ratio if label in b else 0.0
            if ra == rb:
                d = 1.0
            elif min(ra, rb) <= 0:
                d = math.inf
            else:
                d = max(ra / rb, rb / ra)
            key = label if len(per_grid) == 2 else f"{label}@{a[label].grid if label in a else ''}"
            drift[key] = max(d, drift.get(key, 0.0))
            if d > DRIFT_LIMIT:
                reasons.append(f"{label}: grid drift {d:.3g} exceeds {DRIFT_LIMIT:g}")
    max_ratio = max((r.max_ratio for r in results), default=0.0)
    explicit = None
    if lemma == "B4":
        explicit = EXPLICIT_B4
        if max_ratio > EXPLICIT_B4 * EXPLICIT_SLACK:
            reasons.append(f"max ratio {max_ratio:.6g} exceeds sqrt(2) * {EXPLICIT_SLACK}")
    return HarnessReport(lemma, samples, seed, [g.n for g in glist], DEFAULT_BAND, results, drift,
                         max_ratio, not reasons, reasons, explicit)

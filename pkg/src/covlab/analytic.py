"""Vacancy expectations gamma_t(B), their asymptotic expansions, and checks of two integral asymptotics.

gamma_t(B) = (t/|B|) * integral over B of p_t(x), where
p_t(x) = P[Poisson(mu_t(x)) <= k-1] and mu_t(x) = t f0 |B(x, r) cap A|.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln, logsumexp

from .geometry import (
    Ball,
    DomainPair,
    Polygon,
    Square,
    Torus,
    _slice_volume_array,
    ball_intersection_volume,
    slice_volume,
    unit_ball_volume,
)
from .limits import Setting, bracket
from .sampler import make_rng

__all__ = [
    "QuadratureError",
    "VacancyQuery",
    "poisson_lower_tail",
    "vacancy_probability",
    "gamma_quadrature",
    "gamma_mc",
    "moat_bulk_expansion",
    "lemexp_check",
    "predicted_probability",
]


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach its tolerance."""


def poisson_lower_tail(mu, k: int, log: bool = False):
    """P[Poisson(mu) <= k-1]; direct sum for mu <= 700, log-space above."""
    scalar = np.ndim(mu) == 0
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if np.any(mu < 0):
        raise ValueError("Poisson mean must be non-negative")
    out = np.empty_like(mu)
    small = mu <= 700.0
    if np.any(small):
        m = mu[small]
        term = np.ones_like(m)
        acc = np.ones_like(m)
        for j in range(1, k):
            term = term * m / j
            acc = acc + term
        val = np.exp(-m) * acc
        out[small] = np.log(val) if log else val
    if np.any(~small):
        m = mu[~small]
        j = np.arange(k)
        logs = logsumexp(-m[:, None] + j[None, :] * np.log(m)[:, None] - gammaln(j + 1)[None, :], axis=1)
        out[~small] = logs if log else np.exp(logs)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class VacancyQuery:
    pair: DomainPair
    t: float
    r: float
    k: int

    def __post_init__(self):
        if self.t <= 0 or self.r <= 0 or self.k < 1:
            raise ValueError("need t > 0, r > 0, k >= 1")

    def mu_t(self, x) -> np.ndarray | float:
        A = self.pair.A
        return self.t * A.f0 * ball_intersection_volume(A, x, self.r)

    @property
    def mu_bulk(self) -> float:
        A = self.pair.A
        return self.t * A.f0 * unit_ball_volume(A.d) * self.r**A.d

    @property
    def p_bulk(self) -> float:
        return poisson_lower_tail(self.mu_bulk, self.k)


def vacancy_probability(q: VacancyQuery, x) -> np.ndarray | float:
    """P[x is covered fewer than k times] under the Poisson X-process."""
    return poisson_lower_tail(q.mu_t(x), q.k)


# ---------------------------------------------------------------------------
# quadrature


def _quad(f, a, b, eabs, points=None):
    if b <= a:
        return 0.0
    pts = None
    if points is not None:
        pts = [p for p in points if a < p < b] or None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(f, a, b, epsabs=eabs, epsrel=1e-10, limit=400, points=pts)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"quadrature on [{a}, {b}] failed: {exc}") from exc
    return val


def _concentric(A: Ball, B: Ball) -> bool:
    return np.allclose(A.c, B.c, rtol=0, atol=1e-15)


def _radial_integral(q: VacancyQuery, A: Ball, RB: float, eabs: float) -> float:
    """Integral of p over the ball of radius RB concentric with A."""
    d, r, R = A.d, q.r, A.radius
    shell = d * unit_ball_volume(d)
    cut = R - r  # p is constant for s <= cut
    inner = max(min(cut, RB), 0.0)
    total = q.p_bulk * unit_ball_volume(d) * inner**d

    def f(s):
        mu = q.t * A.f0 * float(A.ball_volume_radial(np.array([s]), r)[0])
        return poisson_lower_tail(mu, q.k) * shell * s ** (d - 1)

    return total + _quad(f, inner, RB, eabs)


def _tail_scalar(mu: float, k: int) -> float:
    if mu > 700.0:
        return float(poisson_lower_tail(mu, k))
    term = acc = 1.0
    for j in range(1, k):
        term *= mu / j
        acc += term
    return math.exp(-mu) * acc


def _seg_unit(a: float) -> float:
    if a >= 1.0:
        return 0.0
    return math.pi / 2 - (a * math.sqrt(1.0 - a * a) + math.asin(a))


def _quad_unit(a: float, b: float) -> float:
    x1 = math.sqrt(max(1.0 - b * b, 0.0))

    def G(x):
        return 0.5 * (x * math.sqrt(max(1.0 - x * x, 0.0)) + math.asin(min(x, 1.0)))

    return max(G(x1) - G(a) - b * (x1 - a), 0.0)


def _square_disk_area_scalar(x: float, y: float, r: float, L: float) -> float:
    """Scalar twin of ``square_disk_area`` for the quadrature inner loops."""
    s = [max(x, 0.0) / r, max(L - x, 0.0) / r, max(y, 0.0) / r, max(L - y, 0.0) / r]
    area = math.pi
    for a in s:
        area -= _seg_unit(a)
    for a in s[:2]:
        for b in s[2:]:
            if a * a + b * b < 1.0:
                area += _quad_unit(a, b)
    return min(max(area, 0.0), math.pi) * r * r


def _square_integral(q: VacancyQuery, L: float, eabs: float) -> float:
    r, tf0 = q.r, q.t / (L * L)

    def p_at(x, y):
        return _tail_scalar(tf0 * _square_disk_area_scalar(x, y, r, L), q.k)

    h = L / 2
    if r < h:
        bulk = q.p_bulk * (L - 2 * r) ** 2
        edge = _quad(lambda a: p_at(a, h), 0.0, r, eabs / 8)

        def corner_inner(u):
            return _quad(lambda v: p_at(u, v), 0.0, r, eabs / 16, points=[math.sqrt(max(r * r - u * u, 0.0))])

        corner = _quad(corner_inner, 0.0, r, eabs / 8)
        return bulk + 4 * (L - 2 * r) * edge + 4 * corner

    # large radius: integrate a quarter of the square directly
    def quarter_inner(u):
        return _quad(lambda v: p_at(u, v), 0.0, h, eabs / 16, points=[math.sqrt(max(r * r - u * u, 0.0))])

    return 4 * _quad(quarter_inner, 0.0, h, eabs / 8)


def gamma_quadrature(q: VacancyQuery) -> float:
    """gamma_t(B) by dimension-reduced adaptive quadrature.

    Supports the torus, concentric balls, the disk/ball and the square; polygons
    go through ``gamma_mc``.
    """
    A, B = q.pair.A, q.pair.B
    volB = B.volume
    eabs = 1e-11 * volB / q.t
    if isinstance(A, Torus):
        return q.t * q.p_bulk
    if q.pair.interior_flag and q.r <= q.pair.boundary_gap():
        return q.t * q.p_bulk
    if isinstance(A, Ball) and isinstance(B, Ball) and _concentric(A, B):
        return q.t / volB * _radial_integral(q, A, B.radius, eabs)
    if isinstance(A, Square) and not q.pair.interior_flag:
        return q.t / volB * _square_integral(q, A.side, eabs)
    raise ValueError(f"gamma_quadrature does not support {type(A).__name__}/{type(B).__name__}; use gamma_mc")


# ---------------------------------------------------------------------------
# Monte Carlo over the moat


def _moat_pieces(A, r: float):
    """(measures, sampler, multiplicity) for pieces covering {x in A : dist(x, dA) < r}."""
    if isinstance(A, Ball):
        R, d, c = A.radius, A.d, A.c
        lo = max(R - r, 0.0)
        meas = np.array([unit_ball_volume(d) * (R**d - lo**d)])

        def samp(rng, idx):
            n = len(idx)
            g = rng.standard_normal((n, d))
            g /= np.sqrt(np.sum(g * g, axis=1))[:, None]
            s = (lo**d + rng.random(n) * (R**d - lo**d)) ** (1.0 / d)
            return c + g * s[:, None]

        return meas, samp, lambda x: np.ones(len(x))

    if isinstance(A, Polygon):
        V = A.V
        nv = len(V)
        origins, tangents, normals, lengths = [], [], [], []
        for i in range(nv):
            p, qv = V[i], V[(i + 1) % nv]
            e = qv - p
            ln = float(np.hypot(*e))
            tvec = e / ln
            origins.append(p)
            tangents.append(tvec)
            normals.append(np.array([-tvec[1], tvec[0]]))  # inward for CCW order
            lengths.append(ln)
        origins, tangents, normals = map(np.asarray, (origins, tangents, normals))
        lengths = np.asarray(lengths)
        reflex = np.asarray(A.reflex_vertices()).reshape(-1, 2)
        meas = np.concatenate([lengths * r, np.full(len(reflex), math.pi * r * r)])
        ne = nv

        def samp(rng, idx):
            out = np.empty((len(idx), 2))
            u1 = rng.random(len(idx))
            u2 = rng.random(len(idx))
            for i in range(ne):
                sel = idx == i
                out[sel] = origins[i] + (u1[sel] * lengths[i])[:, None] * tangents[i] + (u2[sel] * r)[:, None] * normals[i]
            for j, v in enumerate(reflex):
                sel = idx == ne + j
                rad = r * np.sqrt(u1[sel])
                ang = 2 * math.pi * u2[sel]
                out[sel] = v + np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
            return out

        def mult(x):
            m = np.zeros(len(x))
            for i in range(ne):
                rel = x - origins[i]
                s = rel @ tangents[i]
                u = rel @ normals[i]
                m += (s >= 0) & (s <= lengths[i]) & (u >= 0) & (u <= r)
            for v in reflex:
                m += np.sum((x - v) ** 2, axis=1) <= r * r
            return m

        return meas, samp, mult

    raise ValueError(f"no moat decomposition for {type(A).__name__}")


def gamma_mc(q: VacancyQuery, samples: int = 100_000, seed: int = 0, chunk: int = 200_000) -> tuple[float, float]:
    """Monte Carlo gamma_t(B) with the constant bulk handled exactly.

    Returns (estimate, standard error).  Only the moat is sampled; within it
    each piece is drawn in proportion to its measure and points covered by
    several pieces are down-weighted by their multiplicity.
    """
    if samples < 1000:
        raise ValueError("gamma_mc needs at least 1000 samples")
    A, B = q.pair.A, q.pair.B
    volB = B.volume
    pb = q.p_bulk
    if isinstance(A, Torus) or (q.pair.interior_flag and q.r <= q.pair.boundary_gap()):
        return q.t * pb, 0.0
    meas, samp, mult = _moat_pieces(A, q.r)
    W = float(meas.sum())
    probs = meas / W
    rng = make_rng(seed)
    s1 = 0.0
    s2 = 0.0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        idx = rng.choice(len(meas), size=n, p=probs) if len(meas) > 1 else np.zeros(n, dtype=int)
        x = samp(rng, idx)
        keep = np.asarray(A.contains(x), dtype=bool)
        if q.pair.interior_flag:
            keep &= np.asarray(B.contains(x), dtype=bool)
        f = np.zeros(n)
        if np.any(keep):
            xk = x[keep]
            p = poisson_lower_tail(q.t * A.f0 * np.atleast_1d(ball_intersection_volume(A, xk, q.r)), q.k)
            f[keep] = (p - pb) / mult(xk)
        s1 += float(f.sum())
        s2 += float((f * f).sum())
        done += n
    mean = s1 / samples
    var = max(s2 / samples - mean * mean, 0.0)
    est = q.t / volB * (pb * volB + W * mean)
    se = q.t / volB * W * math.sqrt(var / samples)
    return est, se


# ---------------------------------------------------------------------------
# asymptotic expansions


def moat_bulk_expansion(
    setting: Setting, t: float, beta: float, b_volume: float | None = None, refined: bool = True
) -> float:
    """Closed-form asymptotics of t E|V cap B| at r = r_t(beta), without remainders.

    Boundary regimes use B = A.  With ``refined=False`` the planar cases keep only
    the leading moat-plus-bulk terms; the default adds the explicit 1/log t terms
    of the moat integral and the exact bulk power series.  For d >= 3 both forms
    coincide.  For interior and torus regimes the value is |B| gamma with gamma
    from the interior power series; ``b_volume`` defaults to |A| = 1/f0.
    """
    if t <= math.e:
        raise ValueError("t must exceed e")
    L = math.log(t)
    LL = math.log(L)
    d, k = setting.d, setting.k
    j = k - 1
    eb = math.exp(-beta)
    volA = 1.0 / setting.f0
    if not setting.is_boundary:
        vb = volA if b_volume is None else float(b_volume)
        return vb * eb / math.factorial(j) * float(bracket(1.0, 1 + j * j * LL / L + j / L, j / L, beta))
    perim = setting.sigma_A * volA ** (1 - 1 / d)
    a = k - 2 + 1 / d
    lead = setting.c_dk * setting.f0 ** (-1 / d) * math.exp(-beta / 2) * perim
    # beta-linear brackets are floored exactly as in corrected_cdf
    if d >= 3:
        P = 1 + a * a * LL / ((1 - 1 / d) * L) + (4 * k - 4) / ((2 - 2 / d) * L)
        return lead * float(bracket(0.5, P, a / ((2 - 2 / d) * L), beta))
    # planar: moat plus bulk
    P0, Q0 = ((4 * k - 4) / L, a / L) if refined else (0.0, 0.0)
    if k == 1:
        moat = lead / math.sqrt(L) * float(bracket(0.5, 1 + P0, Q0, beta))
        bulk = volA * eb
    else:
        moat = lead * float(bracket(0.5, 1 + 2 * a * a * LL / L + P0, Q0, beta))
        if refined:
            base = max(L + (2 * k - 3) * LL + beta, 0.0)
            bulk = volA * eb / math.factorial(j) * L ** (3 - 2 * k) * base**j * (1 + j / L)
        elif k == 2:
            bulk = volA * eb * (1 + LL / L)
        else:
            bulk = 0.0
    return moat + bulk


def _h(a: float, d: int) -> float:
    return float(_slice_volume_array(np.array([a]), d)[0]) if d > 3 else slice_volume(a, d)


def lemexp_check(s: float, alpha0: float, ell: int, d: int, variant: str = "intest1") -> tuple[float, float, float]:
    """Compare theta_{d-1} int_0^1 e^{-s h(a)} g(a) da with its two-term expansion.

    variant "intest1": g = (alpha0 + h)^ell, expansion alpha0^ell/s + ell alpha0^(ell-1)/s^2.
    variant "intest2": g = (alpha0 + h)^ell (1 + ell/(s (alpha0 + h))),
    expansion alpha0^ell/s + 2 ell alpha0^(ell-1)/s^2.
    """
    if s <= 1 or alpha0 <= 0 or ell < 0:
        raise ValueError("need s > 1, alpha0 > 0, ell >= 0")
    if variant not in ("intest1", "intest2"):
        raise ValueError(f"unknown variant {variant!r}")
    tdm = unit_ball_volume(d - 1)

    def g(a):
        h = _h(a, d)
        base = math.exp(-s * h) * (alpha0 + h) ** ell
        if variant == "intest2":
            base *= 1 + ell / (s * (alpha0 + h))
        return tdm * base

    # the integrand decays on the scale 1/(theta_{d-1} s)
    scale = 1.0 / (tdm * s)
    cuts = [c * scale for c in (1, 4, 16, 64) if c * scale < 1]
    edges = [0.0] + cuts + [1.0]
    lhs = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            for lo, hi in zip(edges[:-1], edges[1:]):
                lhs += integrate.quad(g, lo, hi, epsabs=0.0, epsrel=1e-13, limit=400)[0]
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"integral quadrature failed at s={s}: {exc}") from exc
    c2 = 2 * ell if variant == "intest2" else ell
    rhs = alpha0**ell / s + (c2 * alpha0 ** (ell - 1) / s**2 if ell > 0 else 0.0)
    return lhs, rhs, lhs - rhs


def predicted_probability(
    pair: DomainPair,
    setting: Setting,
    n_or_t: float,
    r: float,
    mode: str = "poisson",
    mc_samples: int = 200_000,
    seed: int = 0,
) -> float:
    """exp(-tau gamma_t(B)) in Poisson mode, exp(-tau_n gamma_n(B)) in binomial mode."""
    if mode == "poisson":
        tau = setting.tau
    elif mode == "binomial":
        tau = math.floor(setting.tau * n_or_t) / n_or_t
    else:
        raise ValueError(f"unknown mode {mode!r}")
    q = VacancyQuery(pair, float(n_or_t), float(r), setting.k)
    try:
        g = gamma_quadrature(q)
    except ValueError:
        g = gamma_mc(q, mc_samples, seed)[0]
    return math.exp(-tau * g)

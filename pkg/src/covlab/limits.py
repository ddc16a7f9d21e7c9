"""Regime classification, centering constants, radii, and limiting / finite-n CDFs.

Every finite-n corrected law has the shape ``exp(-A(beta))`` where ``A`` is a
sum of components ``exp(-c * beta) * (P + Q * beta)``.  The limit laws keep only
the leading ``P`` of each component.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .geometry import Ball, DomainPair, Polygon, Torus, sigma, unit_ball_volume

__all__ = [
    "REGIMES",
    "c_dk",
    "Setting",
    "CdfModel",
    "centering",
    "transform_statistic",
    "r_t",
    "gumbel",
    "tcev",
    "empirical",
    "limit_cdf",
    "corrected_cdf",
    "median_shift",
    "beta_grid",
    "curve",
    "bracket",
]

REGIMES = ("interior", "torus", "smooth_boundary", "polygon")


def c_dk(d: int, k: int) -> float:
    """Boundary Gumbel-location constant; reduces to sqrt(pi) / ((k-1)! 2^k) at d = 2."""
    td = unit_ball_volume(d)
    tdm = unit_ball_volume(d - 1)
    return (
        td ** (1 - 1 / d)
        * (1 - 1 / d) ** (k - 2 + 1 / d)
        / (math.factorial(k - 1) * 2 ** (1 - 1 / d) * tdm)
    )


@dataclass(frozen=True)
class Setting:
    d: int
    k: int
    regime: str
    tau: float
    f0: float
    sigma_A: float | None = None
    tau_n: float | None = None  # m(n)/n for binomial mode; None means use tau

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.d < 2 and self.regime != "torus":
            raise ValueError("dimension must be at least 2")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.tau <= 0 or self.f0 <= 0:
            raise ValueError("tau and f0 must be positive")
        if self.is_boundary and self.sigma_A is None:
            raise ValueError(f"regime {self.regime} needs sigma_A")
        if self.regime == "polygon" and self.d != 2:
            raise ValueError("polygon regime is planar only")

    @property
    def is_boundary(self) -> bool:
        return self.regime in ("smooth_boundary", "polygon")

    @property
    def theta_d(self) -> float:
        return unit_ball_volume(self.d)

    @property
    def c_dk(self) -> float:
        return c_dk(self.d, self.k)

    @property
    def J(self) -> int:
        return int(self.d >= 3 or self.k >= 2)

    def with_n(self, n: int) -> "Setting":
        """Copy with tau_n = floor(tau n)/n, the binomial-mode ratio."""
        return replace(self, tau_n=math.floor(self.tau * n) / n)

    @classmethod
    def from_domain(cls, pair: DomainPair, k: int, tau: float) -> "Setting":
        A = pair.A
        if isinstance(A, Torus):
            regime = "torus"
        elif pair.interior_flag:
            regime = "interior"
        elif isinstance(A, Ball):
            regime = "smooth_boundary"
        elif isinstance(A, Polygon):
            regime = "polygon"
        else:
            raise ValueError(f"cannot classify region {A!r}")
        sig = sigma(A) if regime in ("smooth_boundary", "polygon") else None
        return cls(d=A.d, k=int(k), regime=regime, tau=float(tau), f0=A.f0, sigma_A=sig)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "k": self.k,
            "regime": self.regime,
            "tau": self.tau,
            "tau_n": self.tau_n,
            "f0": self.f0,
            "sigma_A": self.sigma_A,
            "theta_d": self.theta_d,
            "c_dk": self.c_dk,
            "J": self.J,
        }


def centering(setting: Setting) -> tuple[float, float]:
    d, k = setting.d, setting.k
    if not setting.is_boundary:
        return 1.0, float(k - 1)
    if d == 2 and k == 1:
        return 1.0, 0.0
    return 2 - 2 / d, 2 * k - 4 + 2 / d


def transform_statistic(R, n_or_t: float, setting: Setting):
    """T = n theta_d f0 R^d - c1 log n - c2 log log n (vectorised over R)."""
    if n_or_t <= math.e:
        raise ValueError("n must exceed e so that log log n is defined")
    c1, c2 = centering(setting)
    L = math.log(n_or_t)
    scalar = np.ndim(R) == 0
    R = np.asarray(R, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        T = n_or_t * setting.theta_d * setting.f0 * R**setting.d - c1 * L - c2 * math.log(L)
    return float(T) if scalar else T


def r_t(beta: float, t: float, setting: Setting) -> float:
    """Radius with f0 t theta_d r^d equal to the (clamped) centering level at beta."""
    if t <= math.e:
        raise ValueError("t must exceed e")
    L = math.log(t)
    d, k = setting.d, setting.k
    if setting.is_boundary:
        rhs = (2 - 2 / d) * L + (2 * k - 4 + 2 / d) * setting.J * math.log(L) + beta
    else:
        rhs = L + (k - 1) * math.log(L) + beta
    rhs = max(rhs, 0.0)
    return (rhs / (setting.f0 * t * setting.theta_d)) ** (1 / d)


# ---------------------------------------------------------------------------
# CDF models


@dataclass(frozen=True)
class CdfModel:
    kind: str  # gumbel | tcev | corrected | empirical
    params: dict
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    upper: float = 1.0  # limit of F at +infinity
    offset: float = 0.0  # abscissa shift applied by shifted()
    left_evaluator: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False, compare=False)

    def __call__(self, beta):
        scalar = np.ndim(beta) == 0
        b = np.asarray(beta, dtype=float) + self.offset
        out = self.evaluator(b)
        return float(out) if scalar else out

    def left(self, beta):
        """Left limit F(beta-); equals F for the continuous models."""
        if self.left_evaluator is None:
            return self(beta)
        scalar = np.ndim(beta) == 0
        out = self.left_evaluator(np.asarray(beta, dtype=float) + self.offset)
        return float(out) if scalar else out

    def shifted(self, delta: float) -> "CdfModel":
        """Model of X - delta when self is the law of X."""
        return replace(self, offset=self.offset + delta)


def bracket(c: float, P: float, Q: float, b):
    """P + Q b, floored so that e^{-c b} (P + Q b) is nonincreasing and nonnegative.

    For Q > 0 the bracket is frozen at Q/c below the turning point, for Q < 0 it
    is floored at zero.
    """
    br = P + Q * np.asarray(b, dtype=float)
    if Q > 0:
        return np.maximum(br, Q / c)
    if Q < 0:
        return np.maximum(br, 0.0)
    return br


def _components_cdf(comps: list[tuple[float, float, float]]):
    """exp(-sum e^{-c b} br(b)) with each bracket kept monotone (see ``bracket``)."""

    def ev(b):
        b = np.asarray(b, dtype=float)
        a = np.zeros_like(b)
        for c, P, Q in comps:
            br = bracket(c, P, Q, b)
            with np.errstate(over="ignore", invalid="ignore"):
                term = np.exp(-c * b) * br
            term = np.where(br == 0.0, 0.0, term)
            a = a + term
        with np.errstate(over="ignore"):
            return np.exp(-a)

    return ev


def gumbel(xi: float, theta: float) -> CdfModel:
    if theta <= 0:
        raise ValueError("Gumbel scale must be positive")

    def ev(b):
        with np.errstate(over="ignore"):
            return np.exp(-np.exp(-(b - xi) / theta))

    return CdfModel("gumbel", {"xi": float(xi), "theta": float(theta)}, ev)


def tcev(w1: float, w2: float) -> CdfModel:
    """exp(-(w1 e^{-b} + w2 e^{-b/2})): the max of a scale-1 and a scale-2 Gumbel."""
    comps = [(1.0, float(w1), 0.0), (0.5, float(w2), 0.0)]
    params = {"w1": float(w1), "w2": float(w2), "xi1": math.log(w1), "xi2": 2 * math.log(w2)}
    return CdfModel("tcev", params, _components_cdf(comps))


def empirical(samples) -> CdfModel:
    s = np.sort(np.asarray(samples, dtype=float))
    if s.size == 0:
        raise ValueError("empirical model needs at least one sample")
    N = s.size

    def ev(b):
        return np.searchsorted(s, b, side="right") / N

    def ev_left(b):
        return np.searchsorted(s, b, side="left") / N

    return CdfModel("empirical", {"samples": s}, ev, upper=float(np.isfinite(s).sum() / N), left_evaluator=ev_left)


def _boundary_components(setting: Setting, tau: float, L: float | None) -> list[tuple[float, float, float]]:
    d, k, sig = setting.d, setting.k, setting.sigma_A
    corr = L is not None
    LL = math.log(L) if corr else 0.0
    inv = 1.0 / L if corr else 0.0
    sp = math.sqrt(math.pi)
    if d == 2 and k == 1:
        # the boundary term is itself a 1/sqrt(log n) correction
        w2 = tau * sp * sig / (2 * math.sqrt(L)) if corr else 0.0
        return [(1.0, tau, 0.0)] + ([(0.5, w2, 0.0)] if corr else [])
    if d == 2 and k == 2:
        return [(1.0, tau, 0.0), (0.5, tau * sp * sig / 4 * (1 + LL * inv / 2), 0.0)]
    a = k - 2 + 1 / d
    w = setting.c_dk * tau * sig
    P = w * (1 + a * a * LL * inv / (1 - 1 / d))
    Q = 0.0
    if d >= 3:
        P += w * (4 * k - 4) * inv / (2 - 2 / d)
        Q = w * a * inv / (2 - 2 / d)
    return [(0.5, P, Q)]


def _interior_components(setting: Setting, tau: float, L: float | None) -> list[tuple[float, float, float]]:
    j = setting.k - 1
    w = tau / math.factorial(j)
    if L is None:
        return [(1.0, w, 0.0)]
    P = w * (1 + j * j * math.log(L) / L)
    Q = 0.0
    if setting.d >= 3:
        P += w * j / L
        Q = w * j / L
    return [(1.0, P, Q)]


def limit_cdf(setting: Setting) -> CdfModel:
    tau = setting.tau
    if not setting.is_boundary:
        return gumbel(math.log(tau / math.factorial(setting.k - 1)), 1.0)
    d, k = setting.d, setting.k
    if d == 2 and k == 1:
        return gumbel(math.log(tau), 1.0)
    if d == 2 and k == 2:
        return tcev(tau, tau * math.sqrt(math.pi) * setting.sigma_A / 4)
    return gumbel(2 * math.log(setting.c_dk * tau * setting.sigma_A), 2.0)


def corrected_cdf(setting: Setting, n_or_t: float) -> CdfModel:
    """Finite-n law: the limit law with its vanishing correction factors kept.

    Uses tau_n when the setting carries one (binomial mode), else tau.
    The torus takes the interior form unchanged.
    """
    if n_or_t <= math.e**math.e:
        raise ValueError("n must exceed e^e so that log log n is positive")
    tau = setting.tau_n if setting.tau_n is not None else setting.tau
    L = math.log(n_or_t)
    if setting.is_boundary:
        comps = _boundary_components(setting, tau, L)
    else:
        comps = _interior_components(setting, tau, L)
    params = {"n": float(n_or_t), "tau": tau, "components": comps, "setting": setting.to_dict()}
    return CdfModel("corrected", params, _components_cdf(comps))


def median_shift(model: CdfModel) -> float:
    """The beta with F(beta) = 1/2."""
    if model.kind == "empirical":
        raise ValueError("median_shift is defined for analytic models only")
    if model.kind == "gumbel":
        p = model.params
        return p["xi"] - p["theta"] * math.log(math.log(2.0)) - model.offset
    lo, hi = -1.0, 1.0
    for _ in range(200):
        if model(lo) < 0.5:
            break
        lo *= 2
    for _ in range(200):
        if model(hi) >= 0.5:
            break
        hi *= 2
    if not (model(lo) < 0.5 <= model(hi)):
        raise ValueError("model does not cross 1/2")
    while hi - lo > 1e-11:
        mid = 0.5 * (lo + hi)
        if model(mid) < 0.5:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def beta_grid(lo: float = -5.0, hi: float = 10.0, step: float = 0.01) -> np.ndarray:
    if step <= 0 or hi < lo:
        raise ValueError("beta grid needs step > 0 and hi >= lo")
    n = int(round((hi - lo) / step))
    return lo + step * np.arange(n + 1)


def curve(model: CdfModel, grid: np.ndarray) -> np.ndarray:
    """Two-column table (beta, F(beta))."""
    g = np.asarray(grid, dtype=float)
    return np.column_stack([g, model(g)])

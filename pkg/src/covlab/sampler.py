"""Binomial and Poisson realizations of the (X, Y) point processes.

Randomness is fully pinned:

* ``mix(seed, i)`` is the SplitMix64 finalizer applied to
  ``seed + (i + 1) * 0x9E3779B97F4A7C15 (mod 2**64)``.
* Each stream is ``numpy.random.Generator(Philox(key=token))``, a counter-based
  generator with a platform-independent bit stream.
* Poisson counts use sequential-search inversion for mean < 30 and Hörmann's
  PTRS transformed rejection otherwise, both driven by ``Generator.random()``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import DomainPair

__all__ = [
    "MASK64",
    "mix",
    "make_rng",
    "poisson_count",
    "ProcessPair",
    "sample_binomial",
    "sample_poisson",
    "m_of_n",
]

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix(seed: int, i: int) -> int:
    """64-bit seed derivation for replicate ``i`` of a campaign seeded with ``seed``."""
    return _splitmix64((int(seed) + (int(i) + 1) * _GOLDEN) & MASK64)


def make_rng(token: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(token) & MASK64))


def _poisson_inversion(rng: np.random.Generator, lam: float) -> int:
    u = rng.random()
    p = math.exp(-lam)
    cdf = p
    k = 0
    while u > cdf:
        k += 1
        p *= lam / k
        cdf += p
        if k > 10_000:  # only reachable through rounding when u ~ 1
            break
    return k


def _poisson_ptrs(rng: np.random.Generator, lam: float) -> int:
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2)
    while True:
        U = rng.random() - 0.5
        V = rng.random()
        us = 0.5 - abs(U)
        k = math.floor((2 * a / us + b) * U + lam + 0.43)
        if us >= 0.07 and V <= vr:
            return int(k)
        if k < 0 or (us < 0.013 and V > us):
            continue
        if math.log(V) + math.log(invalpha) - math.log(a / (us * us) + b) <= -lam + k * loglam - math.lgamma(k + 1):
            return int(k)


def poisson_count(rng: np.random.Generator, lam: float) -> int:
    """Poisson(lam) draw with the pinned algorithm (inversion below 30, PTRS above)."""
    if lam < 0:
        raise ValueError("Poisson mean must be non-negative")
    if lam == 0:
        return 0
    if lam < 30:
        return _poisson_inversion(rng, lam)
    return _poisson_ptrs(rng, lam)


def m_of_n(n: int, tau: float) -> int:
    """Y-sample size schedule m(n) = floor(tau * n)."""
    return int(math.floor(tau * n))


@dataclass(frozen=True)
class ProcessPair:
    xs: np.ndarray
    ys: np.ndarray
    mode: str  # "binomial" or "poisson"
    size_params: tuple[float, float]  # (n, m) or (t, u)
    seed: int

    @property
    def d(self) -> int:
        return self.xs.shape[1]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["role"] + [f"coord_{i + 1}" for i in range(self.d)])
            for role, pts in (("X", self.xs), ("Y", self.ys)):
                for p in pts:
                    w.writerow([role] + [repr(float(v)) for v in p])

    @classmethod
    def from_csv(cls, path: str | Path, mode: str = "binomial", seed: int = 0) -> "ProcessPair":
        xs, ys = [], []
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            d = len(header) - 1
            for row in r:
                (xs if row[0] == "X" else ys).append([float(v) for v in row[1:]])
        xa = np.asarray(xs, dtype=float).reshape(-1, d)
        ya = np.asarray(ys, dtype=float).reshape(-1, d)
        return cls(xa, ya, mode, (len(xa), len(ya)), seed)


def sample_binomial(pair: DomainPair, n: int, m: int, seed: int) -> ProcessPair:
    """n uniform points in A and m uniform points in B, reproducible from ``seed``."""
    if n < 1 or m < 1:
        raise ValueError("binomial mode needs n >= 1 and m >= 1")
    rng = make_rng(seed)
    xs = pair.A.sample(rng, int(n))
    ys = pair.B.sample(rng, int(m))
    return ProcessPair(xs, ys, "binomial", (int(n), int(m)), int(seed))


def sample_poisson(pair: DomainPair, t: float, u: float, seed: int) -> ProcessPair:
    """Poisson processes with intensity measures t·Unif(A) and u·Unif(B).

    Both counts are drawn before any location.
    """
    if t <= 0 or u <= 0:
        raise ValueError("Poisson intensities must be positive")
    rng = make_rng(seed)
    n = poisson_count(rng, t)
    m = poisson_count(rng, u)
    xs = pair.A.sample(rng, n) if n else np.empty((0, pair.A.d))
    ys = pair.B.sample(rng, m) if m else np.empty((0, pair.B.d))
    return ProcessPair(xs, ys, "poisson", (float(t), float(u)), int(seed))

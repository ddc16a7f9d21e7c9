"""Sampling domains with exact volume, boundary and ball-intersection geometry.

Every region works on single points of shape ``(d,)`` or on batches of shape
``(N, d)``; batch inputs give batch outputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import integrate, special

__all__ = [
    "Region",
    "Square",
    "Disk",
    "Ball",
    "Torus",
    "Polygon",
    "DomainPair",
    "unit_ball_volume",
    "slice_volume",
    "sigma",
    "distance_to_boundary",
    "ball_intersection_volume",
    "cap_approx_volume",
    "sample_uniform",
    "metric_distance",
    "region_from_dict",
]


def unit_ball_volume(d: int) -> float:
    """Volume of the unit ball in R^d."""
    if d < 1 or int(d) != d:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def slice_volume(a: float, d: int) -> float:
    """Volume of the unit d-ball between the hyperplanes x_1 = 0 and x_1 = a.

    Closed forms for d = 2, 3; adaptive Gauss-Kronrod quadrature otherwise.
    """
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"slice fraction must lie in [0, 1], got {a!r}")
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d!r}")
    if d == 1:
        return float(a)
    if d == 2:
        return a * math.sqrt(1.0 - a * a) + math.asin(a)
    if d == 3:
        return math.pi * (a - a**3 / 3.0)
    expo = (d - 1) / 2.0
    val, _ = integrate.quad(lambda y: (1.0 - y * y) ** expo, 0.0, a, epsabs=1e-13, epsrel=1e-13, limit=200)
    return unit_ball_volume(d - 1) * val


def _slice_volume_array(a: np.ndarray, d: int) -> np.ndarray:
    a = np.clip(np.asarray(a, dtype=float), 0.0, 1.0)
    if d == 2:
        return a * np.sqrt(1.0 - a * a) + np.arcsin(a)
    if d == 3:
        return math.pi * (a - a**3 / 3.0)
    return np.vectorize(lambda v: slice_volume(float(v), d), otypes=[float])(a)


def _cap_volume(rho: float | np.ndarray, h: np.ndarray, d: int) -> np.ndarray:
    """Volume of the cap of height h cut from a d-ball of radius rho (0 <= h <= 2 rho)."""
    rho = np.asarray(rho, dtype=float)
    h = np.clip(np.asarray(h, dtype=float), 0.0, 2.0 * rho)
    full = unit_ball_volume(d) * rho**d
    small = np.minimum(h, 2.0 * rho - h)
    x = np.clip((2.0 * rho * small - small * small) / (rho * rho), 0.0, 1.0)
    cap_small = 0.5 * full * special.betainc((d + 1) / 2.0, 0.5, x)
    return np.where(h <= rho, cap_small, full - cap_small)


def _lens_volume(R: float, dist: np.ndarray, r: float, d: int) -> np.ndarray:
    """|B(c, R) ∩ B(x, r)| for centres a distance ``dist`` apart."""
    dist = np.asarray(dist, dtype=float)
    theta = unit_ball_volume(d)
    out = np.empty_like(dist)
    inside = dist + r <= R
    disjoint = dist >= R + r
    swallowed = dist + R <= r
    out[inside] = theta * r**d
    out[disjoint] = 0.0
    out[swallowed & ~inside] = theta * R**d
    rest = ~(inside | disjoint | swallowed)
    if np.any(rest):
        s = dist[rest]
        c1 = (s * s + R * R - r * r) / (2.0 * s)  # radical plane, measured from the big centre
        out[rest] = _cap_volume(R, R - c1, d) + _cap_volume(r, r - (s - c1), d)
    return out


def _quadrant_unit(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Area of {x >= a, y >= b} inside the unit disk (valid when a^2 + b^2 <= 1)."""
    x1 = np.sqrt(np.clip(1.0 - b * b, 0.0, None))

    def G(x):
        return 0.5 * (x * np.sqrt(np.clip(1.0 - x * x, 0.0, None)) + np.arcsin(np.clip(x, -1.0, 1.0)))

    return np.clip(G(x1) - G(a) - b * (x1 - a), 0.0, None)


def _segment_unit(a: np.ndarray) -> np.ndarray:
    """Area of {x >= a} inside the unit disk, for a >= 0."""
    a = np.clip(a, 0.0, 1.0)
    return 2.0 * (math.pi / 4.0 - 0.5 * (a * np.sqrt(1.0 - a * a) + np.arcsin(a)))


def _circle_polygon_area(centers: np.ndarray, r: float, verts: np.ndarray) -> np.ndarray:
    """Exact area of disk(center, r) ∩ polygon, vectorized over centres.

    Sums, over edges, the signed area of the disk ∩ triangle(centre, p, q):
    chord pieces contribute triangles and the pieces outside contribute sectors.
    """
    c = np.atleast_2d(centers)
    total = np.zeros(len(c))
    rr = r * r
    nv = len(verts)
    for i in range(nv):
        p = verts[i] - c
        q = verts[(i + 1) % nv] - c
        dv = q - p
        A = np.einsum("ij,ij->i", dv, dv)
        B = 2.0 * np.einsum("ij,ij->i", p, dv)
        C = np.einsum("ij,ij->i", p, p) - rr
        disc = B * B - 4.0 * A * C
        ok = disc > 0.0
        sq = np.sqrt(np.where(ok, disc, 0.0))
        s1 = np.where(ok, np.clip((-B - sq) / (2.0 * A), 0.0, 1.0), 0.0)
        s2 = np.where(ok, np.clip((-B + sq) / (2.0 * A), 0.0, 1.0), 0.0)
        # exact endpoints when clipped: p + 1*dv != q in floating point, and a
        # near-centre endpoint turns that rounding into a large angle error
        u = np.where((s1 <= 0.0)[:, None], p, np.where((s1 >= 1.0)[:, None], q, p + s1[:, None] * dv))
        v = np.where((s2 >= 1.0)[:, None], q, np.where((s2 <= 0.0)[:, None], p, p + s2[:, None] * dv))

        def sector(e, f):
            return 0.5 * rr * np.arctan2(e[:, 0] * f[:, 1] - e[:, 1] * f[:, 0], np.einsum("ij,ij->i", e, f))

        tri = 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
        total += sector(p, u) + tri + sector(v, q)
    return total


def _point_segment_distance(x: np.ndarray, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    dv = q - p
    L2 = float(dv @ dv)
    s = np.clip(((x - p) @ dv) / L2, 0.0, 1.0)
    proj = p + s[:, None] * dv
    return np.sqrt(np.sum((x - proj) ** 2, axis=1))


def _segments_cross(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(p3, p4, p1), orient(p3, p4, p2)
    d3, d4 = orient(p1, p2, p3), orient(p1, p2, p4)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 * d2 < 0 and d3 * d4 < 0:
        return True

    def on_seg(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    if d1 == 0 and on_seg(p3, p4, p1):
        return True
    if d2 == 0 and on_seg(p3, p4, p2):
        return True
    if d3 == 0 and on_seg(p1, p2, p3):
        return True
    if d4 == 0 and on_seg(p1, p2, p4):
        return True
    return False


def _ear_clip(verts: np.ndarray) -> np.ndarray:
    """Triangulate a simple CCW polygon; returns (n-2, 3) vertex indices."""
    idx = list(range(len(verts)))
    tris = []

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10 * len(verts) ** 2:
            raise ValueError("ear clipping failed; polygon is probably not simple")
        m = len(idx)
        for j in range(m):
            i0, i1, i2 = idx[j - 1], idx[j], idx[(j + 1) % m]
            a, b, c = verts[i0], verts[i1], verts[i2]
            if cross(a, b, c) <= 0:
                continue
            blocked = False
            for o in idx:
                if o in (i0, i1, i2):
                    continue
                pnt = verts[o]
                if cross(a, b, pnt) >= 0 and cross(b, c, pnt) >= 0 and cross(c, a, pnt) >= 0:
                    blocked = True
                    break
            if not blocked:
                tris.append((i0, i1, i2))
                idx.pop(j)
                break
    tris.append(tuple(idx))
    return np.asarray(tris, dtype=int)


class Region:
    """Base class for the closed family of sampling domains."""

    kind: str = ""
    d: int = 2

    # derived quantities --------------------------------------------------
    @property
    def volume(self) -> float:
        raise NotImplementedError

    @property
    def perimeter(self) -> float:
        raise NotImplementedError

    @property
    def reach(self) -> float:
        raise NotImplementedError

    @property
    def f0(self) -> float:
        return 1.0 / self.volume

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    @property
    def periodic(self) -> bool:
        return False

    # geometry -------------------------------------------------------------
    def contains(self, x: np.ndarray) -> np.ndarray | bool:
        raise NotImplementedError

    def distance_to_boundary(self, x: np.ndarray) -> np.ndarray | float:
        raise NotImplementedError

    def ball_volume(self, x: np.ndarray, r: float) -> np.ndarray | float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.sqrt(np.sum((x - y) ** 2, axis=-1))

    def boundary_points(self, count: int = 256) -> np.ndarray:
        raise NotImplementedError

    def scaled(self, lam: float) -> "Region":
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError

    # helpers ------------------------------------------------------------
    def _check_inside(self, x: np.ndarray, tol: float = 1e-12) -> None:
        if not np.all(self.contains_tol(x, tol)):
            raise ValueError(f"point(s) outside {self.kind} region")

    def contains_tol(self, x: np.ndarray, tol: float) -> np.ndarray | bool:
        return self.contains(x)


def _batch(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    return np.atleast_2d(arr), single


def _unbatch(v: np.ndarray, single: bool):
    return float(v[0]) if single else v


@dataclass(frozen=True)
class Ball(Region):
    """Closed Euclidean ball of the given radius, centred at ``center`` (origin by default)."""

    d: int = 3
    radius: float = 1.0
    center: tuple[float, ...] | None = None
    kind: str = field(default="ball", init=False, repr=False)

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("ball dimension must be >= 2")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.center is not None and len(self.center) != self.d:
            raise ValueError("centre has wrong dimension")

    @property
    def c(self) -> np.ndarray:
        return np.zeros(self.d) if self.center is None else np.asarray(self.center, dtype=float)

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.d) * self.radius**self.d

    @property
    def perimeter(self) -> float:
        return self.d * unit_ball_volume(self.d) * self.radius ** (self.d - 1)

    @property
    def reach(self) -> float:
        return self.radius

    def bbox(self):
        return self.c - self.radius, self.c + self.radius

    def contains(self, x):
        return self.contains_tol(x, 0.0)

    def contains_tol(self, x, tol):
        xb, single = _batch(x)
        ok = np.sqrt(np.sum((xb - self.c) ** 2, axis=1)) <= self.radius * (1 + tol) + tol
        return bool(ok[0]) if single else ok

    def distance_to_boundary(self, x):
        xb, single = _batch(x)
        self._check_inside(xb, 1e-12)
        return _unbatch(np.maximum(self.radius - np.sqrt(np.sum((xb - self.c) ** 2, axis=1)), 0.0), single)

    def ball_volume(self, x, r):
        xb, single = _batch(x)
        dist = np.sqrt(np.sum((xb - self.c) ** 2, axis=1))
        return _unbatch(_lens_volume(self.radius, dist, float(r), self.d), single)

    def ball_volume_radial(self, s: np.ndarray, r: float) -> np.ndarray:
        """Same as ``ball_volume`` but parameterized by distance from the centre."""
        return _lens_volume(self.radius, np.asarray(s, dtype=float), float(r), self.d)

    def sample(self, rng, size):
        g = rng.standard_normal((size, self.d))
        g /= np.sqrt(np.sum(g * g, axis=1))[:, None]
        rad = self.radius * rng.random(size) ** (1.0 / self.d)
        return self.c + g * rad[:, None]

    def boundary_points(self, count=256):
        if self.d == 2:
            ang = np.linspace(0, 2 * np.pi, count, endpoint=False)
            return self.c + self.radius * np.column_stack([np.cos(ang), np.sin(ang)])
        rng = np.random.default_rng(0)
        g = rng.standard_normal((count, self.d))
        return self.c + self.radius * g / np.linalg.norm(g, axis=1)[:, None]

    def scaled(self, lam):
        cen = None if self.center is None else tuple(lam * v for v in self.center)
        return type(self)(**self._init_kwargs(radius=self.radius * lam, center=cen))

    def _init_kwargs(self, **kw):
        base = {"d": self.d, "radius": self.radius, "center": self.center}
        base.update(kw)
        return base

    def to_dict(self):
        out: dict[str, Any] = {"kind": "ball", "d": self.d, "radius": self.radius}
        if self.center is not None:
            out["center"] = list(self.center)
        return out


@dataclass(frozen=True)
class Disk(Ball):
    """Closed disk in the plane."""

    d: int = field(default=2, init=False)
    radius: float = 1.0
    center: tuple[float, ...] | None = None
    kind: str = field(default="disk", init=False, repr=False)

    def _init_kwargs(self, **kw):
        base = {"radius": self.radius, "center": self.center}
        base.update(kw)
        return base

    def to_dict(self):
        out: dict[str, Any] = {"kind": "disk", "radius": self.radius}
        if self.center is not None:
            out["center"] = list(self.center)
        return out


@dataclass(frozen=True)
class Torus(Region):
    """Flat torus [0, side)^d with the wrap-around metric."""

    d: int = 2
    side: float = 1.0
    kind: str = field(default="torus", init=False, repr=False)

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("torus dimension must be >= 2")
        if self.side <= 0:
            raise ValueError("side must be positive")

    @property
    def volume(self):
        return self.side**self.d

    @property
    def perimeter(self):
        raise ValueError("a torus has no boundary")

    @property
    def reach(self):
        return math.inf

    @property
    def periodic(self):
        return True

    def bbox(self):
        return np.zeros(self.d), np.full(self.d, float(self.side))

    def contains(self, x):
        return self.contains_tol(x, 0.0)

    def contains_tol(self, x, tol):
        xb, single = _batch(x)
        ok = np.all((xb >= -tol) & (xb <= self.side + tol), axis=1)
        return bool(ok[0]) if single else ok

    def distance_to_boundary(self, x):
        xb, single = _batch(x)
        self._check_inside(xb)
        return _unbatch(np.full(len(xb), math.inf), single)

    def ball_volume(self, x, r):
        if r >= self.side / 2:
            raise ValueError("torus ball volume only defined for r < side/2")
        xb, single = _batch(x)
        return _unbatch(np.full(len(xb), unit_ball_volume(self.d) * r**self.d), single)

    def sample(self, rng, size):
        return rng.random((size, self.d)) * self.side

    def distance(self, x, y):
        delta = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        delta = np.minimum(delta, self.side - delta)
        return np.sqrt(np.sum(delta**2, axis=-1))

    def boundary_points(self, count=256):
        return np.empty((0, self.d))

    def scaled(self, lam):
        return Torus(d=self.d, side=self.side * lam)

    def to_dict(self):
        return {"kind": "torus", "d": self.d, "side": self.side}


@dataclass(frozen=True)
class Polygon(Region):
    """Simple polygon with counterclockwise vertices."""

    vertices: tuple[tuple[float, float], ...] = ()
    kind: str = field(default="polygon", init=False, repr=False)
    d: int = field(default=2, init=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("polygon needs at least 3 planar vertices")
        object.__setattr__(self, "vertices", tuple(map(tuple, v.tolist())))
        if self._signed_area() <= 0:
            raise ValueError("polygon vertices must be counterclockwise")
        n = len(v)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                    raise ValueError("polygon is not simple")

    @property
    def V(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    def _signed_area(self) -> float:
        v = np.asarray(self.vertices, dtype=float)
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def volume(self):
        return self._signed_area()

    @property
    def perimeter(self):
        v = self.V
        return float(np.sum(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)))

    @property
    def reach(self):
        return 0.0

    def bbox(self):
        v = self.V
        return v.min(axis=0), v.max(axis=0)

    def contains(self, x):
        return self.contains_tol(x, 0.0)

    def contains_tol(self, x, tol):
        xb, single = _batch(x)
        v = self.V
        inside = np.zeros(len(xb), dtype=bool)
        n = len(v)
        for i in range(n):
            p, q = v[i], v[(i + 1) % n]
            cond = (p[1] > xb[:, 1]) != (q[1] > xb[:, 1])
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = p[0] + (xb[:, 1] - p[1]) * (q[0] - p[0]) / (q[1] - p[1])
            inside ^= cond & (xb[:, 0] < xint)
        dist = self._edge_distance(xb)
        ok = inside | (dist <= tol + 1e-13)
        return bool(ok[0]) if single else ok

    def _edge_distance(self, xb: np.ndarray) -> np.ndarray:
        v = self.V
        n = len(v)
        return np.min(np.stack([_point_segment_distance(xb, v[i], v[(i + 1) % n]) for i in range(n)]), axis=0)

    def distance_to_boundary(self, x):
        xb, single = _batch(x)
        self._check_inside(xb)
        return _unbatch(self._edge_distance(xb), single)

    def ball_volume(self, x, r):
        xb, single = _batch(x)
        return _unbatch(_circle_polygon_area(xb, float(r), self.V), single)

    def triangles(self) -> np.ndarray:
        return _ear_clip(self.V)

    def sample(self, rng, size):
        v = self.V
        tri = self.triangles()
        a, b, c = v[tri[:, 0]], v[tri[:, 1]], v[tri[:, 2]]
        areas = 0.5 * np.abs((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
        cum = np.cumsum(areas)
        pick = np.searchsorted(cum, rng.random(size) * cum[-1], side="right")
        pick = np.minimum(pick, len(areas) - 1)
        u = rng.random(size)
        w = rng.random(size)
        flip = u + w > 1.0
        u = np.where(flip, 1.0 - u, u)
        w = np.where(flip, 1.0 - w, w)
        return a[pick] + u[:, None] * (b[pick] - a[pick]) + w[:, None] * (c[pick] - a[pick])

    def boundary_points(self, count=256):
        v = self.V
        n = len(v)
        per = max(2, count // n)
        s = np.linspace(0, 1, per, endpoint=False)
        return np.concatenate([v[i] + s[:, None] * (v[(i + 1) % n] - v[i]) for i in range(n)])

    def edges(self) -> list[tuple[np.ndarray, np.ndarray]]:
        v = self.V
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def reflex_vertices(self) -> np.ndarray:
        v = self.V
        prev = np.roll(v, 1, axis=0)
        nxt = np.roll(v, -1, axis=0)
        e1, e2 = v - prev, nxt - v
        cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        return v[cross < 0]

    def scaled(self, lam):
        return Polygon(vertices=tuple((lam * x, lam * y) for x, y in self.vertices))

    def to_dict(self):
        return {"kind": "polygon", "vertices": [list(p) for p in self.vertices]}


@dataclass(frozen=True)
class Square(Polygon):
    """The square [0, side]^2; disk intersections use a closed inclusion-exclusion formula."""

    side: float = 1.0
    vertices: tuple[tuple[float, float], ...] = field(default=(), init=False)
    kind: str = field(default="square", init=False, repr=False)

    def __post_init__(self):
        if self.side <= 0:
            raise ValueError("side must be positive")
        s = float(self.side)
        object.__setattr__(self, "vertices", ((0.0, 0.0), (s, 0.0), (s, s), (0.0, s)))

    @property
    def volume(self):
        return float(self.side) ** 2

    @property
    def perimeter(self):
        return 4.0 * float(self.side)

    def contains_tol(self, x, tol):
        xb, single = _batch(x)
        ok = np.all((xb >= -tol) & (xb <= self.side + tol), axis=1)
        return bool(ok[0]) if single else ok

    def _edge_distance(self, xb):
        return np.minimum(np.minimum(xb[:, 0], self.side - xb[:, 0]), np.minimum(xb[:, 1], self.side - xb[:, 1])).clip(0.0)

    def ball_volume(self, x, r):
        xb, single = _batch(x)
        return _unbatch(square_disk_area(xb, float(r), float(self.side)), single)

    def triangles(self):
        return np.array([[0, 1, 2], [0, 2, 3]])

    def sample(self, rng, size):
        return rng.random((size, 2)) * self.side

    def scaled(self, lam):
        return Square(side=self.side * lam)

    def to_dict(self):
        return {"kind": "square", "side": self.side}


def square_disk_area(xb: np.ndarray, r: float, side: float) -> np.ndarray:
    """|B(x, r) ∩ [0, side]^2| by inclusion-exclusion over the four edges.

    Complements of opposite edges are disjoint, so only edge and corner
    terms survive and the formula is exact for every r.
    """
    xb = np.atleast_2d(xb)
    dists = [xb[:, 0], side - xb[:, 0], xb[:, 1], side - xb[:, 1]]
    scaled = [np.clip(dd / r, 0.0, None) for dd in dists]
    area = np.full(len(xb), math.pi)
    for a in scaled:
        area -= np.where(a < 1.0, _segment_unit(a), 0.0)
    for i in (0, 1):
        for j in (2, 3):
            a, b = scaled[i], scaled[j]
            inside = a * a + b * b < 1.0
            area += np.where(inside, _quadrant_unit(np.where(inside, a, 0.0), np.where(inside, b, 0.0)), 0.0)
    return np.clip(area, 0.0, math.pi) * r * r


@dataclass(frozen=True)
class DomainPair:
    """X-points live in ``A``; Y-points live in ``B`` (``B is A`` unless B sits inside A)."""

    A: Region
    B: Region | None = None

    def __post_init__(self):
        if self.B is None:
            object.__setattr__(self, "B", self.A)
        elif self.B != self.A:
            if self.B.d != self.A.d:
                raise ValueError("A and B must share a dimension")
            pts = self.B.boundary_points(512)
            if len(pts) == 0 or not np.all(self.A.contains(pts)):
                raise ValueError("B must lie strictly inside A")
            if np.min(np.atleast_1d(self.A.distance_to_boundary(pts))) <= 0:
                raise ValueError("closure of B must lie in the interior of A")

    @property
    def interior_flag(self) -> bool:
        return self.B != self.A

    def boundary_gap(self) -> float:
        """Smallest sampled distance from ∂B to ∂A (inf for B = A torus, 0 for B = A)."""
        if not self.interior_flag:
            return math.inf if self.A.periodic else 0.0
        pts = self.B.boundary_points(2048)
        return float(np.min(np.atleast_1d(self.A.distance_to_boundary(pts))))

    def to_dict(self) -> dict[str, Any]:
        return {"A": self.A.to_dict(), "B": None if not self.interior_flag else self.B.to_dict()}


# -- module-level operations ------------------------------------------------

def sigma(region: Region) -> float:
    """Scale-invariant isoperimetric ratio |∂A| / |A|^(1 - 1/d)."""
    if region.periodic:
        raise ValueError("sigma is undefined for a torus (no boundary)")
    return region.perimeter / region.volume ** (1.0 - 1.0 / region.d)


def distance_to_boundary(region: Region, x):
    return region.distance_to_boundary(x)


def ball_intersection_volume(region: Region, x, r: float):
    """Exact |B(x, r) ∩ region| with a shortcut for balls deep inside."""
    if r <= 0:
        raise ValueError("radius must be positive")
    xb, single = _batch(x)
    region._check_inside(xb, 1e-9)
    full = unit_ball_volume(region.d) * r**region.d
    if region.periodic:
        return region.ball_volume(x, r)
    a = np.atleast_1d(region.distance_to_boundary(xb))
    out = np.full(len(xb), full)
    near = a < r
    if np.any(near):
        out[near] = np.minimum(np.atleast_1d(region.ball_volume(xb[near], r)), full)
    return _unbatch(out, single)


def cap_approx_volume(a: float, r: float, d: int) -> float:
    """Half-space approximation (theta_d/2 + h(a/r)) r^d of a boundary ball's volume."""
    if not 0 <= a < r:
        raise ValueError("need 0 <= a < r; use the full ball volume otherwise")
    return (unit_ball_volume(d) / 2.0 + slice_volume(a / r, d)) * r**d


def sample_uniform(region: Region, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    if size is None:
        return region.sample(rng, 1)[0]
    return region.sample(rng, size)


def metric_distance(region: Region, x, y):
    return region.distance(x, y)


def region_from_dict(data: dict[str, Any]) -> Region:
    """Build a Region from its config-file form."""
    kind = str(data.get("kind", "")).lower()
    center = data.get("center")
    center = tuple(float(v) for v in center) if center is not None else None
    if kind == "square":
        return Square(side=float(data.get("side", 1.0)))
    if kind == "disk":
        return Disk(radius=float(data.get("radius", 1.0)), center=center)
    if kind == "ball":
        return Ball(d=int(data.get("d", 3)), radius=float(data.get("radius", 1.0)), center=center)
    if kind == "torus":
        return Torus(d=int(data.get("d", 2)), side=float(data.get("side", 1.0)))
    if kind == "polygon":
        return Polygon(vertices=tuple(tuple(map(float, p)) for p in data["vertices"]))
    raise ValueError(f"unknown region kind {kind!r}")

"""Exact k-th nearest-neighbour distances on a uniform grid, and the coverage threshold.

The coverage threshold ``max_y d_k(y)`` is found by branch and bound over
boxes of Y-points: ``d_k`` is 1-Lipschitz, so ``d_k(centre) + halfdiag`` bounds
every Y in a box and most boxes are discarded without per-point queries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from .geometry import Region
from .sampler import ProcessPair

__all__ = [
    "SpatialIndex",
    "build_index",
    "kth_nearest_distance",
    "kth_nearest_distances",
    "coverage_threshold",
    "count_in_ball",
]

_LEAF = 8
_MAX_DEPTH = 40
_CELLS_PER_POINT = 8


@nb.njit(cache=True, inline="always")
def _sqdist(a, b, periodic, period):
    s = 0.0
    for i in range(a.shape[0]):
        dl = abs(a[i] - b[i])
        if periodic and period - dl < dl:
            dl = period - dl
        s += dl * dl
    return s


@nb.njit(cache=True, inline="always")
def _insert(best, k, v):
    j = k - 1
    while j > 0 and best[j - 1] > v:
        best[j] = best[j - 1]
        j -= 1
    best[j] = v


@nb.njit(cache=True)
def _brute_kth_sq(q, k, pts, periodic, period, best):
    for i in range(k):
        best[i] = np.inf
    for j in range(pts.shape[0]):
        dd = _sqdist(q, pts[j], periodic, period)
        if dd < best[k - 1]:
            _insert(best, k, dd)
    return best[k - 1]


@nb.njit(cache=True)
def _kth_sq(q, k, pts, cell_start, lo, w, shape, periodic, period, best, cq, off):
    d = q.shape[0]
    for i in range(k):
        best[i] = np.inf
    for i in range(d):
        c = int(math.floor((q[i] - lo[i]) / w[i]))
        if c < 0:
            c = 0
        elif c >= shape[i]:
            c = shape[i] - 1
        cq[i] = c
    maxr = 0
    for i in range(d):
        m = max(cq[i], shape[i] - 1 - cq[i])
        if m > maxr:
            maxr = m
    rho = 0
    while True:
        if periodic:
            for i in range(d):
                if 2 * rho + 1 > shape[i]:
                    return _brute_kth_sq(q, k, pts, periodic, period, best)
        elif rho > maxr:
            break
        for i in range(d):
            off[i] = -rho
        while True:
            shell = False
            for i in range(d):
                if off[i] == rho or off[i] == -rho:
                    shell = True
                    break
            if shell:
                valid = True
                lin = 0
                boxd2 = 0.0
                for i in range(d):
                    c = cq[i] + off[i]
                    if periodic:
                        cw = c % shape[i]
                    else:
                        if c < 0 or c >= shape[i]:
                            valid = False
                            break
                        cw = c
                    blo = lo[i] + c * w[i]
                    bhi = blo + w[i]
                    g = 0.0
                    if q[i] < blo:
                        g = blo - q[i]
                    elif q[i] > bhi:
                        g = q[i] - bhi
                    boxd2 += g * g
                    lin = lin * shape[i] + cw
                if valid and boxd2 <= best[k - 1]:
                    for j in range(cell_start[lin], cell_start[lin + 1]):
                        dd = _sqdist(q, pts[j], periodic, period)
                        if dd < best[k - 1]:
                            _insert(best, k, dd)
            i = d - 1
            while i >= 0:
                off[i] += 1
                if off[i] <= rho:
                    break
                off[i] = -rho
                i -= 1
            if i < 0:
                break
        # every point in ring rho+1 or beyond is at least this far away
        bound = np.inf
        for i in range(d):
            blo = lo[i] + cq[i] * w[i]
            g = min(q[i] - blo, blo + w[i] - q[i])
            if g < 0.0:
                g = 0.0
            b = rho * w[i] + g
            if b < bound:
                bound = b
        if best[k - 1] <= bound * bound:
            break
        rho += 1
    return best[k - 1]


@nb.njit(cache=True)
def _kth_many(qs, k, pts, cell_start, lo, w, shape, periodic, period):
    d = qs.shape[1]
    out = np.empty(qs.shape[0])
    best = np.empty(k)
    cq = np.empty(d, np.int64)
    off = np.empty(d, np.int64)
    for i in range(qs.shape[0]):
        out[i] = math.sqrt(_kth_sq(qs[i], k, pts, cell_start, lo, w, shape, periodic, period, best, cq, off))
    return out


@nb.njit(cache=True)
def _count_ball(q, r, pts, cell_start, lo, w, shape, periodic, period):
    d = q.shape[0]
    lo_c = np.empty(d, np.int64)
    hi_c = np.empty(d, np.int64)
    for i in range(d):
        a = int(math.floor((q[i] - r - lo[i]) / w[i]))
        b = int(math.floor((q[i] + r - lo[i]) / w[i]))
        if periodic:
            if b - a + 1 >= shape[i]:
                cnt = 0
                for j in range(pts.shape[0]):
                    if math.sqrt(_sqdist(q, pts[j], periodic, period)) <= r:
                        cnt += 1
                return cnt
        else:
            a = max(a, 0)
            b = min(b, shape[i] - 1)
            if a > b:
                return 0
        lo_c[i] = a
        hi_c[i] = b
    off = lo_c.copy()
    cnt = 0
    while True:
        lin = 0
        for i in range(d):
            c = off[i] % shape[i] if periodic else off[i]
            lin = lin * shape[i] + c
        for j in range(cell_start[lin], cell_start[lin + 1]):
            if math.sqrt(_sqdist(q, pts[j], periodic, period)) <= r:
                cnt += 1
        i = d - 1
        while i >= 0:
            off[i] += 1
            if off[i] <= hi_c[i]:
                break
            off[i] = lo_c[i]
            i -= 1
        if i < 0:
            break
    return cnt


@nb.njit(cache=True)
def _max_kth(ys, k, pts, cell_start, lo, w, shape, periodic, period):
    """Return (max_y d_k(y), argmax) by branch and bound over boxes of Y-points."""
    m, d = ys.shape
    best = np.empty(k)
    cq = np.empty(d, np.int64)
    off = np.empty(d, np.int64)
    ncell = cell_start.shape[0] - 1

    # counting sort of Y by grid cell
    ycell = np.empty(m, np.int64)
    for j in range(m):
        lin = 0
        for i in range(d):
            c = int(math.floor((ys[j, i] - lo[i]) / w[i]))
            if c < 0:
                c = 0
            elif c >= shape[i]:
                c = shape[i] - 1
            lin = lin * shape[i] + c
        ycell[j] = lin
    counts = np.zeros(ncell + 1, np.int64)
    for j in range(m):
        counts[ycell[j] + 1] += 1
    for c in range(ncell):
        counts[c + 1] += counts[c]
    perm = np.empty(m, np.int64)
    fill = counts[:-1].copy()
    for j in range(m):
        perm[fill[ycell[j]]] = j
        fill[ycell[j]] += 1

    nchild = 1 << d
    cap = 64 + _MAX_DEPTH * nchild
    s_lo = np.empty((cap, d))
    s_w = np.empty((cap, d))
    s_start = np.empty(cap, np.int64)
    s_end = np.empty(cap, np.int64)
    s_D = np.empty(cap)
    s_ub = np.empty(cap)
    s_depth = np.empty(cap, np.int64)
    buf = np.empty(m, np.int64)
    ctr = np.empty(d)
    cnt = np.zeros(nchild + 1, np.int64)
    ch_lo = np.empty((nchild, d))
    ch_D = np.empty(nchild)
    ch_ub = np.empty(nchild)

    # top-level boxes: non-empty grid cells
    cells = np.empty(ncell, np.int64)
    tops = 0
    for c in range(ncell):
        if counts[c + 1] > counts[c]:
            cells[tops] = c
            tops += 1
    cells = cells[:tops]
    top_D = np.empty(tops)
    top_ub = np.empty(tops)
    coord = np.empty(d, np.int64)
    halfdiag0 = 0.0
    for i in range(d):
        halfdiag0 += 0.25 * w[i] * w[i]
    halfdiag0 = math.sqrt(halfdiag0)
    for t in range(tops):
        c = cells[t]
        if counts[c + 1] - counts[c] == 1:
            y = ys[perm[counts[c]]]
            v = math.sqrt(_kth_sq(y, k, pts, cell_start, lo, w, shape, periodic, period, best, cq, off))
            top_D[t] = v
            top_ub[t] = v
        else:
            rem = c
            for i in range(d - 1, -1, -1):
                coord[i] = rem % shape[i]
                rem //= shape[i]
            for i in range(d):
                ctr[i] = lo[i] + (coord[i] + 0.5) * w[i]
            v = math.sqrt(_kth_sq(ctr, k, pts, cell_start, lo, w, shape, periodic, period, best, cq, off))
            top_D[t] = v
            top_ub[t] = v + halfdiag0
    order = np.argsort(-top_ub)

    best_val = -1.0
    best_idx = -1
    for oi in range(tops):
        t = order[oi]
        if top_ub[t] <= best_val:
            break
        c = cells[t]
        if counts[c + 1] - counts[c] == 1:
            best_val = top_D[t]
            best_idx = perm[counts[c]]
            continue
        rem = c
        for i in range(d - 1, -1, -1):
            coord[i] = rem % shape[i]
            rem //= shape[i]
        sp = 0
        for i in range(d):
            s_lo[0, i] = lo[i] + coord[i] * w[i]
            s_w[0, i] = w[i]
        s_start[0] = counts[c]
        s_end[0] = counts[c + 1]
        s_D[0] = top_D[t]
        s_ub[0] = top_ub[t]
        s_depth[0] = 0
        sp = 1
        while sp > 0:
            sp -= 1
            if s_ub[sp] <= best_val:
                continue
            a0 = s_start[sp]
            a1 = s_end[sp]
            for i in range(d):
                ctr[i] = s_lo[sp, i] + 0.5 * s_w[sp, i]
            if a1 - a0 <= _LEAF or s_depth[sp] >= _MAX_DEPTH:
                Dn = s_D[sp]
                for jj in range(a0, a1):
                    j = perm[jj]
                    dc = 0.0
                    for i in range(d):
                        dc += (ys[j, i] - ctr[i]) ** 2
                    if Dn + math.sqrt(dc) <= best_val:
                        continue
                    v = math.sqrt(_kth_sq(ys[j], k, pts, cell_start, lo, w, shape, periodic, period, best, cq, off))
                    if v > best_val:
                        best_val = v
                        best_idx = j
                continue
            # split into 2^d children, partitioning perm[a0:a1] by orthant
            for b in range(nchild + 1):
                cnt[b] = 0
            for jj in range(a0, a1):
                j = perm[jj]
                b = 0
                for i in range(d):
                    b = (b << 1) | (1 if ys[j, i] >= ctr[i] else 0)
                cnt[b + 1] += 1
            for b in range(nchild):
                cnt[b + 1] += cnt[b]
            for jj in range(a0, a1):
                j = perm[jj]
                b = 0
                for i in range(d):
                    b = (b << 1) | (1 if ys[j, i] >= ctr[i] else 0)
                buf[a0 + cnt[b]] = j
                cnt[b] += 1
            for jj in range(a0, a1):
                perm[jj] = buf[jj]
            # after the scatter cnt[b] is the end offset of child b
            depth = s_depth[sp] + 1
            hd = 0.0
            for i in range(d):
                hd += 0.0625 * s_w[sp, i] * s_w[sp, i]
            hd = math.sqrt(hd)
            pw = s_w[sp].copy()
            plo = s_lo[sp].copy()
            nkids = 0
            kid_ids = np.empty(nchild, np.int64)
            kid_start = np.empty(nchild, np.int64)
            kid_end = np.empty(nchild, np.int64)
            for b in range(nchild):
                e = a0 + cnt[b]
                s = a0 + (cnt[b - 1] if b > 0 else 0)
                if e <= s:
                    continue
                for i in range(d):
                    bit = (b >> (d - 1 - i)) & 1
                    ch_lo[b, i] = plo[i] + 0.5 * pw[i] * bit
                    ctr[i] = ch_lo[b, i] + 0.25 * pw[i]
                if e - s == 1:
                    v = math.sqrt(_kth_sq(ys[perm[s]], k, pts, cell_start, lo, w, shape, periodic, period, best, cq, off))
                    if v > best_val:
                        best_val = v
                        best_idx = perm[s]
                    continue
                v = math.sqrt(_kth_sq(ctr, k, pts, cell_start, lo, w, shape, periodic, period, best, cq, off))
                ch_D[b] = v
                ch_ub[b] = v + hd
                if ch_ub[b] <= best_val:
                    continue
                kid_ids[nkids] = b
                kid_start[nkids] = s
                kid_end[nkids] = e
                nkids += 1
            # push in ascending ub so the most promising child is popped first
            kub = np.empty(nkids)
            for q_ in range(nkids):
                kub[q_] = ch_ub[kid_ids[q_]]
            kord = np.argsort(kub)
            for q_ in range(nkids):
                qq = kord[q_]
                b = kid_ids[qq]
                for i in range(d):
                    s_lo[sp, i] = ch_lo[b, i]
                    s_w[sp, i] = 0.5 * pw[i]
                s_start[sp] = kid_start[qq]
                s_end[sp] = kid_end[qq]
                s_D[sp] = ch_D[b]
                s_ub[sp] = ch_ub[b]
                s_depth[sp] = depth
                sp += 1
    return best_val, best_idx


@dataclass(frozen=True)
class SpatialIndex:
    """Uniform grid over the region's bounding box (or torus fundamental domain)."""

    points: np.ndarray  # sorted by cell
    order: np.ndarray  # original index of each sorted point
    cell_start: np.ndarray
    lo: np.ndarray
    cell_width: np.ndarray
    shape: np.ndarray
    periodic: bool
    period: float

    @property
    def point_count(self) -> int:
        return int(self.points.shape[0])

    @property
    def d(self) -> int:
        return int(self.points.shape[1])

    @property
    def cell_size(self) -> float:
        return float(self.cell_width.min())

    @property
    def metric(self) -> str:
        return f"toroidal({self.period!r})" if self.periodic else "euclidean"

    def _args(self):
        return (self.points, self.cell_start, self.lo, self.cell_width, self.shape, self.periodic, self.period)


def build_index(points: np.ndarray, region: Region, cell_size: float | None = None) -> SpatialIndex:
    pts = np.ascontiguousarray(np.asarray(points, dtype=float))
    if pts.ndim != 2 or len(pts) == 0:
        raise ValueError("cannot index an empty point set")
    lo, hi = region.bbox()
    lo = np.asarray(lo, dtype=float)
    side = np.asarray(hi, dtype=float) - lo
    d = pts.shape[1]
    if cell_size is None:
        cell_size = (float(np.prod(side)) / max(len(pts), 1)) ** (1.0 / d)
    cell_size = float(np.clip(cell_size, 1e-6, side.min()))
    shape = np.maximum(1, np.floor(side / cell_size)).astype(np.int64)
    max_cells = max(_CELLS_PER_POINT * len(pts), 4096)
    while float(np.prod(shape.astype(float))) > max_cells:
        # grid memory stays O(n); cell size never affects query results
        cell_size *= (float(np.prod(shape.astype(float))) / max_cells) ** (1.0 / d) * 1.01
        shape = np.maximum(1, np.floor(side / cell_size)).astype(np.int64)
    w = side / shape
    coords = np.clip(np.floor((pts - lo) / w).astype(np.int64), 0, shape - 1)
    lin = np.ravel_multi_index(coords.T, tuple(shape))
    order = np.argsort(lin, kind="stable")
    ncell = int(np.prod(shape))
    start = np.zeros(ncell + 1, dtype=np.int64)
    np.cumsum(np.bincount(lin, minlength=ncell), out=start[1:])
    period = float(side[0]) if region.periodic else 0.0
    return SpatialIndex(np.ascontiguousarray(pts[order]), order, start, lo, w, shape, bool(region.periodic), period)


def kth_nearest_distance(index: SpatialIndex, q, k: int) -> float:
    if k < 1 or k > index.point_count:
        raise ValueError(f"k={k} out of range for {index.point_count} indexed points")
    q = np.atleast_2d(np.asarray(q, dtype=float))
    return float(_kth_many(q, int(k), *index._args())[0])


def kth_nearest_distances(index: SpatialIndex, qs: np.ndarray, k: int) -> np.ndarray:
    if k < 1 or k > index.point_count:
        raise ValueError(f"k={k} out of range for {index.point_count} indexed points")
    return _kth_many(np.ascontiguousarray(np.atleast_2d(qs), dtype=float), int(k), *index._args())


def count_in_ball(index: SpatialIndex, x, r: float) -> int:
    """Number of indexed points within distance r of x (closed ball)."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    return int(_count_ball(np.asarray(x, dtype=float), float(r), *index._args()))


def coverage_threshold(
    pair: ProcessPair,
    region_for_metric: Region,
    k: int,
    *,
    index: SpatialIndex | None = None,
    return_argmax: bool = False,
):
    """Smallest r with at least k X-points in every closed ball B(y, r), y in Y.

    Returns +inf when there are fewer than k X-points and 0 when Y is empty.
    """
    xs, ys = pair.xs, pair.ys
    if len(xs) < k:
        out = (math.inf, -1)
    elif len(ys) == 0:
        out = (0.0, -1)
    else:
        idx = index if index is not None else build_index(xs, region_for_metric)
        val, arg = _max_kth(np.ascontiguousarray(ys, dtype=float), int(k), *idx._args())
        out = (float(val), int(arg))
    return out if return_argmax else out[0]

"""Exact star discrepancy for small point sets, boxes anchored at the origin.

Convention: boxes are half-open ``[0, x)``.  The supremum splits into an
"open" part ``vol(x) - #{p < x}/N`` (critical x on point coordinates or 1)
and a "closed" part ``#{p <= x}/N - vol(x)`` (critical x on point
coordinates), so no limits need to be taken numerically.
"""

from __future__ import annotations

import itertools

import numba
import numpy as np

from ..alphabet import BudgetExceeded

DEFAULT_BUDGET = 4e10
MAX_DIM = 4


@numba.njit(cache=True)
def _open_2d(ys, zs, vol, n_total):
    """max over (y, z) of vol*y*z - #{y_i < y, z_i < z}/N; candidates are point coords and 1.

    ``ys`` must be sorted ascending (``zs`` in matching order).
    """
    k = ys.size
    active = np.empty(k + 1, dtype=np.float64)
    na = 0
    best = -1.0
    i = 0
    while True:
        yc = ys[i] if i < k else 1.0
        # sorted z list of points with y < yc; rank of z = strict count
        j = 0
        while j < na:
            zc = active[j]
            v = vol * yc * zc - j / n_total
            if v > best:
                best = v
            # skip ties: the strict count is fixed by the first occurrence
            while j < na and active[j] == zc:
                j += 1
        v = vol * yc - na / n_total
        if v > best:
            best = v
        if i >= k:
            break
        # add every point sharing this y
        y0 = ys[i]
        while i < k and ys[i] == y0:
            z = zs[i]
            p = na
            while p > 0 and active[p - 1] > z:
                active[p] = active[p - 1]
                p -= 1
            active[p] = z
            na += 1
            i += 1
    return best


@numba.njit(cache=True)
def _closed_2d(ys, zs, vol, n_total):
    """max over (y, z) of #{y_i <= y, z_i <= z}/N - vol*y*z; candidates are point coords.

    ``ys`` must be sorted ascending (``zs`` in matching order).
    """
    k = ys.size
    if k == 0:
        return -1.0
    active = np.empty(k, dtype=np.float64)
    na = 0
    best = -1.0
    i = 0
    while i < k:
        y0 = ys[i]
        while i < k and ys[i] == y0:
            z = zs[i]
            p = na
            while p > 0 and active[p - 1] > z:
                active[p] = active[p - 1]
                p -= 1
            active[p] = z
            na += 1
            i += 1
        j = 0
        while j < na:
            zc = active[j]
            while j + 1 < na and active[j + 1] == zc:
                j += 1
            v = (j + 1) / n_total - vol * y0 * zc
            if v > best:
                best = v
            j += 1
    return best


@numba.njit(cache=True)
def _star_kernel(pts, outer):
    """Enumerate ``outer`` leading coordinates on the grid, solve the last two exactly."""
    n, s = pts.shape
    nt = float(n)
    # sweep order along the first of the two inner coordinates
    pts = pts[np.argsort(pts[:, outer])]
    if outer == 0:
        a = _open_2d(pts[:, 0].copy(), pts[:, 1].copy(), 1.0, nt)
        b = _closed_2d(pts[:, 0].copy(), pts[:, 1].copy(), 1.0, nt)
        return max(a, b, 0.0)
    cand = np.empty((outer, n + 1))
    for d in range(outer):
        cand[d, :n] = pts[:, d]
        cand[d, n] = 1.0
    total = (n + 1) ** outer
    ys = np.empty(n)
    zs = np.empty(n)
    xs = np.empty(outer)
    best = 0.0
    for flat in range(total):
        rem = flat
        vol = 1.0
        for d in range(outer):
            xs[d] = cand[d, rem % (n + 1)]
            rem //= n + 1
            vol *= xs[d]
        # open part can reach at most vol (empty box)
        if vol > best:
            k = 0
            for p in range(n):
                ok = True
                for d in range(outer):
                    if not pts[p, d] < xs[d]:
                        ok = False
                        break
                if ok:
                    ys[k] = pts[p, outer]
                    zs[k] = pts[p, outer + 1]
                    k += 1
            v = _open_2d(ys[:k], zs[:k], vol, nt)
            if v > best:
                best = v
        # closed part: on-or-inside on outer coords, at most k/N
        k = 0
        for p in range(n):
            ok = True
            for d in range(outer):
                if pts[p, d] > xs[d]:
                    ok = False
                    break
            if ok:
                ys[k] = pts[p, outer]
                zs[k] = pts[p, outer + 1]
                k += 1
        if k / nt > best:
            v = _closed_2d(ys[:k], zs[:k], vol, nt)
            if v > best:
                best = v
    return best


def estimated_work(n: int, s: int) -> float:
    if s <= 2:
        return float(n) ** 2
    return float(n + 1) ** (s - 2) * (n * n / 3 ** (s - 2) + 2 * n * (s - 2))


def _star_1d(x: np.ndarray) -> float:
    x = np.sort(x)
    n = x.size
    i = np.arange(n)
    return float(max(np.max(x - i / n), np.max((i + 1) / n - x), 0.0))


def star_discrepancy(points, budget: float = DEFAULT_BUDGET) -> float:
    """Exact D* of an (N, s) array in [0, 1)^s with s <= 4."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("points must be an (N, s) array")
    n, s = pts.shape
    if n == 0:
        raise ValueError("empty point set")
    if not 1 <= s <= MAX_DIM:
        raise ValueError(f"exact discrepancy supports 1..{MAX_DIM} dimensions")
    if np.any(pts < 0) or np.any(pts >= 1):
        raise ValueError("points must lie in [0, 1)")
    if estimated_work(n, s) > budget:
        raise BudgetExceeded(f"N={n}, s={s} exceeds the discrepancy budget")
    if s == 1:
        return _star_1d(pts[:, 0])
    return float(_star_kernel(pts, s - 2))


def star_discrepancy_naive(points) -> float:
    """Brute force over the full critical grid; independent check for tiny sets."""
    pts = np.asarray(points, dtype=np.float64)
    n, s = pts.shape
    axes = [np.unique(np.append(pts[:, d], 1.0)) for d in range(s)]
    best = 0.0
    for x in itertools.product(*axes):
        x = np.array(x)
        vol = float(np.prod(x))
        openc = np.count_nonzero(np.all(pts < x, axis=1))
        closedc = np.count_nonzero(np.all(pts <= x, axis=1))
        best = max(best, vol - openc / n, closedc / n - vol)
    return best

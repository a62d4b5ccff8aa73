"""Compiled pair kernels and N-body sums.

Every target sums its sources in label order: blocks of ``BLOCK`` sources are
added plainly, block partials are folded in with Neumaier compensation.
Source ``own[i]`` (``-1`` for none) acts on target ``i`` without its
free-space part.  The
order depends only on the source ordering, never on the thread partition, so
outputs are bit-identical for any thread count.
"""
import math
import os

import numba
import numpy as np
from numba import njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the bundled TBB is too old for numba and only produces a warning
    numba.config.THREADING_LAYER = "omp"

INV2PI = 1.0 / (2.0 * math.pi)
BLOCK = 32
_TINY = 1e-300

_FAST = {"reassoc", "nsz", "contract"}


@njit(inline="always", fastmath=_FAST, error_model="numpy")
def plane_pair(dx, dy, d2):
    # dx = dy = 0 gives a zero vector through the numerator; no branch needed
    f = INV2PI / max(dx * dx + dy * dy + d2, _TINY)
    return -dy * f, dx * f


@njit(inline="always", fastmath=_FAST, error_model="numpy")
def disk_pair(x1, x2, y1, y2, d2):
    dx = x1 - y1
    dy = x2 - y2
    f = 1.0 / max(dx * dx + dy * dy + d2, _TINY)
    yy = y1 * y1 + y2 * y2
    # |y|^2 |x - y*|^2 written without y* so that y -> 0 is regular
    den = (x1 * x1 + x2 * x2) * yy - 2.0 * (x1 * y1 + x2 * y2) + 1.0 + d2
    g = 1.0 / den
    ax = yy * x1 - y1
    ay = yy * x2 - y2
    return INV2PI * (-dy * f + ay * g), INV2PI * (dx * f - ax * g)


@njit(inline="always", fastmath=_FAST, error_model="numpy")
def disk_image(x1, x2, y1, y2, d2):
    """The image part of ``disk_pair`` alone."""
    yy = y1 * y1 + y2 * y2
    den = (x1 * x1 + x2 * x2) * yy - 2.0 * (x1 * y1 + x2 * y2) + 1.0 + d2
    g = 1.0 / den
    return INV2PI * (yy * x2 - y2) * g, -INV2PI * (yy * x1 - y1) * g


@njit(inline="always", fastmath=_FAST, error_model="numpy")
def _bspline_weights(t):
    t2 = t * t
    t3 = t2 * t
    s = 1.0 - t
    return (s * s * s / 6.0,
            (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
            (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
            t3 / 6.0)


@njit(inline="always", error_model="numpy")
def _spline_eval(cu, cv, x, y, period):
    ng = cu.shape[0]
    fx = x / period * ng
    fy = y / period * ng
    ix = int(math.floor(fx))
    iy = int(math.floor(fy))
    wx = _bspline_weights(fx - ix)
    wy = _bspline_weights(fy - iy)
    u = 0.0
    v = 0.0
    for a in range(4):
        ia = (ix - 1 + a) % ng
        ua = 0.0
        va = 0.0
        for b in range(4):
            jb = (iy - 1 + b) % ng
            ua += wy[b] * cu[ia, jb]
            va += wy[b] * cv[ia, jb]
        u += wx[a] * ua
        v += wx[a] * va
    return u, v


@njit(inline="always", error_model="numpy")
def torus_pair(dx, dy, d2, period, cu, cv, inv2s2, drop_center=False):
    # drop_center leaves out the free-space term of the nearest image
    half = 0.5 * period
    dx = dx - period * math.floor(dx / period + 0.5)
    dy = dy - period * math.floor(dy / period + 0.5)
    # float rounding can leave dx == +period/2; fold it back
    if dx >= half:
        dx -= period
    if dy >= half:
        dy -= period
    u, v = _spline_eval(cu, cv, dx, dy, period)
    for a in range(-1, 2):
        ex = dx + a * period
        for b in range(-1, 2):
            ey = dy + b * period
            r2 = ex * ex + ey * ey
            f = 0.0 if (drop_center and a == 0 and b == 0) else 1.0 / max(r2 + d2, _TINY)
            if r2 > 0.0:
                f -= -math.expm1(-r2 * inv2s2) / r2
            u -= INV2PI * ey * f
            v += INV2PI * ex * f
    return u, v


@njit(inline="always")
def _neumaier(s, c, x):
    t = s + x
    if abs(s) >= abs(x):
        c += (s - t) + x
    else:
        c += (x - t) + s
    return t, c


@njit(parallel=True, fastmath=_FAST, error_model="numpy", cache=True)
def sum_plane(tx, ty, sx, sy, g, d2, own, out):
    n = sx.size
    for i in prange(tx.size):
        xi = tx[i]
        yi = ty[i]
        oi = own[i]
        su = 0.0
        cu = 0.0
        sv = 0.0
        cv = 0.0
        for j0 in range(0, n, BLOCK):
            bu = 0.0
            bv = 0.0
            for j in range(j0, min(j0 + BLOCK, n)):
                if j == oi:
                    continue
                ku, kv = plane_pair(xi - sx[j], yi - sy[j], d2)
                bu += g[j] * ku
                bv += g[j] * kv
            su, cu = _neumaier(su, cu, bu)
            sv, cv = _neumaier(sv, cv, bv)
        out[i, 0] = su + cu
        out[i, 1] = sv + cv


@njit(parallel=True, fastmath=_FAST, error_model="numpy", cache=True)
def sum_disk(tx, ty, sx, sy, g, d2, own, out):
    n = sx.size
    for i in prange(tx.size):
        xi = tx[i]
        yi = ty[i]
        oi = own[i]
        su = 0.0
        cu = 0.0
        sv = 0.0
        cv = 0.0
        for j0 in range(0, n, BLOCK):
            bu = 0.0
            bv = 0.0
            for j in range(j0, min(j0 + BLOCK, n)):
                if j == oi:
                    ku, kv = disk_image(xi, yi, sx[j], sy[j], d2)
                else:
                    ku, kv = disk_pair(xi, yi, sx[j], sy[j], d2)
                bu += g[j] * ku
                bv += g[j] * kv
            su, cu = _neumaier(su, cu, bu)
            sv, cv = _neumaier(sv, cv, bv)
        out[i, 0] = su + cu
        out[i, 1] = sv + cv


@njit(parallel=True, error_model="numpy", cache=True)
def sum_torus(tx, ty, sx, sy, g, d2, period, cu_tab, cv_tab, inv2s2, own, out):
    n = sx.size
    for i in prange(tx.size):
        xi = tx[i]
        yi = ty[i]
        oi = own[i]
        su = 0.0
        cu = 0.0
        sv = 0.0
        cv = 0.0
        for j0 in range(0, n, BLOCK):
            bu = 0.0
            bv = 0.0
            for j in range(j0, min(j0 + BLOCK, n)):
                ku, kv = torus_pair(xi - sx[j], yi - sy[j], d2, period,
                                    cu_tab, cv_tab, inv2s2, j == oi)
                bu += g[j] * ku
                bv += g[j] * kv
            su, cu = _neumaier(su, cu, bu)
            sv, cv = _neumaier(sv, cv, bv)
        out[i, 0] = su + cu
        out[i, 1] = sv + cv


@njit(parallel=True, fastmath=_FAST, error_model="numpy", cache=True)
def pairs_plane(x, y, d2, out):
    for i in prange(x.shape[0]):
        out[i, 0], out[i, 1] = plane_pair(x[i, 0] - y[i, 0], x[i, 1] - y[i, 1], d2)


@njit(parallel=True, fastmath=_FAST, error_model="numpy", cache=True)
def pairs_disk(x, y, d2, out):
    for i in prange(x.shape[0]):
        out[i, 0], out[i, 1] = disk_pair(x[i, 0], x[i, 1], y[i, 0], y[i, 1], d2)


@njit(parallel=True, error_model="numpy", cache=True)
def pairs_torus(x, y, d2, period, cu_tab, cv_tab, inv2s2, out):
    for i in prange(x.shape[0]):
        out[i, 0], out[i, 1] = torus_pair(x[i, 0] - y[i, 0], x[i, 1] - y[i, 1], d2,
                                          period, cu_tab, cv_tab, inv2s2)


def thread_count():
    return numba.get_num_threads()

"""Compiled in-place round kernels for the sweep engine.

Same arithmetic as ``rotate.transform_pair_fixed`` element by element; the numpy
version stays the reference and the test suite checks the two agree bit for bit.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _sr(x, k):
    return x >> (k if k < 63 else 63)


@njit(cache=True, inline="always")
def _scale(y, l, stages, bypass, cutoff):
    if bypass:
        return y
    if l == 0:
        return y >> 1
    if l >= cutoff:
        return y
    first = y - _sr(y, 2 * l)
    z = first
    if stages >= 2 and l <= 7:
        z = z + _sr(z, 4 * l)
    if stages >= 3:
        if l == 1:
            z = z + (z >> 8)
        elif l == 2:
            z = z + (z >> 16)
        elif l == 3:
            z = z + (first >> 24)
    if stages >= 4 and l == 1:
        z = z + (z >> 16)
    return z


@njit(cache=True, inline="always")
def _pair(xp, xq, l, s, guard, stages, bypass, cutoff):
    X = xp << guard
    Y = xq << guard
    if l == 0:
        cX = 0
        cY = 0
        sX = X << 1
        sY = Y << 1
    else:
        cX = X - _sr(X, 2 * l)
        cY = Y - _sr(Y, 2 * l)
        sX = _sr(X, l - 1)
        sY = _sr(Y, l - 1)
    y1 = cX - s * sY
    y2 = s * sX + cY
    y1 = _scale(y1, l, stages, bypass, cutoff) >> guard
    y2 = _scale(y2, l, stages, bypass, cutoff) >> guard
    return y1, y2


@njit(cache=True)
def rotate_fixed(M, p, q, l, s, zero, swap, rows, stages, bypass, cutoff, guard, lo, hi, over):
    """Rotate rows (or columns) p[k], q[k] of every M[t] with the pair-k rotation of trial t."""
    T = M.shape[0]
    n = M.shape[1]
    P = p.shape[0]
    for t in range(T):
        for k in range(P):
            if zero[t, k] and not swap[t, k]:
                continue
            a = p[k]
            b = q[k]
            lk = l[t, k]
            sk = s[t, k]
            zk = zero[t, k]
            wk = swap[t, k]
            for j in range(n):
                if rows:
                    xp = M[t, a, j]
                    xq = M[t, b, j]
                else:
                    xp = M[t, j, a]
                    xq = M[t, j, b]
                if zk:
                    y1 = xp
                    y2 = xq
                else:
                    y1, y2 = _pair(xp, xq, lk, sk, guard, stages, bypass, cutoff)
                if wk:
                    y1, y2 = y2, y1
                if y1 > hi:
                    y1 = hi
                    over[t] += 1
                elif y1 < lo:
                    y1 = lo
                    over[t] += 1
                if y2 > hi:
                    y2 = hi
                    over[t] += 1
                elif y2 < lo:
                    y2 = lo
                    over[t] += 1
                if rows:
                    M[t, a, j] = y1
                    M[t, b, j] = y2
                else:
                    M[t, j, a] = y1
                    M[t, j, b] = y2


@njit(cache=True)
def rotate_float(M, p, q, c, s, swap, rows):
    T = M.shape[0]
    n = M.shape[1]
    P = p.shape[0]
    for t in range(T):
        for k in range(P):
            a = p[k]
            b = q[k]
            ck = c[t, k]
            sk = s[t, k]
            wk = swap[t, k]
            if ck == 1.0 and sk == 0.0 and not wk:
                continue
            for j in range(n):
                if rows:
                    xp = M[t, a, j]
                    xq = M[t, b, j]
                else:
                    xp = M[t, j, a]
                    xq = M[t, j, b]
                y1 = ck * xp - sk * xq
                y2 = sk * xp + ck * xq
                if wk:
                    y1, y2 = y2, y1
                if rows:
                    M[t, a, j] = y1
                    M[t, b, j] = y2
                else:
                    M[t, j, a] = y1
                    M[t, j, b] = y2


def as_params(rot, T, P):
    """Contiguous (T, P) parameter arrays for the kernels."""
    return tuple(
        np.ascontiguousarray(np.broadcast_to(np.asarray(x), (T, P)), dtype=dt)
        for x, dt in ((rot.l, np.int64), (rot.s, np.int64), (rot.zero, np.bool_), (rot.swap, np.bool_))
    )

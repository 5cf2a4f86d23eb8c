"""Closed-form local Hopf-Lax updates on a single edge or triangle.

All functions take an inverse metric ``M`` (ms^2/cm^2) and return times in ms.
``+inf`` marks an unknown value and only ever goes through min/compare.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

INF = math.inf
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@nb.njit(cache=True)
def _qform(M, u, v):
    d = u.shape[0]
    acc = 0.0
    for i in range(d):
        row = 0.0
        for j in range(d):
            row += M[i, j] * v[j]
        acc += u[i] * row
    return acc


@nb.njit(cache=True)
def _dist_along(x, y1, y2, s, M):
    """Metric length of x - (y1 + s (y2 - y1))."""
    d = x.shape[0]
    w = np.empty(d)
    for i in range(d):
        w[i] = x[i] - y1[i] - s * (y2[i] - y1[i])
    return math.sqrt(max(_qform(M, w, w), 0.0))


@nb.njit(cache=True)
def edge_update(x, y, phi_y, M):
    d = x.shape[0]
    w = np.empty(d)
    for i in range(d):
        w[i] = x[i] - y[i]
    return phi_y + math.sqrt(max(_qform(M, w, w), 0.0))


@nb.njit(cache=True)
def triangle_update(x, y1, y2, phi1, phi2, M):
    """min over s in [0, 1] of phi1 + s (phi2 - phi1) + |x - y(s)|_M.

    The objective is convex in s, so its minimiser is the clipped
    stationary point; both endpoints are always evaluated.
    """
    if phi1 == INF and phi2 == INF:
        return INF
    if phi2 == INF:
        return edge_update(x, y1, phi1, M)
    if phi1 == INF:
        return edge_update(x, y2, phi2, M)

    d = x.shape[0]
    a = np.empty(d)
    d0 = np.empty(d)
    for i in range(d):
        a[i] = y2[i] - y1[i]
        d0[i] = x[i] - y1[i]
    A = _qform(M, a, a)
    B = _qform(M, a, d0)
    C = _qform(M, d0, d0)
    delta = phi2 - phi1

    best = edge_update(x, y1, phi1, M)
    v2 = edge_update(x, y2, phi2, M)
    if v2 < best:
        best = v2

    denom = A - delta * delta
    if denom > 1e-14 * A:
        disc = max(A * C - B * B, 0.0)
        s = (B - delta * math.sqrt(disc / denom)) / A
        if 0.0 < s < 1.0:
            val = phi1 + s * delta + _dist_along(x, y1, y2, s, M)
            if val < best:
                best = val
    else:
        # |delta| ~ |a|_M: the objective is nearly linear, refine numerically
        lo, hi = 0.0, 1.0
        c1 = hi - _GOLDEN * (hi - lo)
        c2 = lo + _GOLDEN * (hi - lo)
        f1 = phi1 + c1 * delta + _dist_along(x, y1, y2, c1, M)
        f2 = phi1 + c2 * delta + _dist_along(x, y1, y2, c2, M)
        for _ in range(60):
            if f1 < f2:
                hi, c2, f2 = c2, c1, f1
                c1 = hi - _GOLDEN * (hi - lo)
                f1 = phi1 + c1 * delta + _dist_along(x, y1, y2, c1, M)
            else:
                lo, c1, f1 = c1, c2, f2
                c2 = lo + _GOLDEN * (hi - lo)
                f2 = phi1 + c2 * delta + _dist_along(x, y1, y2, c2, M)
        val = min(f1, f2)
        if val < best:
            best = val
    return best


def node_update(x: int, nodes: np.ndarray, adjacency, phi: np.ndarray, resolve_metric) -> float:
    """Minimum triangle update of node ``x`` over its one-ring.

    ``resolve_metric(t)`` returns the inverse metric of triangle ``t`` for this
    update, or None when the triangle is non-conductive.
    """
    best = INF
    tris = adjacency.triangles_of_mesh
    for t in adjacency.triangles(x):
        a, b, c = tris[t]
        y1, y2 = (b, c) if a == x else (c, a) if b == x else (a, b)
        p1, p2 = phi[y1], phi[y2]
        if p1 == INF and p2 == INF:
            continue
        M = resolve_metric(t)
        if M is None:
            continue
        val = triangle_update(nodes[x], nodes[y1], nodes[y2], p1, p2, M)
        best = min(best, val)
    return best

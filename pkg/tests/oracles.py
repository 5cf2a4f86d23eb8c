"""Brute-force reference implementations used as test oracles."""

import math

import numba as nb
import numpy as np


@nb.njit(cache=True)
def grid_search_update(x, y1, y2, phi1, phi2, M, samples):
    """min over s on a uniform grid of [0, 1] of phi1 + s (phi2 - phi1) + |x - y(s)|_M."""
    best = math.inf
    for k in range(samples + 1):
        s = k / samples
        w0 = x[0] - y1[0] - s * (y2[0] - y1[0])
        w1 = x[1] - y1[1] - s * (y2[1] - y1[1])
        q = M[0, 0] * w0 * w0 + 2.0 * M[0, 1] * w0 * w1 + M[1, 1] * w1 * w1
        val = phi1 + s * (phi2 - phi1) + math.sqrt(q)
        if val < best:
            best = val
    return best


def random_spd(rng, lo=0.1, hi=10.0):
    theta = rng.uniform(0, math.pi)
    c, s = math.cos(theta), math.sin(theta)
    R = np.array([[c, -s], [s, c]])
    return R @ np.diag(rng.uniform(lo, hi, 2)) @ R.T


def random_update_problem(rng):
    while True:
        x, y1, y2 = rng.random((3, 2))
        e1, e2 = y1 - x, y2 - x
        if abs(e1[0] * e2[1] - e1[1] * e2[0]) > 1e-3:
            break
    return x, y1, y2, rng.uniform(0, 2), rng.uniform(0, 2), random_spd(rng)


def linear_scan_fmm(mesh, metric, sources):
    """Fast marching with a plain list scan instead of a heap.

    Mirrors the production candidate rules (one-ring triangle updates through
    the newly accepted node, monotone front clamp, improvement tolerance) so
    only the priority structure differs.
    """
    from eikonal_reentry.fmm import IMPROVE_TOL
    from eikonal_reentry.local_solver import triangle_update
    from eikonal_reentry.mesh import build_adjacency

    adj = build_adjacency(mesh)
    n = mesh.n_nodes
    phi = np.full(n, math.inf)
    accepted = np.zeros(n, dtype=bool)
    pending = {}
    order = []
    Minv = metric.D_inv
    for node, val in sorted(sources.items(), key=lambda kv: (kv[1], kv[0])):
        phi[node] = val
        accepted[node] = True
        order.append(node)

    def relax(xa, front):
        for xn in adj.neighbors(xa):
            if accepted[xn]:
                continue
            cand = math.inf
            for t in adj.triangles(xn):
                tri = mesh.triangles[t]
                if not metric.conductive[t] or xa not in tri:
                    continue
                a, b, c = tri
                y1, y2 = (b, c) if a == xn else (c, a) if b == xn else (a, b)
                val = triangle_update(mesh.nodes[xn], mesh.nodes[y1], mesh.nodes[y2],
                                      phi[y1], phi[y2], Minv[t])
                cand = min(cand, val)
            if cand == math.inf:
                continue
            cand = max(cand, front)
            if xn not in pending:
                pending[xn] = cand
            elif cand < pending[xn] - IMPROVE_TOL:
                pending[xn] = cand

    for node in list(order):
        relax(node, -math.inf)
    while pending:
        xa = min(pending, key=lambda k: (pending[k], k))
        key = pending.pop(xa)
        phi[xa] = key
        accepted[xa] = True
        order.append(xa)
        relax(xa, key)
    return phi, np.array(order)


def ring_period_fixed_point(table, path_length, tol=1e-10, max_iter=500):
    """Period P of steady rotation around a loop of ``path_length`` cm.

    Solves P = L / c(P - a(P)) where a(P) is the APD that reproduces itself
    at cycle length P. Both levels are damped scalar iterations, no root finder.
    """
    def self_consistent_apd(period):
        apd = table.apd_plateau
        for _ in range(max_iter):
            apd = 0.5 * apd + 0.5 * table.apd_of(max(period - apd, table.di_min))
        return apd

    period = 400.0
    for _ in range(max_iter):
        new = path_length / (table.cv_of(period - self_consistent_apd(period)) / 1000.0)
        if abs(new - period) < tol:
            return new
        period = 0.5 * period + 0.5 * new
    raise RuntimeError("ring period iteration did not converge")

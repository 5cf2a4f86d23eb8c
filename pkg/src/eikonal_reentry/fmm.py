"""Single-pass fast marching on triangle meshes, and the edge-only Dijkstra
baseline that shares the same marching loop."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from .heap import heap_decrease, heap_pop, heap_push
from .local_solver import edge_update, triangle_update
from .mesh import Adjacency, Mesh, build_adjacency
from .metric import MetricField

FAR, CONSIDERED, ACCEPTED = 0, 1, 2
IMPROVE_TOL = 1e-12  # ms; smaller improvements do not touch the heap


@dataclass(frozen=True)
class ActivationField:
    phi: np.ndarray  # (N,) ms, +inf where never reached
    state: np.ndarray  # (N,) int8, FAR / CONSIDERED / ACCEPTED
    order: np.ndarray  # accepted node ids, sources first
    iterations: int  # marching pops, sources excluded


@nb.njit(cache=True)
def _opposite(tri, x):
    a, b, c = tri[0], tri[1], tri[2]
    if a == x:
        return b, c
    if b == x:
        return c, a
    return a, b


@nb.njit(cache=True)
def _relax_static(xa, front, nodes, tris, tri_ptr, tri_idx, nbr_ptr, nbr_idx, Minv, conductive,
                  use_triangles, phi, state, keys, ids, pos, size):
    for q in range(nbr_ptr[xa], nbr_ptr[xa + 1]):
        xn = nbr_idx[q]
        if state[xn] == ACCEPTED:
            continue
        cand = math.inf
        for r in range(tri_ptr[xn], tri_ptr[xn + 1]):
            t = tri_idx[r]
            if not conductive[t]:
                continue
            tri = tris[t]
            if tri[0] != xa and tri[1] != xa and tri[2] != xa:
                continue
            if use_triangles:
                y1, y2 = _opposite(tri, xn)
                val = triangle_update(nodes[xn], nodes[y1], nodes[y2], phi[y1], phi[y2], Minv[t])
            else:
                val = edge_update(nodes[xn], nodes[xa], phi[xa], Minv[t])
            if val < cand:
                cand = val
        if cand == math.inf:
            continue
        if cand < front:
            cand = front
        if state[xn] == FAR:
            heap_push(keys, ids, pos, size, xn, cand)
            state[xn] = CONSIDERED
        elif cand < keys[pos[xn]] - IMPROVE_TOL:
            heap_decrease(keys, ids, pos, xn, cand)


@nb.njit(cache=True)
def _march_static(nodes, tris, tri_ptr, tri_idx, nbr_ptr, nbr_idx, Minv, conductive,
                  src_nodes, src_vals, use_triangles):
    n = nodes.shape[0]
    phi = np.full(n, math.inf)
    state = np.zeros(n, dtype=np.int8)
    keys = np.empty(n)
    ids = np.empty(n, dtype=np.int64)
    pos = np.full(n, -1, dtype=np.int64)
    size = np.zeros(1, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    n_order = 0
    for k in range(src_nodes.shape[0]):
        x = src_nodes[k]
        phi[x] = src_vals[k]
        state[x] = ACCEPTED
        order[n_order] = x
        n_order += 1
    front = -math.inf
    for k in range(src_nodes.shape[0]):
        _relax_static(src_nodes[k], front, nodes, tris, tri_ptr, tri_idx, nbr_ptr, nbr_idx, Minv,
                      conductive, use_triangles, phi, state, keys, ids, pos, size)
    iterations = 0
    while size[0] > 0:
        xa, key = heap_pop(keys, ids, pos, size)
        phi[xa] = key
        state[xa] = ACCEPTED
        order[n_order] = xa
        n_order += 1
        iterations += 1
        front = key
        _relax_static(xa, front, nodes, tris, tri_ptr, tri_idx, nbr_ptr, nbr_idx, Minv,
                      conductive, use_triangles, phi, state, keys, ids, pos, size)
    return phi, state, order[:n_order], iterations


def normalize_sources(sources, n_nodes: int):
    """Sources as sorted (node, phi0) arrays; duplicate nodes keep the minimum."""
    if isinstance(sources, dict):
        items = list(sources.items())
    else:
        items = list(sources)
    if not items:
        raise ValueError("at least one source is required")
    best = {}
    for node, val in items:
        node = int(node)
        val = float(val)
        if not 0 <= node < n_nodes:
            raise ValueError(f"source node {node} is not a mesh node")
        if not math.isfinite(val):
            raise ValueError(f"source value for node {node} must be finite")
        best[node] = min(val, best.get(node, math.inf))
    ordered = sorted(best.items(), key=lambda kv: (kv[1], kv[0]))
    nodes = np.array([k for k, _ in ordered], dtype=np.int64)
    vals = np.array([v for _, v in ordered], dtype=np.float64)
    return nodes, vals


def _solve(mesh, metric, sources, adjacency, use_triangles):
    if adjacency is None:
        adjacency = build_adjacency(mesh)
    src_nodes, src_vals = normalize_sources(sources, mesh.n_nodes)
    Minv = np.ascontiguousarray(np.where(metric.conductive[:, None, None], metric.D_inv, 0.0))
    phi, state, order, iterations = _march_static(
        mesh.nodes, mesh.triangles, adjacency.tri_ptr, adjacency.tri_idx, adjacency.nbr_ptr,
        adjacency.nbr_idx, Minv, metric.conductive, src_nodes, src_vals, use_triangles,
    )
    return ActivationField(phi, state, order, int(iterations))


def fmm_solve(mesh: Mesh, metric: MetricField, sources, adjacency: Adjacency | None = None) -> ActivationField:
    """Fast marching with triangle (Hopf-Lax) updates.

    ``sources`` maps node id to its initial time (ms), as a dict or as
    (node, time) pairs.
    """
    return _solve(mesh, metric, sources, adjacency, True)


def dijkstra_solve(mesh: Mesh, metric: MetricField, sources, adjacency: Adjacency | None = None) -> ActivationField:
    """Same marching loop, but candidates come from edges only."""
    return _solve(mesh, metric, sources, adjacency, False)

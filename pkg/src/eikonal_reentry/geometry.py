"""Synthetic geometries: structured squares (plain or metric-stretched) and annuli."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay

from .mesh import Mesh, MeshError, doubled_areas

HEALTHY, BORDER_ZONE, SCAR = 0, 1, 2


@dataclass(frozen=True)
class Region:
    """Axis-aligned box ``[x0, x1] x [y0, y1]`` painted with ``tissue``."""

    x0: float
    y0: float
    x1: float
    y1: float
    tissue: int

    def contains(self, pts: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        x, y = pts[:, 0], pts[:, 1]
        return (x >= self.x0 - tol) & (x <= self.x1 + tol) & (y >= self.y0 - tol) & (y <= self.y1 + tol)

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)


def two_scar_layout(side=15.0, scar_w=3.0, scar_h=5.0, corridor=1.0):
    """Two scars side by side in the middle of the square, separated by a
    vertical border-zone corridor. Painting order matters: later regions win."""
    total = 2 * scar_w + corridor
    x0 = 0.5 * (side - total)
    y0 = 0.5 * (side - scar_h)
    return [
        Region(x0, y0, x0 + scar_w, y0 + scar_h, SCAR),
        Region(x0 + scar_w, y0, x0 + scar_w + corridor, y0 + scar_h, BORDER_ZONE),
        Region(x0 + scar_w + corridor, y0, x0 + total, y0 + scar_h, SCAR),
    ]


def stretch_for_metric(ratio: float, fiber) -> np.ndarray:
    """Unit-determinant map S such that a mesh that is equilateral in the
    coordinates ``S @ x`` is acute for the metric of (ratio, fiber).

    S is proportional to D^{-1/2}: it shrinks the fiber direction by
    sqrt(ratio) and expands the cross-fiber directions.
    """
    if not 0 < ratio <= 1:
        raise ValueError(f"anisotropy ratio must be in (0, 1], got {ratio}")
    f = np.asarray(fiber, dtype=float)
    f = f / np.linalg.norm(f)
    dim = f.size
    ff = np.outer(f, f)
    S = (np.eye(dim) - ff) / ratio + ff
    return S * ratio ** ((dim - 1) / dim)


def _paint(nodes: np.ndarray, side: float, regions) -> np.ndarray:
    tissue = np.zeros(nodes.shape[0], dtype=np.int64)
    for r in regions or ():
        if r.x0 < -1e-12 or r.y0 < -1e-12 or r.x1 > side + 1e-12 or r.y1 > side + 1e-12:
            raise ValueError(f"region {r} lies outside the [0, {side}]^2 square")
        if r.x1 <= r.x0 or r.y1 <= r.y0:
            raise ValueError(f"region {r} is empty")
        tissue[r.contains(nodes)] = r.tissue
    return tissue


def generate_structured_square(side: float, h: float, scars=None, stretch=None, fiber=(1.0, 0.0)) -> Mesh:
    """Triangulate the square [0, side]^2.

    Without ``stretch`` this is the right-triangle grid with (n+1)^2 nodes and
    2 n^2 triangles (n = side/h), each cell split along its anti-diagonal.

    With ``stretch`` (a 2x2 matrix S) the nodes form an equilateral lattice of
    spacing h in the coordinates S @ x, plus boundary nodes, triangulated by
    Delaunay in those coordinates. The result is acute for metrics
    proportional to S^T S; see :func:`stretch_for_metric`.

    ``scars`` is a list of :class:`Region` painted over healthy tissue (id 0).
    """
    if side <= 0 or not 0 < h < side:
        raise ValueError(f"need side > 0 and 0 < h < side, got side={side}, h={h}")
    if stretch is None:
        nodes, tris = _right_grid(side, h)
    else:
        nodes, tris = _lattice_square(side, h, np.asarray(stretch, dtype=float))
    tissue = _paint(nodes, side, scars)
    fiber = np.asarray(fiber, dtype=float)
    fibers = np.broadcast_to(fiber / np.linalg.norm(fiber), (len(tris), 2))
    return Mesh(nodes, tris, fibers, tissue)


def _right_grid(side, h):
    n = max(1, int(round(side / h)))
    xs = np.linspace(0.0, side, n + 1)
    X, Y = np.meshgrid(xs, xs)
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(n), np.arange(n))
    p00 = (j * (n + 1) + i).ravel()
    p10 = p00 + 1
    p01 = p00 + n + 1
    p11 = p01 + 1
    lower = np.column_stack([p00, p10, p01])
    upper = np.column_stack([p10, p11, p01])
    tris = np.empty((2 * n * n, 3), dtype=np.int64)
    tris[0::2] = lower
    tris[1::2] = upper
    return nodes, tris


def _lattice_square(side, h, S):
    if S.shape != (2, 2) or abs(np.linalg.det(S)) < 1e-12:
        raise ValueError("stretch must be an invertible 2x2 matrix")
    S = S / math.sqrt(abs(np.linalg.det(S)))
    Sinv = np.linalg.inv(S)
    corners = np.array([[0, 0], [side, 0], [side, side], [0, side]], dtype=float)
    ref = corners @ S.T
    lo, hi = ref.min(axis=0) - h, ref.max(axis=0) + h

    dy = h * math.sqrt(3) / 2
    rows = np.arange(lo[1], hi[1] + dy, dy)
    pts = []
    for k, y in enumerate(rows):
        xs = np.arange(lo[0] + (0.5 * h if k % 2 else 0.0), hi[0] + h, h)
        pts.append(np.column_stack([xs, np.full_like(xs, y)]))
    lattice = np.vstack(pts)

    # keep lattice points at reference distance > h/2 from every side
    keep = np.ones(len(lattice), dtype=bool)
    boundary = []
    for a, b in zip(ref, np.roll(ref, -1, axis=0)):
        d = b - a
        length = np.linalg.norm(d)
        normal = np.array([-d[1], d[0]]) / length
        dist = (lattice - a) @ normal
        keep &= dist > 0.5 * h
        m = max(1, int(math.ceil(length / h)))
        s = np.arange(m) / m
        boundary.append(a + s[:, None] * d)
    ref_pts = np.vstack([np.vstack(boundary), lattice[keep]])

    tri = Delaunay(ref_pts)
    simplices = tri.simplices.astype(np.int64)
    nodes = ref_pts @ Sinv.T
    # snap boundary nodes exactly onto the square
    nodes = np.where(np.abs(nodes) < 1e-9 * side, 0.0, nodes)
    nodes = np.where(np.abs(nodes - side) < 1e-9 * side, side, nodes)

    area2 = doubled_areas(nodes, simplices)
    simplices = simplices[area2 > 1e-10 * h * h]
    used = np.unique(simplices)
    remap = -np.ones(len(nodes), dtype=np.int64)
    remap[used] = np.arange(len(used))
    nodes = nodes[used]
    simplices = remap[simplices]
    # orient counter-clockwise
    p = nodes[simplices]
    cross = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (
        p[:, 2, 0] - p[:, 0, 0]
    )
    flip = cross < 0
    simplices[flip] = simplices[flip][:, [0, 2, 1]]
    return nodes, simplices


def generate_annulus(r_inner: float, r_outer: float, h: float, center=(0.0, 0.0)) -> Mesh:
    """Annulus from concentric node rings, alternate rings offset by half an
    angular step so the triangles are close to equilateral.

    Fibers are circumferential; all tissue is 0.
    """
    if not 0 < r_inner < r_outer:
        raise ValueError(f"need 0 < r_inner < r_outer, got {r_inner}, {r_outer}")
    if h <= 0:
        raise ValueError("h must be positive")
    n_r = max(1, int(math.ceil((r_outer - r_inner) / (h * math.sqrt(3) / 2))))
    r_mean = 0.5 * (r_inner + r_outer)
    n_t = max(6, int(round(2 * math.pi * r_mean / h)))
    radii = np.linspace(r_inner, r_outer, n_r + 1)
    dtheta = 2 * math.pi / n_t

    nodes = np.empty(((n_r + 1) * n_t, 2))
    for i, r in enumerate(radii):
        theta = (np.arange(n_t) + 0.5 * (i % 2)) * dtheta
        nodes[i * n_t : (i + 1) * n_t] = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    nodes += np.asarray(center, dtype=float)

    tris = []
    k = np.arange(n_t)
    kp = (k + 1) % n_t
    for i in range(n_r):
        lo, hi = i * n_t, (i + 1) * n_t
        if i % 2 == 0:
            # outer ring shifted by +half step
            tris.append(np.column_stack([lo + k, lo + kp, hi + k]))
            tris.append(np.column_stack([hi + k, lo + kp, hi + kp]))
        else:
            # inner ring shifted by +half step
            tris.append(np.column_stack([lo + k, hi + kp, hi + k]))
            tris.append(np.column_stack([lo + k, lo + kp, hi + kp]))
    tris = np.vstack(tris).astype(np.int64)

    c = nodes[tris].mean(axis=1) - np.asarray(center, dtype=float)
    tangent = np.column_stack([-c[:, 1], c[:, 0]])
    fibers = tangent / np.linalg.norm(tangent, axis=1, keepdims=True)
    return Mesh(nodes, tris, fibers, np.zeros(len(nodes), dtype=np.int64))


def annulus_inner_perimeter(r_inner: float, r_outer: float, h: float) -> float:
    """Perimeter of the polygonal inner rim produced by :func:`generate_annulus`."""
    r_mean = 0.5 * (r_inner + r_outer)
    n_t = max(6, int(round(2 * math.pi * r_mean / h)))
    return n_t * 2 * r_inner * math.sin(math.pi / n_t)


def check_layout(side: float, regions) -> None:
    """Raise MeshError if a region leaves the square."""
    try:
        _paint(np.zeros((0, 2)), side, regions)
    except ValueError as exc:
        raise MeshError(str(exc)) from exc

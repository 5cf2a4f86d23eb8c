"""Triangle meshes: storage, validation, JSON I/O and connectivity queries.

Lengths are in cm. Tissue ids live on nodes, fibers on triangles.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


class MeshError(ValueError):
    """Raised for malformed or invalid mesh input."""


@dataclass(frozen=True)
class Mesh:
    nodes: np.ndarray  # (N, dim) float64, cm
    triangles: np.ndarray  # (M, 3) int64
    fibers: np.ndarray  # (M, dim) unit vectors
    tissue: np.ndarray  # (N,) int64

    def __post_init__(self):
        object.__setattr__(self, "nodes", _frozen(self.nodes, np.float64))
        object.__setattr__(self, "triangles", _frozen(self.triangles, np.int64))
        object.__setattr__(self, "fibers", _frozen(self.fibers, np.float64))
        object.__setattr__(self, "tissue", _frozen(self.tissue, np.int64))

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    def validate(self, tissue_ids=None) -> "Mesh":
        """Check the mesh invariants; raise MeshError naming the first offender.

        ``tissue_ids``, if given, is the collection of declared tissue ids.
        """
        nodes, tris, fib, tis = self.nodes, self.triangles, self.fibers, self.tissue
        if nodes.ndim != 2 or nodes.shape[1] not in (2, 3):
            raise MeshError("nodes must be an array of 2D or 3D coordinates")
        if not np.all(np.isfinite(nodes)):
            bad = int(np.argwhere(~np.isfinite(nodes))[0, 0])
            raise MeshError(f"node {bad} has a non-finite coordinate")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise MeshError("triangles must be an array of index triples")
        if tris.shape[0] == 0:
            raise MeshError("mesh has no triangles")
        dangling = (tris < 0) | (tris >= self.n_nodes)
        if dangling.any():
            t = int(np.argwhere(dangling.any(axis=1))[0, 0])
            raise MeshError(f"triangle {t} references a node outside [0, {self.n_nodes})")
        if fib.shape != (self.n_triangles, self.dim):
            raise MeshError(
                f"fibers must have shape ({self.n_triangles}, {self.dim}), got {fib.shape}"
            )
        norms = np.linalg.norm(fib, axis=1)
        off = np.abs(norms - 1.0) > 1e-9
        if off.any():
            t = int(np.argmax(off))
            raise MeshError(f"fiber of triangle {t} is not a unit vector (norm {norms[t]!r})")
        if tis.shape != (self.n_nodes,):
            raise MeshError(f"tissue must have one id per node ({self.n_nodes}), got {tis.shape}")
        area2 = doubled_areas(nodes, tris)
        scale = max(np.ptp(nodes, axis=0).max(), 1e-300)
        degenerate = area2 <= 1e-14 * scale**2
        if degenerate.any():
            t = int(np.argmax(degenerate))
            raise MeshError(f"triangle {t} is degenerate (zero area)")
        if tissue_ids is not None:
            declared = set(int(i) for i in tissue_ids)
            unknown = sorted(set(np.unique(tis).tolist()) - declared)
            if unknown:
                n = int(np.argmax(tis == unknown[0]))
                raise MeshError(f"node {n} has undeclared tissue id {unknown[0]}")
        return self

    def with_tissue(self, tissue) -> "Mesh":
        return Mesh(self.nodes, self.triangles, self.fibers, np.asarray(tissue))

    def with_fibers(self, fibers) -> "Mesh":
        fibers = np.asarray(fibers, dtype=np.float64)
        if fibers.ndim == 1:
            fibers = np.broadcast_to(fibers / np.linalg.norm(fibers), (self.n_triangles, self.dim))
        return Mesh(self.nodes, self.triangles, fibers, self.tissue)

    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def doubled_areas(nodes: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """Twice the area of every triangle (works for 2D and 3D coordinates)."""
    p = nodes[tris]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    if nodes.shape[1] == 2:
        return np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    return np.linalg.norm(np.cross(e1, e2), axis=1)


def load_mesh(path, tissue_ids=None) -> Mesh:
    """Read a mesh from the native JSON format and validate it."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise MeshError(f"{path}: not valid JSON ({exc})") from exc
    return mesh_from_dict(doc, source=str(path), tissue_ids=tissue_ids)


def _reject_constant(name):
    raise MeshError(f"non-finite literal {name} is not allowed")


def mesh_from_dict(doc: dict, source: str = "<dict>", tissue_ids=None) -> Mesh:
    if not isinstance(doc, dict):
        raise MeshError(f"{source}: top level must be an object")
    missing = [k for k in ("nodes", "triangles", "fibers", "tissue") if k not in doc]
    if missing:
        raise MeshError(f"{source}: missing key(s) {missing}")
    try:
        nodes = np.asarray(doc["nodes"], dtype=np.float64)
        tris = np.asarray(doc["triangles"])
        fibers = np.asarray(doc["fibers"], dtype=np.float64)
        tissue = np.asarray(doc["tissue"])
    except (TypeError, ValueError) as exc:
        raise MeshError(f"{source}: ragged or non-numeric array ({exc})") from exc
    if tris.size and not np.issubdtype(tris.dtype, np.integer):
        raise MeshError(f"{source}: triangle indices must be integers")
    if tissue.size and not np.issubdtype(tissue.dtype, np.integer):
        raise MeshError(f"{source}: tissue ids must be integers")
    tris = tris.reshape(-1, 3) if tris.size else np.zeros((0, 3), dtype=np.int64)
    if nodes.ndim == 2 and fibers.ndim == 1 and fibers.size == 0:
        fibers = fibers.reshape(0, nodes.shape[1])
    mesh = Mesh(nodes, tris, fibers, tissue)
    return mesh.validate(tissue_ids)


def mesh_to_dict(mesh: Mesh) -> dict:
    return {
        "nodes": mesh.nodes.tolist(),
        "triangles": mesh.triangles.tolist(),
        "fibers": mesh.fibers.tolist(),
        "tissue": mesh.tissue.tolist(),
    }


def save_mesh(mesh: Mesh, path) -> None:
    Path(path).write_text(json.dumps(mesh_to_dict(mesh), allow_nan=False), encoding="utf-8")


@dataclass(frozen=True)
class Adjacency:
    """Node connectivity in CSR form.

    ``neighbors(x)`` is N(x) sorted by id, ``triangles(x)`` is T(x) sorted by id
    and ``shared(x, y)`` is T(x, y).
    """

    nbr_ptr: np.ndarray
    nbr_idx: np.ndarray
    tri_ptr: np.ndarray
    tri_idx: np.ndarray
    triangles_of_mesh: np.ndarray
    non_manifold: list = field(default_factory=list)

    def neighbors(self, x: int) -> np.ndarray:
        return self.nbr_idx[self.nbr_ptr[x] : self.nbr_ptr[x + 1]]

    def triangles(self, x: int) -> np.ndarray:
        return self.tri_idx[self.tri_ptr[x] : self.tri_ptr[x + 1]]

    def shared(self, x: int, y: int) -> np.ndarray:
        tris = self.triangles(x)
        hit = (self.triangles_of_mesh[tris] == y).any(axis=1)
        return tris[hit]

    def degree(self) -> np.ndarray:
        return np.diff(self.nbr_ptr)

    def edges(self) -> np.ndarray:
        """All undirected edges as (a, b) with a < b, lexicographically sorted."""
        src = np.repeat(np.arange(len(self.nbr_ptr) - 1), np.diff(self.nbr_ptr))
        keep = src < self.nbr_idx
        return np.column_stack([src[keep], self.nbr_idx[keep]])


def build_adjacency(mesh: Mesh) -> Adjacency:
    n = mesh.n_nodes
    tris = mesh.triangles
    m = tris.shape[0]

    a = tris[:, [0, 1, 2, 0, 1, 2]].ravel()
    b = tris[:, [1, 2, 0, 2, 0, 1]].ravel()
    pairs = np.unique(np.column_stack([a, b]), axis=0)
    nbr_ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(nbr_ptr, pairs[:, 0] + 1, 1)
    nbr_ptr = np.cumsum(nbr_ptr)
    nbr_idx = pairs[:, 1].astype(np.int64)

    owner = tris.ravel()
    tid = np.repeat(np.arange(m, dtype=np.int64), 3)
    order = np.lexsort((tid, owner))
    tri_ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(tri_ptr, owner + 1, 1)
    tri_ptr = np.cumsum(tri_ptr)
    tri_idx = tid[order]

    und = np.sort(np.column_stack([tris[:, [0, 1, 2]].ravel(), tris[:, [1, 2, 0]].ravel()]), axis=1)
    edges, counts = np.unique(und, axis=0, return_counts=True)
    non_manifold = [tuple(map(int, e)) for e in edges[counts > 2]]
    if non_manifold:
        log.warning("mesh has %d non-manifold edge(s), e.g. %s", len(non_manifold), non_manifold[0])

    for arr in (nbr_ptr, nbr_idx, tri_ptr, tri_idx):
        arr.setflags(write=False)
    return Adjacency(nbr_ptr, nbr_idx, tri_ptr, tri_idx, tris, non_manifold)


def boundary_edges(mesh: Mesh) -> np.ndarray:
    und = np.sort(
        np.column_stack([mesh.triangles.ravel(), mesh.triangles[:, [1, 2, 0]].ravel()]), axis=1
    )
    edges, counts = np.unique(und, axis=0, return_counts=True)
    return edges[counts == 1]


def euler_characteristic(mesh: Mesh) -> int:
    und = np.sort(
        np.column_stack([mesh.triangles.ravel(), mesh.triangles[:, [1, 2, 0]].ravel()]), axis=1
    )
    n_edges = len(np.unique(und, axis=0))
    used = len(np.unique(mesh.triangles))
    return used - n_edges + mesh.n_triangles


def mean_edge_length(mesh: Mesh) -> float:
    und = np.unique(
        np.sort(
            np.column_stack([mesh.triangles.ravel(), mesh.triangles[:, [1, 2, 0]].ravel()]), axis=1
        ),
        axis=0,
    )
    return float(np.linalg.norm(mesh.nodes[und[:, 0]] - mesh.nodes[und[:, 1]], axis=1).mean())


def nodes_in_box(mesh: Mesh, lo, hi, tol: float = 1e-9) -> np.ndarray:
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    k = len(lo)
    p = mesh.nodes[:, :k]
    inside = np.all((p >= lo - tol) & (p <= hi + tol), axis=1)
    return np.flatnonzero(inside)


def nearest_node(mesh: Mesh, point) -> int:
    point = np.asarray(point, dtype=float)
    d = np.linalg.norm(mesh.nodes[:, : len(point)] - point, axis=1)
    return int(np.argmin(d))

"""Anisotropy tensors built from fibers and conduction velocities, and the
metric acuteness audit.

Velocities are in cm/ms, so D is in cm^2/ms^2 and D^-1 in ms^2/cm^2.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba as nb
import numpy as np

from .mesh import Mesh


def metric_tensor(cv_l: float, cv_t: float, fiber) -> np.ndarray:
    """D = cv_t^2 I + (cv_l^2 - cv_t^2) f f^T."""
    if not cv_t > 0 or cv_l < cv_t:
        raise ValueError(f"need cv_l >= cv_t > 0, got cv_l={cv_l}, cv_t={cv_t}")
    f = np.asarray(fiber, dtype=np.float64)
    if abs(np.linalg.norm(f) - 1.0) > 1e-9:
        raise ValueError("fiber must be a unit vector")
    return cv_t**2 * np.eye(f.size) + (cv_l**2 - cv_t**2) * np.outer(f, f)


@nb.njit(cache=True)
def inverse_metric_into(cv_l, cv_t, fiber, out):
    """Write D^-1 = I/cv_t^2 + (1/cv_l^2 - 1/cv_t^2) f f^T into ``out``."""
    it = 1.0 / (cv_t * cv_t)
    c = 1.0 / (cv_l * cv_l) - it
    d = fiber.shape[0]
    for i in range(d):
        for j in range(d):
            out[i, j] = c * fiber[i] * fiber[j]
        out[i, i] += it


def inverse_metric(cv_l: float, cv_t: float, fiber) -> np.ndarray:
    f = np.asarray(fiber, dtype=np.float64)
    out = np.empty((f.size, f.size))
    inverse_metric_into(float(cv_l), float(cv_t), f, out)
    return out


@nb.njit(cache=True)
def _fill_inverse(cv_l, cv_t, fibers, conductive, out):
    for t in range(fibers.shape[0]):
        if conductive[t]:
            inverse_metric_into(cv_l[t], cv_t[t], fibers[t], out[t])


@dataclass(frozen=True)
class MetricField:
    """Per-triangle anisotropy tensor and its inverse.

    Non-conductive triangles (scar) carry cv = 0 and NaN tensors; solvers
    skip them.
    """

    D: np.ndarray  # (M, dim, dim)
    D_inv: np.ndarray  # (M, dim, dim)
    cv_l: np.ndarray  # (M,) cm/ms
    cv_t: np.ndarray  # (M,) cm/ms
    conductive: np.ndarray  # (M,) bool

    @classmethod
    def from_fibers(cls, fibers, cv_l, cv_t, conductive=None) -> "MetricField":
        fibers = np.asarray(fibers, dtype=np.float64)
        m, dim = fibers.shape
        cv_l = np.broadcast_to(np.asarray(cv_l, dtype=np.float64), (m,)).copy()
        cv_t = np.broadcast_to(np.asarray(cv_t, dtype=np.float64), (m,)).copy()
        if conductive is None:
            conductive = np.ones(m, dtype=bool)
        conductive = np.asarray(conductive, dtype=bool).copy()
        bad = conductive & ((cv_t <= 0) | (cv_l < cv_t))
        if bad.any():
            t = int(np.argmax(bad))
            raise ValueError(f"triangle {t}: need cv_l >= cv_t > 0, got {cv_l[t]}, {cv_t[t]}")
        cv_l[~conductive] = 0.0
        cv_t[~conductive] = 0.0
        D = cv_t[:, None, None] ** 2 * np.eye(dim) + (cv_l**2 - cv_t**2)[:, None, None] * (
            fibers[:, :, None] * fibers[:, None, :]
        )
        D[~conductive] = np.nan
        D_inv = np.full((m, dim, dim), np.nan)
        _fill_inverse(cv_l, cv_t, fibers, conductive, D_inv)
        return cls(D, D_inv, cv_l, cv_t, conductive)

    @classmethod
    def for_mesh(cls, mesh: Mesh, cv_l, ratio=1.0, scar_ids=()) -> "MetricField":
        """Uniform metric with cv_t = ratio * cv_l; triangles touching a scar
        node are non-conductive."""
        cv_l = np.broadcast_to(np.asarray(cv_l, dtype=np.float64), (mesh.n_triangles,))
        cv_t = ratio * cv_l
        conductive = ~scar_triangles(mesh, scar_ids)
        return cls.from_fibers(mesh.fibers, cv_l, cv_t, conductive)


def scar_triangles(mesh: Mesh, scar_ids) -> np.ndarray:
    if len(scar_ids) == 0:
        return np.zeros(mesh.n_triangles, dtype=bool)
    scar_node = np.isin(mesh.tissue, np.asarray(list(scar_ids)))
    return scar_node[mesh.triangles].any(axis=1)


@dataclass(frozen=True)
class AuditReport:
    passed: np.ndarray  # (M,) bool; non-conductive triangles count as passed
    min_inner: np.ndarray  # (M,) smallest vertex inner product e_i^T D^-1 e_j
    audited: np.ndarray  # (M,) bool
    failures: int
    fraction: float

    def worst(self, k: int = 10) -> np.ndarray:
        idx = np.flatnonzero(self.audited)
        order = np.argsort(self.min_inner[idx], kind="stable")
        return idx[order[:k]]


def _min_inner(p, M):
    inner = np.empty((p.shape[0], 3))
    for v in range(3):
        e1 = p[:, (v + 1) % 3] - p[:, v]
        e2 = p[:, (v + 2) % 3] - p[:, v]
        inner[:, v] = np.einsum("mi,mij,mj->m", e1, M, e2)
    return inner.min(axis=1)


def acuteness_audit(mesh: Mesh, metric: MetricField, jobs: int = 1) -> AuditReport:
    """Check e_i^T D^-1 e_j > 0 at every vertex of every conductive triangle.

    The fraction is over audited (conductive) triangles. ``jobs > 1`` splits
    the triangles into chunks checked on a thread pool; the result does not
    depend on ``jobs``.
    """
    p = mesh.nodes[mesh.triangles]
    M = metric.D_inv
    if jobs > 1 and mesh.n_triangles > jobs:
        bounds = np.linspace(0, mesh.n_triangles, jobs + 1).astype(int)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(lambda ab: _min_inner(p[ab[0]:ab[1]], M[ab[0]:ab[1]]),
                             zip(bounds[:-1], bounds[1:]))
            min_inner = np.concatenate(list(parts))
    else:
        min_inner = _min_inner(p, M)
    audited = metric.conductive.copy()
    passed = ~audited | (min_inner > 0)
    failures = int((~passed).sum())
    n = int(audited.sum())
    return AuditReport(passed, min_inner, audited, failures, failures / n if n else 0.0)

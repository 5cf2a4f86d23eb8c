"""Snapshot and event-log writers.

* VTK legacy ASCII (version 3.0, UNSTRUCTURED_GRID) with point-data scalars.
  VTK readers do not accept ``inf``, so non-finite values are written as -1.
* CSV, one row per node, floats written with ``repr`` so a re-read is bitwise
  identical (``inf`` included).
* JSON lines for the event log.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .engine import EventLog, Snapshot
from .mesh import Mesh

VTK_TRIANGLE = 5
SNAPSHOT_FIELDS = ("phi", "v", "di", "state")
INT_COLUMNS = ("node", "v", "state")


def _fmt(x) -> str:
    return repr(float(x))


def _column(values) -> list:
    values = np.asarray(values)
    if np.issubdtype(values.dtype, np.integer):
        return list(map(str, values.tolist()))
    return list(map(repr, values.astype(np.float64).tolist()))


def write_vtk(path, mesh: Mesh, fields: dict, title: str = "eikonal-reentry") -> Path:
    path = Path(path)
    n, m = mesh.n_nodes, mesh.n_triangles
    pts = np.zeros((n, 3))
    pts[:, : mesh.dim] = mesh.nodes
    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {n} double"]
    lines += map(" ".join, zip(*(_column(pts[:, k]) for k in range(3))))
    lines.append(f"CELLS {m} {4 * m}")
    tri = mesh.triangles
    lines += map(" ".join, zip(["3"] * m, *(_column(tri[:, k]) for k in range(3))))
    lines.append(f"CELL_TYPES {m}")
    lines += [str(VTK_TRIANGLE)] * m
    lines.append(f"POINT_DATA {n}")
    for name, values in fields.items():
        values = np.asarray(values)
        if values.shape != (n,):
            raise ValueError(f"field {name!r} has shape {values.shape}, expected ({n},)")
        if np.issubdtype(values.dtype, np.integer):
            lines += [f"SCALARS {name} int 1", "LOOKUP_TABLE default"]
            lines += _column(values)
        else:
            lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            lines += _column(np.where(np.isfinite(values), values, -1.0))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def read_vtk_point_data(path) -> dict:
    """Point-data arrays of a file written by :func:`write_vtk`."""
    tokens = Path(path).read_text(encoding="ascii").split("\n")
    out = {}
    i = 0
    n = None
    while i < len(tokens):
        line = tokens[i].strip()
        if line.startswith("POINT_DATA"):
            n = int(line.split()[1])
        elif line.startswith("SCALARS") and n is not None:
            _, name, kind, _ = line.split()
            vals = tokens[i + 2 : i + 2 + n]
            out[name] = np.array([int(v) for v in vals]) if kind == "int" else np.array([float(v) for v in vals])
            i += 1 + n
        i += 1
    return out


def write_field_csv(path, mesh: Mesh, fields: dict) -> Path:
    path = Path(path)
    coords = ["x", "y", "z"][: mesh.dim]
    for name, values in fields.items():
        if np.shape(values) != (mesh.n_nodes,):
            raise ValueError(f"field {name!r} has shape {np.shape(values)}, expected ({mesh.n_nodes},)")
    cols = [_column(np.arange(mesh.n_nodes))]
    cols += [_column(mesh.nodes[:, k]) for k in range(mesh.dim)]
    cols += [_column(values) for values in fields.values()]
    header = ",".join(["node", *coords, *fields])
    with path.open("w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        fh.writelines(",".join(row) + "\n" for row in zip(*cols))
    return path


def read_field_csv(path) -> dict:
    """Columns of a CSV written by :func:`write_field_csv` (or a snapshot CSV)."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    if any(len(r) != len(header) for r in body):
        raise ValueError(f"{path}: ragged rows")
    out = {}
    for name, col in zip(header, zip(*body) if body else [()] * len(header)):
        if name in INT_COLUMNS:
            out[name] = np.array([int(c) for c in col], dtype=np.int64)
        else:
            out[name] = np.array([float(c) for c in col], dtype=np.float64)
    return out


def snapshot_fields(snap: Snapshot) -> dict:
    return {"phi": snap.phi, "v": snap.v.astype(np.int64), "di": snap.di,
            "state": snap.state.astype(np.int64)}


def snapshot_stem(t: float) -> str:
    return f"snapshot_{t:010.3f}".replace(".", "_")


def write_snapshot(snap: Snapshot, mesh: Mesh, out_dir, formats=("vtk", "csv")) -> list:
    out_dir = Path(out_dir)
    stem = snapshot_stem(snap.t)
    written = []
    fields = snapshot_fields(snap)
    for fmt in formats:
        if fmt == "vtk":
            written.append(write_vtk(out_dir / f"{stem}.vtk", mesh, fields, f"t = {snap.t} ms"))
        elif fmt == "csv":
            written.append(write_field_csv(out_dir / f"{stem}.csv", mesh, fields))
        else:
            raise ValueError(f"unknown snapshot format {fmt!r}")
    return written


def export_snapshots(series, mesh: Mesh, out_dir, formats=("vtk", "csv")) -> list:
    """One file per snapshot and format; returns the written paths."""
    if len(series) == 0:
        raise ValueError("snapshot series is empty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for snap in series:
        written += write_snapshot(snap, mesh, out_dir, formats)
    return written


class SnapshotWriter:
    """Callback for :func:`eikonal_reentry.engine.run` that streams snapshots to disk.

    With ``times`` only snapshots taken at those instants are written.
    """

    def __init__(self, mesh: Mesh, out_dir, formats=("vtk", "csv"), times=None):
        self.mesh = mesh
        self.only = None if times is None else np.asarray(sorted(times), dtype=float)
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.formats = tuple(formats)
        self.paths = []
        self.times = []

    def __call__(self, snap: Snapshot) -> None:
        if self.only is not None and not np.any(np.abs(self.only - snap.t) <= 1e-9 * max(1.0, snap.t)):
            return
        self.times.append(snap.t)
        if self.formats:
            self.paths += write_snapshot(snap, self.mesh, self.out_dir, self.formats)


def write_events(path, events: EventLog) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in events.records():
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
    return path


def read_events(path) -> list:
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]

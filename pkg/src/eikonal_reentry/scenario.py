"""Scenario files: a JSON description of one re-entry experiment.

A scenario names a mesh (file or generator), one restitution table per
tissue id, a stimulus schedule, optional block lines, the time stepping and
where to write results. Every key is checked; unknown keys are an error
because a mistyped ``"t"`` in a stimulus silently changes the experiment.

Minimal example::

    {
      "version": 1,
      "mesh": {"generator": "square", "side": 5, "h": 0.1},
      "tissues": {"0": {"table": "builtin:healthy"}},
      "stimuli": [{"box": [[0, 0], [0.2, 5]], "t": 0}],
      "t_end": 200
    }

Relative file paths inside a scenario are resolved against the scenario's
own directory.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import BlockLine, EngineConfig, SnapshotSeries, StimulusEvent, init_engine, run
from .geometry import (
    Region,
    generate_annulus,
    generate_structured_square,
    stretch_for_metric,
    two_scar_layout,
)
from .mesh import Adjacency, Mesh, build_adjacency, load_mesh, nearest_node, nodes_in_box
from .restitution.presets import builtin_table
from .restitution.tables import RestitutionTable, TableError, flat_table, load_table

SCHEMA_VERSION = 1
SNAPSHOT_FORMATS = ("vtk", "csv")


class ScenarioError(ValueError):
    """Invalid scenario; ``path`` locates the offending key, e.g. ``stimuli[1].t``."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class TissueSpec:
    tissue_id: int
    table: RestitutionTable | None  # None for scar
    ratio: float | None = None

    @property
    def is_scar(self) -> bool:
        return self.table is None


@dataclass(frozen=True)
class OutputSpec:
    directory: Path
    formats: tuple = SNAPSHOT_FORMATS
    events: bool = True
    times: tuple | None = None  # write only these snapshot instants


@dataclass
class Scenario:
    name: str
    mesh: Mesh
    tissues: dict  # id -> TissueSpec
    stimuli: list  # StimulusEvent, sorted by time
    blocks: list  # BlockLine
    dt: float
    t_end: float
    snapshot_every: float
    output: OutputSpec
    probes: dict = field(default_factory=dict)  # name -> node id
    source: Path | None = None
    adjacency: Adjacency | None = None

    @property
    def tables(self) -> dict:
        return {k: t.table for k, t in self.tissues.items() if not t.is_scar}

    @property
    def scar_ids(self) -> tuple:
        return tuple(sorted(k for k, t in self.tissues.items() if t.is_scar))

    def engine_config(self) -> EngineConfig:
        ratios = {k: t.ratio for k, t in self.tissues.items() if t.ratio is not None and not t.is_scar}
        return EngineConfig(self.t_end, self.tables, self.dt, self.snapshot_every, ratios or None,
                            self.scar_ids)

    def build_engine(self):
        if self.adjacency is None:
            self.adjacency = build_adjacency(self.mesh)
        return init_engine(self.mesh, self.adjacency, self.engine_config(), self.stimuli, self.blocks)

    def simulate(self, on_snapshot=None, keep: bool = True) -> SnapshotSeries:
        return run(self.build_engine(), on_snapshot=on_snapshot, keep=keep)


# --- validation helpers -----------------------------------------------------


def _check_keys(obj, path, required=(), optional=()):
    if not isinstance(obj, dict):
        raise ScenarioError(path, f"expected an object, got {type(obj).__name__}")
    allowed = set(required) | set(optional)
    for key in obj:
        if key not in allowed:
            raise ScenarioError(_join(path, key), f"unknown key (allowed: {sorted(allowed)})")
    for key in required:
        if key not in obj:
            raise ScenarioError(_join(path, key), "missing required key")


def _join(path, key):
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else key


def _number(obj, key, path, *, positive=False, minimum=None, default=None):
    if key not in obj:
        if default is None:
            raise ScenarioError(_join(path, key), "missing required key")
        return default
    val = obj[key]
    where = _join(path, key)
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ScenarioError(where, f"expected a finite number, got {val!r}")
    if positive and val <= 0:
        raise ScenarioError(where, f"must be positive, got {val}")
    if minimum is not None and val < minimum:
        raise ScenarioError(where, f"must be >= {minimum}, got {val}")
    return float(val)


def _point(val, path, dim=2):
    if not (isinstance(val, list) and len(val) == dim and all(
            isinstance(c, (int, float)) and not isinstance(c, bool) and math.isfinite(c) for c in val)):
        raise ScenarioError(path, f"expected [{', '.join('xyz'[:dim])}] coordinates, got {val!r}")
    return np.array(val, dtype=float)


def _resolve_path(base: Path, value, path) -> Path:
    if not isinstance(value, str) or not value:
        raise ScenarioError(path, "expected a file path")
    p = Path(value)
    if not p.is_absolute():
        p = base / p
    if not p.exists():
        raise ScenarioError(path, f"file not found: {p}")
    return p


# --- sections ---------------------------------------------------------------


def _parse_mesh(doc, base: Path, path="mesh") -> Mesh:
    if not isinstance(doc, dict):
        raise ScenarioError(path, "expected an object")
    if "file" in doc:
        _check_keys(doc, path, required=("file",))
        p = _resolve_path(base, doc["file"], _join(path, "file"))
        try:
            return load_mesh(p)
        except ValueError as exc:
            raise ScenarioError(_join(path, "file"), str(exc)) from exc
    gen = doc.get("generator")
    if gen == "square":
        _check_keys(doc, path, required=("generator", "side", "h"),
                    optional=("layout", "regions", "fiber", "stretch_ratio", "stretch"))
        side = _number(doc, "side", path, positive=True)
        h = _number(doc, "h", path, positive=True)
        fiber = _point(doc.get("fiber", [1.0, 0.0]), _join(path, "fiber"))
        if np.linalg.norm(fiber) == 0:
            raise ScenarioError(_join(path, "fiber"), "fiber direction must be non-zero")
        regions = []
        if "layout" in doc:
            if doc["layout"] != "two_scar":
                raise ScenarioError(_join(path, "layout"), f"unknown layout {doc['layout']!r}")
            regions += two_scar_layout(side)
        for i, r in enumerate(doc.get("regions", [])):
            rp = _join(_join(path, "regions"), i)
            _check_keys(r, rp, required=("box", "tissue"))
            box = r["box"]
            if not (isinstance(box, list) and len(box) == 2):
                raise ScenarioError(_join(rp, "box"), "expected [[x0, y0], [x1, y1]]")
            lo, hi = _point(box[0], _join(rp, "box")), _point(box[1], _join(rp, "box"))
            tid = r["tissue"]
            if isinstance(tid, bool) or not isinstance(tid, int):
                raise ScenarioError(_join(rp, "tissue"), "expected an integer tissue id")
            regions.append(Region(lo[0], lo[1], hi[0], hi[1], tid))
        if "stretch_ratio" in doc and "stretch" in doc:
            raise ScenarioError(path, "give either stretch_ratio or stretch, not both")
        stretch = None
        if "stretch_ratio" in doc:
            ratio = _number(doc, "stretch_ratio", path, positive=True)
            if ratio > 1:
                raise ScenarioError(_join(path, "stretch_ratio"), "must be in (0, 1]")
            stretch = stretch_for_metric(ratio, fiber)
        elif "stretch" in doc:
            s = doc["stretch"]
            sp = _join(path, "stretch")
            if not (isinstance(s, list) and len(s) == 2):
                raise ScenarioError(sp, "expected a 2x2 matrix")
            stretch = np.vstack([_point(s[0], sp), _point(s[1], sp)])
        try:
            return generate_structured_square(side, h, regions, stretch, fiber)
        except ValueError as exc:
            raise ScenarioError(path, str(exc)) from exc
    if gen == "annulus":
        _check_keys(doc, path, required=("generator", "r_inner", "r_outer", "h"), optional=("center",))
        center = _point(doc.get("center", [0.0, 0.0]), _join(path, "center"))
        try:
            return generate_annulus(_number(doc, "r_inner", path, positive=True),
                                    _number(doc, "r_outer", path, positive=True),
                                    _number(doc, "h", path, positive=True), center)
        except ValueError as exc:
            raise ScenarioError(path, str(exc)) from exc
    raise ScenarioError(_join(path, "generator"), f"expected 'square' or 'annulus' or a 'file' key, got {gen!r}")


def _parse_tissues(doc, base: Path, path="tissues") -> dict:
    if not isinstance(doc, dict) or not doc:
        raise ScenarioError(path, "expected a non-empty object of tissue id -> definition")
    out = {}
    for key, spec in doc.items():
        tp = _join(path, key)
        try:
            tid = int(key)
        except ValueError:
            raise ScenarioError(tp, "tissue ids must be integers") from None
        if isinstance(spec, dict) and spec.get("scar") is not None:
            _check_keys(spec, tp, required=("scar",))
            if spec["scar"] is not True:
                raise ScenarioError(_join(tp, "scar"), "must be true (omit the key for conductive tissue)")
            out[tid] = TissueSpec(tid, None)
            continue
        _check_keys(spec, tp, required=("table",), optional=("ratio", "di_min", "apd", "cv"))
        ref = spec["table"]
        if ref == "flat":
            apd = _number(spec, "apd", tp, positive=True)
            cv = _number(spec, "cv", tp, positive=True)
            table = flat_table(tid, apd, cv, _number(spec, "di_min", tp, minimum=0, default=0.0),
                               _number(spec, "ratio", tp, positive=True, default=1.0))
        else:
            for k in ("apd", "cv"):
                if k in spec:
                    raise ScenarioError(_join(tp, k), "only allowed with \"table\": \"flat\"")
            try:
                if isinstance(ref, str) and ref.startswith("builtin:"):
                    table = builtin_table(ref[len("builtin:"):])
                else:
                    table = load_table(_resolve_path(base, ref, _join(tp, "table")))
            except (KeyError, TableError, OSError) as exc:
                raise ScenarioError(_join(tp, "table"), str(exc)) from exc
            changes = {"tissue_id": tid}
            if "di_min" in spec:
                changes["di_min"] = _number(spec, "di_min", tp, minimum=0)
            try:
                table = dataclasses.replace(table, **changes)
            except TableError as exc:
                raise ScenarioError(_join(tp, "di_min"), str(exc)) from exc
        ratio = None
        if "ratio" in spec:
            ratio = _number(spec, "ratio", tp, positive=True)
            if ratio > 1:
                raise ScenarioError(_join(tp, "ratio"), "must be in (0, 1]")
        out[tid] = TissueSpec(tid, table, ratio)
    return out


def _node_list(val, n, path):
    if not isinstance(val, list) or not val:
        raise ScenarioError(path, "expected a non-empty list of node ids")
    if any(isinstance(v, bool) or not isinstance(v, int) for v in val):
        raise ScenarioError(path, "node ids must be integers")
    arr = np.array(val, dtype=np.int64)
    bad = arr[(arr < 0) | (arr >= n)]
    if bad.size:
        raise ScenarioError(path, f"node id {int(bad[0])} out of range [0, {n})")
    return arr


def _parse_stimuli(doc, mesh: Mesh, t_end, path="stimuli") -> list:
    if not isinstance(doc, list) or not doc:
        raise ScenarioError(path, "expected a non-empty list")
    out = []
    for i, s in enumerate(doc):
        sp = _join(path, i)
        _check_keys(s, sp, required=("t",), optional=("box", "nodes"))
        t = _number(s, "t", sp, minimum=0)
        if t > t_end:
            raise ScenarioError(_join(sp, "t"), f"stimulus time {t} is after t_end {t_end}")
        if ("box" in s) == ("nodes" in s):
            raise ScenarioError(sp, "give exactly one of box or nodes")
        if "box" in s:
            box = s["box"]
            bp = _join(sp, "box")
            if not (isinstance(box, list) and len(box) == 2):
                raise ScenarioError(bp, "expected [[x0, y0], [x1, y1]]")
            lo, hi = _point(box[0], bp, mesh.dim), _point(box[1], bp, mesh.dim)
            if np.any(hi < lo):
                raise ScenarioError(bp, "upper corner lies below the lower corner")
            nodes = nodes_in_box(mesh, lo, hi)
            if nodes.size == 0:
                raise ScenarioError(bp, "box contains no mesh nodes")
        else:
            nodes = _node_list(s["nodes"], mesh.n_nodes, _join(sp, "nodes"))
        out.append(StimulusEvent(nodes, t))
    return sorted(out, key=lambda e: e.time)


def _segments_cross(p, q, a, b):
    """Mask of edges (p[k], q[k]) that touch or cross the segment a-b."""

    def side(u, v, w):
        d = (v[..., 0] - u[..., 0]) * (w[..., 1] - u[..., 1]) - (v[..., 1] - u[..., 1]) * (w[..., 0] - u[..., 0])
        return np.where(np.abs(d) <= tol, 0.0, np.sign(d))

    tol = 1e-12 * max(float(np.dot(b - a, b - a)), 1e-300)
    s1, s2 = side(a, b, p), side(a, b, q)
    s3, s4 = side(p, q, a), side(p, q, b)
    hit = (s1 * s2 <= 0) & (s3 * s4 <= 0)
    collinear = (s1 == 0) & (s2 == 0)
    lo = np.maximum(np.minimum(p, q), np.minimum(a, b))
    hi = np.minimum(np.maximum(p, q), np.maximum(a, b))
    overlap = np.all(lo <= hi + 1e-12, axis=-1)
    return hit & (~collinear | overlap)


def edges_crossing(mesh: Mesh, adjacency: Adjacency, a, b) -> np.ndarray:
    """Mesh edges that touch or cross the segment from ``a`` to ``b``."""
    edges = adjacency.edges()
    p, q = mesh.nodes[edges[:, 0], :2], mesh.nodes[edges[:, 1], :2]
    return edges[_segments_cross(p, q, np.asarray(a, float), np.asarray(b, float))]


def _parse_blocks(doc, mesh: Mesh, adjacency: Adjacency, t_end, path="blocks") -> list:
    if not isinstance(doc, list):
        raise ScenarioError(path, "expected a list")
    out = []
    for i, blk in enumerate(doc):
        bp = _join(path, i)
        _check_keys(blk, bp, required=("t_open",), optional=("edges", "segment"))
        t_open = _number(blk, "t_open", bp, minimum=0)
        if t_open > t_end:
            raise ScenarioError(_join(bp, "t_open"), f"opening time {t_open} is after t_end {t_end}")
        if ("edges" in blk) == ("segment" in blk):
            raise ScenarioError(bp, "give exactly one of edges or segment")
        if "edges" in blk:
            ep = _join(bp, "edges")
            raw = blk["edges"]
            if not isinstance(raw, list) or not raw:
                raise ScenarioError(ep, "expected a non-empty list of [i, j] pairs")
            pairs = []
            for k, e in enumerate(raw):
                pairs.append(_node_list(e, mesh.n_nodes, _join(ep, k)))
                if len(e) != 2:
                    raise ScenarioError(_join(ep, k), "expected an [i, j] pair")
                if adjacency.shared(int(e[0]), int(e[1])).size == 0:
                    raise ScenarioError(_join(ep, k), f"({e[0]}, {e[1]}) is not a mesh edge")
            edges = np.vstack(pairs)
        else:
            sp = _join(bp, "segment")
            seg = blk["segment"]
            if not (isinstance(seg, list) and len(seg) == 2):
                raise ScenarioError(sp, "expected [[x0, y0], [x1, y1]]")
            edges = edges_crossing(mesh, adjacency, _point(seg[0], sp), _point(seg[1], sp))
            if edges.size == 0:
                raise ScenarioError(sp, "segment crosses no mesh edge")
        out.append(BlockLine(edges, t_open))
    return out


def _parse_output(doc, name, t_end, every, path="output") -> OutputSpec:
    doc = {} if doc is None else doc
    _check_keys(doc, path, optional=("dir", "formats", "events", "times"))
    directory = Path(doc.get("dir", Path("output") / name))
    formats = doc.get("formats", list(SNAPSHOT_FORMATS))
    if not isinstance(formats, list) or any(f not in SNAPSHOT_FORMATS for f in formats):
        raise ScenarioError(_join(path, "formats"), f"expected a subset of {list(SNAPSHOT_FORMATS)}")
    events = doc.get("events", True)
    if not isinstance(events, bool):
        raise ScenarioError(_join(path, "events"), "expected true or false")
    times = None
    if "times" in doc:
        tp = _join(path, "times")
        if not isinstance(doc["times"], list) or not doc["times"]:
            raise ScenarioError(tp, "expected a non-empty list of times")
        times = []
        for i, t in enumerate(doc["times"]):
            t = _number({"t": t}, "t", _join(tp, i), positive=True)
            k = round(t / every)
            if t > t_end or abs(k * every - t) > 1e-9 * max(1.0, t):
                raise ScenarioError(_join(tp, i), f"{t} ms is not a snapshot instant "
                                    f"(multiples of {every} ms up to {t_end} ms)")
            times.append(t)
        times = tuple(sorted(times))
    return OutputSpec(directory, tuple(formats), events, times)


TOP_REQUIRED = ("version", "mesh", "tissues", "stimuli", "t_end")
TOP_OPTIONAL = ("name", "description", "blocks", "dt", "snapshot_every", "output", "probes")


def scenario_from_dict(doc, base=".", source=None) -> Scenario:
    base = Path(base)
    if not isinstance(doc, dict):
        raise ScenarioError("", "top level must be an object")
    if "version" in doc and doc["version"] != SCHEMA_VERSION:
        raise ScenarioError("version", f"unsupported schema version {doc['version']!r} (expected {SCHEMA_VERSION})")
    _check_keys(doc, "", TOP_REQUIRED, TOP_OPTIONAL)
    name = doc.get("name", Path(source).stem if source else "scenario")
    if not isinstance(name, str) or not name:
        raise ScenarioError("name", "expected a non-empty string")
    if "description" in doc and not isinstance(doc["description"], str):
        raise ScenarioError("description", "expected a string")

    t_end = _number(doc, "t_end", "", positive=True)
    dt = _number(doc, "dt", "", positive=True, default=1.0)
    if dt > t_end:
        raise ScenarioError("dt", f"time step {dt} exceeds t_end {t_end}")
    every = _number(doc, "snapshot_every", "", positive=True, default=5.0)

    mesh = _parse_mesh(doc["mesh"], base)
    tissues = _parse_tissues(doc["tissues"], base)
    missing = sorted(set(np.unique(mesh.tissue).tolist()) - set(tissues))
    if missing:
        raise ScenarioError("tissues", f"mesh tissue id(s) {missing} have no definition")
    adjacency = build_adjacency(mesh)
    stimuli = _parse_stimuli(doc["stimuli"], mesh, t_end)
    scar = np.isin(mesh.tissue, [k for k, t in tissues.items() if t.is_scar])
    for ev in stimuli:
        if np.all(scar[ev.nodes]):
            raise ScenarioError("stimuli", f"stimulus at {ev.time} ms covers only scar nodes")
    blocks = _parse_blocks(doc.get("blocks", []), mesh, adjacency, t_end)
    output = _parse_output(doc.get("output"), name, t_end, every)

    probes = {}
    raw_probes = doc.get("probes", {})
    if not isinstance(raw_probes, dict):
        raise ScenarioError("probes", "expected an object of name -> [x, y]")
    for pname, pt in raw_probes.items():
        probes[pname] = nearest_node(mesh, _point(pt, _join("probes", pname), mesh.dim))

    return Scenario(name, mesh, tissues, stimuli, blocks, dt, t_end, every, output, probes,
                    Path(source) if source else None, adjacency)


def parse_scenario(path) -> Scenario:
    """Load, validate and resolve a scenario file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError("", f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("", f"{path}: invalid JSON ({exc})") from exc
    return scenario_from_dict(doc, base=path.parent, source=path)

"""Command-line interface: ``eikonal-reentry <command> ...``.

Commands
  audit        metric acuteness audit of a mesh
  solve        one activation map by fast marching (or the edge-only baseline)
  run          time-stepped re-entry simulation from scenario files
  restitution  generate APD/CV restitution tables from the ionic model
  compare      difference norms between two per-node fields

Exit status is 0 when the command succeeded and 1 on any error (2 for usage
errors). With ``--quiet`` the only output is a JSON summary on stdout.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .compare import compare_fields
from .engine import ACTIVATION, INERT
from .export import SnapshotWriter, read_field_csv, write_events, write_field_csv, write_vtk
from .fmm import dijkstra_solve, fmm_solve
from .geometry import SCAR
from .mesh import load_mesh, nearest_node
from .metric import MetricField, acuteness_audit, scar_triangles
from .restitution.mitchell_schaeffer import (
    BORDER_ZONE,
    HEALTHY,
    CableConfig,
    MsParameters,
    PacingProtocol,
    generate_table,
)
from .restitution.tables import load_table, save_table
from .scenario import parse_scenario


class CliError(Exception):
    pass


def _emit(args, summary: dict, lines=()):
    if args.quiet:
        print(json.dumps(summary, sort_keys=True))
    else:
        for line in lines:
            print(line)


def _out_dir(args, default: str) -> Path:
    out = Path(args.output_dir) if args.output_dir else Path(default)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- audit ------------------------------------------------------------------


def _triangle_tissue(mesh) -> np.ndarray:
    """Majority vertex tissue per triangle (first vertex on a three-way tie)."""
    t = mesh.tissue[mesh.triangles]
    out = t[:, 0].copy()
    out[t[:, 1] == t[:, 2]] = t[t[:, 1] == t[:, 2], 1]
    return out


def cmd_audit(args) -> dict:
    mesh = load_mesh(args.mesh)
    scar_ids = tuple(args.scar_ids)
    if args.tables:
        tables = {}
        for path in sorted(Path(args.tables).glob("*.json")):
            tab = load_table(path)
            if tab.tissue_id in tables:
                raise CliError(f"{path.name}: tissue id {tab.tissue_id} already given by "
                               f"table {tables[tab.tissue_id].name!r}")
            tables[tab.tissue_id] = tab
        if not tables:
            raise CliError(f"no table sidecars (*.json) in {args.tables}")
        tri_tissue = _triangle_tissue(mesh)
        scar = scar_triangles(mesh, scar_ids)
        missing = sorted(set(tri_tissue[~scar].tolist()) - set(tables))
        if missing:
            raise CliError(f"no table for tissue id(s) {missing}")
        cv_l = np.ones(mesh.n_triangles)
        ratio = np.ones(mesh.n_triangles)
        for tid, tab in tables.items():
            sel = tri_tissue == tid
            cv_l[sel] = tab.cv_plateau / 1000.0
            ratio[sel] = tab.ratio
        metric = MetricField.from_fibers(mesh.fibers, cv_l, ratio * cv_l, ~scar)
    else:
        if args.cv_l is None:
            raise CliError("give --tables or --cv-l")
        metric = MetricField.for_mesh(mesh, args.cv_l / 1000.0, args.ratio, scar_ids)
    report = acuteness_audit(mesh, metric, jobs=args.jobs)
    worst = report.worst(args.worst)
    worst_list = [{"triangle": int(t), "min_inner": float(report.min_inner[t])} for t in worst]
    summary = {"command": "audit", "mesh": str(args.mesh), "audited": int(report.audited.sum()),
               "failures": report.failures, "failure_fraction": report.fraction, "worst": worst_list}
    lines = [f"audited {summary['audited']} triangles, {report.failures} fail "
             f"({100 * report.fraction:.3f}%)"]
    lines += [f"  triangle {w['triangle']}: min e_i.D^-1.e_j = {w['min_inner']:.4g}" for w in worst_list
              if w["min_inner"] <= 0]
    _emit(args, summary, lines)
    return summary


# --- solve ------------------------------------------------------------------


def _parse_sources(tokens, mesh) -> dict:
    """``12`` (node at t=0), ``12@3.5`` (node at 3.5 ms) or ``x,y[@t]`` (nearest node)."""
    out = {}
    for tok in tokens:
        where, _, when = tok.partition("@")
        t = float(when) if when else 0.0
        if "," in where:
            node = nearest_node(mesh, [float(c) for c in where.split(",")])
        else:
            node = int(where)
            if not 0 <= node < mesh.n_nodes:
                raise CliError(f"source node {node} out of range")
        out[node] = min(t, out.get(node, t))
    if not out:
        raise CliError("no sources given")
    return out


def cmd_solve(args) -> dict:
    mesh = load_mesh(args.mesh)
    if args.fiber_source != "mesh":
        try:
            f = np.array([float(c) for c in args.fiber_source.split(",")])
        except ValueError:
            raise CliError(f"--fiber-source must be 'mesh' or 'fx,fy', got {args.fiber_source!r}") from None
        if f.shape != (mesh.dim,) or np.linalg.norm(f) == 0:
            raise CliError(f"--fiber-source needs {mesh.dim} non-zero components")
        mesh = mesh.with_fibers(np.broadcast_to(f / np.linalg.norm(f), mesh.fibers.shape))
    metric = MetricField.for_mesh(mesh, args.cv_l / 1000.0, args.ratio, tuple(args.scar_ids))
    sources = _parse_sources(args.sources, mesh)
    solver = dijkstra_solve if args.dijkstra else fmm_solve
    t0 = time.perf_counter()
    field = solver(mesh, metric, sources)
    elapsed = time.perf_counter() - t0
    out = _out_dir(args, "output/solve")
    method = "dijkstra" if args.dijkstra else "fmm"
    csv_path = write_field_csv(out / f"{method}_phi.csv", mesh, {"phi": field.phi})
    vtk_path = write_vtk(out / f"{method}_phi.vtk", mesh, {"phi": field.phi}, f"{method} activation")
    reached = np.isfinite(field.phi)
    summary = {"command": "solve", "method": method, "nodes": mesh.n_nodes, "reached": int(reached.sum()),
               "max_phi": float(field.phi[reached].max()), "seconds": elapsed,
               "files": [str(csv_path), str(vtk_path)]}
    _emit(args, summary, [f"{method}: {summary['reached']}/{mesh.n_nodes} nodes reached, "
                          f"max phi {summary['max_phi']:.3f} ms in {elapsed:.2f} s", f"wrote {csv_path}"])
    return summary


# --- run --------------------------------------------------------------------


def run_scenario_file(path, output_dir=None) -> dict:
    """Run one scenario and write snapshots, ``events.jsonl`` and ``summary.json``."""
    scenario = parse_scenario(path)
    out = Path(output_dir) / scenario.name if output_dir else scenario.output.directory
    out.mkdir(parents=True, exist_ok=True)
    writer = SnapshotWriter(scenario.mesh, out, scenario.output.formats, scenario.output.times)
    t0 = time.perf_counter()
    series = scenario.simulate(on_snapshot=writer, keep=False)
    elapsed = time.perf_counter() - t0
    ev = series.events
    act = ev.select(ACTIVATION)
    counts = Counter(act.node.tolist())
    probes = {name: {"node": int(node), "activations": act.time[act.node == node].tolist()}
              for name, node in scenario.probes.items()}
    result = {
        "scenario": scenario.name,
        "nodes": scenario.mesh.n_nodes,
        "t_end": scenario.t_end,
        "snapshots": len(writer.times),
        "events": len(ev),
        "activations": len(act),
        "max_activations_per_node": max(counts.values()) if counts else 0,
        "last_activation": float(act.time.max()) if len(act) else None,
        "probes": probes,
    }
    if scenario.output.events:
        write_events(out / "events.jsonl", ev)
    (out / "summary.json").write_text(json.dumps(result, indent=2, sort_keys=True), encoding="utf-8")
    result["output_dir"] = str(out)
    result["seconds"] = elapsed
    return result


def cmd_run(args) -> dict:
    if args.jobs > 1 and len(args.scenarios) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_scenario_file, args.scenarios, [args.output_dir] * len(args.scenarios)))
    else:
        results = [run_scenario_file(p, args.output_dir) for p in args.scenarios]
    lines = []
    for r in results:
        lines.append(f"{r['scenario']}: {r['activations']} activations, {r['snapshots']} snapshots, "
                     f"{r['seconds']:.1f} s -> {r['output_dir']}")
        for name, p in r["probes"].items():
            lines.append(f"  probe {name} (node {p['node']}): {len(p['activations'])} activations")
    summary = {"command": "run", "results": results}
    _emit(args, summary, lines)
    return summary


# --- restitution ------------------------------------------------------------

PRESETS = {"healthy": HEALTHY, "border_zone": BORDER_ZONE}


def _dataclass_from(cls, doc, where):
    if not isinstance(doc, dict):
        raise CliError(f"{where}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(doc) - names)
    if unknown:
        raise CliError(f"{where}: unknown key(s) {unknown}")
    return doc


def cmd_restitution(args) -> dict:
    try:
        doc = json.loads(Path(args.params).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"{args.params}: {exc}") from exc
    allowed = {"name", "tissue_id", "preset", "parameters", "sigma", "ratio", "protocol", "cable", "dt"}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise CliError(f"{args.params}: unknown key(s) {unknown}")
    if ("preset" in doc) == ("parameters" in doc):
        raise CliError(f"{args.params}: give exactly one of preset or parameters")
    if "preset" in doc:
        if doc["preset"] not in PRESETS:
            raise CliError(f"unknown preset {doc['preset']!r}; known: {sorted(PRESETS)}")
        params = PRESETS[doc["preset"]]
    else:
        params = MsParameters(**_dataclass_from(MsParameters, doc["parameters"], "parameters"))
    name = doc.get("name", params.name)
    params = dataclasses.replace(params, name=name)
    protocol = PacingProtocol(**_dataclass_from(PacingProtocol, doc.get("protocol", {}), "protocol"))
    cable = CableConfig(**_dataclass_from(CableConfig, doc.get("cable", {}), "cable"))
    t0 = time.perf_counter()
    table = generate_table(params, int(doc.get("tissue_id", 0)), float(doc.get("sigma", cable.sigma)),
                           float(doc.get("ratio", 1.0)), protocol, cable, float(doc.get("dt", 0.02)))
    elapsed = time.perf_counter() - t0
    out = _out_dir(args, "output/restitution")
    path = save_table(table, out / name)
    summary = {"command": "restitution", "name": name, "di_min": table.di_min,
               "apd_plateau": table.apd_plateau, "cv_plateau": table.cv_plateau,
               "apd_points": int(table.apd.size), "cv_points": int(table.cv.size),
               "sidecar": str(path), "seconds": elapsed}
    _emit(args, summary, [f"{name}: DI_min {table.di_min:.2f} ms, APD plateau {table.apd_plateau:.1f} ms, "
                          f"CV plateau {table.cv_plateau:.2f} cm/s", f"wrote {path}"])
    return summary


# --- compare ----------------------------------------------------------------


def cmd_compare(args) -> dict:
    a, b = read_field_csv(args.a), read_field_csv(args.b)
    for name, doc in ((args.a, a), (args.b, b)):
        if args.field not in doc:
            raise CliError(f"{name}: no column {args.field!r} (have {sorted(doc)})")
    mask = None
    if "state" in a and "state" in b and len(a["state"]) == len(b["state"]):
        mask = (a["state"] != INERT) & (b["state"] != INERT)
    report = compare_fields(a[args.field], b[args.field], mask)
    summary = {"command": "compare", "field": args.field, **report.as_dict()}
    if args.output_dir:
        path = _out_dir(args, "") / "diff.csv"
        with path.open("w", encoding="utf-8") as fh:
            fh.write("node,diff\n")
            for i, d in enumerate(report.diff):
                fh.write(f"{i},{float(d)!r}\n")
        summary["diff_file"] = str(path)
    _emit(args, summary, [f"{args.field}: L_inf {report.linf:.6g}, L2 {report.l2:.6g} over "
                          f"{report.compared} nodes ({report.excluded} excluded as infinite)"])
    return summary


# --- parser -----------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    # SUPPRESS defaults let the global flags appear before or after the command
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--output-dir", default=argparse.SUPPRESS, help="directory for written files")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                   help="reserved; every algorithm here is deterministic")
    p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS,
                   help="print only a JSON summary on stdout")
    p.add_argument("--jobs", type=int, default=argparse.SUPPRESS,
                   help="worker count for the audit and for several scenarios")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="eikonal-reentry", parents=[common],
                                     description="Anisotropic fast marching with re-excitable tissue.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", parents=[common], help="metric acuteness audit")
    p.add_argument("mesh")
    p.add_argument("--tables", help="directory of restitution table sidecars (long-DI CV and ratio per tissue)")
    p.add_argument("--cv-l", type=float, help="longitudinal CV in cm/s (instead of --tables)")
    p.add_argument("--ratio", type=float, default=1.0, help="cv_t / cv_l")
    p.add_argument("--scar-ids", type=int, nargs="*", default=[SCAR])
    p.add_argument("--worst", type=int, default=10, help="number of worst triangles to report")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("solve", parents=[common], help="single activation map")
    p.add_argument("mesh")
    p.add_argument("--cv-l", type=float, required=True, help="longitudinal CV in cm/s")
    p.add_argument("--ratio", type=float, default=1.0, help="cv_t / cv_l")
    p.add_argument("--fiber-source", default="mesh", help="'mesh' or a constant direction 'fx,fy'")
    p.add_argument("--sources", nargs="+", required=True, help="node[@t] or x,y[@t]")
    p.add_argument("--scar-ids", type=int, nargs="*", default=[SCAR])
    p.add_argument("--dijkstra", action="store_true", help="edge-only updates instead of triangles")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("run", parents=[common], help="re-entry simulation")
    p.add_argument("scenarios", nargs="+", metavar="scenario.json")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("restitution", parents=[common], help="generate restitution tables")
    p.add_argument("params", metavar="params.json")
    p.set_defaults(func=cmd_restitution)

    p = sub.add_parser("compare", parents=[common], help="compare two per-node fields")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--field", default="phi")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name, default in (("output_dir", None), ("seed", None), ("quiet", False), ("jobs", 1)):
        if not hasattr(args, name):
            setattr(args, name, default)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        args.func(args)
    except (CliError, ValueError, OSError, KeyError, RuntimeError) as exc:
        if args.quiet:
            print(json.dumps({"command": args.command, "error": str(exc)}))
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

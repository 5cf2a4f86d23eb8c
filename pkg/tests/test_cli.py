import json
import subprocess
import sys

import numpy as np
import pytest

from eikonal_reentry.cli import main
from eikonal_reentry.export import read_field_csv
from eikonal_reentry.geometry import generate_structured_square
from eikonal_reentry.mesh import save_mesh


@pytest.fixture
def square_mesh(tmp_path):
    path = tmp_path / "square.json"
    save_mesh(generate_structured_square(1.0, 0.1), path)
    return path


def quiet(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out.strip().splitlines()
    return code, json.loads(out[-1]) if out else None


def test_audit_right_triangles_fail(capsys, square_mesh):
    code, summary = quiet(capsys, ["audit", str(square_mesh), "--cv-l", "60", "--quiet"])
    assert code == 0
    assert summary["audited"] == 200 and summary["failures"] == 200 and len(summary["worst"]) == 10


def test_audit_requires_a_speed(capsys, square_mesh):
    code, summary = quiet(capsys, ["--quiet", "audit", str(square_mesh)])
    assert code == 1 and "--tables" in summary["error"]


def test_audit_with_tables(capsys, tmp_path, square_mesh):
    from eikonal_reentry.restitution import save_table
    from eikonal_reentry.restitution.presets import builtin_table

    tables = tmp_path / "tables"
    tables.mkdir()
    save_table(builtin_table("healthy"), tables / "healthy")
    code, summary = quiet(capsys, ["audit", str(square_mesh), "--tables", str(tables), "--quiet"])
    assert code == 0 and summary["audited"] == 200
    save_table(builtin_table("atrial"), tables / "atrial")
    code, summary = quiet(capsys, ["audit", str(square_mesh), "--tables", str(tables), "--quiet"])
    assert code == 1 and "tissue id 0" in summary["error"]


def test_solve_fmm_and_dijkstra(capsys, tmp_path, square_mesh):
    out = tmp_path / "out"
    code, fmm = quiet(capsys, ["solve", str(square_mesh), "--cv-l", "50", "--sources", "0",
                               "--quiet", "--output-dir", str(out)])
    assert code == 0 and fmm["reached"] == 121
    code, dij = quiet(capsys, ["--output-dir", str(out), "--quiet", "solve", str(square_mesh),
                               "--cv-l", "50", "--sources", "0", "--dijkstra"])
    assert code == 0
    exact = np.hypot(1, 1) / 0.05
    assert fmm["max_phi"] == pytest.approx(exact, rel=0.1)
    assert dij["max_phi"] > fmm["max_phi"]
    a, b = read_field_csv(out / "fmm_phi.csv"), read_field_csv(out / "dijkstra_phi.csv")
    assert np.all(a["phi"] <= b["phi"] + 1e-12)
    assert np.isclose(a["phi"][10], 1.0 / 0.05)


def test_solve_source_by_coordinates(capsys, tmp_path, square_mesh):
    code, s = quiet(capsys, ["solve", str(square_mesh), "--cv-l", "50", "--sources", "0.5,0.5@2",
                             "--quiet", "--output-dir", str(tmp_path)])
    assert code == 0 and s["max_phi"] == pytest.approx(2 + np.hypot(0.5, 0.5) / 0.05, rel=0.1)


@pytest.mark.parametrize("argv", [["--sources", "999"], ["--sources", "0", "--fiber-source", "x"]])
def test_solve_bad_arguments(capsys, tmp_path, square_mesh, argv):
    code, s = quiet(capsys, ["solve", str(square_mesh), "--cv-l", "50", "--quiet",
                             "--output-dir", str(tmp_path), *argv])
    assert code == 1 and "error" in s


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2
    assert main(["--jobs", "0", "compare", "a", "b"]) == 2


def test_missing_file_exits_1(capsys, tmp_path):
    assert main(["audit", str(tmp_path / "nope.json"), "--cv-l", "60"]) == 1
    assert "error" in capsys.readouterr().err


def test_run_writes_outputs(capsys, tmp_path):
    scenario = {
        "version": 1, "name": "tiny",
        "mesh": {"generator": "square", "side": 1.0, "h": 0.1},
        "tissues": {"0": {"table": "flat", "apd": 30, "cv": 50}},
        "stimuli": [{"nodes": [0], "t": 0}],
        "t_end": 20, "dt": 1.0, "snapshot_every": 10,
        "probes": {"centre": [0.5, 0.5]},
    }
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(scenario))
    code, s = quiet(capsys, ["run", str(path), "--output-dir", str(tmp_path / "out"), "--quiet"])
    assert code == 0
    (result,) = s["results"]
    out = tmp_path / "out" / "tiny"
    assert sorted(p.name for p in out.iterdir()) == [
        "events.jsonl", "snapshot_000010_000.csv", "snapshot_000010_000.vtk",
        "snapshot_000020_000.csv", "snapshot_000020_000.vtk", "summary.json"]
    (t,) = result["probes"]["centre"]["activations"]
    assert 14 < t < 16 and 0 < result["activations"] < 121
    assert json.loads((out / "summary.json").read_text())["snapshots"] == 2


def test_run_reports_scenario_errors(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"version": 1}))
    code, s = quiet(capsys, ["run", str(path), "--quiet"])
    assert code == 1 and "mesh" in s["error"]


def test_restitution_quick_protocol(capsys, tmp_path):
    params = {"name": "quick", "preset": "healthy", "tissue_id": 3, "ratio": 0.5,
              "protocol": {"bcl": 600, "cl0": 280, "decrement": 40, "n_conditioning": 2},
              "cable": {"length": 1.0, "dx": 0.01, "dt": 0.05}}
    path = tmp_path / "params.json"
    path.write_text(json.dumps(params))
    code, s = quiet(capsys, ["restitution", str(path), "--quiet", "--output-dir", str(tmp_path / "tab")])
    assert code == 0
    sidecar = json.loads((tmp_path / "tab" / "quick.json").read_text())
    assert sidecar["tissue_id"] == 3 and sidecar["ratio"] == 0.5
    # coarse decrement, so DI_min lands only within one step of the fine value
    assert 40 < s["di_min"] < 120 and s["apd_points"] >= 3


def test_restitution_rejects_unknown_keys(capsys, tmp_path):
    path = tmp_path / "params.json"
    path.write_text(json.dumps({"preset": "healthy", "colour": 1}))
    code, s = quiet(capsys, ["restitution", str(path), "--quiet"])
    assert code == 1 and "colour" in s["error"]


def test_compare(capsys, tmp_path, square_mesh):
    out = tmp_path / "solve"
    main(["solve", str(square_mesh), "--cv-l", "50", "--sources", "0", "--quiet", "--output-dir", str(out)])
    main(["solve", str(square_mesh), "--cv-l", "50", "--sources", "0", "--dijkstra", "--quiet",
          "--output-dir", str(out)])
    capsys.readouterr()
    code, same = quiet(capsys, ["compare", str(out / "fmm_phi.csv"), str(out / "fmm_phi.csv"), "--quiet"])
    assert code == 0 and same["linf"] == 0.0 and same["compared"] == 121
    code, diff = quiet(capsys, ["compare", str(out / "fmm_phi.csv"), str(out / "dijkstra_phi.csv"),
                                "--quiet", "--output-dir", str(tmp_path / "cmp")])
    assert code == 0 and diff["linf"] > 0
    assert (tmp_path / "cmp" / "diff.csv").exists()
    code, bad = quiet(capsys, ["compare", str(out / "fmm_phi.csv"), str(out / "fmm_phi.csv"),
                               "--field", "nope", "--quiet"])
    assert code == 1


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "eikonal_reentry.cli", "--help"],
                         capture_output=True, text=True, check=True)
    for command in ("audit", "solve", "run", "restitution", "compare"):
        assert command in res.stdout

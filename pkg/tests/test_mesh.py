import json

import numpy as np
import pytest

from eikonal_reentry.mesh import (
    Mesh,
    MeshError,
    build_adjacency,
    euler_characteristic,
    load_mesh,
    mesh_to_dict,
    save_mesh,
)
from eikonal_reentry.geometry import generate_structured_square

from conftest import single_triangle


def test_smallest_valid_mesh(tmp_path):
    path = tmp_path / "tri.json"
    save_mesh(single_triangle(), path)
    mesh = load_mesh(path)
    assert (mesh.n_nodes, mesh.n_triangles) == (3, 1)


def test_dangling_index_names_triangle(tmp_path):
    doc = mesh_to_dict(single_triangle())
    doc["triangles"] = [[0, 1, 99]]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(MeshError, match="triangle 0"):
        load_mesh(path)


@pytest.mark.parametrize(
    "edit, message",
    [
        (lambda d: d.update(fibers=[[1.0, 1.0]]), "unit vector"),
        (lambda d: d.update(tissue=[0, 0]), "one id per node"),
        (lambda d: d.update(nodes=[[0, 0], [1, 0], [2, 0]]), "degenerate"),
        (lambda d: d.pop("fibers"), "missing"),
    ],
)
def test_validation_errors(edit, message):
    from eikonal_reentry.mesh import mesh_from_dict

    doc = mesh_to_dict(single_triangle())
    edit(doc)
    with pytest.raises(MeshError, match=message):
        mesh_from_dict(doc)


def test_non_finite_literals_rejected(tmp_path):
    path = tmp_path / "nan.json"
    path.write_text('{"nodes": [[0, 0], [1, 0], [NaN, 1]], "triangles": [[0, 1, 2]],'
                    ' "fibers": [[1, 0]], "tissue": [0, 0, 0]}')
    with pytest.raises(MeshError, match="NaN"):
        load_mesh(path)


def test_undeclared_tissue():
    with pytest.raises(MeshError, match="undeclared tissue id 7"):
        Mesh(single_triangle().nodes, [[0, 1, 2]], [[1, 0]], [0, 7, 0]).validate(tissue_ids=[0])


def test_single_triangle_adjacency():
    adj = build_adjacency(single_triangle())
    assert adj.neighbors(0).tolist() == [1, 2]
    assert adj.shared(0, 1).tolist() == [0]


def test_two_triangles_share_edge():
    mesh = Mesh([[0, 0], [1, 0], [0, 1], [1, 1]], [[0, 1, 2], [1, 3, 2]], [[1, 0]] * 2, [0] * 4)
    adj = build_adjacency(mesh)
    assert adj.shared(1, 2).tolist() == [0, 1]
    assert not adj.non_manifold


def test_interior_node_has_six_neighbors():
    mesh = generate_structured_square(1.0, 0.25)
    adj = build_adjacency(mesh)
    centre = 2 * 5 + 2
    assert np.allclose(mesh.nodes[centre], [0.5, 0.5])
    assert len(adj.neighbors(centre)) == 6


def test_adjacency_is_symmetric_and_deterministic(tmp_path):
    mesh = generate_structured_square(1.0, 0.1)
    path = tmp_path / "sq.json"
    save_mesh(mesh, path)
    a, b = build_adjacency(load_mesh(path)), build_adjacency(load_mesh(path))
    for arr in ("nbr_ptr", "nbr_idx", "tri_ptr", "tri_idx"):
        assert np.array_equal(getattr(a, arr), getattr(b, arr))
    for x in range(mesh.n_nodes):
        for y in a.neighbors(x):
            assert x in a.neighbors(y)


def test_non_manifold_edge_is_a_warning(caplog):
    mesh = Mesh([[0, 0], [1, 0], [0.5, 1], [0.5, -1], [0.5, 0.5]],
                [[0, 1, 2], [0, 3, 1], [0, 1, 4]], [[1, 0]] * 3, [0] * 5)
    adj = build_adjacency(mesh)
    assert adj.non_manifold == [(0, 1)]
    assert len(adj.shared(0, 1)) == 3
    assert "non-manifold" in caplog.text


def test_save_load_round_trip(tmp_path):
    mesh = generate_structured_square(1.0, 0.2)
    save_mesh(mesh, tmp_path / "m.json")
    back = load_mesh(tmp_path / "m.json")
    for attr in ("nodes", "triangles", "fibers", "tissue"):
        assert np.array_equal(getattr(mesh, attr), getattr(back, attr))
    assert euler_characteristic(back) == 1

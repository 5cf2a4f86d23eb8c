import math

import numpy as np
import pytest

from eikonal_reentry.geometry import (
    Region,
    annulus_inner_perimeter,
    generate_annulus,
    generate_structured_square,
    stretch_for_metric,
    two_scar_layout,
)
from eikonal_reentry.mesh import MeshError, build_adjacency, euler_characteristic
from eikonal_reentry.metric import MetricField, acuteness_audit


def test_tiny_square_counts():
    mesh = generate_structured_square(1.0, 0.5)
    assert (mesh.n_nodes, mesh.n_triangles) == (9, 8)


def test_full_size_square_counts():
    # (n + 1)^2 nodes and 2 n^2 triangles with n = 300
    mesh = generate_structured_square(15.0, 0.05)
    assert (mesh.n_nodes, mesh.n_triangles) == (90601, 180000)


def test_two_scar_tissue_histogram():
    h, side = 0.05, 15.0
    mesh = generate_structured_square(side, h, two_scar_layout(side))
    counts = np.bincount(mesh.tissue, minlength=3)
    # node count * h^2 approximates area within one layer of cells around each region
    for tissue, area, perimeter in ((1, 5.0, 12.0), (2, 30.0, 32.0)):
        assert abs(counts[tissue] * h * h - area) <= perimeter * h
    assert counts.sum() == mesh.n_nodes


def test_layout_outside_square_rejected():
    with pytest.raises(ValueError, match="outside"):
        generate_structured_square(5.0, 0.5, [Region(4.0, 4.0, 6.0, 6.0, 2)])


def test_stretch_improves_audit():
    D_ratio = 0.5
    plain = generate_structured_square(1.0, 0.05)
    stretched = generate_structured_square(1.0, 0.05, stretch=np.diag([1.0, 2.0]))
    frac = []
    for mesh in (plain, stretched):
        metric = MetricField.for_mesh(mesh, 1.0, D_ratio)
        frac.append(acuteness_audit(mesh, metric).fraction)
    assert frac[1] < frac[0]
    assert frac[0] == 1.0


@pytest.mark.parametrize("ratio, fiber", [(0.33, (1, 1)), (0.5, (1, 0)), (0.8, (0.3, -1))])
def test_stretch_for_metric_whitens_the_metric(ratio, fiber):
    S = stretch_for_metric(ratio, fiber)
    f = np.asarray(fiber, float) / np.linalg.norm(fiber)
    Dinv = np.eye(2) / ratio**2 + (1 - 1 / ratio**2) * np.outer(f, f)
    G = S.T @ S
    assert np.isclose(np.linalg.det(S), 1.0)
    assert np.allclose(G / G[0, 0], Dinv / Dinv[0, 0])


def test_annulus_containment_and_topology():
    mesh = generate_annulus(2.0, 2.5, 0.05)
    r = np.linalg.norm(mesh.nodes, axis=1)
    assert r.min() >= 2.0 - 1e-9 and r.max() <= 2.5 + 1e-9
    assert euler_characteristic(mesh) == 0
    assert not build_adjacency(mesh).non_manifold
    assert np.allclose(np.linalg.norm(mesh.fibers, axis=1), 1.0)


def test_annulus_perimeters():
    assert math.isclose(2 * math.pi * 2.25, 14.137166941154069)
    inner = annulus_inner_perimeter(2.0, 2.5, 0.05)
    assert 2 * math.pi * 2.0 * 0.999 < inner < 2 * math.pi * 2.0

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from eikonal_reentry.mesh import Mesh

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def single_triangle(fiber=(1.0, 0.0)) -> Mesh:
    nodes = [[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]]
    return Mesh(nodes, [[0, 1, 2]], [fiber], [0, 0, 0]).validate()


def random_delaunay_mesh(rng, n_points=40, size=1.0) -> Mesh:
    """Delaunay triangulation of random points plus the unit-square corners."""
    from scipy.spatial import Delaunay

    pts = np.vstack([[[0, 0], [1, 0], [1, 1], [0, 1]], rng.random((n_points, 2))]) * size
    tri = Delaunay(pts).simplices
    angles = rng.uniform(0, np.pi, len(tri))
    fibers = np.column_stack([np.cos(angles), np.sin(angles)])
    return Mesh(pts, tri, fibers, np.zeros(len(pts), dtype=np.int64)).validate()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import VERDICTS

    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)

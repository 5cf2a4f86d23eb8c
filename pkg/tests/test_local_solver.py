import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eikonal_reentry.geometry import generate_structured_square
from eikonal_reentry.local_solver import edge_update, node_update, triangle_update
from eikonal_reentry.mesh import build_adjacency

from oracles import grid_search_update, random_spd, random_update_problem

INF = math.inf
I2 = np.eye(2)
O = np.zeros(2)
X1 = np.array([1.0, 0.0])

# |(0.05, 0)| under D^-1 for 65 cm/s, ratio 0.33, diagonal fibers, evaluated by hand
DIAGONAL_FIBER_EDGE_MS = 1.735696955616052


def test_unit_distance():
    assert edge_update(X1, O, 0.0, I2) == 1.0


def test_axis_aligned_metric():
    assert edge_update(X1, O, 0.0, np.diag([4.0, 1.0])) == 2.0


def test_diagonal_fiber_edge():
    from eikonal_reentry.metric import inverse_metric

    f = np.array([1.0, 1.0]) / math.sqrt(2)
    M = inverse_metric(0.065, 0.065 * 0.33, f)
    assert math.isclose(edge_update(np.array([0.05, 0.0]), O, 0.0, M), DIAGONAL_FIBER_EDGE_MS, rel_tol=1e-12)


def test_planar_front_reaches_apex():
    val = triangle_update(np.array([0.0, 1.0]), np.array([-0.5, 0.0]), np.array([0.5, 0.0]),
                          0.0, 0.0, I2)
    assert math.isclose(val, 1.0, rel_tol=1e-14)


def test_one_unknown_reduces_to_edge(rng):
    for _ in range(50):
        x, y1, y2, p1, _, M = random_update_problem(rng)
        assert triangle_update(x, y1, y2, p1, INF, M) == edge_update(x, y1, p1, M)
        assert triangle_update(x, y1, y2, INF, p1, M) == edge_update(x, y2, p1, M)
    assert triangle_update(X1, O, np.array([0.0, 1.0]), INF, INF, I2) == INF


def test_matches_grid_search(rng):
    for _ in range(300):
        x, y1, y2, p1, p2, M = random_update_problem(rng)
        got = triangle_update(x, y1, y2, p1, p2, M)
        assert abs(got - grid_search_update(x, y1, y2, p1, p2, M, 1_000_000)) <= 1e-6


def test_nearly_linear_objective_branch(rng):
    # phi2 - phi1 equal to the metric length of the edge: the quadratic degenerates
    for _ in range(100):
        x, y1, y2, p1, _, M = random_update_problem(rng)
        a = y2 - y1
        p2 = p1 + math.sqrt(a @ M @ a) * rng.choice([-1.0, 1.0])
        got = triangle_update(x, y1, y2, p1, p2, M)
        assert abs(got - grid_search_update(x, y1, y2, p1, p2, M, 1_000_000)) <= 1e-6


def test_monotone_in_known_values(rng):
    for _ in range(10_000):
        x, y1, y2, p1, p2, M = random_update_problem(rng)
        base = triangle_update(x, y1, y2, p1, p2, M)
        bump = rng.uniform(0, 1)
        assert triangle_update(x, y1, y2, p1 + bump, p2, M) >= base - 1e-12
        assert triangle_update(x, y1, y2, p1, p2 + bump, M) >= base - 1e-12


@given(seed=st.integers(0, 2**32 - 1), lam=st.floats(1e-3, 1e3))
def test_scaling_covariance(seed, lam):
    rng = np.random.default_rng(seed)
    x, y1, y2, p1, p2, M = random_update_problem(rng)
    a = triangle_update(x, y1, y2, p1, p2, M)
    b = triangle_update(lam * x, lam * y1, lam * y2, p1, p2, M / lam**2)
    assert math.isclose(a, b, rel_tol=1e-9)


@given(seed=st.integers(0, 2**32 - 1), s=st.floats(0.05, 0.95))
def test_chained_edges_equal_direct_distance(seed, s):
    rng = np.random.default_rng(seed)
    y, x = rng.random((2, 2))
    mid = y + s * (x - y)
    M = random_spd(rng)
    phi0 = rng.uniform(0, 5)
    chained = edge_update(x, mid, edge_update(mid, y, phi0, M), M)
    assert abs(chained - edge_update(x, y, phi0, M)) <= 1e-12


class TestNodeUpdate:
    mesh = generate_structured_square(1.0, 0.25)
    adj = build_adjacency(mesh)
    centre = 12

    def test_all_unknown(self):
        phi = np.full(self.mesh.n_nodes, INF)
        assert node_update(self.centre, self.mesh.nodes, self.adj, phi, lambda t: I2) == INF

    def test_single_known_neighbour_matches_its_triangles(self):
        phi = np.full(self.mesh.n_nodes, INF)
        src = int(self.adj.neighbors(self.centre)[0])
        phi[src] = 0.0
        got = node_update(self.centre, self.mesh.nodes, self.adj, phi, lambda t: I2)
        shared = self.adj.shared(self.centre, src)
        assert len(shared) == 2 and len(self.adj.triangles(self.centre)) == 6
        expected = []
        for t in shared:
            y1, y2 = [v for v in self.mesh.triangles[t] if v != self.centre]
            expected.append(triangle_update(self.mesh.nodes[self.centre], self.mesh.nodes[y1],
                                            self.mesh.nodes[y2], phi[y1], phi[y2], I2))
        assert got == min(expected)
        assert math.isclose(got, np.linalg.norm(self.mesh.nodes[self.centre] - self.mesh.nodes[src]))

    def test_non_conductive_ring(self):
        phi = np.zeros(self.mesh.n_nodes)
        phi[self.centre] = INF
        assert node_update(self.centre, self.mesh.nodes, self.adj, phi, lambda t: None) == INF

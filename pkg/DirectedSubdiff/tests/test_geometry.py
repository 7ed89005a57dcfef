"""
Unit tests for geometry.py: sphere grids, rotations, projections and polytopes.
"""
import math
import unittest

import networkx as nx
import numpy as np

from DirectedSubdiff.errors import DimensionError, SerializationError
from DirectedSubdiff.geometry import (
    Polytope, SphereGrid, extreme_points, lift, lift_matrix, make_sphere_grid, minkowski_sum,
    project, rotation, support_function, supporting_face,
)

DIAMOND = Polytope([[1, 0], [-1, 0], [0, 1], [0, -1]])


def random_unit(rng, n):
    v = rng.normal(size=n)
    return v / np.linalg.norm(v)


class TestSphereGrid(unittest.TestCase):
    def test_circle_grid_has_exact_special_directions(self):
        grid = make_sphere_grid(2, 8)
        self.assertEqual(len(grid), 8)
        half = math.sqrt(0.5)
        self.assertEqual(tuple(grid.directions[1]), (half, half))
        self.assertEqual(tuple(grid.directions[2]), (0.0, 1.0))
        self.assertEqual(tuple(grid.directions[6]), (0.0, -1.0))
        self.assertAlmostEqual(grid.angles[3], 3 * math.pi / 4)

    def test_circle_resolution_must_be_multiple_of_eight(self):
        with self.assertRaises(DimensionError):
            make_sphere_grid(2, 12)

    def test_unsupported_dimension(self):
        with self.assertRaises(DimensionError):
            make_sphere_grid(4)

    def test_sphere_grid_layout(self):
        grid = make_sphere_grid(3, (4, 6), sub_resolution=16)
        self.assertEqual(len(grid), 2 + 3 * 6)
        self.assertEqual(tuple(grid.directions[0]), (0.0, 0.0, 1.0))
        self.assertEqual(tuple(grid.directions[-1]), (0.0, 0.0, -1.0))
        np.testing.assert_allclose(np.linalg.norm(grid.directions, axis=1), 1.0, atol=1e-12)
        self.assertEqual(grid.sub_grid, make_sphere_grid(2, 16))
        self.assertEqual(grid.shapes, [(20,), (20, 16), (20, 16, 2)])

    def test_grids_compare_by_resolution(self):
        self.assertEqual(make_sphere_grid(2, 16), make_sphere_grid(2, 16))
        self.assertNotEqual(make_sphere_grid(2, 16), make_sphere_grid(2, 24))

    def test_neighbour_graph(self):
        circle = make_sphere_grid(2, 8)
        self.assertEqual(circle.neighbour_graph.number_of_edges(), 8)
        sphere = make_sphere_grid(3, (4, 6), sub_resolution=8)
        G = sphere.neighbour_graph
        self.assertTrue(nx.is_connected(G))
        self.assertEqual(G.degree(0), 6)
        self.assertEqual(G.degree(len(sphere) - 1), 6)

    def test_json_round_trip(self):
        grid = make_sphere_grid(3, (5, 8), sub_resolution=24)
        self.assertEqual(SphereGrid.from_json(grid.to_json()), grid)
        with self.assertRaises(SerializationError):
            SphereGrid.from_json({"resolution": [8]})

    def test_malformed_json(self):
        for doc in ({"n": 3, "resolution": [4, 6], "sub_grid": {"n": 2, "resolution": []}},
                    {"n": 3, "resolution": [4, 6], "sub_grid": {"n": 2}},
                    {"n": 3, "resolution": [4, 6], "sub_grid": [16]},
                    {"n": 3, "resolution": [4]},
                    {"n": 2, "resolution": []},
                    {"n": 2, "resolution": ["many"]},
                    {"n": 2, "resolution": 16},
                    [2, 16]):
            with self.assertRaises(SerializationError, msg=repr(doc)):
                SphereGrid.from_json(doc)


class TestRotations(unittest.TestCase):
    def test_rotation_maps_direction_to_last_axis(self):
        rng = np.random.default_rng(0)
        for n in (2, 3):
            for _ in range(20):
                l = random_unit(rng, n)
                R = rotation(l)
                np.testing.assert_allclose(R @ l, np.eye(n)[-1], atol=1e-12)
                np.testing.assert_allclose(R @ R.T, np.eye(n), atol=1e-12)
                self.assertAlmostEqual(np.linalg.det(R), 1.0, places=12)

    def test_poles(self):
        np.testing.assert_allclose(rotation([0, 0, 1]), np.eye(3))
        np.testing.assert_allclose(rotation([0, 0, -1]) @ np.array([0, 0, -1]), [0, 0, 1])
        np.testing.assert_allclose(rotation([0, 1]), np.eye(2))

    def test_rotation_needs_unit_vector(self):
        with self.assertRaises(DimensionError):
            rotation([1.0, 1.0])

    def test_project_inverts_lift(self):
        rng = np.random.default_rng(1)
        for n in (2, 3):
            l = random_unit(rng, n)
            y = rng.normal(size=n - 1)
            np.testing.assert_allclose(project(l, lift(l, y)), y, atol=1e-12)
            self.assertAlmostEqual(float(np.dot(lift(l, y), l)), 0.0, places=12)
            np.testing.assert_allclose(lift_matrix(l) @ y, lift(l, y))

    def test_project_batches_rows(self):
        l = np.array([0.6, 0.8])
        points = np.array([[1.0, 0.0], [0.0, 1.0]])
        np.testing.assert_allclose(project(l, points), [[0.8], [-0.6]])

    def test_project_is_isometry_on_orthogonal_complement(self):
        rng = np.random.default_rng(4)
        for n in (2, 3):
            for _ in range(50):
                l = random_unit(rng, n)
                u, w = rng.normal(size=(2, n)) * 3.0
                u = u - np.dot(u, l) * l
                w = w - np.dot(w, l) * l
                pu, pw = project(l, u), project(l, w)
                self.assertAlmostEqual(np.linalg.norm(pu), np.linalg.norm(u), places=12)
                self.assertAlmostEqual(np.linalg.norm(pu - pw), np.linalg.norm(u - w), places=12)
                np.testing.assert_allclose(lift(l, pu), u, atol=1e-12)


class TestPolytope(unittest.TestCase):
    def test_normalization_drops_interior_points_and_duplicates(self):
        square = Polytope([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5], [1, 0], [0.5, 0]])
        self.assertEqual(len(square), 4)
        cube = Polytope([[i, j, k] for i in (0, 1) for j in (0, 1) for k in (0, 1)] + [[0.5, 0.5, 0.5]])
        self.assertEqual(len(cube), 8)
        segment = Polytope([[0, 0], [1, 1], [2, 2], [0.5, 0.5]])
        self.assertEqual(segment, Polytope([[0, 0], [2, 2]]))

    def test_planar_polygon_in_space(self):
        square = Polytope([[0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1], [0.5, 0.5, 1]])
        self.assertEqual(len(square), 4)

    def test_extreme_points_keep_order(self):
        points = np.array([[0.2, 0.1], [1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
        np.testing.assert_array_equal(extreme_points(points), points[1:])

    def test_minkowski_sum_of_segments(self):
        A = Polytope([[0, 0], [1, 0]])
        B = Polytope([[0, 0], [0, 1]])
        self.assertEqual(minkowski_sum(A, B), Polytope([[0, 0], [1, 0], [0, 1], [1, 1]]))

    def test_negate_and_scale(self):
        P = Polytope([[1, 2], [3, -1]])
        self.assertEqual(P.negate(), Polytope([[-1, -2], [-3, 1]]))
        self.assertEqual(P.scale(2.0), Polytope([[2, 4], [6, -2]]))
        with self.assertRaises(ValueError):
            P.scale(-1.0)

    def test_support_function_and_face(self):
        half = math.sqrt(0.5)
        self.assertEqual(support_function(DIAMOND, [1, 0]), 1.0)
        self.assertEqual(support_function(DIAMOND, [half, half]), half)
        self.assertEqual(supporting_face(DIAMOND, [1, 0]), Polytope([[1, 0]]))
        self.assertEqual(supporting_face(DIAMOND, [half, half]), Polytope([[1, 0], [0, 1]]))
        self.assertIs(supporting_face(DIAMOND, [0, 0]), DIAMOND)

    def test_support_function_is_sublinear(self):
        rng = np.random.default_rng(6)
        for n in (2, 3):
            for _ in range(50):
                C = Polytope(rng.uniform(-3, 3, size=(int(rng.integers(1, 7)), n)))
                l1, l2 = rng.normal(size=(2, n))
                self.assertLessEqual(support_function(C, l1 + l2),
                                     support_function(C, l1) + support_function(C, l2) + 1e-12)
                base = support_function(C, l1)
                self.assertEqual(support_function(C, 0.0 * l1), 0.0)
                self.assertEqual(support_function(C, 2.0 * l1), 2.0 * base)
                self.assertAlmostEqual(support_function(C, 3.7 * l1), 3.7 * base, delta=1e-12 * max(1.0, abs(base)))

    def test_supporting_face_grows_with_tolerance(self):
        rng = np.random.default_rng(9)
        for n in (2, 3):
            for _ in range(50):
                C = Polytope(rng.uniform(-3, 3, size=(8, n)))
                l = random_unit(rng, n)
                top = support_function(C, l)
                vertices = set(map(tuple, C.vertices))
                previous = set()
                for tol in (0.0, 1e-9, 1e-2, 0.3, 100.0):
                    face = supporting_face(C, l, tol=tol)
                    rows = set(map(tuple, face.vertices))
                    self.assertTrue(previous <= rows <= vertices)
                    for v in face.vertices:
                        self.assertGreaterEqual(float(np.dot(v, l)), top - tol * max(1.0, abs(top)) - 1e-12)
                    previous = rows
                self.assertEqual(previous, vertices)

    def test_json_round_trip(self):
        P = Polytope([[0.1, 0.2], [0.3, -0.7], [1.0 / 3.0, 2.0]])
        self.assertEqual(Polytope.from_json(P.to_json()), P)
        with self.assertRaises(SerializationError):
            Polytope.from_json({"vertices": [[0, 0]]})

    def test_invalid_vertices(self):
        with self.assertRaises(DimensionError):
            Polytope([])
        with self.assertRaises(DimensionError):
            Polytope([[np.inf, 0]])


if __name__ == "__main__":
    unittest.main(argv=[''], verbosity=2, exit=False)
